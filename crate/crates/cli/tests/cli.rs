use std::path::Path;
use std::process::{Command, Output};

fn radpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radpp")).args(args).output().expect("spawn radpp")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, cases: &str) {
    let out = radpp(&["synth", "--out", p(dir), "--cases", cases, "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluating_ground_truth_against_itself_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    synth(&corpus, "2");
    let csv_path = tmp.path().join("self.csv");
    let labels = corpus.join("labels");
    let out = radpp(&["evaluate", "--pred", p(&labels), "--gt", p(&labels), "--out", p(&csv_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        for value in row.iter().skip(1) {
            assert_eq!(value.parse::<f64>().unwrap(), 1.0, "row {row:?}");
        }
    }
    assert!(tmp.path().join("self.config.toml").exists());

    // Identical candidates tie at 1.5.
    let copy = tmp.path().join("copy.csv");
    std::fs::copy(&csv_path, &copy).unwrap();
    let rank = tmp.path().join("rank.csv");
    let out = radpp(&["rank", "--out", p(&rank), p(&csv_path), p(&copy)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("1.500000")).count(), 2, "{text}");
}

#[test]
fn missing_policy_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    synth(&corpus, "1");
    let out = radpp(&[
        "apply",
        "--policy",
        p(&tmp.path().join("absent.json")),
        "--corpus",
        p(&corpus),
        "--out",
        p(&tmp.path().join("post")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_sequence_names_the_case() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    synth(&corpus, "2");
    let victim = std::fs::read_dir(corpus.join("images"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|path| path.to_string_lossy().contains("SYN-00001"))
        .min()
        .unwrap();
    std::fs::remove_file(&victim).unwrap();
    let out = radpp(&["extract-features", "--corpus", p(&corpus), "--out", p(&tmp.path().join("f.csv"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SYN-00001"));
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(radpp(&["fit-policy"]).status.code(), Some(2));
    assert_eq!(radpp(&["--threads", "0", "synth", "--out", p(tmp.path()), "--cases", "1"]).status.code(), Some(2));
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[fit]\nno_such_key = 1\n").unwrap();
    let out = radpp(&["--config", p(&bad), "synth", "--out", p(&tmp.path().join("s")), "--cases", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(radpp(&["--help"]).status.success());
}

#[test]
fn config_file_and_flags_are_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "task = \"ssa\"\n[synth]\nseed = 99\ndims = [32, 32, 32]\nradius = [4.0, 5.0]\n").unwrap();
    let out_dir = tmp.path().join("s");
    let out = radpp(&["--config", p(&cfg), "synth", "--out", p(&out_dir), "--cases", "1", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo: toml::Value = toml::from_str(&std::fs::read_to_string(out_dir.join("run-config.toml")).unwrap()).unwrap();
    assert_eq!(echo["task"].as_str(), Some("ssa"));
    assert_eq!(echo["synth"]["seed"].as_integer(), Some(5));
    assert_eq!(echo["synth"]["dims"].as_array().unwrap().len(), 3);
    assert_eq!(echo["synth"]["dims"][0].as_integer(), Some(32));
}

#[test]
fn empty_synth_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = radpp(&["synth", "--out", p(&tmp.path().join("e")), "--cases", "0"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
