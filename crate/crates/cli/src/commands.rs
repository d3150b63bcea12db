use std::path::{Path, PathBuf};

use rayon::prelude::*;

use radpp_core::metrics::{evaluate_case, read_metrics_csv, write_metrics_csv, CaseMetrics, MetricConfig};
use radpp_core::policy::{fit_policy, FitInput, PostProcessPolicy};
use radpp_core::radiomics::{extract_case_features, FeatureManifest, FeatureMatrix, FeatureVector};
use radpp_core::ranking::{rank_candidates, Candidate, CandidateSet, RankingConfig};
use radpp_core::synth::write_corpus;
use radpp_core::volume::{discover_cases, load_case, mask_path, read_label_map, CaseBundle, Corpus};

use crate::config::{echo_path, RunConfig};
use crate::error::{CliError, Result};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Directories of a corpus in the standard layout, with per-directory
/// overrides.
#[derive(Clone, Debug)]
pub struct CorpusDirs {
    pub images: PathBuf,
    pub predictions: PathBuf,
    pub labels: PathBuf,
}

impl CorpusDirs {
    pub fn resolve(
        root: Option<&Path>,
        images: Option<PathBuf>,
        predictions: Option<PathBuf>,
        labels: Option<PathBuf>,
    ) -> Result<Self> {
        let pick = |given: Option<PathBuf>, sub: &str| -> Result<PathBuf> {
            given.or_else(|| root.map(|r| r.join(sub))).ok_or_else(|| {
                CliError::config(format!("pass --corpus or --{sub} to locate the {sub} directory"))
            })
        };
        Ok(Self {
            images: pick(images, "images")?,
            predictions: pick(predictions, "predictions")?,
            labels: pick(labels, "labels")?,
        })
    }

    fn corpus(&self, with_labels: bool) -> Corpus {
        Corpus {
            images: Some(self.images.clone()),
            predictions: self.predictions.clone(),
            labels: with_labels.then(|| self.labels.clone()),
        }
    }
}

/// Loads every case with a prediction, in sorted id order.
fn load_corpus(dirs: &CorpusDirs, cfg: &RunConfig, with_labels: bool) -> Result<Vec<CaseBundle>> {
    let ids = discover_cases(&dirs.predictions)?;
    let corpus = dirs.corpus(with_labels);
    let seqs = &cfg.features.sequences;
    ids.par_iter()
        .map(|id| load_case(&corpus, id, seqs).map_err(CliError::from))
        .collect()
}

fn extract_all(cases: &[CaseBundle], manifest: &FeatureManifest) -> Result<Vec<FeatureVector>> {
    cases
        .par_iter()
        .map(|c| extract_case_features(c, manifest).map_err(CliError::from))
        .collect()
}

pub struct SynthArgs {
    pub out: PathBuf,
    pub cases: usize,
    pub first_index: usize,
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<()> {
    if args.cases == 0 {
        eprintln!("warning: --cases 0 writes an empty corpus");
    }
    create_dir(&args.out)?;
    let inventory = write_corpus(&cfg.synth, args.first_index, args.cases, &args.out)?;
    cfg.echo("synth", &echo_path(&args.out, true))?;
    let swapped = inventory.cases.iter().filter(|c| c.swap.is_some()).count();
    let islands: usize = inventory.cases.iter().map(|c| c.islands.len()).sum();
    println!(
        "wrote {} cases to {} ({islands} islands, {swapped} swapped cases)",
        inventory.cases.len(),
        args.out.display()
    );
    Ok(())
}

pub fn extract_features(cfg: &RunConfig, dirs: &CorpusDirs, out: &Path) -> Result<()> {
    let manifest = FeatureManifest::new(cfg.features.clone());
    let cases = load_corpus(dirs, cfg, false)?;
    let rows = extract_all(&cases, &manifest)?;
    for r in rows.iter().filter(|r| r.degenerate) {
        eprintln!("warning: case {} has at most one whole-tumor voxel; features set to zero", r.case_id);
    }
    create_parent(out)?;
    FeatureMatrix::new(&manifest, rows)?.write_csv(out)?;
    cfg.echo("extract-features", &echo_path(out, false))?;
    println!("wrote {} x {} features to {}", cases.len(), manifest.len(), out.display());
    Ok(())
}

pub fn fit(cfg: &RunConfig, dirs: &CorpusDirs, features: Option<&Path>, out: &Path) -> Result<()> {
    let manifest = FeatureManifest::new(cfg.features.clone());
    let cases = load_corpus(dirs, cfg, true)?;
    if cases.is_empty() {
        return Err(CliError::validation(format!("no cases found in {}", dirs.predictions.display())));
    }
    let vectors = match features {
        Some(path) => {
            let matrix = FeatureMatrix::read_csv(path, &manifest)?;
            cases
                .iter()
                .map(|c| {
                    matrix
                        .rows
                        .iter()
                        .find(|r| r.case_id == c.case_id)
                        .cloned()
                        .ok_or_else(|| CliError::validation(format!("{} has no row for case {}", path.display(), c.case_id)))
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => extract_all(&cases, &manifest)?,
    };
    let inputs: Vec<FitInput> = cases
        .into_iter()
        .zip(vectors.iter().cloned())
        .map(|(c, features)| FitInput {
            ground_truth: c.ground_truth.expect("loaded with labels"),
            prediction: c.prediction,
            features,
        })
        .collect();
    let (policy, report) = fit_policy(cfg.task, manifest.clone(), cfg.metric_config(), &inputs, &cfg.fit)?;

    create_dir(out)?;
    policy.save(&out.join("policy.json"))?;
    write_text(&out.join("fit-report.txt"), &report.render(&policy))?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_text(&out.join("fit-report.json"), &json)?;
    let confusion = out.join("confusion.csv");
    report.confusion.write_csv(&confusion).map_err(|e| CliError::io(&confusion, e))?;
    FeatureMatrix::new(&manifest, vectors)?.write_csv(&out.join("features.csv"))?;
    cfg.echo("fit-policy", &echo_path(out, true))?;
    println!(
        "fitted {} clusters over {} cases; {} relabel rules; policy at {}",
        policy.clusters(),
        inputs.len(),
        policy.relabel_rules.len(),
        out.join("policy.json").display()
    );
    Ok(())
}

pub fn apply(cfg: &RunConfig, policy_path: &Path, dirs: &CorpusDirs, out: &Path) -> Result<()> {
    let policy = PostProcessPolicy::load(policy_path)?;
    // The policy's own manifest decides which sequences are read.
    let mut cfg = cfg.clone();
    cfg.features = policy.feature_manifest.settings.clone();
    let cases = load_corpus(dirs, &cfg, false)?;
    create_dir(out)?;
    let summaries: Vec<(String, usize, usize, Vec<usize>)> = cases
        .par_iter()
        .map(|c| {
            let applied = policy.apply(c)?;
            applied.output.save(mask_path(out, &c.case_id))?;
            Ok((c.case_id.clone(), applied.cluster, applied.removed_voxels, applied.fired))
        })
        .collect::<Result<_>>()?;
    let summary = out.join("apply-summary.csv");
    let write = || -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(&summary)?;
        w.write_record(["case_id", "cluster", "removed_voxels", "fired_rules"])?;
        for (id, cluster, removed, fired) in &summaries {
            let fired: Vec<String> = fired.iter().map(usize::to_string).collect();
            w.write_record([id.clone(), cluster.to_string(), removed.to_string(), fired.join(";")])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| CliError::io(&summary, e))?;
    cfg.echo("apply", &echo_path(out, true))?;
    println!("post-processed {} cases into {}", summaries.len(), out.display());
    Ok(())
}

/// Metrics of every ground-truth case; a missing prediction is an error.
pub fn evaluate_dirs(pred: &Path, gt: &Path, metric: &MetricConfig) -> Result<Vec<CaseMetrics>> {
    let ids = discover_cases(gt)?;
    ids.par_iter()
        .map(|id| {
            let g = read_label_map(mask_path(gt, id))?;
            let p_path = mask_path(pred, id);
            if !p_path.exists() {
                return Err(CliError::io(&p_path, format!("no prediction for case {id}")));
            }
            let p = read_label_map(p_path)?;
            Ok(evaluate_case(id, &p, &g, metric)?)
        })
        .collect()
}

pub fn evaluate(cfg: &RunConfig, pred: &Path, gt: &Path, out: &Path) -> Result<()> {
    let rows = evaluate_dirs(pred, gt, &cfg.metric_config())?;
    create_parent(out)?;
    write_metrics_csv(out, &rows)?;
    cfg.echo("evaluate", &echo_path(out, false))?;
    println!("evaluated {} cases into {}", rows.len(), out.display());
    Ok(())
}

pub fn rank(cfg: &RunConfig, inputs: &[PathBuf], out: &Path) -> Result<()> {
    let candidates = inputs
        .iter()
        .map(|path| {
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::config(format!("{} has no file name", path.display())))?;
            Ok(Candidate {
                id,
                cases: read_metrics_csv(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ids: Vec<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::config("metrics files must have distinct file names"));
    }
    let ranking = RankingConfig {
        metrics: cfg.fit.ranking.metrics.clone(),
    };
    let result = rank_candidates(&CandidateSet::new(candidates)?, &ranking)?;
    create_parent(out)?;
    result.write_csv(out)?;
    cfg.echo("rank", &echo_path(out, false))?;
    for (id, score) in result.candidate_ids.iter().zip(&result.scores) {
        println!("{score:.6}  {id}");
    }
    Ok(())
}
