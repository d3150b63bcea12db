use std::sync::OnceLock;

use radpp_core::metrics::MetricConfig;
use radpp_core::policy::{FitConfig, FitInput, PolicyError, PostProcessPolicy, Task};
use radpp_core::radiomics::{extract_case_features, ExtractionSettings, FeatureManifest};
use radpp_core::synth::{generate_case, SynthCase, SynthConfig};

fn corpus_cfg() -> SynthConfig {
    SynthConfig {
        seed: 11,
        dims: [40, 40, 40],
        radius: (8.0, 9.0),
        ..SynthConfig::default()
    }
}

struct Fitted {
    cases: Vec<SynthCase>,
    inputs: Vec<FitInput>,
    policy: PostProcessPolicy,
}

fn inputs_of(cases: &[SynthCase], manifest: &FeatureManifest) -> Vec<FitInput> {
    cases
        .iter()
        .map(|c| FitInput {
            features: extract_case_features(&c.bundle, manifest).unwrap(),
            prediction: c.bundle.prediction.clone(),
            ground_truth: c.bundle.ground_truth.clone().unwrap(),
        })
        .collect()
}

fn fitted() -> &'static Fitted {
    static CELL: OnceLock<Fitted> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = corpus_cfg();
        let cases: Vec<SynthCase> = (0..16).map(|i| generate_case(&cfg, i).unwrap()).collect();
        let manifest = FeatureManifest::new(ExtractionSettings::default());
        let inputs = inputs_of(&cases, &manifest);
        let (policy, _) = radpp_core::policy::fit_policy(
            Task::Ssa,
            manifest,
            MetricConfig::default(),
            &inputs,
            &FitConfig::default(),
        )
        .unwrap();
        Fitted { cases, inputs, policy }
    })
}

#[test]
fn fitted_thresholds_exceed_island_sizes() {
    let f = fitted();
    let max_island = f
        .cases
        .iter()
        .flat_map(|c| c.inventory.islands.iter().map(|i| i.voxels.len()))
        .max()
        .unwrap();
    for (cluster, row) in f.policy.pcc_thresholds.per_cluster.iter().enumerate() {
        for label in [1usize, 2, 3] {
            let has_island = f.cases.iter().zip(&f.inputs).any(|(c, inp)| {
                f.policy.assign(&inp.features.values).unwrap() == cluster
                    && c.inventory.islands.iter().any(|i| i.label as usize == label)
            });
            if has_island {
                assert!(row[label - 1] > max_island, "cluster {cluster} label {label}: {row:?}");
            }
        }
    }
}

#[test]
fn fitted_policy_restores_training_cases() {
    let f = fitted();
    for (c, inp) in f.cases.iter().zip(&f.inputs) {
        let cluster = f.policy.assign(&inp.features.values).unwrap();
        let out = f.policy.apply_to_cluster(&c.bundle.case_id, cluster, &c.bundle.prediction).unwrap();
        assert_eq!(&out.output, c.bundle.ground_truth.as_ref().unwrap(), "{}", c.bundle.case_id);
        assert_eq!(out.removed_voxels, c.inventory.island_voxels());
    }
}

#[test]
fn perfect_predictions_give_identity_policy() {
    let cfg = corpus_cfg().without_corruption();
    let cases: Vec<SynthCase> = (0..8).map(|i| generate_case(&cfg, i).unwrap()).collect();
    let manifest = FeatureManifest::new(ExtractionSettings::default());
    let inputs = inputs_of(&cases, &manifest);
    let (policy, report) =
        radpp_core::policy::fit_policy(Task::Ssa, manifest, MetricConfig::default(), &inputs, &FitConfig::default())
            .unwrap();
    assert!(policy.pcc_thresholds.per_cluster.iter().all(|row| *row == [0; 4]));
    assert!(policy.relabel_rules.is_empty());
    assert!(report.candidate_pairs.is_empty());
}

#[test]
fn save_load_save_is_byte_identical() {
    let f = fitted();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    f.policy.save(&a).unwrap();
    let loaded = PostProcessPolicy::load(&a).unwrap();
    assert_eq!(loaded, f.policy);
    loaded.save(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for c in f.cases.iter().take(4) {
        assert_eq!(loaded.apply(&c.bundle).unwrap(), f.policy.apply(&c.bundle).unwrap());
    }
}

#[test]
fn unknown_version_rejected() {
    let text = fitted().policy.to_json().replace("radpp-policy/1", "radpp-policy/999");
    assert!(matches!(PostProcessPolicy::from_json(&text), Err(PolicyError::Version(v)) if v == "radpp-policy/999"));
}

#[test]
fn apply_is_idempotent() {
    let f = fitted();
    for (c, inp) in f.cases.iter().zip(&f.inputs) {
        let cluster = f.policy.assign(&inp.features.values).unwrap();
        let once = f.policy.apply_to_cluster(&c.bundle.case_id, cluster, &c.bundle.prediction).unwrap();
        let twice = f.policy.apply_to_cluster(&c.bundle.case_id, cluster, &once.output).unwrap();
        assert_eq!(once.output, twice.output);
    }
}

/// Small-ET cases whose ground truth calls the core non-enhancing while the
/// prediction calls it enhancing.
fn mislabeled_core_inputs(manifest: &FeatureManifest) -> (Vec<FitInput>, Vec<(f64, bool)>) {
    let mut cfg = corpus_cfg().without_corruption();
    cfg.small_et_fraction = 0.5;
    cfg.small_et_recipe.et = 0.25;
    let mut ratios = Vec::new();
    let inputs = (0..16)
        .map(|i| {
            let c = generate_case(&cfg, i).unwrap();
            let pred = c.bundle.prediction.clone();
            let h = pred.histogram();
            let ratio = h[3] as f64 / (h[1] + h[2] + h[3]) as f64;
            ratios.push((ratio, c.inventory.small_et));
            let gt = if c.inventory.small_et {
                pred.map_labels(|l| if l == 3 { 1 } else { l })
            } else {
                pred.clone()
            };
            FitInput {
                features: extract_case_features(&c.bundle, manifest).unwrap(),
                prediction: pred,
                ground_truth: gt,
            }
        })
        .collect();
    (inputs, ratios)
}

#[test]
fn mislabeled_small_core_yields_enhancing_to_core_rule() {
    let manifest = FeatureManifest::new(ExtractionSettings::default());
    let (inputs, ratios) = mislabeled_core_inputs(&manifest);
    let max_small = ratios.iter().filter(|r| r.1).map(|r| r.0).fold(0.0, f64::max);
    let min_normal = ratios.iter().filter(|r| !r.1).map(|r| r.0).fold(1.0, f64::min);
    assert!(ratios.iter().any(|r| r.1) && ratios.iter().any(|r| !r.1));
    assert!(max_small < 0.02 && min_normal > 0.05);

    let cfg = FitConfig {
        clustering: radpp_core::clustering::ClusteringConfig {
            kmeans: radpp_core::clustering::KMeansConfig {
                k_max: 2,
                ..Default::default()
            },
            ..Default::default()
        },
        ..FitConfig::default()
    };
    let (policy, report) =
        radpp_core::policy::fit_policy(Task::Ssa, manifest, MetricConfig::default(), &inputs, &cfg).unwrap();
    assert_eq!(report.candidate_pairs.first(), Some(&(3, 1)));
    let rules: Vec<_> = policy.relabel_rules.iter().filter(|r| r.src == 3 && r.dst == 1).collect();
    assert!(!rules.is_empty());
    for r in rules {
        // Only cases in the rule's own cluster bound its cutoff from above.
        let bound = inputs
            .iter()
            .zip(&ratios)
            .filter(|(inp, (_, is_small))| !is_small && policy.assign(&inp.features.values).unwrap() == r.cluster)
            .map(|(_, (ratio, _))| *ratio)
            .fold(1.0, f64::min);
        assert!(r.cutoff > max_small && r.cutoff <= bound, "cutoff {} bound {bound}", r.cutoff);
    }
    for inp in &inputs {
        let cluster = policy.assign(&inp.features.values).unwrap();
        let out = policy.apply_to_cluster(inp.case_id(), cluster, &inp.prediction).unwrap();
        assert_eq!(out.output, inp.ground_truth, "{}", inp.case_id());
    }
}

#[test]
fn identity_grids_give_identity_policy() {
    let f = fitted();
    let cfg = FitConfig {
        pcc_grid: vec![0],
        cutoff_grid: vec![0.0],
        ..FitConfig::default()
    };
    let (policy, _) = radpp_core::policy::fit_policy(
        Task::Ssa,
        f.policy.feature_manifest.clone(),
        MetricConfig::default(),
        &f.inputs,
        &cfg,
    )
    .unwrap();
    assert!(policy.pcc_thresholds.per_cluster.iter().all(|row| *row == [0; 4]));
    assert!(policy.relabel_rules.is_empty());
    for (c, inp) in f.cases.iter().zip(&f.inputs) {
        let cluster = policy.assign(&inp.features.values).unwrap();
        let out = policy.apply_to_cluster(&c.bundle.case_id, cluster, &c.bundle.prediction).unwrap();
        assert_eq!(out.output, c.bundle.prediction);
    }
}
