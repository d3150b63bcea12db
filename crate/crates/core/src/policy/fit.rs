//! Fitting: cluster the training cases, then grid-search component
//! thresholds and relabel cutoffs per cluster under the ranking objective.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apply_rules, remove_small_per_label, ComponentThresholds, ConfusionMatrix, PolicyError, PostProcessPolicy,
    RelabelRule, Result, Task, POLICY_VERSION, TUMOR_LABELS,
};
use crate::clustering::{CaseClusterer, ClusteringConfig};
use crate::metrics::{evaluate_case, CaseMetrics, MetricColumn, MetricConfig};
use crate::morphology::{connected_components, Connectivity};
use crate::radiomics::{FeatureManifest, FeatureVector};
use crate::ranking::{best_index, rank_table, MetricKind, RankingConfig};
use crate::volume::LabelMap;

/// One training case: its features, prediction, and ground truth.
#[derive(Clone, Debug)]
pub struct FitInput {
    pub features: FeatureVector,
    pub prediction: LabelMap,
    pub ground_truth: LabelMap,
}

impl FitInput {
    pub fn case_id(&self) -> &str {
        &self.features.case_id
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Candidate minimum component sizes in voxels; must contain 0.
    pub pcc_grid: Vec<usize>,
    /// Candidate ratio cutoffs; must contain 0.
    pub cutoff_grid: Vec<f64>,
    /// Confusion pairs considered for relabel rules.
    pub top_confusions: usize,
    pub connectivity: Connectivity,
    pub clustering: ClusteringConfig,
    pub ranking: RankingConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            pcc_grid: vec![0, 10, 20, 50, 75, 100, 150, 200, 300, 500, 750, 1000],
            cutoff_grid: (0..=50).map(|n| n as f64 * 0.005).collect(),
            top_confusions: 2,
            connectivity: Connectivity::TwentySix,
            clustering: ClusteringConfig::default(),
            ranking: RankingConfig::default(),
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(PolicyError::Config(m.into()));
        if !self.pcc_grid.contains(&0) {
            return err("component-size grid must contain 0");
        }
        if !self.cutoff_grid.contains(&0.0) {
            return err("cutoff grid must contain 0");
        }
        if self.cutoff_grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return err("cutoffs must lie in [0, 1]");
        }
        if self.top_confusions == 0 {
            return err("top_confusions must be at least 1");
        }
        Ok(())
    }
}

/// Mean rank of every grid value in one search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub cluster: usize,
    /// Label for a threshold search; `src` for a relabel search.
    pub label: u8,
    /// Set for relabel searches.
    pub dst: Option<u8>,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub selected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub task: Task,
    pub cluster_of: Vec<(String, usize)>,
    pub cluster_sizes: Vec<usize>,
    pub degenerate_cases: Vec<String>,
    pub silhouette_by_k: Vec<(usize, f64)>,
    /// Confusion of the corpus after small-component removal.
    pub confusion: ConfusionMatrix,
    pub candidate_pairs: Vec<(u8, u8)>,
    pub threshold_searches: Vec<GridSearch>,
    pub relabel_searches: Vec<GridSearch>,
}

impl FitReport {
    /// Human-readable tables.
    pub fn render(&self, policy: &PostProcessPolicy) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task);
        let _ = writeln!(s, "clusters: {} (silhouette {:.4})", policy.kmeans.k, policy.kmeans.silhouette);
        for (k, score) in &self.silhouette_by_k {
            let _ = writeln!(s, "  k={k:<3} silhouette={score:.4}");
        }
        let _ = writeln!(s, "cases per cluster: {:?}", self.cluster_sizes);
        if !self.degenerate_cases.is_empty() {
            let _ = writeln!(s, "degenerate cases: {}", self.degenerate_cases.join(", "));
        }
        let _ = writeln!(s, "\nconfusion matrix after component removal (rows = truth, cols = prediction):");
        s += &self.confusion.render();
        let _ = writeln!(s, "candidate relabel pairs (src->dst): {:?}", self.candidate_pairs);
        let _ = writeln!(s, "\nminimum component size per cluster:");
        let _ = writeln!(s, "{:>8} {:>8} {:>8} {:>8} {:>8}", "cluster", "label1", "label2", "label3", "label4");
        for (c, t) in policy.pcc_thresholds.per_cluster.iter().enumerate() {
            let _ = writeln!(s, "{c:>8} {:>8} {:>8} {:>8} {:>8}", t[0], t[1], t[2], t[3]);
        }
        let _ = writeln!(s, "\nrelabel rules:");
        if policy.relabel_rules.is_empty() {
            let _ = writeln!(s, "  (none)");
        }
        for r in &policy.relabel_rules {
            let _ = writeln!(s, "  cluster {}: {} -> {} when ratio < {}", r.cluster, r.src, r.dst, r.cutoff);
        }
        s
    }
}

fn columns(metric: &MetricConfig, ranking: &RankingConfig) -> Result<Vec<MetricColumn>> {
    let mut out = Vec::new();
    for &region in &metric.regions {
        for &m in &ranking.metrics {
            let tolerance = match m {
                MetricKind::Dice => None,
                MetricKind::Nsd(t) => {
                    if !metric.tolerances.contains(&t) {
                        return Err(PolicyError::Config(format!("ranking uses NSD@{t} but metrics lack it")));
                    }
                    Some(t)
                }
            };
            out.push(MetricColumn { region, tolerance });
        }
    }
    Ok(out)
}

struct Scorer<'a> {
    metric: &'a MetricConfig,
    columns: Vec<MetricColumn>,
}

impl Scorer<'_> {
    fn cells(&self, case_id: &str, pred: &LabelMap, gt: &LabelMap) -> Result<Vec<f64>> {
        let m = evaluate_case(case_id, pred, gt, self.metric)?;
        Ok(self.cells_of(&m))
    }

    fn cells_of(&self, m: &CaseMetrics) -> Vec<f64> {
        self.columns.iter().map(|c| m.value(c).expect("configured column")).collect()
    }
}

/// Index into `grid` chosen from doubled rank sums: the first minimum
/// (grids are ascending, so the least destructive value).
fn select_threshold(sums: &[u64]) -> usize {
    best_index(sums)
}

/// Cutoff index: 0 when the never-firing cutoff is optimal, otherwise the
/// lower median of the first run of consecutive optimal cutoffs.
fn select_cutoff(grid: &[f64], sums: &[u64]) -> usize {
    let best = *sums.iter().min().expect("non-empty grid");
    if let Some(z) = grid.iter().position(|&c| c == 0.0) {
        if sums[z] == best {
            return z;
        }
    }
    let start = sums.iter().position(|&s| s == best).expect("minimum exists");
    let mut end = start;
    while end + 1 < sums.len() && sums[end + 1] == best {
        end += 1;
    }
    start + (end - start) / 2
}

fn mean_ranks(sums: &[u64], cells: usize) -> Vec<f64> {
    sums.iter().map(|&s| s as f64 / (2.0 * cells.max(1) as f64)).collect()
}

/// Per case: the cell values for each grid candidate, memoized over
/// candidates that produce the same prediction.
fn threshold_table(
    scorer: &Scorer,
    case_id: &str,
    pred: &LabelMap,
    gt: &LabelMap,
    identity: &[f64],
    label: u8,
    grid: &[usize],
    connectivity: Connectivity,
) -> Result<Vec<Vec<f64>>> {
    let mask = pred.mask_of(label);
    let cc = connected_components(&mask, connectivity);
    let mut sizes = cc.sizes().to_vec();
    sizes.sort_unstable();
    let mut memo: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let removed = sizes.partition_point(|&s| s < t);
        if removed == 0 {
            out.push(identity.to_vec());
            continue;
        }
        if let Some((_, v)) = memo.iter().find(|(k, _)| *k == removed) {
            out.push(v.clone());
            continue;
        }
        let mut th = [0usize; 4];
        th[label as usize - 1] = t;
        let (cand, _) = remove_small_per_label(pred, &th, connectivity);
        let v = scorer.cells(case_id, &cand, gt)?;
        memo.push((removed, v.clone()));
        out.push(v);
    }
    Ok(out)
}

/// Concatenates per-case tables into `candidates x cells` and ranks them.
fn rank_per_case_tables(tables: &[Vec<Vec<f64>>], candidates: usize) -> (Vec<u64>, usize) {
    let mut rows = vec![Vec::new(); candidates];
    for t in tables {
        for (row, vals) in rows.iter_mut().zip(t) {
            row.extend_from_slice(vals);
        }
    }
    let cells = rows.first().map_or(0, Vec::len);
    (rank_table(&rows), cells)
}

pub fn fit_policy(
    task: Task,
    manifest: FeatureManifest,
    metric_config: MetricConfig,
    cases: &[FitInput],
    cfg: &FitConfig,
) -> Result<(PostProcessPolicy, FitReport)> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(PolicyError::Config("no training cases".into()));
    }
    for c in cases {
        if !c.prediction.same_geometry(&c.ground_truth) {
            return Err(PolicyError::Geometry {
                case: c.case_id().to_string(),
                message: "prediction and ground truth grids differ".into(),
            });
        }
        if c.features.values.len() != manifest.len() {
            return Err(PolicyError::Config(format!(
                "case {} has {} features, manifest lists {}",
                c.case_id(),
                c.features.values.len(),
                manifest.len()
            )));
        }
    }
    let scorer = Scorer {
        metric: &metric_config,
        columns: columns(&metric_config, &cfg.ranking)?,
    };

    // Clustering on non-degenerate cases; degenerate ones are assigned by
    // their all-zero vector.
    let rows: Vec<Vec<f64>> = cases
        .iter()
        .filter(|c| !c.features.degenerate)
        .map(|c| c.features.values.clone())
        .collect();
    let clusterer = CaseClusterer::fit(&rows, &cfg.clustering)?;
    let k = clusterer.k();
    let cluster_of: Vec<usize> = cases
        .iter()
        .map(|c| clusterer.assign(&c.features.values))
        .collect::<std::result::Result<_, _>>()?;
    let members: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..cases.len()).filter(|&i| cluster_of[i] == c).collect())
        .collect();

    let identity: Vec<Vec<f64>> = cases
        .par_iter()
        .map(|c| scorer.cells(c.case_id(), &c.prediction, &c.ground_truth))
        .collect::<Result<_>>()?;

    // Stage 1: independent threshold search per (cluster, label).
    let mut grid = cfg.pcc_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let mut per_cluster = vec![[0usize; 4]; k];
    let mut threshold_searches = Vec::new();
    for (c, idx) in members.iter().enumerate() {
        for &label in &TUMOR_LABELS {
            let tables: Vec<Vec<Vec<f64>>> = idx
                .par_iter()
                .map(|&i| {
                    let case = &cases[i];
                    threshold_table(
                        &scorer,
                        case.case_id(),
                        &case.prediction,
                        &case.ground_truth,
                        &identity[i],
                        label,
                        &grid,
                        cfg.connectivity,
                    )
                })
                .collect::<Result<_>>()?;
            let (sums, cells) = rank_per_case_tables(&tables, grid.len());
            let chosen = select_threshold(&sums);
            per_cluster[c][label as usize - 1] = grid[chosen];
            threshold_searches.push(GridSearch {
                cluster: c,
                label,
                dst: None,
                grid: grid.iter().map(|&g| g as f64).collect(),
                scores: mean_ranks(&sums, cells),
                selected: grid[chosen] as f64,
            });
        }
    }
    let thresholds = ComponentThresholds {
        connectivity: cfg.connectivity,
        per_cluster,
    };

    // Stage 2 works on the corpus after stage 1.
    let mut current: Vec<LabelMap> = cases
        .par_iter()
        .zip(&cluster_of)
        .map(|(c, &cl)| remove_small_per_label(&c.prediction, &thresholds.per_cluster[cl], cfg.connectivity).0)
        .collect();
    let confusion = ConfusionMatrix::from_pairs(current.iter().zip(cases.iter().map(|c| &c.ground_truth)))
        .map_err(PolicyError::Config)?;
    let pairs = confusion.top_confusions(cfg.top_confusions);
    let mut current_cells: Vec<Vec<f64>> = cases
        .par_iter()
        .zip(&current)
        .map(|(c, p)| scorer.cells(c.case_id(), p, &c.ground_truth))
        .collect::<Result<_>>()?;

    let mut cutoffs = cfg.cutoff_grid.clone();
    cutoffs.sort_by(f64::total_cmp);
    cutoffs.dedup();
    let mut rules = Vec::new();
    let mut relabel_searches = Vec::new();
    for (c, idx) in members.iter().enumerate() {
        for &(src, dst) in &pairs {
            let probe = |cutoff: f64| RelabelRule {
                cluster: c,
                src,
                dst,
                cutoff,
            };
            // Each case has two outcomes: unchanged, or relabelled.
            let outcomes: Vec<(Option<f64>, Option<(LabelMap, Vec<f64>)>)> = idx
                .par_iter()
                .map(|&i| {
                    let seg = &current[i];
                    let hist = seg.histogram();
                    let wt = hist[1] + hist[2] + hist[3];
                    if wt == 0 {
                        return Ok((None, None));
                    }
                    let ratio = hist[src as usize] as f64 / wt as f64;
                    if !cutoffs.iter().any(|&t| ratio < t) {
                        return Ok((Some(ratio), None));
                    }
                    let rule = probe(1.0);
                    let (relabelled, _) = apply_rules(cases[i].case_id(), seg, &[(0, &rule)])?;
                    let cells = scorer.cells(cases[i].case_id(), &relabelled, &cases[i].ground_truth)?;
                    Ok((Some(ratio), Some((relabelled, cells))))
                })
                .collect::<Result<_>>()?;
            let tables: Vec<Vec<Vec<f64>>> = idx
                .iter()
                .zip(&outcomes)
                .map(|(&i, (ratio, fired))| {
                    cutoffs
                        .iter()
                        .map(|&t| match (ratio, fired) {
                            (Some(r), Some((_, cells))) if *r < t => cells.clone(),
                            _ => current_cells[i].clone(),
                        })
                        .collect()
                })
                .collect();
            let (sums, cells) = rank_per_case_tables(&tables, cutoffs.len());
            let chosen = cutoffs[select_cutoff(&cutoffs, &sums)];
            relabel_searches.push(GridSearch {
                cluster: c,
                label: src,
                dst: Some(dst),
                grid: cutoffs.clone(),
                scores: mean_ranks(&sums, cells),
                selected: chosen,
            });
            if chosen > 0.0 {
                for (&i, (ratio, fired)) in idx.iter().zip(outcomes) {
                    if let (Some(r), Some((seg, cells))) = (ratio, fired) {
                        if r < chosen {
                            current[i] = seg;
                            current_cells[i] = cells;
                        }
                    }
                }
                rules.push(probe(chosen));
            }
        }
    }

    let degenerate_cases = cases
        .iter()
        .filter(|c| c.features.degenerate)
        .map(|c| c.case_id().to_string())
        .collect();
    let report = FitReport {
        task,
        cluster_of: cases.iter().map(|c| c.case_id().to_string()).zip(cluster_of.iter().copied()).collect(),
        cluster_sizes: members.iter().map(Vec::len).collect(),
        degenerate_cases,
        silhouette_by_k: clusterer.kmeans.silhouette_by_k.clone(),
        confusion,
        candidate_pairs: pairs,
        threshold_searches,
        relabel_searches,
    };
    let policy = PostProcessPolicy {
        version: POLICY_VERSION.into(),
        task,
        feature_manifest: manifest,
        standardizer: clusterer.standardizer,
        pca: clusterer.pca,
        kmeans: clusterer.kmeans,
        pcc_thresholds: thresholds,
        relabel_rules: rules,
        metric_config,
    };
    policy.validate()?;
    Ok((policy, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_tie_rules() {
        let grid = [0.0, 0.1, 0.2, 0.3, 0.4];
        assert_eq!(select_cutoff(&grid, &[4, 5, 4, 9, 9]), 0);
        assert_eq!(select_cutoff(&grid, &[5, 5, 4, 9, 9]), 2);
        assert_eq!(select_cutoff(&grid, &[9, 4, 4, 4, 9]), 2);
        assert_eq!(select_cutoff(&grid, &[9, 4, 4, 9, 4]), 1);
        assert_eq!(select_cutoff(&grid, &[9, 8, 8, 8, 3]), 4);
    }

    #[test]
    fn threshold_ties_go_small() {
        assert_eq!(select_threshold(&[6, 4, 4, 5]), 1);
        assert_eq!(select_threshold(&[4, 4, 4]), 0);
    }
}
