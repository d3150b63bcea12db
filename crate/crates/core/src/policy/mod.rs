//! Adaptive post-processing policy: per-cluster small-component removal
//! followed by per-cluster ratio-triggered label redefinition.

pub mod confusion;
pub mod fit;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusterModel, ClusteringError, PcaModel, Standardizer};
use crate::metrics::{MetricConfig, MetricsError, Region};
use crate::morphology::{connected_components, Connectivity};
use crate::radiomics::{extract_case_features, FeatureManifest, RadiomicsError};
use crate::ranking::RankingError;
use crate::volume::{CaseBundle, LabelMap};

pub use confusion::ConfusionMatrix;
pub use fit::{fit_policy, FitConfig, FitInput, FitReport};

pub const POLICY_VERSION: &str = "radpp-policy/1";

/// Tumor labels a policy may act on.
pub const TUMOR_LABELS: [u8; 4] = [1, 2, 3, 4];

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Radiomics(#[from] RadiomicsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("policy JSON: {0}")]
    Json(String),
    #[error("unsupported policy version {0:?}")]
    Version(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("case {0} has no ground truth")]
    NoGroundTruth(String),
    #[error("case {case}: rule {src}->{dst} changed the whole-tumor mask")]
    WtInvariance { case: String, src: u8, dst: u8 },
    #[error("case {case}: {message}")]
    Geometry { case: String, message: String },
}

pub type Result<T> = std::result::Result<T, PolicyError>;

/// Challenge task; decides the evaluated regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "gli-pre")]
    GliPre,
    #[serde(rename = "gli-post")]
    GliPost,
    #[serde(rename = "ssa")]
    Ssa,
}

impl Task {
    pub fn regions(self) -> Vec<Region> {
        use Region::*;
        match self {
            Task::Ssa => vec![Et, Tc, Wt],
            Task::GliPre => vec![Et, Tc, Wt, Netc, Snfh],
            Task::GliPost => vec![Et, Tc, Wt, Netc, Snfh, Rc],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::GliPre => "gli-pre",
            Task::GliPost => "gli-post",
            Task::Ssa => "ssa",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Task::GliPre, Task::GliPost, Task::Ssa]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?} (expected gli-pre, gli-post, or ssa)"))
    }
}

/// Minimum component size per cluster and tumor label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentThresholds {
    pub connectivity: Connectivity,
    /// `per_cluster[c][l - 1]` is the threshold of label `l` in cluster `c`.
    pub per_cluster: Vec<[usize; 4]>,
}

impl ComponentThresholds {
    pub fn identity(clusters: usize) -> Self {
        Self {
            connectivity: Connectivity::TwentySix,
            per_cluster: vec![[0; 4]; clusters],
        }
    }
}

/// Converts every `src` voxel to `dst` when `|src| / |WT| < cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelabelRule {
    pub cluster: usize,
    pub src: u8,
    pub dst: u8,
    pub cutoff: f64,
}

impl RelabelRule {
    /// Whether the rule fires on `seg`. A case with an empty whole tumor
    /// never fires.
    pub fn fires(&self, seg: &LabelMap) -> bool {
        let hist = seg.histogram();
        let wt = hist[1] + hist[2] + hist[3];
        wt > 0 && (hist[self.src as usize] as f64 / wt as f64) < self.cutoff
    }

    fn preserves_wt(&self) -> bool {
        (1..=3).contains(&self.src) && (1..=3).contains(&self.dst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostProcessPolicy {
    pub version: String,
    pub task: Task,
    pub feature_manifest: FeatureManifest,
    pub standardizer: Standardizer,
    pub pca: PcaModel,
    pub kmeans: ClusterModel,
    pub pcc_thresholds: ComponentThresholds,
    pub relabel_rules: Vec<RelabelRule>,
    pub metric_config: MetricConfig,
}

/// Result of post-processing one case.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedCase {
    pub cluster: usize,
    pub output: LabelMap,
    /// Indices into the policy's rules that fired, in application order.
    pub fired: Vec<usize>,
    pub removed_voxels: usize,
}

/// Removes, per label, components smaller than that label's threshold.
/// Removed voxels become background.
pub fn remove_small_per_label(seg: &LabelMap, thresholds: &[usize; 4], connectivity: Connectivity) -> (LabelMap, usize) {
    let mut data = seg.data().to_vec();
    let mut removed = 0;
    for (n, &t) in thresholds.iter().enumerate() {
        if t == 0 {
            continue;
        }
        let label = n as u8 + 1;
        let mask = seg.mask_of(label);
        if mask.is_empty() {
            continue;
        }
        let cc = connected_components(&mask, connectivity);
        for (idx, &id) in cc.labels().iter().enumerate() {
            if id > 0 && cc.size(id) < t {
                data[idx] = 0;
                removed += 1;
            }
        }
    }
    (seg.with_data(data).expect("labels unchanged or zeroed"), removed)
}

/// Applies `rules` in order, each evaluated on the current mask. Rules that
/// keep both labels inside the whole tumor are checked to leave it intact.
pub fn apply_rules(case_id: &str, seg: &LabelMap, rules: &[(usize, &RelabelRule)]) -> Result<(LabelMap, Vec<usize>)> {
    let mut cur = seg.clone();
    let mut fired = Vec::new();
    for &(index, rule) in rules {
        if !rule.fires(&cur) {
            continue;
        }
        let next = cur.map_labels(|l| if l == rule.src { rule.dst } else { l });
        if rule.preserves_wt() {
            let wt = |l: u8| (1..=3).contains(&l);
            if cur.data().iter().zip(next.data()).any(|(&a, &b)| wt(a) != wt(b)) {
                return Err(PolicyError::WtInvariance {
                    case: case_id.to_string(),
                    src: rule.src,
                    dst: rule.dst,
                });
            }
        }
        cur = next;
        fired.push(index);
    }
    Ok((cur, fired))
}

impl PostProcessPolicy {
    pub fn clusters(&self) -> usize {
        self.kmeans.k
    }

    /// Cluster of a raw feature vector.
    pub fn assign(&self, features: &[f64]) -> Result<usize> {
        let z = self.standardizer.transform(features)?;
        Ok(self.kmeans.assign(&self.pca.project(&z)?))
    }

    /// Both stages for a prediction already assigned to `cluster`.
    pub fn apply_to_cluster(&self, case_id: &str, cluster: usize, prediction: &LabelMap) -> Result<AppliedCase> {
        let thresholds = self.pcc_thresholds.per_cluster.get(cluster).ok_or_else(|| {
            PolicyError::Config(format!("cluster {cluster} has no thresholds"))
        })?;
        let (after_pcc, removed_voxels) =
            remove_small_per_label(prediction, thresholds, self.pcc_thresholds.connectivity);
        let rules: Vec<(usize, &RelabelRule)> = self
            .relabel_rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.cluster == cluster)
            .collect();
        let (output, fired) = apply_rules(case_id, &after_pcc, &rules)?;
        Ok(AppliedCase {
            cluster,
            output,
            fired,
            removed_voxels,
        })
    }

    /// Extracts features, assigns the cluster, and applies both stages.
    pub fn apply(&self, case: &CaseBundle) -> Result<AppliedCase> {
        let fv = extract_case_features(case, &self.feature_manifest)?;
        let cluster = self.assign(&fv.values)?;
        self.apply_to_cluster(&case.case_id, cluster, &case.prediction)
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        if self.version != POLICY_VERSION {
            return Err(PolicyError::Version(self.version.clone()));
        }
        let p = self.feature_manifest.len();
        let m = self.pca.retained();
        let bad = |what: &str| Err(PolicyError::Config(format!("inconsistent policy: {what}")));
        if self.standardizer.mean.len() != p || self.standardizer.std.len() != p || self.pca.mean.len() != p {
            return bad("standardizer/PCA width differs from the feature manifest");
        }
        if self.pca.components.iter().any(|c| c.len() != p) {
            return bad("PCA component width");
        }
        if self.kmeans.centroids.len() != self.kmeans.k || self.kmeans.centroids.iter().any(|c| c.len() != m) {
            return bad("centroid shape");
        }
        if self.pcc_thresholds.per_cluster.len() != self.kmeans.k {
            return bad("threshold table size");
        }
        for r in &self.relabel_rules {
            let ok = r.cluster < self.kmeans.k
                && r.src != r.dst
                && TUMOR_LABELS.contains(&r.src)
                && TUMOR_LABELS.contains(&r.dst)
                && (0.0..=1.0).contains(&r.cutoff);
            if !ok {
                return bad("relabel rule out of range");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("policy serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| PolicyError::Json(e.to_string()))?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(POLICY_VERSION) => {}
            Some(other) => return Err(PolicyError::Version(other.to_string())),
            None => return Err(PolicyError::Json("missing version".into())),
        }
        let policy: Self = serde_json::from_value(value).map_err(|e| PolicyError::Json(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Dims, Spacing};

    fn seg(dims: Dims, fill: impl Fn(usize, usize, usize) -> u8) -> LabelMap {
        let data = (0..dims.len())
            .map(|idx| {
                let (i, j, k) = dims.coords(idx);
                fill(i, j, k)
            })
            .collect();
        LabelMap::new(dims, Spacing::isotropic(), data).unwrap()
    }

    #[test]
    fn small_island_removed_only_for_its_label() {
        let d = Dims::cube(20);
        let s = seg(d, |i, j, k| {
            if (2..8).contains(&i) && (2..8).contains(&j) && (2..8).contains(&k) {
                2
            } else if i >= 15 && i < 17 && j == 15 && k >= 15 && k < 17 {
                2 // 4-voxel island
            } else if i == 18 && j == 2 && k == 2 {
                3
            } else {
                0
            }
        });
        let (out, removed) = remove_small_per_label(&s, &[0, 10, 0, 0], Connectivity::TwentySix);
        assert_eq!(removed, 4);
        assert_eq!(out.count(2), 216);
        assert_eq!(out.count(3), 1);
        for (a, b) in out.data().iter().zip(s.data()) {
            assert!(*a == *b || *a == 0);
        }
        let (same, none) = remove_small_per_label(&s, &[0; 4], Connectivity::TwentySix);
        assert_eq!((same, none), (s.clone(), 0));
    }

    #[test]
    fn rule_fires_on_small_ratio_and_keeps_wt() {
        // 100 voxels: 1 ET, 99 SNFH, ratio 0.01 < 0.02.
        let d = Dims::new(100, 1, 1);
        let s = seg(d, |i, _, _| if i == 0 { 3 } else { 2 });
        let rule = RelabelRule {
            cluster: 0,
            src: 3,
            dst: 1,
            cutoff: 0.02,
        };
        let (out, fired) = apply_rules("c", &s, &[(0, &rule)]).unwrap();
        assert_eq!(fired, vec![0]);
        assert_eq!(out.count(3), 0);
        assert_eq!(out.count(1), 1);
        // Second application is a no-op: ratio is now 0.
        let (again, fired2) = apply_rules("c", &out, &[(0, &rule)]).unwrap();
        assert_eq!(again, out);
        assert_eq!(fired2, vec![0]);
        let high = RelabelRule { cutoff: 0.01, ..rule };
        assert!(apply_rules("c", &s, &[(0, &high)]).unwrap().1.is_empty());
    }

    #[test]
    fn empty_wt_never_fires() {
        let d = Dims::cube(3);
        let s = LabelMap::zeros(d, Spacing::isotropic());
        let rule = RelabelRule {
            cluster: 0,
            src: 1,
            dst: 3,
            cutoff: 1.0,
        };
        assert!(!rule.fires(&s));
    }

    #[test]
    fn task_regions() {
        assert_eq!(Task::Ssa.regions().len(), 3);
        assert!(!Task::GliPre.regions().contains(&Region::Rc));
        assert!(Task::GliPost.regions().contains(&Region::Rc));
        assert_eq!("gli-post".parse::<Task>().unwrap(), Task::GliPost);
        assert!("brats".parse::<Task>().is_err());
    }
}
