//! Tumor regions and lesion-wise Dice / normalized surface distance.
//!
//! Ground-truth components whose dilations touch are merged into one lesion.
//! Every predicted component is assigned to the lesion whose dilated footprint
//! it overlaps most, or counted as a false positive. Scores average over
//! lesions plus false positives, which score 0. A region absent from both
//! masks scores 1.

mod csv_io;
mod lesion;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphology::Connectivity;
use crate::volume::{LabelMap, Mask};

pub use csv_io::{format_tolerance, metric_columns, read_metrics_csv, write_metrics_csv, MetricColumn};
pub use lesion::{lesionwise_dice, lesionwise_nsd, match_lesions, LesionMatchResult, LesionRecord, MatchConfig};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("metrics CSV {path}: {message}")]
    Csv { path: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Evaluated tumor region, defined by the raw labels it contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "ET")]
    Et,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "WT")]
    Wt,
    #[serde(rename = "NETC")]
    Netc,
    #[serde(rename = "SNFH")]
    Snfh,
    #[serde(rename = "RC")]
    Rc,
}

impl Region {
    pub const ALL: [Region; 6] = [Region::Et, Region::Tc, Region::Wt, Region::Netc, Region::Snfh, Region::Rc];

    pub fn labels(self) -> &'static [u8] {
        match self {
            Region::Et => &[3],
            Region::Tc => &[1, 3],
            Region::Wt => &[1, 2, 3],
            Region::Netc => &[1],
            Region::Snfh => &[2],
            Region::Rc => &[4],
        }
    }

    pub fn contains(self, label: u8) -> bool {
        self.labels().contains(&label)
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Et => "ET",
            Region::Tc => "TC",
            Region::Wt => "WT",
            Region::Netc => "NETC",
            Region::Snfh => "SNFH",
            Region::Rc => "RC",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Region::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| MetricsError::UnknownRegion(s.to_string()))
    }
}

pub fn region_mask(seg: &LabelMap, region: Region) -> Mask {
    let mut lut = [false; 256];
    for &l in region.labels() {
        lut[l as usize] = true;
    }
    Mask::from_fn(seg.dims(), |idx| lut[seg.data()[idx] as usize])
}

/// Regions, tolerances, and matching constants for one evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub regions: Vec<Region>,
    /// NSD tolerances in mm.
    pub tolerances: Vec<f64>,
    pub dilation_iters: usize,
    pub connectivity: Connectivity,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            regions: vec![Region::Et, Region::Tc, Region::Wt],
            tolerances: vec![0.5, 1.0],
            dilation_iters: 3,
            connectivity: Connectivity::TwentySix,
        }
    }
}

impl MetricConfig {
    pub fn with_regions(regions: Vec<Region>) -> Self {
        Self {
            regions,
            ..Self::default()
        }
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig {
            dilation_iters: self.dilation_iters,
            connectivity: self.connectivity,
        }
    }
}

/// Lesion-wise scores of one region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScores {
    pub region: Region,
    pub dice: f64,
    /// One entry per configured tolerance, same order.
    pub nsd: Vec<f64>,
}

/// Lesion-wise Dice and NSD of every configured region for one case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    pub tolerances: Vec<f64>,
    pub regions: Vec<RegionScores>,
}

impl CaseMetrics {
    pub fn region(&self, region: Region) -> Option<&RegionScores> {
        self.regions.iter().find(|r| r.region == region)
    }

    pub fn dice(&self, region: Region) -> Option<f64> {
        self.region(region).map(|r| r.dice)
    }

    pub fn nsd(&self, region: Region, tolerance: f64) -> Option<f64> {
        let t = self.tolerances.iter().position(|&t| t == tolerance)?;
        self.region(region).map(|r| r.nsd[t])
    }

    /// Value of one metric column, if present.
    pub fn value(&self, column: &MetricColumn) -> Option<f64> {
        match column.tolerance {
            None => self.dice(column.region),
            Some(t) => self.nsd(column.region, t),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.regions
            .iter()
            .flat_map(|r| std::iter::once(r.dice).chain(r.nsd.iter().copied()))
    }
}

pub fn evaluate_case(
    case_id: &str,
    pred: &LabelMap,
    gt: &LabelMap,
    config: &MetricConfig,
) -> Result<CaseMetrics, MetricsError> {
    if !pred.same_geometry(gt) {
        return Err(MetricsError::GridMismatch(format!(
            "case {case_id}: prediction {} vs ground truth {}",
            pred.dims(),
            gt.dims()
        )));
    }
    let spacing = gt.spacing();
    let regions = config
        .regions
        .iter()
        .map(|&region| {
            let m = match_lesions(
                &region_mask(gt, region),
                &region_mask(pred, region),
                spacing,
                &config.match_config(),
            );
            RegionScores {
                region,
                dice: lesionwise_dice(&m),
                nsd: config.tolerances.iter().map(|&t| lesionwise_nsd(&m, t)).collect(),
            }
        })
        .collect();
    Ok(CaseMetrics {
        case_id: case_id.to_string(),
        tolerances: config.tolerances.clone(),
        regions,
    })
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
    fn region_definitions() {
        let d = Dims::new(5, 1, 1);
        let s = LabelMap::new(d, Spacing::isotropic(), vec![0, 1, 2, 3, 4]).unwrap();
        assert_eq!(region_mask(&s, Region::Wt).count(), 3);
        assert!(!region_mask(&s, Region::Wt).get(4));
        assert_eq!(region_mask(&s, Region::Tc).count(), 2);
        assert_eq!(region_mask(&s, Region::Et).count(), 1);
        assert_eq!(region_mask(&s, Region::Rc).count(), 1);
        let zero = LabelMap::zeros(d, Spacing::isotropic());
        for r in Region::ALL {
            assert!(region_mask(&zero, r).is_empty());
        }
    }

    #[test]
    fn region_parse_round_trip() {
        for r in Region::ALL {
            assert_eq!(r.name().parse::<Region>().unwrap(), r);
        }
        assert!("XX".parse::<Region>().is_err());
    }

    fn lesion_case() -> LabelMap {
        // ET core inside NETC inside SNFH.
        seg(Dims::cube(16), |i, j, k| {
            let r = [i, j, k].iter().map(|&c| (c as i32 - 8).abs()).max().unwrap();
            match r {
                0..=1 => 3,
                2..=3 => 1,
                4..=5 => 2,
                _ => 0,
            }
        })
    }

    #[test]
    fn identical_prediction_scores_one() {
        let gt = lesion_case();
        let cfg = MetricConfig::with_regions(Region::ALL.to_vec());
        let m = evaluate_case("c", &gt, &gt, &cfg).unwrap();
        assert!(m.values().all(|v| v == 1.0));
    }

    #[test]
    fn et_swapped_to_netc() {
        let gt = lesion_case();
        let pred = gt.map_labels(|l| if l == 3 { 1 } else { l });
        let cfg = MetricConfig::default();
        let m = evaluate_case("c", &pred, &gt, &cfg).unwrap();
        let wt = m.region(Region::Wt).unwrap();
        let tc = m.region(Region::Tc).unwrap();
        let et = m.region(Region::Et).unwrap();
        assert_eq!(wt.dice, 1.0);
        assert!(wt.nsd.iter().all(|&v| v == 1.0));
        assert_eq!(tc.dice, 1.0);
        assert!(tc.nsd.iter().all(|&v| v == 1.0));
        assert_eq!(et.dice, 0.0);
        assert!(et.nsd.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_prediction_scores_zero_where_gt_present() {
        let gt = lesion_case();
        let pred = LabelMap::zeros(gt.dims(), gt.spacing());
        let cfg = MetricConfig::with_regions(Region::ALL.to_vec());
        let m = evaluate_case("c", &pred, &gt, &cfg).unwrap();
        for r in &m.regions {
            let expected = if r.region == Region::Rc { 1.0 } else { 0.0 };
            assert_eq!(r.dice, expected, "{}", r.region);
            assert!(r.nsd.iter().all(|&v| v == expected));
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = LabelMap::zeros(Dims::cube(3), Spacing::isotropic());
        let b = LabelMap::zeros(Dims::cube(4), Spacing::isotropic());
        assert!(evaluate_case("c", &a, &b, &MetricConfig::default()).is_err());
    }
}
