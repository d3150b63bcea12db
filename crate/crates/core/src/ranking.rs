//! Rank-based comparison of candidate segmentations.
//!
//! Every (case, region, metric) cell ranks the candidates by metric value,
//! best first, with ties sharing the mean of their positions. A candidate's
//! score is its mean rank over all cells; lower is better. Ranks are tracked
//! in half-units as integers so tie detection and score comparisons are exact.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{format_tolerance, CaseMetrics, MetricColumn, Region};

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("need at least two candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("candidates share no cases")]
    NoCases,
    #[error("case-set mismatch: {0}")]
    CaseSetMismatch(String),
    #[error("missing metric {metric} for region {region} in case {case} of candidate {candidate}")]
    MissingMetric {
        candidate: String,
        case: String,
        region: Region,
        metric: MetricKind,
    },
    #[error("non-finite metric value for candidate {0}")]
    NonFinite(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

/// A ranked metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Dice,
    /// NSD at the given tolerance in mm.
    Nsd(f64),
}

impl MetricKind {
    fn column(self, region: Region) -> MetricColumn {
        MetricColumn {
            region,
            tolerance: match self {
                MetricKind::Dice => None,
                MetricKind::Nsd(t) => Some(t),
            },
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Dice => f.write_str("Dice"),
            MetricKind::Nsd(t) => write!(f, "NSD@{}", format_tolerance(*t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingConfig {
    pub metrics: Vec<MetricKind>,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            metrics: vec![MetricKind::Dice, MetricKind::Nsd(0.5), MetricKind::Nsd(1.0)],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub id: String,
    pub cases: Vec<CaseMetrics>,
}

/// Candidates evaluated on a shared case set.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
    case_ids: Vec<String>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self, RankingError> {
        if candidates.len() < 2 {
            return Err(RankingError::TooFewCandidates(candidates.len()));
        }
        let ids = |c: &Candidate| -> Result<Vec<String>, RankingError> {
            let mut ids: Vec<String> = c.cases.iter().map(|m| m.case_id.clone()).collect();
            ids.sort();
            if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
                return Err(RankingError::CaseSetMismatch(format!(
                    "candidate {} lists case {} twice",
                    c.id, w[0]
                )));
            }
            Ok(ids)
        };
        let case_ids = ids(&candidates[0])?;
        if case_ids.is_empty() {
            return Err(RankingError::NoCases);
        }
        for c in &candidates[1..] {
            if ids(c)? != case_ids {
                return Err(RankingError::CaseSetMismatch(format!(
                    "candidate {} covers different cases than {}",
                    c.id, candidates[0].id
                )));
            }
        }
        Ok(Self { candidates, case_ids })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }
}

/// Ranks of every candidate within one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRanks {
    pub case_id: String,
    pub region: Region,
    pub metric: MetricKind,
    /// Indexed like [`RankingResult::candidate_ids`].
    pub ranks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankingResult {
    pub candidate_ids: Vec<String>,
    /// Mean rank per candidate; lower is better.
    pub scores: Vec<f64>,
    /// Sum of ranks per candidate, doubled so it is an integer.
    pub doubled_rank_sums: Vec<u64>,
    pub cells: Vec<CellRanks>,
}

impl RankingResult {
    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.candidate_ids.iter().position(|c| c == id).map(|n| self.scores[n])
    }

    /// Index of the best candidate; the earliest wins exact ties.
    pub fn best(&self) -> usize {
        best_index(&self.doubled_rank_sums)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RankingError> {
        let err = |e: &dyn fmt::Display| RankingError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        w.write_record(["candidate_id", "ranking_score"]).map_err(|e| err(&e))?;
        for (id, s) in self.candidate_ids.iter().zip(&self.scores) {
            w.write_record([id.as_str(), &format!("{s}")]).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}

/// Index of the smallest value; the earliest wins ties.
pub fn best_index(doubled_rank_sums: &[u64]) -> usize {
    let mut best = 0;
    for (n, &s) in doubled_rank_sums.iter().enumerate() {
        if s < doubled_rank_sums[best] {
            best = n;
        }
    }
    best
}

/// Doubled tie-averaged ranks of `values`, descending (largest value gets 2).
pub fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut out = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1 share (start + end + 2) / 2
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            out[i] = doubled;
        }
        start = end + 1;
    }
    out
}

/// Doubled rank sums from a `candidates x cells` table of metric values.
pub fn rank_table(values: &[Vec<f64>]) -> Vec<u64> {
    let n = values.len();
    let cells = values.first().map_or(0, Vec::len);
    let mut sums = vec![0u64; n];
    let mut column = vec![0.0; n];
    for cell in 0..cells {
        for (c, row) in values.iter().enumerate() {
            column[c] = row[cell];
        }
        for (s, r) in sums.iter_mut().zip(doubled_ranks(&column)) {
            *s += r;
        }
    }
    sums
}

pub fn rank_candidates(set: &CandidateSet, config: &RankingConfig) -> Result<RankingResult, RankingError> {
    let first = &set.candidates[0];
    let regions: Vec<Region> = first.cases[0].regions.iter().map(|r| r.region).collect();

    // Per candidate, cases keyed by id so every candidate is read in the same order.
    let by_case: Vec<BTreeMap<&str, &CaseMetrics>> = set
        .candidates
        .iter()
        .map(|c| c.cases.iter().map(|m| (m.case_id.as_str(), m)).collect())
        .collect();

    let mut cells = Vec::new();
    let mut sums = vec![0u64; set.candidates.len()];
    for case_id in &set.case_ids {
        for &region in &regions {
            for &metric in &config.metrics {
                let mut values = Vec::with_capacity(set.candidates.len());
                for (c, cases) in set.candidates.iter().zip(&by_case) {
                    let v = cases[case_id.as_str()]
                        .value(&metric.column(region))
                        .ok_or_else(|| RankingError::MissingMetric {
                            candidate: c.id.clone(),
                            case: case_id.clone(),
                            region,
                            metric,
                        })?;
                    if !v.is_finite() {
                        return Err(RankingError::NonFinite(c.id.clone()));
                    }
                    values.push(v);
                }
                let ranks = doubled_ranks(&values);
                for (s, r) in sums.iter_mut().zip(&ranks) {
                    *s += r;
                }
                cells.push(CellRanks {
                    case_id: case_id.clone(),
                    region,
                    metric,
                    ranks: ranks.iter().map(|&r| r as f64 / 2.0).collect(),
                });
            }
        }
    }
    let denom = 2.0 * cells.len() as f64;
    Ok(RankingResult {
        candidate_ids: set.candidates.iter().map(|c| c.id.clone()).collect(),
        scores: sums.iter().map(|&s| s as f64 / denom).collect(),
        doubled_rank_sums: sums,
        cells,
    })
}
