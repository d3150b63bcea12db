//! Per-case metrics CSV.
//!
//! Header: `case_id` followed, for each region, by `LW_Dice_<region>` and one
//! `LW_NSD@<tol>_<region>` per tolerance (tolerances printed with at least one
//! decimal, e.g. `LW_NSD@1.0_WT`). Values use the shortest representation
//! that reparses to the same `f64`.

use std::path::Path;

use super::{CaseMetrics, MetricsError, Region, RegionScores};

/// One metric column: Dice when `tolerance` is `None`, otherwise NSD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricColumn {
    pub region: Region,
    pub tolerance: Option<f64>,
}

impl MetricColumn {
    pub fn header(&self) -> String {
        match self.tolerance {
            None => format!("LW_Dice_{}", self.region),
            Some(t) => format!("LW_NSD@{}_{}", format_tolerance(t), self.region),
        }
    }

    fn parse(name: &str) -> Option<Self> {
        let (metric, region) = name.rsplit_once('_')?;
        let region = region.parse().ok()?;
        if metric == "LW_Dice" {
            return Some(Self { region, tolerance: None });
        }
        let t = metric.strip_prefix("LW_NSD@")?.parse().ok()?;
        Some(Self {
            region,
            tolerance: Some(t),
        })
    }
}

pub fn format_tolerance(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{t:.1}")
    } else {
        format!("{t}")
    }
}

/// Column order for the given regions and tolerances.
pub fn metric_columns(regions: &[Region], tolerances: &[f64]) -> Vec<MetricColumn> {
    regions
        .iter()
        .flat_map(|&region| {
            std::iter::once(MetricColumn { region, tolerance: None }).chain(
                tolerances
                    .iter()
                    .map(move |&t| MetricColumn { region, tolerance: Some(t) }),
            )
        })
        .collect()
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> MetricsError {
    MetricsError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_metrics_csv(path: &Path, rows: &[CaseMetrics]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let (regions, tolerances) = match rows.first() {
        Some(r) => (r.regions.iter().map(|s| s.region).collect::<Vec<_>>(), r.tolerances.clone()),
        None => (Vec::new(), Vec::new()),
    };
    let columns = metric_columns(&regions, &tolerances);
    let mut header = vec!["case_id".to_string()];
    header.extend(columns.iter().map(MetricColumn::header));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let mut rec = vec![row.case_id.clone()];
        for c in &columns {
            let v = row
                .value(c)
                .ok_or_else(|| csv_err(path, format!("case {} lacks column {}", row.case_id, c.header())))?;
            rec.push(format!("{v}"));
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<CaseMetrics>, MetricsError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.get(0) != Some("case_id") {
        return Err(csv_err(path, "first column must be case_id"));
    }
    let columns = headers
        .iter()
        .skip(1)
        .map(|h| MetricColumn::parse(h).ok_or_else(|| csv_err(path, format!("unrecognized column {h:?}"))))
        .collect::<Result<Vec<_>, _>>()?;

    let mut regions: Vec<Region> = Vec::new();
    let mut tolerances: Vec<f64> = Vec::new();
    for c in &columns {
        if !regions.contains(&c.region) {
            regions.push(c.region);
        }
        if let Some(t) = c.tolerance {
            if !tolerances.contains(&t) {
                tolerances.push(t);
            }
        }
    }
    if metric_columns(&regions, &tolerances) != columns {
        return Err(csv_err(path, "columns are not a complete region x metric grid"));
    }

    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let case_id = rec.get(0).unwrap_or_default().to_string();
        let mut values = Vec::with_capacity(columns.len());
        for (n, field) in rec.iter().skip(1).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| csv_err(path, format!("case {case_id}: bad value {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(csv_err(
                    path,
                    format!("case {case_id}: {} = {v} outside [0, 1]", columns[n].header()),
                ));
            }
            values.push(v);
        }
        let per_region = 1 + tolerances.len();
        let regions = regions
            .iter()
            .enumerate()
            .map(|(n, &region)| {
                let chunk = &values[n * per_region..(n + 1) * per_region];
                RegionScores {
                    region,
                    dice: chunk[0],
                    nsd: chunk[1..].to_vec(),
                }
            })
            .collect();
        out.push(CaseMetrics {
            case_id,
            tolerances: tolerances.clone(),
            regions,
        });
    }
    Ok(out)
}
