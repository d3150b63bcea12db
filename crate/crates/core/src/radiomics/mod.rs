//! Radiomic signature of a case: shape descriptors of the predicted whole
//! tumor plus first-order and texture descriptors of every sequence inside it.
//!
//! Feature identifiers are `shape/<Name>` and `<seq>/<family>/<Name>`; their
//! order is fixed by [`FeatureManifest`].

pub mod discretize;
pub mod firstorder;
pub mod glcm;
pub mod shape;
pub mod texture;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{region_mask, Region};
use crate::volume::{CaseBundle, Mask, ScalarVolume, Sequence, VolumeError};
use discretize::GrayRoi;
use firstorder::{firstorder_features, FIRSTORDER_FEATURES};
use glcm::{glcm_features, Offset, GLCM_FEATURES};
use shape::{shape_features, SHAPE_FEATURES};
use texture::{
    gldm_features, glrlm_features, glszm_features, ngtdm_features, GLDM_FEATURES, GLRLM_FEATURES, GLSZM_FEATURES,
    NGTDM_FEATURES,
};

/// `p * log2(p)`, with the limit 0 at `p = 0`.
pub(crate) fn plog2p(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub const SHAPE_COUNT: usize = 14;
pub const PER_SEQUENCE_COUNT: usize = 93;
pub const MANIFEST_VERSION: &str = "radpp-features/1";

#[derive(Debug, Error)]
pub enum RadiomicsError {
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("feature CSV {path}: {message}")]
    Csv { path: String, message: String },
    #[error("feature names do not match the manifest: {0}")]
    ManifestMismatch(String),
}

/// The 13 offsets that cover every 26-neighbour direction once.
pub fn directions() -> Vec<Offset> {
    let mut out = Vec::with_capacity(13);
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if (dz, dy, dx) > (0, 0, 0) {
                    out.push((dx, dy, dz));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    /// Histogram bin width for first-order entropy and uniformity.
    pub bin_width: f64,
    /// Gray levels for texture matrices.
    pub bin_count: usize,
    /// Neighbourhood of zones, dependences, and gray-tone differences.
    pub connectivity: u32,
    pub sequences: Vec<Sequence>,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            bin_width: 25.0,
            bin_count: 32,
            connectivity: 26,
            sequences: Sequence::ALL.to_vec(),
        }
    }
}

/// Versioned list of feature names with the settings that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: String,
    pub settings: ExtractionSettings,
    pub names: Vec<String>,
}

impl FeatureManifest {
    pub fn new(settings: ExtractionSettings) -> Self {
        let mut names: Vec<String> = SHAPE_FEATURES.iter().map(|n| format!("shape/{n}")).collect();
        let families: [(&str, &[&str]); 6] = [
            ("firstorder", &FIRSTORDER_FEATURES),
            ("glcm", &GLCM_FEATURES),
            ("glrlm", &GLRLM_FEATURES),
            ("glszm", &GLSZM_FEATURES),
            ("gldm", &GLDM_FEATURES),
            ("ngtdm", &NGTDM_FEATURES),
        ];
        for seq in &settings.sequences {
            for (family, list) in families {
                names.extend(list.iter().map(|n| format!("{seq}/{family}/{n}")));
            }
        }
        assert_eq!(names.len(), SHAPE_COUNT + PER_SEQUENCE_COUNT * settings.sequences.len());
        Self {
            version: MANIFEST_VERSION.into(),
            settings,
            names,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub case_id: String,
    pub values: Vec<f64>,
    /// The whole tumor had at most one voxel; `values` are all zero.
    pub degenerate: bool,
}

/// The 93 first-order and texture values of one sequence inside `mask`.
pub fn sequence_features(image: &ScalarVolume, mask: &Mask, settings: &ExtractionSettings) -> Vec<f64> {
    let values: Vec<f64> = mask.indices().map(|i| image.data()[i] as f64).collect();
    let roi = GrayRoi::with_bin_count(image, mask, settings.bin_count);
    let dirs = directions();
    let mut out = Vec::with_capacity(PER_SEQUENCE_COUNT);
    out.extend(firstorder_features(&values, image.spacing().voxel_volume(), settings.bin_width));
    out.extend(glcm_features(&roi, &dirs));
    out.extend(glrlm_features(&roi, &dirs));
    out.extend(glszm_features(&roi));
    out.extend(gldm_features(&roi));
    out.extend(ngtdm_features(&roi));
    debug_assert_eq!(out.len(), PER_SEQUENCE_COUNT);
    out
}

/// Signature of the case's predicted whole tumor, in manifest order.
pub fn extract_case_features(case: &CaseBundle, manifest: &FeatureManifest) -> Result<FeatureVector, RadiomicsError> {
    let settings = &manifest.settings;
    let images = settings
        .sequences
        .iter()
        .map(|&s| case.sequence(s))
        .collect::<Result<Vec<_>, _>>()?;
    case.validate()?;
    let wt = region_mask(&case.prediction, Region::Wt);
    if wt.count() <= 1 {
        return Ok(FeatureVector {
            case_id: case.case_id.clone(),
            values: vec![0.0; manifest.len()],
            degenerate: true,
        });
    }
    let mut values = Vec::with_capacity(manifest.len());
    values.extend(shape_features(&wt, case.prediction.spacing()));
    let per_seq: Vec<Vec<f64>> = images.par_iter().map(|img| sequence_features(img, &wt, settings)).collect();
    for v in per_seq {
        values.extend(v);
    }
    assert_eq!(values.len(), SHAPE_COUNT + PER_SEQUENCE_COUNT * settings.sequences.len());
    assert_eq!(values.len(), manifest.len());
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(FeatureVector {
        case_id: case.case_id.clone(),
        values,
        degenerate: false,
    })
}

/// Feature vectors of many cases under one manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureMatrix {
    pub fn new(manifest: &FeatureManifest, rows: Vec<FeatureVector>) -> Result<Self, RadiomicsError> {
        if let Some(r) = rows.iter().find(|r| r.values.len() != manifest.len()) {
            return Err(RadiomicsError::ManifestMismatch(format!(
                "case {} has {} values, manifest lists {}",
                r.case_id,
                r.values.len(),
                manifest.len()
            )));
        }
        Ok(Self {
            names: manifest.names.clone(),
            rows,
        })
    }

    pub fn case_ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.case_id.as_str()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), RadiomicsError> {
        let err = |e: &dyn std::fmt::Display| csv_err(path, e);
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        let header = std::iter::once("case_id").chain(self.names.iter().map(String::as_str));
        w.write_record(header).map_err(|e| err(&e))?;
        for row in &self.rows {
            let rec = std::iter::once(row.case_id.clone()).chain(row.values.iter().map(|v| format!("{v}")));
            w.write_record(rec).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }

    /// Reads a feature CSV, requiring its columns to equal `manifest.names`.
    /// Rows that are entirely zero are marked degenerate.
    pub fn read_csv(path: &Path, manifest: &FeatureManifest) -> Result<Self, RadiomicsError> {
        let err = |e: &dyn std::fmt::Display| csv_err(path, e);
        let mut r = csv::Reader::from_path(path).map_err(|e| err(&e))?;
        let header = r.headers().map_err(|e| err(&e))?.clone();
        let names: Vec<&str> = header.iter().skip(1).collect();
        if header.get(0) != Some("case_id") || names != manifest.names {
            return Err(RadiomicsError::ManifestMismatch(format!("{} header", path.display())));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| err(&e))?;
            let case_id = rec.get(0).unwrap_or_default().to_string();
            let values = rec
                .iter()
                .skip(1)
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| err(&format!("case {case_id}: non-numeric or non-finite value")))?;
            let degenerate = values.iter().all(|&v| v == 0.0);
            rows.push(FeatureVector {
                case_id,
                values,
                degenerate,
            });
        }
        Self::new(manifest, rows)
    }
}

fn csv_err(path: &Path, e: &dyn std::fmt::Display) -> RadiomicsError {
    RadiomicsError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirteen_unique_directions() {
        let d = directions();
        assert_eq!(d.len(), 13);
        for &(x, y, z) in &d {
            assert!(!d.contains(&(-x, -y, -z)));
        }
    }

    #[test]
    fn manifest_counts() {
        let m = FeatureManifest::new(ExtractionSettings::default());
        assert_eq!(m.len(), 386);
        assert_eq!(m.names[0], "shape/VoxelVolume");
        assert_eq!(m.names[14], "t1n/firstorder/Energy");
        assert_eq!(m.names[385], "t2f/ngtdm/Strength");
        let mut sorted = m.names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 386);
    }
}
