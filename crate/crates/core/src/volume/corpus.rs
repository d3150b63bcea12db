//! Challenge-style corpus layout.
//!
//! Sequences are named `<case_id>-<seq>.nii.gz` with `seq` one of
//! `t1n, t1c, t2w, t2f`; masks are `<case_id>-seg.nii.gz`. Images,
//! predictions and ground truth live in separate directories. Plain `.nii`
//! files are accepted when no `.nii.gz` twin exists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{read_label_map, read_scalar_volume, CaseBundle, Result, Sequence, VolumeError};

const MASK_SUFFIX: &str = "-seg";

/// Directories making up one corpus.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub images: Option<PathBuf>,
    pub predictions: PathBuf,
    pub labels: Option<PathBuf>,
}

pub fn sequence_path(dir: &Path, case_id: &str, seq: Sequence) -> PathBuf {
    dir.join(format!("{case_id}-{}.nii.gz", seq.suffix()))
}

pub fn mask_path(dir: &Path, case_id: &str) -> PathBuf {
    dir.join(format!("{case_id}{MASK_SUFFIX}.nii.gz"))
}

fn existing(path: PathBuf) -> Option<PathBuf> {
    if path.exists() {
        return Some(path);
    }
    let plain = path.with_extension("");
    plain.exists().then_some(plain)
}

/// Sorted case ids of every `<case_id>-seg.nii[.gz]` in `dir`.
pub fn discover_cases(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|source| VolumeError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| VolumeError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let stem = name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii"));
        if let Some(id) = stem.and_then(|s| s.strip_suffix(MASK_SUFFIX)) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Loads one case. Every requested sequence must exist; ground truth is
/// loaded when the corpus has a label directory.
pub fn load_case(corpus: &Corpus, case_id: &str, sequences: &[Sequence]) -> Result<CaseBundle> {
    let missing = |what: String| VolumeError::MissingInput {
        case: case_id.to_string(),
        what,
    };
    let pred_path = existing(mask_path(&corpus.predictions, case_id))
        .ok_or_else(|| missing(format!("prediction in {}", corpus.predictions.display())))?;
    let prediction = read_label_map(pred_path)?;

    let ground_truth = match &corpus.labels {
        Some(dir) => {
            let p = existing(mask_path(dir, case_id))
                .ok_or_else(|| missing(format!("ground truth in {}", dir.display())))?;
            Some(read_label_map(p)?)
        }
        None => None,
    };

    let mut vols = BTreeMap::new();
    if !sequences.is_empty() {
        let dir = corpus
            .images
            .as_ref()
            .ok_or_else(|| missing("image directory".to_string()))?;
        for &seq in sequences {
            let p = existing(sequence_path(dir, case_id, seq))
                .ok_or_else(|| missing(format!("sequence file {case_id}-{}.nii.gz", seq.suffix())))?;
            vols.insert(seq, read_scalar_volume(p)?);
        }
    }
    CaseBundle::new(case_id, vols, prediction, ground_truth)
}
