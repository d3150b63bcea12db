//! Geometry-aware 3D grids and NIfTI-1 I/O.
//!
//! All grids are stored with x varying fastest: the voxel at `(i, j, k)`
//! lives at `i + nx * (j + ny * k)`. Texture offsets and neighborhood scans
//! elsewhere in the crate rely on this layout.

mod corpus;
mod nifti;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{discover_cases, load_case, mask_path, sequence_path, Corpus};
pub use nifti::{load_nifti, read_label_map, read_scalar_volume, Orientation, Volume, VolumeKind};

/// Largest valid segmentation label.
pub const MAX_LABEL: u8 = 4;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed NIfTI header: {0}")]
    Header(String),
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("label out of range / non-integral value {value} at voxel {index}")]
    LabelOutOfRange { value: f64, index: usize },
    #[error("non-finite voxel value at index {0}")]
    NonFinite(usize),
    #[error("invalid spacing ({0}, {1}, {2}); components must be positive and finite")]
    InvalidSpacing(f64, f64, f64),
    #[error("data length {got} does not match dims {dims} ({expected} voxels)")]
    LengthMismatch {
        dims: Dims,
        expected: usize,
        got: usize,
    },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("case {case}: missing {what}")]
    MissingInput { case: String, what: String },
}

pub type Result<T, E = VolumeError> = std::result::Result<T, E>;

/// Voxel counts along x, y, z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Self { nx, ny, nz }
    }

    pub const fn cube(n: usize) -> Self {
        Self::new(n, n, n)
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub const fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nx;
        let rest = idx / self.nx;
        (i, rest % self.ny, rest / self.ny)
    }

    /// Index of `(i, j, k) + (di, dj, dk)` if it stays inside the grid.
    #[inline]
    pub fn offset(&self, (i, j, k): (usize, usize, usize), (di, dj, dk): (isize, isize, isize)) -> Option<usize> {
        let x = i as isize + di;
        let y = j as isize + dj;
        let z = k as isize + dk;
        if x < 0 || y < 0 || z < 0 || x >= self.nx as isize || y >= self.ny as isize || z >= self.nz as isize {
            None
        } else {
            Some(self.index(x as usize, y as usize, z as usize))
        }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Voxel edge lengths in millimeters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spacing {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Spacing {
    pub fn new(dx: f64, dy: f64, dz: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(dx) && ok(dy) && ok(dz) {
            Ok(Self { dx, dy, dz })
        } else {
            Err(VolumeError::InvalidSpacing(dx, dy, dz))
        }
    }

    pub const fn isotropic() -> Self {
        Self { dx: 1.0, dy: 1.0, dz: 1.0 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    /// Rounds each component to the nearest `f32`, the precision NIfTI stores.
    pub fn stored_precision(&self) -> Self {
        Self {
            dx: self.dx as f32 as f64,
            dy: self.dy as f32 as f64,
            dz: self.dz as f32 as f64,
        }
    }

    pub fn voxel_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }
}

impl Default for Spacing {
    fn default() -> Self {
        Self::isotropic()
    }
}

/// Floating-point intensity grid for one MRI sequence.
///
/// Grids keep their spacing at `f32` precision so that it survives a
/// save/load cycle unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume {
    dims: Dims,
    spacing: Spacing,
    data: Vec<f32>,
    orientation: Orientation,
}

impl ScalarVolume {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        check_len(dims, data.len())?;
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::NonFinite(idx));
        }
        let spacing = spacing.stored_precision();
        Ok(Self {
            dims,
            spacing,
            data,
            orientation: Orientation::from_spacing(spacing),
        })
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn orientation(&self) -> &Orientation {
        &self.orientation
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[self.dims.index(i, j, k)]
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        nifti::save_scalar(self, path.as_ref())
    }
}

/// Integer segmentation grid with values in `0..=4`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    dims: Dims,
    spacing: SpacingBits,
    data: Vec<u8>,
    orientation: OrientationBits,
}

// f64 fields are kept as bit patterns so LabelMap can be Eq + Hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct SpacingBits([u64; 3]);

impl From<Spacing> for SpacingBits {
    fn from(s: Spacing) -> Self {
        Self([s.dx.to_bits(), s.dy.to_bits(), s.dz.to_bits()])
    }
}

impl From<SpacingBits> for Spacing {
    fn from(s: SpacingBits) -> Self {
        Spacing {
            dx: f64::from_bits(s.0[0]),
            dy: f64::from_bits(s.0[1]),
            dz: f64::from_bits(s.0[2]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct OrientationBits(Vec<u32>, [i16; 2]);

impl From<&Orientation> for OrientationBits {
    fn from(o: &Orientation) -> Self {
        Self(o.to_floats().iter().map(|v| v.to_bits()).collect(), [o.qform_code, o.sform_code])
    }
}

impl From<&OrientationBits> for Orientation {
    fn from(o: &OrientationBits) -> Self {
        let f: Vec<f32> = o.0.iter().map(|b| f32::from_bits(*b)).collect();
        Orientation::from_floats(o.1, &f)
    }
}

impl LabelMap {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<u8>) -> Result<Self> {
        check_len(dims, data.len())?;
        if let Some(idx) = data.iter().position(|&v| v > MAX_LABEL) {
            return Err(VolumeError::LabelOutOfRange {
                value: data[idx] as f64,
                index: idx,
            });
        }
        let spacing = spacing.stored_precision();
        Ok(Self {
            dims,
            spacing: spacing.into(),
            data,
            orientation: (&Orientation::from_spacing(spacing)).into(),
        })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Self {
        Self::new(dims, spacing, vec![0; dims.len()]).expect("zero grid is valid")
    }

    pub fn with_orientation(mut self, orientation: &Orientation) -> Self {
        self.orientation = orientation.into();
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing.into()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn orientation(&self) -> Orientation {
        (&self.orientation).into()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        self.data[self.dims.index(i, j, k)]
    }

    /// Builds a map with the same geometry and new voxel data.
    pub fn with_data(&self, data: Vec<u8>) -> Result<Self> {
        let mut out = Self::new(self.dims, self.spacing(), data)?;
        out.orientation = self.orientation.clone();
        Ok(out)
    }

    /// Applies `f` to every voxel. Panics if `f` produces a value above 4.
    pub fn map_labels(&self, f: impl Fn(u8) -> u8) -> Self {
        let data = self.data.iter().map(|&v| f(v)).collect();
        self.with_data(data).expect("label mapping produced an invalid label")
    }

    pub fn count(&self, label: u8) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }

    /// Voxel count per label `0..=4`.
    pub fn histogram(&self) -> [usize; 5] {
        let mut h = [0usize; 5];
        for &v in &self.data {
            h[v as usize] += 1;
        }
        h
    }

    pub fn mask_of(&self, label: u8) -> Mask {
        Mask::from_fn(self.dims, |idx| self.data[idx] == label)
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn same_geometry(&self, other: &LabelMap) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        nifti::save_label(self, path.as_ref())
    }
}

/// Binary grid used by the morphology and metric kernels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    dims: Dims,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(dims: Dims, data: Vec<bool>) -> Result<Self> {
        check_len(dims, data.len())?;
        Ok(Self { dims, data })
    }

    pub fn empty(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![false; dims.len()],
        }
    }

    pub fn from_fn(dims: Dims, f: impl Fn(usize) -> bool) -> Self {
        Self {
            dims,
            data: (0..dims.len()).map(f).collect(),
        }
    }

    pub fn from_indices(dims: Dims, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(dims);
        for idx in indices {
            m.data[idx] = true;
        }
        m
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.data[idx]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> bool {
        self.data[self.dims.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, value: bool) {
        self.data[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn and(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && !b)
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        assert_eq!(self.dims, other.dims, "mask dims differ");
        self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        assert_eq!(self.dims, other.dims, "mask dims differ");
        self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }

    /// Inclusive voxel bounding box `([min], [max])`, or `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for idx in self.indices() {
            let (i, j, k) = self.dims.coords(idx);
            for (a, v) in [i, j, k].into_iter().enumerate() {
                lo[a] = lo[a].min(v);
                hi[a] = hi[a].max(v);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// Copies the inclusive box `[lo, hi]` into a new mask.
    pub fn crop(&self, lo: [usize; 3], hi: [usize; 3]) -> Mask {
        let dims = Dims::new(hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1);
        let mut data = Vec::with_capacity(dims.len());
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                let start = self.dims.index(lo[0], j, k);
                data.extend_from_slice(&self.data[start..start + dims.nx]);
            }
        }
        Mask { dims, data }
    }

    fn zip(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert_eq!(self.dims, other.dims, "mask dims differ");
        Mask {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

/// The four MRI sequences of a case, named by their file suffix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sequence {
    #[serde(rename = "t1n")]
    T1,
    #[serde(rename = "t1c")]
    T1ce,
    #[serde(rename = "t2w")]
    T2,
    #[serde(rename = "t2f")]
    Flair,
}

impl Sequence {
    pub const ALL: [Sequence; 4] = [Sequence::T1, Sequence::T1ce, Sequence::T2, Sequence::Flair];

    pub fn suffix(self) -> &'static str {
        match self {
            Sequence::T1 => "t1n",
            Sequence::T1ce => "t1c",
            Sequence::T2 => "t2w",
            Sequence::Flair => "t2f",
        }
    }

    pub fn from_suffix(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.suffix() == s)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// Everything known about one case.
#[derive(Clone, Debug)]
pub struct CaseBundle {
    pub case_id: String,
    pub sequences: BTreeMap<Sequence, ScalarVolume>,
    pub prediction: LabelMap,
    pub ground_truth: Option<LabelMap>,
}

impl CaseBundle {
    pub fn new(
        case_id: impl Into<String>,
        sequences: BTreeMap<Sequence, ScalarVolume>,
        prediction: LabelMap,
        ground_truth: Option<LabelMap>,
    ) -> Result<Self> {
        let bundle = Self {
            case_id: case_id.into(),
            sequences,
            prediction,
            ground_truth,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Checks that every grid shares the prediction's dims and spacing.
    pub fn validate(&self) -> Result<()> {
        let dims = self.prediction.dims();
        let spacing = self.prediction.spacing();
        let mismatch = |what: String| VolumeError::GeometryMismatch(format!("case {}: {what}", self.case_id));
        if let Some(gt) = &self.ground_truth {
            if !gt.same_geometry(&self.prediction) {
                return Err(mismatch("ground truth differs from prediction".into()));
            }
        }
        for (seq, vol) in &self.sequences {
            if vol.dims() != dims || vol.spacing() != spacing {
                return Err(mismatch(format!("sequence {seq} differs from prediction")));
            }
        }
        Ok(())
    }

    pub fn sequence(&self, seq: Sequence) -> Result<&ScalarVolume> {
        self.sequences.get(&seq).ok_or_else(|| VolumeError::MissingInput {
            case: self.case_id.clone(),
            what: format!("sequence {seq}"),
        })
    }
}

fn check_len(dims: Dims, got: usize) -> Result<()> {
    if dims.len() != got {
        return Err(VolumeError::LengthMismatch {
            dims,
            expected: dims.len(),
            got,
        });
    }
    Ok(())
}
