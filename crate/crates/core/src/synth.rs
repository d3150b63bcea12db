//! Seeded synthetic corpus: ellipsoidal lesions with concentric label
//! shells, co-registered pseudo-MRI sequences, and predictions corrupted by
//! inventoried errors (false-positive islands, a ratio-triggered label swap,
//! and boundary erosion).
//!
//! Every case is a pure function of `(seed, index)`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphology::{boundary_voxels, dilate, Connectivity};
use crate::volume::{mask_path, sequence_path};
use crate::volume::{CaseBundle, Dims, LabelMap, Mask, ScalarVolume, Sequence, Spacing, VolumeError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("case {case}: lesion with semi-axes {axes:?} does not fit the {dims} grid")]
    LesionDoesNotFit { case: String, axes: [f64; 3], dims: Dims },
    #[error("case {case}: no room for a {size}-voxel label-{label} island")]
    InsufficientRoom { case: String, label: u8, size: usize },
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Radii of the label shells as fractions of the lesion's normalized radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRecipe {
    /// Enhancing core out to this fraction.
    pub et: f64,
    /// Non-enhancing core from `et` out to this fraction; `None` for no core.
    pub netc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandSpec {
    pub label: u8,
    /// Inclusive count range per case.
    pub count: (usize, usize),
    /// Inclusive voxel-size range per island.
    pub size: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub src: u8,
    pub dst: u8,
    /// The swap fires when `|src| / |WT| < trigger` in the ground truth;
    /// 0 disables it.
    pub trigger: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Inclusive lesion-count range.
    pub lesions: (usize, usize),
    /// Semi-axis range in voxels.
    pub radius: (f64, f64),
    pub standard_recipe: ShellRecipe,
    pub small_et_recipe: ShellRecipe,
    /// Probability that a case uses `small_et_recipe`.
    pub small_et_fraction: f64,
    /// Inclusive count range of resection-cavity blobs.
    pub rc_blobs: (usize, usize),
    pub rc_radius: (f64, f64),
    pub islands: Vec<IslandSpec>,
    /// Minimum Chebyshev distance between islands and anything else.
    pub island_margin: usize,
    pub swap: SwapSpec,
    /// Probability of dropping each whole-tumor boundary voxel.
    pub jitter: f64,
    /// Standard deviation of the pre-smoothing noise.
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: [64, 64, 64],
            spacing: [1.0, 1.0, 1.0],
            lesions: (1, 1),
            radius: (12.0, 15.0),
            standard_recipe: ShellRecipe {
                et: 0.45,
                netc: Some(0.65),
            },
            small_et_recipe: ShellRecipe { et: 0.3, netc: None },
            small_et_fraction: 0.3,
            rc_blobs: (0, 0),
            rc_radius: (2.0, 3.0),
            islands: vec![
                IslandSpec {
                    label: 1,
                    count: (1, 1),
                    size: (3, 8),
                },
                IslandSpec {
                    label: 2,
                    count: (1, 2),
                    size: (3, 8),
                },
                IslandSpec {
                    label: 3,
                    count: (1, 1),
                    size: (3, 8),
                },
            ],
            island_margin: 7,
            swap: SwapSpec {
                src: 3,
                dst: 1,
                trigger: 0.05,
            },
            jitter: 0.0,
            noise: 40.0,
        }
    }
}

impl SynthConfig {
    /// A configuration whose predictions equal the ground truth.
    pub fn without_corruption(mut self) -> Self {
        self.islands.clear();
        self.swap.trigger = 0.0;
        self.jitter = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::Config(m));
        let range_ok = |(a, b): (f64, f64)| a > 0.0 && a <= b;
        if self.dims.contains(&0) {
            return bad("grid dims must be positive".into());
        }
        if let Err(e) = Spacing::new(self.spacing[0], self.spacing[1], self.spacing[2]) {
            return bad(e.to_string());
        }
        if self.lesions.0 > self.lesions.1 || !range_ok(self.radius) || self.rc_blobs.0 > self.rc_blobs.1 {
            return bad("ranges must be non-empty with positive radii".into());
        }
        if self.rc_blobs.1 > 0 && !range_ok(self.rc_radius) {
            return bad("resection-cavity radius range must be non-empty and positive".into());
        }
        for r in [&self.standard_recipe, &self.small_et_recipe] {
            if !(r.et > 0.0 && r.et <= 1.0) || r.netc.is_some_and(|n| n < r.et || n > 1.0) {
                return bad("shell fractions must satisfy 0 < et <= netc <= 1".into());
            }
        }
        for s in &self.islands {
            if !(1..=4).contains(&s.label) || s.count.0 > s.count.1 || s.size.0 == 0 || s.size.0 > s.size.1 {
                return bad(format!("island spec {s:?}"));
            }
        }
        let s = &self.swap;
        if s.src == s.dst || !(1..=4).contains(&s.src) || !(1..=4).contains(&s.dst) || !(0.0..=1.0).contains(&s.trigger) {
            return bad(format!("swap spec {s:?}"));
        }
        if !(0.0..=1.0).contains(&self.jitter) || !(0.0..=1.0).contains(&self.small_et_fraction) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(self.noise >= 0.0) {
            return bad("noise must be non-negative".into());
        }
        Ok(())
    }

    fn grid(&self) -> (Dims, Spacing) {
        let s = Spacing::new(self.spacing[0], self.spacing[1], self.spacing[2]).expect("validated spacing");
        (Dims::new(self.dims[0], self.dims[1], self.dims[2]), s)
    }
}

pub fn case_id(index: usize) -> String {
    format!("SYN-{index:05}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LesionRecord {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IslandRecord {
    pub label: u8,
    pub voxels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub src: u8,
    pub dst: u8,
    /// Ground-truth `|src| / |WT|` that triggered the swap.
    pub ratio: f64,
    pub voxels: Vec<usize>,
}

/// Everything injected into one prediction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseInventory {
    pub case_id: String,
    pub small_et: bool,
    pub lesions: Vec<LesionRecord>,
    pub islands: Vec<IslandRecord>,
    pub swap: Option<SwapRecord>,
    /// Tumor voxels set to background by boundary jitter.
    pub jittered: Vec<usize>,
}

impl CaseInventory {
    pub fn island_voxels(&self) -> usize {
        self.islands.iter().map(|i| i.voxels.len()).sum()
    }

    /// Undoes the inventoried corruption. Exact when no jitter was applied.
    pub fn restore(&self, prediction: &LabelMap) -> LabelMap {
        let mut data = prediction.data().to_vec();
        for island in &self.islands {
            for &v in &island.voxels {
                data[v] = 0;
            }
        }
        if let Some(s) = &self.swap {
            for &v in &s.voxels {
                data[v] = s.src;
            }
        }
        prediction.with_data(data).expect("labels stay in range")
    }
}

#[derive(Clone, Debug)]
pub struct SynthCase {
    pub bundle: CaseBundle,
    pub inventory: CaseInventory,
}

fn case_rng(cfg: &SynthConfig, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    rng
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn draw_count(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

/// Ground truth and lesion records for case `index`.
pub fn generate_ground_truth(cfg: &SynthConfig, index: usize, rng: &mut ChaCha8Rng) -> Result<(LabelMap, CaseInventory)> {
    let (dims, spacing) = cfg.grid();
    let id = case_id(index);
    let small_et = rng.random_bool(cfg.small_et_fraction);
    let recipe = if small_et { &cfg.small_et_recipe } else { &cfg.standard_recipe };
    let mut labels = vec![0u8; dims.len()];
    let extents = dims.as_array();
    let mut lesions = Vec::new();
    for _ in 0..draw_count(rng, cfg.lesions) {
        let axes = [draw(rng, cfg.radius), draw(rng, cfg.radius), draw(rng, cfg.radius)];
        let mut center = [0.0; 3];
        for a in 0..3 {
            // Keep one background voxel between the lesion and the border.
            let lo = axes[a] + 1.0;
            let hi = extents[a] as f64 - 2.0 - axes[a];
            if hi < lo {
                return Err(SynthError::LesionDoesNotFit { case: id, axes, dims });
            }
            center[a] = draw(rng, (lo, hi)).round();
        }
        paint_ellipsoid(&mut labels, dims, center, axes, |rho| {
            if rho <= recipe.et {
                Some(3)
            } else if recipe.netc.is_some_and(|n| rho <= n) {
                Some(1)
            } else if rho <= 1.0 {
                Some(2)
            } else {
                None
            }
        });
        lesions.push(LesionRecord { center, semi_axes: axes });
    }
    for _ in 0..draw_count(rng, cfg.rc_blobs) {
        let r = draw(rng, cfg.rc_radius);
        let center = [0, 1, 2].map(|a| draw(rng, (r + 1.0, (extents[a] as f64 - 2.0 - r).max(r + 1.0))).round());
        paint_ellipsoid(&mut labels, dims, center, [r; 3], |rho| (rho <= 1.0).then_some(4));
    }
    let gt = LabelMap::new(dims, spacing, labels)?;
    Ok((
        gt,
        CaseInventory {
            case_id: id,
            small_et,
            lesions,
            ..Default::default()
        },
    ))
}

fn paint_ellipsoid(labels: &mut [u8], dims: Dims, center: [f64; 3], axes: [f64; 3], shell: impl Fn(f64) -> Option<u8>) {
    let lo = [0, 1, 2].map(|a| (center[a] - axes[a]).floor().max(0.0) as usize);
    let hi = [0, 1, 2].map(|a| ((center[a] + axes[a]).ceil() as usize).min(dims.as_array()[a] - 1));
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let p = [i as f64, j as f64, k as f64];
                let rho = (0..3).map(|a| ((p[a] - center[a]) / axes[a]).powi(2)).sum::<f64>().sqrt();
                if let Some(l) = shell(rho) {
                    labels[dims.index(i, j, k)] = l;
                }
            }
        }
    }
}

/// Applies the configured corruption to `gt`: the ratio-triggered swap,
/// then false-positive islands, then boundary jitter.
pub fn corrupt_prediction(
    gt: &LabelMap,
    cfg: &SynthConfig,
    rng: &mut ChaCha8Rng,
    inventory: &mut CaseInventory,
) -> Result<LabelMap> {
    let dims = gt.dims();
    let mut data = gt.data().to_vec();

    {
        let s = &cfg.swap;
        let hist = gt.histogram();
        let wt = hist[1] + hist[2] + hist[3];
        let ratio = if wt > 0 { hist[s.src as usize] as f64 / wt as f64 } else { 0.0 };
        if wt > 0 && hist[s.src as usize] > 0 && ratio < s.trigger {
            let voxels: Vec<usize> = (0..data.len()).filter(|&v| data[v] == s.src).collect();
            for &v in &voxels {
                data[v] = s.dst;
            }
            inventory.swap = Some(SwapRecord {
                src: s.src,
                dst: s.dst,
                ratio,
                voxels,
            });
        }
    }

    let mut occupied = Mask::new(dims, gt.data().iter().map(|&l| l > 0).collect())?;
    for spec in &cfg.islands {
        for _ in 0..draw_count(rng, spec.count) {
            let size = draw_count(rng, spec.size);
            let reach = cfg.island_margin + size - 1;
            let forbidden = dilate(&occupied, reach, Connectivity::TwentySix);
            let allowed: Vec<usize> = (0..dims.len()).filter(|&v| !forbidden.get(v)).collect();
            let &seed = allowed.choose(rng).ok_or_else(|| SynthError::InsufficientRoom {
                case: inventory.case_id.clone(),
                label: spec.label,
                size,
            })?;
            let voxels = grow_island(dims, seed, size, rng);
            for &v in &voxels {
                data[v] = spec.label;
                occupied.set(v, true);
            }
            inventory.islands.push(IslandRecord {
                label: spec.label,
                voxels,
            });
        }
    }

    if cfg.jitter > 0.0 {
        let wt = Mask::new(dims, gt.data().iter().map(|&l| (1..=3).contains(&l)).collect())?;
        let edge = boundary_voxels(&wt, Connectivity::Six);
        for v in edge.indices() {
            if rng.random_bool(cfg.jitter) {
                data[v] = 0;
                inventory.jittered.push(v);
            }
        }
    }
    Ok(gt.with_data(data)?)
}

/// A 6-connected set of `size` voxels grown from `seed` by random frontier
/// picks. Stays within Chebyshev distance `size - 1` of the seed.
fn grow_island(dims: Dims, seed: usize, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut island = vec![seed];
    while island.len() < size {
        let mut frontier: Vec<usize> = island
            .iter()
            .flat_map(|&v| {
                let c = dims.coords(v);
                Connectivity::Six.offsets().iter().filter_map(move |&o| dims.offset(c, o))
            })
            .filter(|n| !island.contains(n))
            .collect();
        frontier.sort_unstable();
        frontier.dedup();
        match frontier.choose(rng) {
            Some(&n) => island.push(n),
            None => break,
        }
    }
    island.sort_unstable();
    island
}

/// Per-label base intensities (background, NETC, SNFH, ET, RC) of a sequence.
fn base_intensity(seq: Sequence) -> [f32; 5] {
    match seq {
        Sequence::T1 => [300.0, 240.0, 340.0, 420.0, 520.0],
        Sequence::T1ce => [320.0, 200.0, 360.0, 900.0, 400.0],
        Sequence::T2 => [400.0, 720.0, 800.0, 600.0, 300.0],
        Sequence::Flair => [350.0, 480.0, 900.0, 560.0, 280.0],
    }
}

/// Label-driven intensities plus seeded noise smoothed by a 3x3x3 box filter.
pub fn synthesize_sequence(gt: &LabelMap, seq: Sequence, noise: f64, rng: &mut ChaCha8Rng) -> Result<ScalarVolume> {
    let dims = gt.dims();
    let normal = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let mut field: Vec<f64> = (0..dims.len())
        .map(|_| if noise > 0.0 { normal.sample(rng) } else { 0.0 })
        .collect();
    for axis in 0..3 {
        field = box_filter_axis(&field, dims, axis);
    }
    let base = base_intensity(seq);
    let data = gt
        .data()
        .iter()
        .zip(&field)
        .map(|(&l, &n)| base[l as usize] + n as f32)
        .collect();
    Ok(ScalarVolume::new(dims, gt.spacing(), data)?)
}

fn box_filter_axis(src: &[f64], dims: Dims, axis: usize) -> Vec<f64> {
    let n = dims.as_array()[axis];
    let stride = [1, dims.nx, dims.nx * dims.ny][axis];
    let mut out = vec![0.0; src.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let pos = (idx / stride) % n;
        let mut sum = src[idx];
        let mut count = 1.0;
        if pos > 0 {
            sum += src[idx - stride];
            count += 1.0;
        }
        if pos + 1 < n {
            sum += src[idx + stride];
            count += 1.0;
        }
        *o = sum / count;
    }
    out
}

/// Case `index` with ground truth, sequences, and a corrupted prediction.
pub fn generate_case(cfg: &SynthConfig, index: usize) -> Result<SynthCase> {
    cfg.validate()?;
    let mut rng = case_rng(cfg, index);
    let (gt, mut inventory) = generate_ground_truth(cfg, index, &mut rng)?;
    let mut sequences = BTreeMap::new();
    for seq in Sequence::ALL {
        sequences.insert(seq, synthesize_sequence(&gt, seq, cfg.noise, &mut rng)?);
    }
    let prediction = corrupt_prediction(&gt, cfg, &mut rng, &mut inventory)?;
    let bundle = CaseBundle::new(inventory.case_id.clone(), sequences, prediction, Some(gt))?;
    Ok(SynthCase { bundle, inventory })
}

/// Inventory file of a written corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusInventory {
    pub config: SynthConfig,
    pub first_index: usize,
    pub cases: Vec<CaseInventory>,
}

impl CorpusInventory {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SynthError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| SynthError::Config(format!("{}: {e}", path.display())))
    }

    pub fn case(&self, id: &str) -> Option<&CaseInventory> {
        self.cases.iter().find(|c| c.case_id == id)
    }
}

/// Writes cases `first_index..first_index + count` as
/// `out/images`, `out/labels`, `out/predictions`, plus `out/inventory.json`.
pub fn write_corpus(cfg: &SynthConfig, first_index: usize, count: usize, out: &Path) -> Result<CorpusInventory> {
    cfg.validate()?;
    let dirs = ["images", "labels", "predictions"].map(|d| out.join(d));
    for d in &dirs {
        std::fs::create_dir_all(d).map_err(|source| SynthError::Io {
            path: d.display().to_string(),
            source,
        })?;
    }
    let cases: Vec<CaseInventory> = (first_index..first_index + count)
        .into_par_iter()
        .map(|index| {
            let case = generate_case(cfg, index)?;
            let b = &case.bundle;
            for (seq, vol) in &b.sequences {
                vol.save(sequence_path(&dirs[0], &b.case_id, *seq))?;
            }
            b.ground_truth
                .as_ref()
                .expect("synthetic cases carry ground truth")
                .save(mask_path(&dirs[1], &b.case_id))?;
            b.prediction.save(mask_path(&dirs[2], &b.case_id))?;
            Ok(case.inventory)
        })
        .collect::<Result<_>>()?;
    let inventory = CorpusInventory {
        config: cfg.clone(),
        first_index,
        cases,
    };
    let path = out.join("inventory.json");
    let mut text = serde_json::to_string_pretty(&inventory).expect("inventory serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(inventory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{region_mask, Region};
    use crate::morphology::connected_components;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            seed: 3,
            dims: [32, 32, 32],
            radius: (5.0, 5.0),
            small_et_fraction: 0.0,
            ..SynthConfig::default()
        }
        .without_corruption()
    }

    #[test]
    fn nested_shells() {
        let case = generate_case(&small_cfg(), 0).unwrap();
        let gt = case.bundle.ground_truth.unwrap();
        let hist = gt.histogram();
        assert!(hist[1] > 0 && hist[2] > 0 && hist[3] > 0 && hist[4] == 0);
        let et = region_mask(&gt, Region::Et);
        let tc = region_mask(&gt, Region::Tc);
        let wt = region_mask(&gt, Region::Wt);
        assert!(et.is_subset_of(&tc) && tc.is_subset_of(&wt));
        assert_eq!(case.bundle.prediction, gt);
    }

    #[test]
    fn deterministic_per_index() {
        let cfg = SynthConfig {
            dims: [32, 32, 32],
            radius: (5.0, 6.0),
            ..SynthConfig::default()
        };
        let a = generate_case(&cfg, 4).unwrap();
        let b = generate_case(&cfg, 4).unwrap();
        assert_eq!(a.bundle.prediction, b.bundle.prediction);
        assert_eq!(a.bundle.sequences, b.bundle.sequences);
        assert_eq!(a.inventory, b.inventory);
        let c = generate_case(&cfg, 5).unwrap();
        assert_ne!(a.bundle.sequences, c.bundle.sequences);
    }

    #[test]
    fn zero_lesions_is_empty() {
        let cfg = SynthConfig {
            lesions: (0, 0),
            ..small_cfg()
        };
        let case = generate_case(&cfg, 0).unwrap();
        assert_eq!(case.bundle.ground_truth.unwrap().histogram()[0], 32 * 32 * 32);
    }

    #[test]
    fn islands_add_exact_components() {
        let cfg = SynthConfig {
            islands: vec![IslandSpec {
                label: 2,
                count: (3, 3),
                size: (5, 5),
            }],
            ..small_cfg()
        };
        let case = generate_case(&cfg, 1).unwrap();
        let gt = case.bundle.ground_truth.as_ref().unwrap();
        let before = connected_components(&gt.mask_of(2), Connectivity::TwentySix);
        let after = connected_components(&case.bundle.prediction.mask_of(2), Connectivity::TwentySix);
        assert_eq!(after.count(), before.count() + 3);
        let mut new_sizes: Vec<usize> = after.sizes().to_vec();
        for s in before.sizes() {
            let p = new_sizes.iter().position(|x| x == s).unwrap();
            new_sizes.remove(p);
        }
        assert_eq!(new_sizes, vec![5, 5, 5]);
        // Every island keeps the margin from the tumor.
        let far = dilate(&gt.mask_of(1).or(&gt.mask_of(2)).or(&gt.mask_of(3)), 6, Connectivity::TwentySix);
        for island in &case.inventory.islands {
            assert!(island.voxels.iter().all(|&v| !far.get(v)));
        }
        assert_eq!(case.inventory.restore(&case.bundle.prediction), *gt);
    }

    #[test]
    fn swap_fires_below_trigger() {
        let cfg = SynthConfig {
            small_et_fraction: 1.0,
            swap: SwapSpec {
                src: 3,
                dst: 1,
                trigger: 0.05,
            },
            ..small_cfg()
        };
        let case = generate_case(&cfg, 2).unwrap();
        let gt = case.bundle.ground_truth.as_ref().unwrap();
        let swap = case.inventory.swap.as_ref().expect("small ET triggers the swap");
        assert!(swap.ratio < 0.05);
        assert_eq!(case.bundle.prediction.count(3), 0);
        assert_eq!(swap.voxels.len(), gt.count(3));
        assert_eq!(case.inventory.restore(&case.bundle.prediction), *gt);

        // The standard recipe's ET share sits above the trigger.
        let normal = generate_case(&SynthConfig { small_et_fraction: 0.0, ..cfg }, 2).unwrap();
        assert!(normal.inventory.swap.is_none());
    }

    #[test]
    fn lesion_too_large_is_an_error() {
        let cfg = SynthConfig {
            dims: [8, 8, 8],
            radius: (6.0, 6.0),
            ..small_cfg()
        };
        assert!(matches!(generate_case(&cfg, 0), Err(SynthError::LesionDoesNotFit { .. })));
    }
}
