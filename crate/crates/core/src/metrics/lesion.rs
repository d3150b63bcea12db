use serde::{Deserialize, Serialize};

use crate::morphology::{
    boundary_voxels, connected_components, dilate, euclidean_distance_transform, Connectivity,
};
use crate::volume::{Mask, Spacing};

// Slack on the NSD tolerance comparison for floating-point noise.
const TOLERANCE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub dilation_iters: usize,
    pub connectivity: Connectivity,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            dilation_iters: 3,
            connectivity: Connectivity::TwentySix,
        }
    }
}

/// One ground-truth lesion and the prediction components matched to it.
#[derive(Clone, Debug, PartialEq)]
pub struct LesionRecord {
    pub id: usize,
    /// Ground-truth component ids (in the GT component labeling) merged into this lesion.
    pub gt_components: Vec<u32>,
    /// Prediction component ids assigned to this lesion.
    pub pred_components: Vec<u32>,
    pub gt_voxels: usize,
    pub pred_voxels: usize,
    pub intersection: usize,
    pub dice: f64,
    /// Distance (mm) from each GT surface voxel to the matched prediction surface.
    pub gt_surface_distances: Vec<f64>,
    /// Distance (mm) from each matched prediction surface voxel to the GT surface.
    pub pred_surface_distances: Vec<f64>,
}

impl LesionRecord {
    /// Fraction of both surfaces within `tolerance` mm of the other; 0 when
    /// nothing was matched.
    pub fn nsd(&self, tolerance: f64) -> f64 {
        let total = self.gt_surface_distances.len() + self.pred_surface_distances.len();
        if self.pred_voxels == 0 || total == 0 {
            return 0.0;
        }
        let within = |d: &[f64]| d.iter().filter(|&&x| x <= tolerance + TOLERANCE_SLACK).count();
        (within(&self.gt_surface_distances) + within(&self.pred_surface_distances)) as f64 / total as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LesionMatchResult {
    pub gt_lesions: Vec<LesionRecord>,
    /// Prediction component ids matched to no lesion.
    pub fp_components: Vec<u32>,
    pub pred_component_count: usize,
}

impl LesionMatchResult {
    pub fn num_gt_lesions(&self) -> usize {
        self.gt_lesions.len()
    }

    pub fn num_fp(&self) -> usize {
        self.fp_components.len()
    }

    fn aggregate(&self, per_lesion: impl Fn(&LesionRecord) -> f64) -> f64 {
        let denom = self.num_gt_lesions() + self.num_fp();
        if denom == 0 {
            return 1.0;
        }
        self.gt_lesions.iter().map(per_lesion).sum::<f64>() / denom as f64
    }
}

pub fn lesionwise_dice(m: &LesionMatchResult) -> f64 {
    m.aggregate(|l| l.dice)
}

pub fn lesionwise_nsd(m: &LesionMatchResult, tolerance: f64) -> f64 {
    assert!(tolerance > 0.0, "NSD tolerance must be positive");
    m.aggregate(|l| l.nsd(tolerance))
}

pub fn match_lesions(gt: &Mask, pred: &Mask, spacing: Spacing, config: &MatchConfig) -> LesionMatchResult {
    assert_eq!(gt.dims(), pred.dims(), "ground truth and prediction grids differ");
    // Everything below is translation invariant, so work inside the union's
    // bounding box grown by the dilation reach plus one surface voxel.
    let union = gt.or(pred);
    let Some((lo, hi)) = union.bounding_box() else {
        return LesionMatchResult {
            gt_lesions: Vec::new(),
            fp_components: Vec::new(),
            pred_component_count: 0,
        };
    };
    let pad = config.dilation_iters + 1;
    let full = gt.dims().as_array();
    let lo = lo.map(|v| v.saturating_sub(pad));
    let hi = [0, 1, 2].map(|a| (hi[a] + pad).min(full[a] - 1));
    let gt = gt.crop(lo, hi);
    let pred = pred.crop(lo, hi);
    let dims = gt.dims();

    let conn = config.connectivity;
    let gt_cc = connected_components(&gt, conn);
    let pred_cc = connected_components(&pred, conn);
    let lesion_cc = connected_components(&dilate(&gt, config.dilation_iters, conn), conn);
    let n_lesions = lesion_cc.count();

    // overlap[p][l]: voxels of prediction component p+1 inside dilated lesion l+1
    let mut overlap = vec![vec![0usize; n_lesions]; pred_cc.count()];
    for (p, l) in pred_cc.labels().iter().zip(lesion_cc.labels()) {
        if *p > 0 && *l > 0 {
            overlap[*p as usize - 1][*l as usize - 1] += 1;
        }
    }
    let mut assigned: Vec<Vec<u32>> = vec![Vec::new(); n_lesions];
    let mut fp_components = Vec::new();
    for (p, row) in overlap.iter().enumerate() {
        // max_by_key keeps the last maximum; scan in reverse so the lowest id wins ties.
        let best = row.iter().enumerate().rev().max_by_key(|(_, &c)| c);
        match best {
            Some((l, &c)) if c > 0 => assigned[l].push(p as u32 + 1),
            _ => fp_components.push(p as u32 + 1),
        }
    }

    let mut gt_members: Vec<Vec<u32>> = vec![Vec::new(); n_lesions];
    for (g, l) in gt_cc.labels().iter().zip(lesion_cc.labels()) {
        if *g > 0 {
            let list = &mut gt_members[*l as usize - 1];
            if !list.contains(g) {
                list.push(*g);
            }
        }
    }

    let gt_lesions = (0..n_lesions)
        .map(|l| {
            let lesion_id = l as u32 + 1;
            let gt_mask = Mask::from_fn(dims, |idx| gt.get(idx) && lesion_cc.labels()[idx] == lesion_id);
            let mut pred_lut = vec![false; pred_cc.count() + 1];
            for &p in &assigned[l] {
                pred_lut[p as usize] = true;
            }
            let pred_mask = Mask::from_fn(dims, |idx| pred_lut[pred_cc.labels()[idx] as usize]);
            let mut gt_components = gt_members[l].clone();
            gt_components.sort_unstable();
            build_record(l + 1, gt_components, assigned[l].clone(), &gt_mask, &pred_mask, spacing)
        })
        .collect();

    LesionMatchResult {
        gt_lesions,
        fp_components,
        pred_component_count: pred_cc.count(),
    }
}

fn build_record(
    id: usize,
    gt_components: Vec<u32>,
    pred_components: Vec<u32>,
    gt: &Mask,
    pred: &Mask,
    spacing: Spacing,
) -> LesionRecord {
    let gt_voxels = gt.count();
    let pred_voxels = pred.count();
    let intersection = gt.intersection_count(pred);
    let dice = if gt_voxels + pred_voxels == 0 {
        1.0
    } else {
        2.0 * intersection as f64 / (gt_voxels + pred_voxels) as f64
    };
    let (gt_surface_distances, pred_surface_distances) = if pred_voxels == 0 {
        (Vec::new(), Vec::new())
    } else {
        surface_distances(gt, pred, spacing)
    };
    LesionRecord {
        id,
        gt_components,
        pred_components,
        gt_voxels,
        pred_voxels,
        intersection,
        dice,
        gt_surface_distances,
        pred_surface_distances,
    }
}

/// Directed surface distances in both directions, computed inside the
/// union's bounding box padded by one voxel.
fn surface_distances(a: &Mask, b: &Mask, spacing: Spacing) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = a.or(b).bounding_box().expect("non-empty union");
    let full = a.dims().as_array();
    let lo = lo.map(|v| v.saturating_sub(1));
    let hi = [0, 1, 2].map(|ax| (hi[ax] + 1).min(full[ax] - 1));
    let a = a.crop(lo, hi);
    let b = b.crop(lo, hi);
    let sa = boundary_voxels(&a, Connectivity::Six);
    let sb = boundary_voxels(&b, Connectivity::Six);
    let to_b = euclidean_distance_transform(&sb, spacing);
    let to_a = euclidean_distance_transform(&sa, spacing);
    let pick = |s: &Mask, dt: &[f64]| s.indices().map(|i| dt[i]).collect::<Vec<_>>();
    (pick(&sa, &to_b), pick(&sb, &to_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;

    fn cube(dims: Dims, lo: [usize; 3], side: usize) -> Vec<usize> {
        (0..dims.len())
            .filter(|&idx| {
                let (i, j, k) = dims.coords(idx);
                [i, j, k].iter().zip(lo).all(|(&c, l)| c >= l && c < l + side)
            })
            .collect()
    }

    #[test]
    fn both_empty() {
        let d = Dims::cube(4);
        let m = match_lesions(&Mask::empty(d), &Mask::empty(d), Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(m.num_gt_lesions(), 0);
        assert_eq!(m.num_fp(), 0);
        assert_eq!(lesionwise_dice(&m), 1.0);
        assert_eq!(lesionwise_nsd(&m, 1.0), 1.0);
    }

    #[test]
    fn identical_single_blob() {
        let d = Dims::cube(10);
        let gt = Mask::from_indices(d, cube(d, [2, 2, 2], 4));
        let m = match_lesions(&gt, &gt, Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(m.num_gt_lesions(), 1);
        assert_eq!(m.num_fp(), 0);
        assert_eq!(m.gt_lesions[0].dice, 1.0);
        assert_eq!(lesionwise_nsd(&m, 0.5), 1.0);
    }

    #[test]
    fn distant_island_is_false_positive() {
        let d = Dims::new(40, 12, 12);
        // 100-voxel blob: 5 x 5 x 4
        let blob: Vec<usize> = (0..d.len())
            .filter(|&idx| {
                let (i, j, k) = d.coords(idx);
                (1..6).contains(&i) && (1..6).contains(&j) && (1..5).contains(&k)
            })
            .collect();
        assert_eq!(blob.len(), 100);
        let island = cube(d, [30, 3, 3], 1)
            .into_iter()
            .chain([d.index(31, 3, 3), d.index(32, 3, 3), d.index(33, 3, 3), d.index(34, 3, 3)])
            .collect::<Vec<_>>();
        let gt = Mask::from_indices(d, blob.iter().copied());
        let pred = Mask::from_indices(d, blob.iter().chain(&island).copied());
        let m = match_lesions(&gt, &pred, Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(m.num_gt_lesions(), 1);
        assert_eq!(m.num_fp(), 1);
        assert_eq!(lesionwise_dice(&m), 0.5);
        assert_eq!(lesionwise_nsd(&m, 1.0), 0.5);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let d = Dims::cube(8);
        let gt = Mask::from_indices(d, cube(d, [1, 1, 1], 3));
        let m = match_lesions(&gt, &Mask::empty(d), Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(lesionwise_dice(&m), 0.0);
        assert_eq!(lesionwise_nsd(&m, 1.0), 0.0);
    }

    #[test]
    fn near_components_merge_into_one_lesion() {
        let d = Dims::new(20, 6, 6);
        let a = cube(d, [2, 2, 2], 2);
        let b = cube(d, [8, 2, 2], 2); // gap of 4 voxels, within 2 * 3 dilation reach
        let gt = Mask::from_indices(d, a.iter().chain(&b).copied());
        let m = match_lesions(&gt, &gt, Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(m.num_gt_lesions(), 1);
        assert_eq!(m.gt_lesions[0].gt_components, vec![1, 2]);
        assert_eq!(m.gt_lesions[0].pred_components.len(), 2);
        let m0 = match_lesions(
            &gt,
            &gt,
            Spacing::isotropic(),
            &MatchConfig {
                dilation_iters: 0,
                connectivity: Connectivity::TwentySix,
            },
        );
        assert_eq!(m0.num_gt_lesions(), 2);
    }

    #[test]
    fn shifted_cube_nsd() {
        let d = Dims::cube(8);
        let gt = Mask::from_indices(d, cube(d, [2, 2, 2], 3));
        let pred = Mask::from_indices(d, cube(d, [3, 2, 2], 3));
        let m = match_lesions(&gt, &pred, Spacing::isotropic(), &MatchConfig::default());
        assert_eq!(lesionwise_nsd(&m, 1.0), 1.0);
        let half = lesionwise_nsd(&m, 0.5);
        assert!(half < 1.0);
        // Surface voxels (26 per cube) shared by both cubes are those with x in
        // {3, 4} lying on the y/z shell: 2 * 8 = 16 per side.
        assert_eq!(half, 32.0 / 52.0);
    }
}
