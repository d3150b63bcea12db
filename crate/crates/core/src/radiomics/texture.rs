//! Run-length, size-zone, dependence, and neighbourhood gray-tone
//! difference features.
//!
//! The first three share one set of formulas over a matrix `M(i, j)` that
//! counts structures of gray value `i` and size `j` (run length, zone
//! volume, or dependence count).

use std::collections::BTreeMap;

use super::discretize::GrayRoi;
use super::glcm::Offset;
use super::plog2p;
use crate::morphology::Connectivity;

pub const GLRLM_FEATURES: [&str; 16] = [
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
];

pub const GLSZM_FEATURES: [&str; 16] = [
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
];

pub const GLDM_FEATURES: [&str; 14] = [
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
];

pub const NGTDM_FEATURES: [&str; 5] = ["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"];

/// Sparse `(gray index, size) -> count` matrix.
pub type SizeMatrix = BTreeMap<(usize, usize), f64>;

/// Maximal runs of equal gray level along `offset`.
pub fn glrlm_matrix(roi: &GrayRoi, offset: Offset) -> SizeMatrix {
    let lut = roi.level_index();
    let back = (-offset.0, -offset.1, -offset.2);
    let level_at = |idx: Option<usize>| idx.map_or(0, |i| roi.levels[i]);
    let mut m = SizeMatrix::new();
    for &v in &roi.voxels {
        let level = roi.levels[v];
        if level_at(roi.dims.offset(roi.dims.coords(v), back)) == level {
            continue;
        }
        let mut len = 1;
        let mut cur = v;
        while let Some(next) = roi.dims.offset(roi.dims.coords(cur), offset) {
            if roi.levels[next] != level {
                break;
            }
            len += 1;
            cur = next;
        }
        *m.entry((lut[level as usize], len)).or_default() += 1.0;
    }
    m
}

/// 26-connected zones of equal gray level.
pub fn glszm_matrix(roi: &GrayRoi) -> SizeMatrix {
    let lut = roi.level_index();
    let mut seen = vec![false; roi.levels.len()];
    let mut stack = Vec::new();
    let mut m = SizeMatrix::new();
    for &v in &roi.voxels {
        if seen[v] {
            continue;
        }
        let level = roi.levels[v];
        seen[v] = true;
        stack.push(v);
        let mut size = 0;
        while let Some(cur) = stack.pop() {
            size += 1;
            let c = roi.dims.coords(cur);
            for &o in Connectivity::TwentySix.offsets() {
                if let Some(n) = roi.dims.offset(c, o) {
                    if !seen[n] && roi.levels[n] == level {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        *m.entry((lut[level as usize], size)).or_default() += 1.0;
    }
    m
}

/// Per voxel, one plus the number of 26-neighbours sharing its gray level.
pub fn gldm_matrix(roi: &GrayRoi) -> SizeMatrix {
    let lut = roi.level_index();
    let mut m = SizeMatrix::new();
    for &v in &roi.voxels {
        let level = roi.levels[v];
        let c = roi.dims.coords(v);
        let same = Connectivity::TwentySix
            .offsets()
            .iter()
            .filter(|&&o| roi.dims.offset(c, o).is_some_and(|n| roi.levels[n] == level))
            .count();
        *m.entry((lut[level as usize], same + 1)).or_default() += 1.0;
    }
    m
}

/// The 16 shared features of a size matrix over `voxel_count` voxels, in
/// [`GLRLM_FEATURES`] order.
pub fn size_matrix_features(m: &SizeMatrix, gray: &[f64], voxel_count: usize) -> [f64; 16] {
    let nz: f64 = m.values().sum();
    if nz == 0.0 {
        return [0.0; 16];
    }
    let mut by_gray = vec![0.0; gray.len()];
    let mut by_size: BTreeMap<usize, f64> = BTreeMap::new();
    let mut f = [0.0; 16];
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for (&(g, s), &c) in m {
        by_gray[g] += c;
        *by_size.entry(s).or_default() += c;
        let p = c / nz;
        mu_i += p * gray[g];
        mu_j += p * s as f64;
    }
    for (&(g, s), &c) in m {
        let p = c / nz;
        let i2 = gray[g] * gray[g];
        let j2 = (s * s) as f64;
        f[0] += p / j2;
        f[1] += p * j2;
        f[7] += p * (gray[g] - mu_i).powi(2);
        f[8] += p * (s as f64 - mu_j).powi(2);
        f[9] -= plog2p(p);
        f[10] += p / i2;
        f[11] += p * i2;
        f[12] += p / (i2 * j2);
        f[13] += p * i2 / j2;
        f[14] += p * j2 / i2;
        f[15] += p * i2 * j2;
    }
    let gln: f64 = by_gray.iter().map(|c| c * c).sum();
    let sln: f64 = by_size.values().map(|c| c * c).sum();
    f[2] = gln / nz;
    f[3] = gln / (nz * nz);
    f[4] = sln / nz;
    f[5] = sln / (nz * nz);
    f[6] = nz / voxel_count as f64;
    f
}

/// Run-length features averaged over `offsets`.
pub fn glrlm_features(roi: &GrayRoi, offsets: &[Offset]) -> [f64; 16] {
    let gray = roi.gray_values();
    let mut sum = [0.0; 16];
    if roi.voxels.is_empty() || offsets.is_empty() {
        return sum;
    }
    for &o in offsets {
        let f = size_matrix_features(&glrlm_matrix(roi, o), &gray, roi.voxels.len());
        sum.iter_mut().zip(f).for_each(|(s, v)| *s += v);
    }
    sum.map(|s| s / offsets.len() as f64)
}

pub fn glszm_features(roi: &GrayRoi) -> [f64; 16] {
    size_matrix_features(&glszm_matrix(roi), &roi.gray_values(), roi.voxels.len())
}

/// Dependence features; normalized gray-level non-uniformity and the
/// percentage (always 1) are omitted.
pub fn gldm_features(roi: &GrayRoi) -> [f64; 14] {
    let f = size_matrix_features(&gldm_matrix(roi), &roi.gray_values(), roi.voxels.len());
    [f[0], f[1], f[2], f[4], f[5], f[7], f[8], f[9], f[10], f[11], f[12], f[13], f[14], f[15]]
}

/// Per present gray level: the voxel count `n` and the summed absolute
/// difference `s` from the mean of in-region 26-neighbours. Voxels without an
/// in-region neighbour are skipped.
pub fn ngtdm_matrix(roi: &GrayRoi) -> (Vec<f64>, Vec<f64>) {
    let lut = roi.level_index();
    let ng = roi.present.len();
    let (mut n, mut s) = (vec![0.0; ng], vec![0.0; ng]);
    for &v in &roi.voxels {
        let c = roi.dims.coords(v);
        let (mut total, mut count) = (0.0, 0usize);
        for &o in Connectivity::TwentySix.offsets() {
            if let Some(u) = roi.dims.offset(c, o) {
                let l = roi.levels[u];
                if l > 0 {
                    total += l as f64;
                    count += 1;
                }
            }
        }
        if count == 0 {
            continue;
        }
        let level = roi.levels[v];
        let g = lut[level as usize];
        n[g] += 1.0;
        s[g] += (level as f64 - total / count as f64).abs();
    }
    (n, s)
}

pub fn ngtdm_features(roi: &GrayRoi) -> [f64; 5] {
    let gray = roi.gray_values();
    let (n, s) = ngtdm_matrix(roi);
    let nvp: f64 = n.iter().sum();
    if nvp == 0.0 {
        return [0.0; 5];
    }
    let p: Vec<f64> = n.iter().map(|c| c / nvp).collect();
    let live: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let ngp = live.len() as f64;
    let ps: f64 = live.iter().map(|&i| p[i] * s[i]).sum();
    let s_total: f64 = s.iter().sum();

    let coarseness = if ps == 0.0 { 1e6 } else { 1.0 / ps };
    let (mut spread, mut busy_den, mut complexity, mut strength) = (0.0, 0.0, 0.0, 0.0);
    for &i in &live {
        for &j in &live {
            let d = gray[i] - gray[j];
            spread += p[i] * p[j] * d * d;
            busy_den += (gray[i] * p[i] - gray[j] * p[j]).abs();
            complexity += d.abs() * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]);
            strength += (p[i] + p[j]) * d * d;
        }
    }
    let contrast = if ngp > 1.0 {
        spread / (ngp * (ngp - 1.0)) * s_total / nvp
    } else {
        0.0
    };
    let busyness = if busy_den == 0.0 { 0.0 } else { ps / busy_den };
    let strength = if s_total == 0.0 { 0.0 } else { strength / s_total };
    [coarseness, contrast, busyness, complexity / nvp, strength]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiomics::directions;
    use crate::volume::Dims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn roi_from(dims: Dims, levels: &[u32]) -> GrayRoi {
        let voxels: Vec<usize> = (0..dims.len()).filter(|&i| levels[i] > 0).collect();
        let vl: Vec<u32> = voxels.iter().map(|&i| levels[i]).collect();
        GrayRoi::from_levels(dims, voxels, &vl)
    }

    fn random_roi(rng: &mut ChaCha8Rng) -> (Dims, Vec<u32>, GrayRoi) {
        let d = Dims::cube(6);
        let levels: Vec<u32> = (0..d.len())
            .map(|_| if rng.random_bool(0.75) { rng.random_range(1..=3) } else { 0 })
            .collect();
        let roi = roi_from(d, &levels);
        (d, levels, roi)
    }

    fn delta(d: Dims, a: usize, b: usize) -> (isize, isize, isize) {
        let (ca, cb) = (d.coords(a), d.coords(b));
        (
            cb.0 as isize - ca.0 as isize,
            cb.1 as isize - ca.1 as isize,
            cb.2 as isize - ca.2 as isize,
        )
    }

    fn chebyshev_neighbors(d: Dims, a: usize, b: usize) -> bool {
        let t = delta(d, a, b);
        a != b && t.0.abs() <= 1 && t.1.abs() <= 1 && t.2.abs() <= 1
    }

    #[test]
    fn hand_enumerated_runs() {
        let d = Dims::new(1, 1, 3);
        let roi = roi_from(d, &[1, 1, 2]);
        let m = glrlm_matrix(&roi, (0, 0, 1));
        let want: SizeMatrix = [((0, 2), 1.0), ((1, 1), 1.0)].into_iter().collect();
        assert_eq!(m, want);
        let f = size_matrix_features(&m, &roi.gray_values(), 3);
        // Run-length non-uniformity: (1^2 + 1^2) / 2 runs.
        assert_eq!(f[4], 1.0);
        assert_eq!(f[6], 2.0 / 3.0);
        assert_eq!(f[0], (1.0 / 4.0 + 1.0) / 2.0);
    }

    #[test]
    fn constant_region_is_one_zone() {
        let d = Dims::cube(4);
        let roi = roi_from(d, &[5; 64]);
        let m = glszm_matrix(&roi);
        assert_eq!(m.len(), 1);
        assert_eq!(m[&(0, 64)], 1.0);
        let f = glszm_features(&roi);
        assert_eq!(f[9], 0.0);
        assert_eq!(ngtdm_features(&roi), [1e6, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn runs_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..4 {
            let (d, levels, roi) = random_roi(&mut rng);
            let lut = roi.level_index();
            for o in directions() {
                // A run is a segment start..start+(len-1)*o of equal level
                // whose predecessor and successor differ.
                let mut want = SizeMatrix::new();
                let step = |idx: usize, t: isize| d.offset(d.coords(idx), (o.0 * t, o.1 * t, o.2 * t));
                let lvl = |idx: Option<usize>| idx.map_or(0, |i| levels[i]);
                for start in 0..d.len() {
                    let l = levels[start];
                    if l == 0 || lvl(step(start, -1)) == l {
                        continue;
                    }
                    for len in 1..=6isize {
                        let inside = (0..len).all(|t| lvl(step(start, t)) == l);
                        if inside && lvl(step(start, len)) != l {
                            *want.entry((lut[l as usize], len as usize)).or_default() += 1.0;
                        }
                    }
                }
                assert_eq!(glrlm_matrix(&roi, o), want);
            }
        }
    }

    #[test]
    fn zones_match_union_find() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..4 {
            let (d, levels, roi) = random_roi(&mut rng);
            let lut = roi.level_index();
            let mut parent: Vec<usize> = (0..d.len()).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                let mut r = x;
                while p[r] != r {
                    r = p[r];
                }
                p[x] = r;
                r
            }
            for a in 0..d.len() {
                for b in 0..d.len() {
                    if levels[a] > 0 && levels[a] == levels[b] && chebyshev_neighbors(d, a, b) {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
            let mut sizes: BTreeMap<usize, (u32, usize)> = BTreeMap::new();
            for a in 0..d.len() {
                if levels[a] > 0 {
                    let r = find(&mut parent, a);
                    sizes.entry(r).or_insert((levels[a], 0)).1 += 1;
                }
            }
            let mut want = SizeMatrix::new();
            for (l, s) in sizes.into_values() {
                *want.entry((lut[l as usize], s)).or_default() += 1.0;
            }
            assert_eq!(glszm_matrix(&roi), want);
        }
    }

    #[test]
    fn dependence_and_ngtdm_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..4 {
            let (d, levels, roi) = random_roi(&mut rng);
            let lut = roi.level_index();
            let ng = roi.present.len();
            let mut dep = SizeMatrix::new();
            let (mut n, mut s) = (vec![0.0; ng], vec![0.0; ng]);
            for a in 0..d.len() {
                if levels[a] == 0 {
                    continue;
                }
                let nbrs: Vec<usize> = (0..d.len())
                    .filter(|&b| levels[b] > 0 && chebyshev_neighbors(d, a, b))
                    .collect();
                let same = nbrs.iter().filter(|&&b| levels[b] == levels[a]).count();
                let g = lut[levels[a] as usize];
                *dep.entry((g, same + 1)).or_default() += 1.0;
                if !nbrs.is_empty() {
                    let mean = nbrs.iter().map(|&b| levels[b] as f64).sum::<f64>() / nbrs.len() as f64;
                    n[g] += 1.0;
                    s[g] += (levels[a] as f64 - mean).abs();
                }
            }
            assert_eq!(gldm_matrix(&roi), dep);
            let (gn, gs) = ngtdm_matrix(&roi);
            assert_eq!(gn, n);
            for (x, y) in gs.iter().zip(&s) {
                assert!((x - y).abs() < 1e-9);
            }
            assert!(ngtdm_features(&roi).iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn size_matrix_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (_, _, roi) = random_roi(&mut rng);
        for m in [glszm_matrix(&roi), gldm_matrix(&roi), glrlm_matrix(&roi, (1, 1, 0))] {
            let nz: f64 = m.values().sum();
            let total: f64 = m.values().map(|c| c / nz).sum();
            assert!((total - 1.0).abs() <= 1e-12);
            assert!(m.values().all(|&c| c > 0.0));
        }
        let f = gldm_features(&roi);
        assert!(f.iter().all(|v| v.is_finite()));
    }
}
