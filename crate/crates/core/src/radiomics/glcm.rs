//! Gray-level co-occurrence features.

use nalgebra::{DMatrix, SymmetricEigen};

use super::discretize::GrayRoi;
use super::plog2p;

pub type Offset = (isize, isize, isize);

pub const GLCM_FEATURES: [&str; 24] = [
    "Autocorrelation",
    "JointAverage",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "JointEnergy",
    "JointEntropy",
    "Imc1",
    "Imc2",
    "Idm",
    "Idmn",
    "Id",
    "Idn",
    "InverseVariance",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
    "MCC",
];

/// Symmetric co-occurrence counts for one offset, `ng x ng` row-major over
/// the indices of [`GrayRoi::present`].
pub fn glcm_matrix(roi: &GrayRoi, offset: Offset) -> Vec<f64> {
    let ng = roi.present.len();
    let lut = roi.level_index();
    let mut m = vec![0.0; ng * ng];
    for &v in &roi.voxels {
        let Some(u) = roi.dims.offset(roi.dims.coords(v), offset) else {
            continue;
        };
        let lu = roi.levels[u];
        if lu == 0 {
            continue;
        }
        let a = lut[roi.levels[v] as usize];
        let b = lut[lu as usize];
        m[a * ng + b] += 1.0;
        m[b * ng + a] += 1.0;
    }
    m
}

/// Features averaged over the offsets that produce at least one pair; all
/// zeros when none does.
pub fn glcm_features(roi: &GrayRoi, offsets: &[Offset]) -> [f64; 24] {
    let gray = roi.gray_values();
    let mut sum = [0.0; 24];
    let mut used = 0usize;
    for &o in offsets {
        let mut m = glcm_matrix(roi, o);
        let total: f64 = m.iter().sum();
        if total == 0.0 {
            continue;
        }
        m.iter_mut().for_each(|x| *x /= total);
        for (s, f) in sum.iter_mut().zip(features_from_probabilities(&m, &gray)) {
            *s += f;
        }
        used += 1;
    }
    if used > 0 {
        sum.iter_mut().for_each(|s| *s /= used as f64);
    }
    sum
}

/// The 24 features of a normalized symmetric matrix whose rows and columns
/// carry gray values `gray`.
pub fn features_from_probabilities(p: &[f64], gray: &[f64]) -> [f64; 24] {
    let ng = gray.len();
    let at = |i: usize, j: usize| p[i * ng + j];
    let px: Vec<f64> = (0..ng).map(|i| (0..ng).map(|j| at(i, j)).sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| at(i, j)).sum()).collect();
    let ux: f64 = (0..ng).map(|i| gray[i] * px[i]).sum();
    let uy: f64 = (0..ng).map(|j| gray[j] * py[j]).sum();
    let sx = (0..ng).map(|i| (gray[i] - ux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..ng).map(|j| (gray[j] - uy).powi(2) * py[j]).sum::<f64>().sqrt();

    let max_level = gray.last().copied().unwrap_or(0.0) as usize;
    let mut p_sum = vec![0.0; 2 * max_level + 1];
    let mut p_diff = vec![0.0; max_level + 1];
    let (mut auto, mut prom, mut shade, mut tend, mut contrast) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut energy, mut joint_entropy, mut hxy1, mut hxy2, mut sum_sq, mut max_p) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0f64);
    for i in 0..ng {
        for j in 0..ng {
            let v = at(i, j);
            let (gi, gj) = (gray[i], gray[j]);
            p_sum[(gi + gj) as usize] += v;
            p_diff[(gi - gj).abs() as usize] += v;
            auto += gi * gj * v;
            let c = gi + gj - ux - uy;
            prom += c.powi(4) * v;
            shade += c.powi(3) * v;
            tend += c * c * v;
            contrast += (gi - gj).powi(2) * v;
            energy += v * v;
            joint_entropy -= plog2p(v);
            let pxy = px[i] * py[j];
            if v > 0.0 {
                hxy1 -= v * pxy.log2();
            }
            hxy2 -= plog2p(pxy);
            sum_sq += (gi - ux).powi(2) * v;
            max_p = max_p.max(v);
        }
    }
    let correlation = if sx * sy == 0.0 { 1.0 } else { (auto - ux * uy) / (sx * sy) };

    let entropy = |d: &[f64]| -d.iter().map(|&v| plog2p(v)).sum::<f64>();
    let diff_avg: f64 = p_diff.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let diff_var: f64 = p_diff.iter().enumerate().map(|(k, v)| (k as f64 - diff_avg).powi(2) * v).sum();
    let ngf = ng as f64;
    let (mut idm, mut idmn, mut id, mut idn, mut inv_var) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, &v) in p_diff.iter().enumerate() {
        let k = k as f64;
        idm += v / (1.0 + k * k);
        idmn += v / (1.0 + k * k / (ngf * ngf));
        id += v / (1.0 + k);
        idn += v / (1.0 + k / ngf);
        if k > 0.0 {
            inv_var += v / (k * k);
        }
    }
    let sum_avg: f64 = p_sum.iter().enumerate().map(|(k, v)| k as f64 * v).sum();

    let hx = entropy(&px);
    let hy = entropy(&py);
    let imc1 = if hx.max(hy) == 0.0 { 0.0 } else { (joint_entropy - hxy1) / hx.max(hy) };
    let imc2 = if hxy2 > joint_entropy {
        (1.0 - (-2.0 * (hxy2 - joint_entropy)).exp()).sqrt()
    } else {
        0.0
    };

    [
        auto,
        ux,
        prom,
        shade,
        tend,
        contrast,
        correlation,
        diff_avg,
        entropy(&p_diff),
        diff_var,
        energy,
        joint_entropy,
        imc1,
        imc2,
        idm,
        idmn,
        id,
        idn,
        inv_var,
        max_p,
        sum_avg,
        entropy(&p_sum),
        sum_sq,
        mcc(p, &px),
    ]
}

/// Square root of the second-largest eigenvalue of `Q = D^-1 P D^-1 P`,
/// computed through its symmetric similar form. 1 for a single gray level.
fn mcc(p: &[f64], marginal: &[f64]) -> f64 {
    let ng = marginal.len();
    let keep: Vec<usize> = (0..ng).filter(|&i| marginal[i] > 0.0).collect();
    let n = keep.len();
    if n < 2 {
        return 1.0;
    }
    let inv_sqrt: Vec<f64> = keep.iter().map(|&i| 1.0 / marginal[i].sqrt()).collect();
    // S = D^-1/2 P D^-1/2 is symmetric and S^2 is similar to Q.
    let s = DMatrix::from_fn(n, n, |a, b| p[keep[a] * ng + keep[b]] * inv_sqrt[a] * inv_sqrt[b]);
    let mut ev: Vec<f64> = SymmetricEigen::new(&s * &s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev[1].max(0.0).sqrt()
}
