//! Intensity statistics over the voxels of a region.

use super::discretize::bin_width_levels;
use super::plog2p;

pub const FIRSTORDER_FEATURES: [&str; 18] = [
    "Energy",
    "TotalEnergy",
    "Entropy",
    "Minimum",
    "10Percentile",
    "90Percentile",
    "Maximum",
    "Mean",
    "Median",
    "InterquartileRange",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "Kurtosis",
    "Variance",
    "Uniformity",
];

/// Linear-interpolation percentile of ascending `sorted`, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Values in [`FIRSTORDER_FEATURES`] order. Moments use the population
/// convention; skewness and kurtosis are 0 when the variance is 0. Entropy and
/// uniformity come from a `bin_width` histogram. Empty input yields zeros.
pub fn firstorder_features(values: &[f64], voxel_volume: f64, bin_width: f64) -> [f64; 18] {
    let n = values.len();
    if n == 0 {
        return [0.0; 18];
    }
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);

    let energy: f64 = values.iter().map(|v| v * v).sum();
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4, mut mad) = (0.0, 0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += d.abs();
    }
    let (m2, m3, m4, mad) = (m2 / nf, m3 / nf, m4 / nf, mad / nf);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };

    let p10 = percentile(&sorted, 0.10);
    let p90 = percentile(&sorted, 0.90);
    let robust: Vec<f64> = sorted.iter().copied().filter(|&v| v >= p10 && v <= p90).collect();
    let robust_mean = robust.iter().sum::<f64>() / robust.len() as f64;
    let rmad = robust.iter().map(|v| (v - robust_mean).abs()).sum::<f64>() / robust.len() as f64;

    let levels = bin_width_levels(values, bin_width);
    let mut hist = vec![0usize; levels.iter().copied().max().unwrap_or(0) as usize + 1];
    for l in levels {
        hist[l as usize] += 1;
    }
    let (mut entropy, mut uniformity) = (0.0, 0.0);
    for &h in hist.iter().filter(|&&h| h > 0) {
        let p = h as f64 / nf;
        entropy -= plog2p(p);
        uniformity += p * p;
    }

    let min = sorted[0];
    let max = sorted[n - 1];
    [
        energy,
        energy * voxel_volume,
        entropy,
        min,
        p10,
        p90,
        max,
        mean,
        percentile(&sorted, 0.5),
        percentile(&sorted, 0.75) - percentile(&sorted, 0.25),
        max - min,
        mad,
        rmad,
        (energy / nf).sqrt(),
        skewness,
        kurtosis,
        m2,
        uniformity,
    ]
}
