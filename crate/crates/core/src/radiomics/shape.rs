//! Mesh-free shape descriptors of a binary mask in physical units.
//!
//! Surface area is the total area of exposed voxel faces. Diameters are
//! distances between voxel centers. Axis lengths are `4 * sqrt(lambda)` for
//! the eigenvalues of the population covariance of voxel-center coordinates.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::volume::{Mask, Spacing};

pub const SHAPE_FEATURES: [&str; 14] = [
    "VoxelVolume",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "Sphericity",
    "Maximum3DDiameter",
    "Maximum2DDiameterSlice",
    "Maximum2DDiameterColumn",
    "Maximum2DDiameterRow",
    "MajorAxisLength",
    "MinorAxisLength",
    "LeastAxisLength",
    "Elongation",
    "Flatness",
    "VoxelCount",
];

/// Values in [`SHAPE_FEATURES`] order. An empty mask yields all zeros.
pub fn shape_features(mask: &Mask, spacing: Spacing) -> [f64; 14] {
    let n = mask.count();
    if n == 0 {
        return [0.0; 14];
    }
    let volume = n as f64 * spacing.voxel_volume();
    let area = surface_area(mask, spacing);
    let sphericity = std::f64::consts::PI.cbrt() * (6.0 * volume).powf(2.0 / 3.0) / area;

    let pts = |v: Vec<[usize; 3]>| -> Vec<[f64; 3]> { v.into_iter().map(|p| physical(p, spacing)).collect() };
    let x_ext = pts(row_extremes(mask, 0));
    let y_ext = pts(row_extremes(mask, 1));
    let max3d = max_distance(&x_ext);
    let slice = max_distance_grouped(&x_ext, 2);
    let column = max_distance_grouped(&x_ext, 1);
    let row = max_distance_grouped(&y_ext, 0);

    let eig = principal_moments(mask, spacing);
    let [major, minor, least] = eig.map(|l| 4.0 * l.max(0.0).sqrt());
    let ratio = |a: f64| if eig[0] > 0.0 { (a.max(0.0) / eig[0]).sqrt() } else { 0.0 };

    [
        volume,
        area,
        area / volume,
        sphericity,
        max3d,
        slice,
        column,
        row,
        major,
        minor,
        least,
        ratio(eig[1]),
        ratio(eig[2]),
        n as f64,
    ]
}

fn physical(p: [usize; 3], s: Spacing) -> [f64; 3] {
    [p[0] as f64 * s.dx, p[1] as f64 * s.dy, p[2] as f64 * s.dz]
}

fn surface_area(mask: &Mask, s: Spacing) -> f64 {
    let dims = mask.dims();
    let face = [s.dy * s.dz, s.dx * s.dz, s.dx * s.dy];
    let axes = [(1, 0, 0), (0, 1, 0), (0, 0, 1)];
    let mut area = 0.0;
    for idx in mask.indices() {
        let c = dims.coords(idx);
        for (a, &(x, y, z)) in axes.iter().enumerate() {
            for sign in [-1isize, 1] {
                let exposed = dims
                    .offset(c, (x * sign, y * sign, z * sign))
                    .is_none_or(|n| !mask.get(n));
                if exposed {
                    area += face[a];
                }
            }
        }
    }
    area
}

/// First and last foreground voxel of every line along `axis`. Every vertex
/// of the convex hull, in 3D or within any plane containing `axis`, is
/// among them.
fn row_extremes(mask: &Mask, axis: usize) -> Vec<[usize; 3]> {
    let dims = mask.dims().as_array();
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut out = Vec::new();
    for b in 0..dims[v] {
        for a in 0..dims[u] {
            let mut first = None;
            let mut last = None;
            for t in 0..dims[axis] {
                let mut p = [0usize; 3];
                p[axis] = t;
                p[u] = a;
                p[v] = b;
                if mask.at(p[0], p[1], p[2]) {
                    first.get_or_insert(p);
                    last = Some(p);
                }
            }
            if let (Some(f), Some(l)) = (first, last) {
                out.push(f);
                if l != f {
                    out.push(l);
                }
            }
        }
    }
    out
}

fn max_distance(points: &[[f64; 3]]) -> f64 {
    let mut best = 0.0f64;
    for (n, p) in points.iter().enumerate() {
        for q in &points[n + 1..] {
            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            best = best.max(d);
        }
    }
    best.sqrt()
}

/// Largest distance between points sharing the coordinate on `fixed_axis`.
fn max_distance_grouped(points: &[[f64; 3]], fixed_axis: usize) -> f64 {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a[fixed_axis].total_cmp(&b[fixed_axis]));
    let mut best = 0.0f64;
    for group in sorted.chunk_by(|a, b| a[fixed_axis] == b[fixed_axis]) {
        best = best.max(max_distance(group));
    }
    best
}

/// Covariance eigenvalues of voxel-center coordinates, largest first.
pub(crate) fn principal_moments(mask: &Mask, s: Spacing) -> [f64; 3] {
    let dims = mask.dims();
    let n = mask.count() as f64;
    let mut mean = [0.0; 3];
    for idx in mask.indices() {
        let (i, j, k) = dims.coords(idx);
        let p = physical([i, j, k], s);
        for a in 0..3 {
            mean[a] += p[a];
        }
    }
    mean = mean.map(|m| m / n);
    let mut cov = Matrix3::<f64>::zeros();
    for idx in mask.indices() {
        let (i, j, k) = dims.coords(idx);
        let p = physical([i, j, k], s);
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += d[r] * d[c];
            }
        }
    }
    cov /= n;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    [ev[0], ev[1], ev[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;

    fn boxed(dims: Dims, size: [usize; 3], at: [usize; 3]) -> Mask {
        Mask::from_fn(dims, |idx| {
            let (i, j, k) = dims.coords(idx);
            [i, j, k].iter().zip(at).zip(size).all(|((&c, a), s)| c >= a && c < a + s)
        })
    }

    fn feature(v: &[f64; 14], name: &str) -> f64 {
        v[SHAPE_FEATURES.iter().position(|n| *n == name).unwrap()]
    }

    #[test]
    fn single_voxel() {
        let d = Dims::cube(3);
        let m = Mask::from_indices(d, [d.index(1, 1, 1)]);
        let f = shape_features(&m, Spacing::isotropic());
        assert_eq!(feature(&f, "VoxelVolume"), 1.0);
        assert_eq!(feature(&f, "SurfaceArea"), 6.0);
        assert_eq!(feature(&f, "MajorAxisLength"), 0.0);
        assert_eq!(feature(&f, "MinorAxisLength"), 0.0);
        assert_eq!(feature(&f, "LeastAxisLength"), 0.0);
        assert_eq!(feature(&f, "Maximum3DDiameter"), 0.0);
    }

    #[test]
    fn solid_cube() {
        let d = Dims::cube(12);
        let m = boxed(d, [10, 10, 10], [1, 1, 1]);
        let f = shape_features(&m, Spacing::isotropic());
        assert_eq!(feature(&f, "VoxelVolume"), 1000.0);
        assert_eq!(feature(&f, "VoxelCount"), 1000.0);
        assert_eq!(feature(&f, "SurfaceArea"), 600.0);
        assert!((feature(&f, "Maximum3DDiameter") - 9.0 * 3f64.sqrt()).abs() < 1e-12);
        for plane in ["Maximum2DDiameterSlice", "Maximum2DDiameterColumn", "Maximum2DDiameterRow"] {
            assert!((feature(&f, plane) - 9.0 * 2f64.sqrt()).abs() < 1e-12);
        }
        assert!((feature(&f, "Elongation") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_axes_match_covariance_oracle() {
        let d = Dims::new(24, 14, 9);
        let s = Spacing::new(1.0, 1.0, 1.0).unwrap();
        let m = boxed(d, [20, 10, 5], [2, 2, 2]);
        // Brute-force covariance: each axis is an independent uniform grid,
        // so variance along an axis of length L is (L^2 - 1) / 12.
        let var = |l: f64| (l * l - 1.0) / 12.0;
        let (vx, vy, vz) = (var(20.0), var(10.0), var(5.0));
        let f = shape_features(&m, s);
        assert!((feature(&f, "MajorAxisLength") - 4.0 * vx.sqrt()).abs() < 1e-9);
        assert!((feature(&f, "MinorAxisLength") - 4.0 * vy.sqrt()).abs() < 1e-9);
        assert!((feature(&f, "LeastAxisLength") - 4.0 * vz.sqrt()).abs() < 1e-9);
        assert!((feature(&f, "Elongation") - (vy / vx).sqrt()).abs() < 1e-9);
        assert!((feature(&f, "Flatness") - (vz / vx).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn diameters_match_brute_force() {
        let d = Dims::new(9, 8, 7);
        let s = Spacing::new(0.7, 1.3, 2.0).unwrap();
        let m = Mask::from_fn(d, |idx| {
            let (i, j, k) = d.coords(idx);
            (i * 7 + j * 3 + k * 5) % 4 != 0 && i + j > 3
        });
        let pts: Vec<[f64; 3]> = m
            .indices()
            .map(|idx| {
                let (i, j, k) = d.coords(idx);
                physical([i, j, k], s)
            })
            .collect();
        let brute = |axis: Option<usize>| {
            let mut best = 0.0f64;
            for p in &pts {
                for q in &pts {
                    if axis.is_none_or(|a| p[a] == q[a]) {
                        let dd = (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>();
                        best = best.max(dd);
                    }
                }
            }
            best.sqrt()
        };
        let f = shape_features(&m, s);
        assert_eq!(feature(&f, "Maximum3DDiameter"), brute(None));
        assert_eq!(feature(&f, "Maximum2DDiameterSlice"), brute(Some(2)));
        assert_eq!(feature(&f, "Maximum2DDiameterColumn"), brute(Some(1)));
        assert_eq!(feature(&f, "Maximum2DDiameterRow"), brute(Some(0)));
    }

    #[test]
    fn translation_invariant() {
        let d = Dims::cube(16);
        let s = Spacing::new(1.0, 0.5, 2.0).unwrap();
        let a = shape_features(&boxed(d, [4, 6, 3], [1, 2, 3]), s);
        let b = shape_features(&boxed(d, [4, 6, 3], [9, 7, 10]), s);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}
