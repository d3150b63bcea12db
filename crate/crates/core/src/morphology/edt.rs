//! Exact Euclidean distance transform by separable lower envelopes of
//! parabolas (one 1D pass per axis), with per-axis voxel spacing.

use crate::volume::{Mask, Spacing};

/// Distance in mm from every voxel center to the nearest foreground voxel
/// center. Foreground voxels get 0; every voxel is `+inf` when the mask is
/// empty.
pub fn euclidean_distance_transform(mask: &Mask, spacing: Spacing) -> Vec<f64> {
    let mut d = squared_distance_transform(mask, spacing);
    for v in &mut d {
        *v = v.sqrt();
    }
    d
}

/// Squared distances in mm², as [`euclidean_distance_transform`].
pub fn squared_distance_transform(mask: &Mask, spacing: Spacing) -> Vec<f64> {
    let dims = mask.dims();
    let mut f: Vec<f64> = mask
        .data()
        .iter()
        .map(|&on| if on { 0.0 } else { f64::INFINITY })
        .collect();
    let extents = dims.as_array();
    let strides = [1, dims.nx, dims.nx * dims.ny];
    let weights = spacing.as_array();
    let longest = extents.iter().copied().max().unwrap_or(0);
    let mut scratch = Scratch::new(longest);
    for axis in 0..3 {
        let n = extents[axis];
        let stride = strides[axis];
        let w2 = weights[axis] * weights[axis];
        // Every line along `axis` starts at an index whose `axis` coordinate is 0.
        for start in 0..dims.len() {
            if (start / stride) % n != 0 {
                continue;
            }
            for q in 0..n {
                scratch.line[q] = f[start + q * stride];
            }
            scratch.transform(n, w2);
            for q in 0..n {
                f[start + q * stride] = scratch.out[q];
            }
        }
    }
    f
}

struct Scratch {
    line: Vec<f64>,
    out: Vec<f64>,
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            line: vec![0.0; n],
            out: vec![0.0; n],
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }

    /// out[p] = min_q line[q] + w2 * (p - q)^2 over finite line[q].
    fn transform(&mut self, n: usize, w2: f64) {
        let f = &self.line;
        let v = &mut self.vertices;
        let z = &mut self.bounds;
        let mut k: isize = -1;
        for q in 0..n {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + w2 * (q * q) as f64;
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let vk = v[k as usize];
                let fv = f[vk] + w2 * (vk * vk) as f64;
                let s = (fq - fv) / (2.0 * w2 * (q - vk) as f64);
                if s <= z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            self.out[..n].fill(f64::INFINITY);
            return;
        }
        let mut j = 0;
        for p in 0..n {
            while z[j + 1] < p as f64 {
                j += 1;
            }
            let d = p as f64 - v[j] as f64;
            self.out[p] = f[v[j]] + w2 * d * d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(mask: &Mask, s: Spacing) -> Vec<f64> {
        let d = mask.dims();
        let fg: Vec<_> = mask.indices().map(|i| d.coords(i)).collect();
        (0..d.len())
            .map(|idx| {
                let (i, j, k) = d.coords(idx);
                fg.iter()
                    .map(|&(a, b, c)| {
                        let x = (i as f64 - a as f64) * s.dx;
                        let y = (j as f64 - b as f64) * s.dy;
                        let z = (k as f64 - c as f64) * s.dz;
                        (x * x + y * y + z * z).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn axis_aligned_distance() {
        let d = Dims::new(5, 2, 2);
        let m = Mask::from_indices(d, [0]);
        let dt = euclidean_distance_transform(&m, Spacing::isotropic());
        assert_eq!(dt[d.index(3, 0, 0)], 3.0);
        assert_eq!(dt[0], 0.0);
    }

    #[test]
    fn anisotropic_single_step() {
        let d = Dims::cube(3);
        let m = Mask::from_indices(d, [d.index(0, 0, 1)]);
        let dt = euclidean_distance_transform(&m, Spacing::new(1.0, 1.0, 2.5).unwrap());
        assert_eq!(dt[d.index(0, 0, 0)], 2.5);
    }

    #[test]
    fn empty_mask_is_infinite() {
        let dt = euclidean_distance_transform(&Mask::empty(Dims::cube(3)), Spacing::isotropic());
        assert!(dt.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let d = Dims::new(rng.random_range(1..13), rng.random_range(1..13), rng.random_range(1..13));
            let density = [0.005, 0.05, 0.3][trial % 3];
            let bits: Vec<bool> = (0..d.len()).map(|_| rng.random_bool(density)).collect();
            let m = Mask::new(d, bits).unwrap();
            let s = Spacing::new(rng.random_range(0.3..3.0), rng.random_range(0.3..3.0), rng.random_range(0.3..3.0))
                .unwrap();
            let got = euclidean_distance_transform(&m, s);
            let want = brute_force(&m, s);
            for (g, w) in got.iter().zip(&want) {
                if w.is_infinite() {
                    assert!(g.is_infinite());
                } else {
                    assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn lipschitz_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = Dims::cube(12);
        let m = Mask::new(d, (0..d.len()).map(|_| rng.random_bool(0.02)).collect()).unwrap();
        let s = Spacing::new(0.8, 1.0, 2.0).unwrap();
        let dt = euclidean_distance_transform(&m, s);
        for _ in 0..500 {
            let p = rng.random_range(0..d.len());
            let q = rng.random_range(0..d.len());
            let (a, b) = (d.coords(p), d.coords(q));
            let dist = (((a.0 as f64 - b.0 as f64) * s.dx).powi(2)
                + ((a.1 as f64 - b.1 as f64) * s.dy).powi(2)
                + ((a.2 as f64 - b.2 as f64) * s.dz).powi(2))
            .sqrt();
            assert!((dt[p] - dt[q]).abs() <= dist + 1e-9);
        }
    }
}
