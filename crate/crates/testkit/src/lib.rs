//! Slow, obviously-correct reference implementations for cross-checking the
//! optimized code in `radpp-core`. Everything here works on plain
//! `&[bool]` grids with x fastest, so it shares no code with the crate under
//! test.

use rand::Rng;

pub type Dims = [usize; 3];

pub fn index(d: Dims, [i, j, k]: [usize; 3]) -> usize {
    i + d[0] * (j + d[1] * k)
}

pub fn coords(d: Dims, idx: usize) -> [usize; 3] {
    [idx % d[0], (idx / d[0]) % d[1], idx / (d[0] * d[1])]
}

fn neighbors(d: Dims, idx: usize, full: bool) -> Vec<usize> {
    let c = coords(d, idx);
    let mut out = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let manhattan = dx.abs() + dy.abs() + dz.abs();
                if manhattan == 0 || (!full && manhattan > 1) {
                    continue;
                }
                let n = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                if (0..3).all(|a| n[a] >= 0 && n[a] < d[a] as i64) {
                    out.push(index(d, n.map(|v| v as usize)));
                }
            }
        }
    }
    out
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Union-find component labels (0 = background), numbered 1.. in order of
/// each component's lowest voxel index. `full` selects 26-connectivity.
pub fn components(mask: &[bool], d: Dims, full: bool) -> (Vec<u32>, usize) {
    let mut parent: Vec<usize> = (0..mask.len()).collect();
    for v in 0..mask.len() {
        if !mask[v] {
            continue;
        }
        for n in neighbors(d, v, full) {
            if mask[n] {
                let (a, b) = (find(&mut parent, v), find(&mut parent, n));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut id_of_root = vec![0u32; mask.len()];
    let mut labels = vec![0u32; mask.len()];
    let mut count = 0;
    for v in 0..mask.len() {
        if mask[v] {
            let r = find(&mut parent, v);
            if id_of_root[r] == 0 {
                count += 1;
                id_of_root[r] = count as u32;
            }
            labels[v] = id_of_root[r];
        }
    }
    (labels, count)
}

/// Dilation by distance: Chebyshev ball for 26-connectivity, Manhattan ball
/// for 6-connectivity.
pub fn dilate(mask: &[bool], d: Dims, radius: usize, full: bool) -> Vec<bool> {
    let on: Vec<[usize; 3]> = (0..mask.len()).filter(|&v| mask[v]).map(|v| coords(d, v)).collect();
    (0..mask.len())
        .map(|v| {
            let c = coords(d, v);
            on.iter().any(|p| {
                let diff = [0, 1, 2].map(|a| p[a].abs_diff(c[a]));
                let dist = if full { *diff.iter().max().unwrap() } else { diff.iter().sum() };
                dist <= radius
            })
        })
        .collect()
}

/// Foreground voxels with a face neighbor that is background or off-grid.
pub fn surface(mask: &[bool], d: Dims) -> Vec<usize> {
    (0..mask.len())
        .filter(|&v| mask[v] && (neighbors(d, v, false).len() < 6 || neighbors(d, v, false).iter().any(|&n| !mask[n])))
        .collect()
}

pub fn physical_distance(d: Dims, spacing: [f64; 3], a: usize, b: usize) -> f64 {
    let (ca, cb) = (coords(d, a), coords(d, b));
    (0..3)
        .map(|ax| ((ca[ax] as f64 - cb[ax] as f64) * spacing[ax]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Distance from every voxel to the nearest foreground voxel by exhaustive
/// search; `+inf` everywhere when the mask is empty.
pub fn distance_transform(mask: &[bool], d: Dims, spacing: [f64; 3]) -> Vec<f64> {
    let on: Vec<usize> = (0..mask.len()).filter(|&v| mask[v]).collect();
    (0..mask.len())
        .map(|v| on.iter().map(|&p| physical_distance(d, spacing, v, p)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Lesion-wise scores: dice and one NSD per tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct LesionScores {
    pub dice: f64,
    pub nsd: Vec<f64>,
    pub lesions: usize,
    pub false_positives: usize,
}

/// Ground-truth lesions are components of the GT dilated `iters` times;
/// each prediction component joins the lesion it overlaps most (lowest id
/// on ties) or counts as a false positive scoring zero.
pub fn lesion_scores(gt: &[bool], pred: &[bool], d: Dims, spacing: [f64; 3], iters: usize, tolerances: &[f64]) -> LesionScores {
    let grown = dilate(gt, d, iters, true);
    let (lesion_of, n_lesions) = components(&grown, d, true);
    let (pred_comp, n_pred) = components(pred, d, true);
    let mut owner = vec![None; n_pred + 1];
    let mut false_positives = 0;
    for p in 1..=n_pred as u32 {
        let mut overlap = vec![0usize; n_lesions + 1];
        for v in 0..pred.len() {
            if pred_comp[v] == p && lesion_of[v] > 0 {
                overlap[lesion_of[v] as usize] += 1;
            }
        }
        let mut best = 0;
        for l in 1..=n_lesions {
            if overlap[l] > overlap[best] {
                best = l;
            }
        }
        if best == 0 {
            false_positives += 1;
        } else {
            owner[p as usize] = Some(best as u32);
        }
    }
    let mut dice_sum = 0.0;
    let mut nsd_sum = vec![0.0; tolerances.len()];
    for l in 1..=n_lesions as u32 {
        let g: Vec<bool> = (0..gt.len()).map(|v| gt[v] && lesion_of[v] == l).collect();
        let p: Vec<bool> = (0..pred.len()).map(|v| pred[v] && owner[pred_comp[v] as usize] == Some(l)).collect();
        let (ng, np) = (g.iter().filter(|&&x| x).count(), p.iter().filter(|&&x| x).count());
        let inter = (0..gt.len()).filter(|&v| g[v] && p[v]).count();
        dice_sum += 2.0 * inter as f64 / (ng + np) as f64;
        if np == 0 {
            continue;
        }
        let (sg, sp) = (surface(&g, d), surface(&p, d));
        let nearest = |from: &[usize], to: &[usize]| -> Vec<f64> {
            from.iter()
                .map(|&a| to.iter().map(|&b| physical_distance(d, spacing, a, b)).fold(f64::INFINITY, f64::min))
                .collect()
        };
        let (dg, dp) = (nearest(&sg, &sp), nearest(&sp, &sg));
        for (t, acc) in tolerances.iter().zip(nsd_sum.iter_mut()) {
            let within = dg.iter().chain(&dp).filter(|&&x| x <= t + 1e-9).count();
            *acc += within as f64 / (dg.len() + dp.len()) as f64;
        }
    }
    let denom = n_lesions + false_positives;
    let mean = |s: f64| if denom == 0 { 1.0 } else { s / denom as f64 };
    LesionScores {
        dice: mean(dice_sum),
        nsd: nsd_sum.into_iter().map(mean).collect(),
        lesions: n_lesions,
        false_positives,
    }
}

/// Mean over cells of each candidate's tie-averaged rank, higher values
/// ranking first. `table[c][j]` is candidate `c`'s value in cell `j`.
pub fn mean_ranks(table: &[Vec<f64>]) -> Vec<f64> {
    let cells = table.first().map_or(0, Vec::len);
    table
        .iter()
        .map(|row| {
            let total: f64 = (0..cells)
                .map(|j| {
                    let better = table.iter().filter(|o| o[j] > row[j]).count() as f64;
                    let equal = table.iter().filter(|o| o[j] == row[j]).count() as f64;
                    better + (equal + 1.0) / 2.0
                })
                .sum();
            total / cells as f64
        })
        .collect()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Covariance of the rows (divided by `n - 1`).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    (0..p)
        .map(|a| {
            (0..p)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect()
}

/// Mean silhouette with Euclidean distances; singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let total: f64 = (0..points.len())
        .map(|i| {
            let mean_to = |c: usize| {
                let members: Vec<usize> = (0..points.len()).filter(|&j| labels[j] == c && j != i).collect();
                (members.iter().map(|&j| dist(&points[i], &points[j])).sum::<f64>(), members.len())
            };
            let (sum_own, n_own) = mean_to(labels[i]);
            if n_own == 0 {
                return 0.0;
            }
            let a = sum_own / n_own as f64;
            let b = (0..k)
                .filter(|&c| c != labels[i])
                .filter_map(|c| {
                    let (s, m) = mean_to(c);
                    (m > 0).then(|| s / m as f64)
                })
                .fold(f64::INFINITY, f64::min);
            (b - a) / a.max(b)
        })
        .sum();
    total / points.len() as f64
}

/// A few random boxes plus scattered single voxels.
pub fn random_blobs(rng: &mut impl Rng, d: Dims, boxes: usize, speckle: f64) -> Vec<bool> {
    let mut m = vec![false; d[0] * d[1] * d[2]];
    for _ in 0..boxes {
        let lo = [0, 1, 2].map(|a| rng.random_range(0..d[a]));
        let hi = [0, 1, 2].map(|a| (lo[a] + rng.random_range(0..=d[a] / 2)).min(d[a] - 1));
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    m[index(d, [i, j, k])] = true;
                }
            }
        }
    }
    for v in m.iter_mut() {
        if rng.random_bool(speckle) {
            *v = true;
        }
    }
    m
}

/// Randomly perturbs a mask: flips a fraction of voxels and shifts by up to
/// one voxel along x.
pub fn perturb(rng: &mut impl Rng, mask: &[bool], d: Dims, flip: f64) -> Vec<bool> {
    let shift = rng.random_range(0..=1usize);
    (0..mask.len())
        .map(|v| {
            let c = coords(d, v);
            let src = if c[0] >= shift { mask[index(d, [c[0] - shift, c[1], c[2]])] } else { false };
            src ^ rng.random_bool(flip)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_of_two_diagonal_voxels() {
        let d = [2, 2, 1];
        let m = [true, false, false, true];
        assert_eq!(components(&m, d, true).1, 1);
        assert_eq!(components(&m, d, false).1, 2);
    }

    #[test]
    fn single_voxel_surface_and_distance() {
        let d = [3, 3, 3];
        let mut m = vec![false; 27];
        m[13] = true;
        assert_eq!(surface(&m, d), vec![13]);
        let dt = distance_transform(&m, d, [1.0, 2.0, 3.0]);
        assert_eq!(dt[13], 0.0);
        assert_eq!(dt[index(d, [1, 1, 0])], 3.0);
    }

    #[test]
    fn jacobi_on_known_matrix() {
        let ev = symmetric_eigenvalues(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_tie() {
        assert_eq!(mean_ranks(&[vec![1.0], vec![1.0]]), vec![1.5, 1.5]);
        assert_eq!(mean_ranks(&[vec![0.9, 0.9], vec![0.1, 0.1]]), vec![1.0, 2.0]);
    }
}
