//! Case clustering: z-scoring, PCA to a variance target, and k-means with the
//! cluster count chosen by mean silhouette.
//!
//! Variances use the population (1/n) convention throughout. All reductions
//! run sequentially in a fixed order, so results do not depend on threading.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("no rows to fit")]
    Empty,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("data has rank 0 after centering")]
    RankZero,
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("silhouette needs at least two non-empty clusters")]
    SingleCluster,
    #[error("no cluster count in the range produced distinct centroids")]
    NoValidK,
}

type Result<T> = std::result::Result<T, ClusteringError>;

fn check_rect(rows: &[Vec<f64>]) -> Result<usize> {
    let p = rows.first().ok_or(ClusteringError::Empty)?.len();
    for r in rows {
        if r.len() != p {
            return Err(ClusteringError::DimensionMismatch { expected: p, got: r.len() });
        }
    }
    Ok(p)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-feature mean and population standard deviation. Constant features
/// store std 1 and therefore map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let p = check_rect(rows)?;
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(ClusteringError::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Retained principal directions, unit length, one per row.
    pub components: Vec<Vec<f64>>,
    /// Explained-variance ratio of every non-null component, descending.
    pub explained_ratio: Vec<f64>,
    /// Eigenvalues matching `explained_ratio`.
    pub eigenvalues: Vec<f64>,
    pub variance_target: f64,
}

impl PcaModel {
    /// Keeps the fewest leading components whose cumulative explained
    /// variance reaches `variance_target`.
    pub fn fit(rows: &[Vec<f64>], variance_target: f64) -> Result<Self> {
        let p = check_rect(rows)?;
        let n = rows.len();
        if n < 2 {
            return Err(ClusteringError::TooFewPoints { need: 2, got: n });
        }
        let mut mean = vec![0.0; p];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j] - mean[j]);

        // Eigenpairs of the covariance; through the n x n Gram matrix when
        // there are fewer rows than features.
        let (values, vectors) = if n < p {
            let gram = &x * x.transpose() / n as f64;
            let eig = SymmetricEigen::new(gram);
            let mut vecs = Vec::with_capacity(n);
            for c in 0..n {
                let lambda = eig.eigenvalues[c];
                let v = if lambda > 0.0 {
                    let u = eig.eigenvectors.column(c);
                    let w = x.transpose() * u;
                    let norm = w.norm();
                    if norm > 0.0 {
                        w / norm
                    } else {
                        w
                    }
                } else {
                    nalgebra::DVector::zeros(p)
                };
                vecs.push(v);
            }
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), vecs)
        } else {
            let cov = x.transpose() * &x / n as f64;
            let eig = SymmetricEigen::new(cov);
            let vecs = (0..p).map(|c| eig.eigenvectors.column(c).into_owned()).collect();
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), vecs)
        };

        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let top = values[order[0]].max(0.0);
        let floor = top * 1e-12;
        let kept: Vec<usize> = order.into_iter().filter(|&i| values[i] > floor).collect();
        if kept.is_empty() || top <= 0.0 {
            return Err(ClusteringError::RankZero);
        }
        let total: f64 = kept.iter().map(|&i| values[i]).sum();
        let eigenvalues: Vec<f64> = kept.iter().map(|&i| values[i]).collect();
        let explained_ratio: Vec<f64> = eigenvalues.iter().map(|v| v / total).collect();

        let mut retained = 0;
        let mut cum = 0.0;
        for r in &explained_ratio {
            cum += r;
            retained += 1;
            if cum >= variance_target - 1e-12 {
                break;
            }
        }
        let components = kept[..retained]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = vectors[i].iter().copied().collect();
                // Sign convention: the largest-magnitude entry is positive.
                let lead = v
                    .iter()
                    .enumerate()
                    .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
                if v[lead] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Ok(Self {
            mean,
            components,
            explained_ratio,
            eigenvalues,
            variance_target,
        })
    }

    pub fn retained(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.mean.len() {
            return Err(ClusteringError::DimensionMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect())
    }

    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, s) in self.components.iter().zip(scores) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += s * w;
            }
        }
        out
    }
}

/// Index of the nearest centroid; the lowest index wins ties.
pub fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(centroid, point);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Mean silhouette coefficient. Singleton clusters contribute 0, as does a
/// point with `a = b = 0`.
pub fn silhouette(points: &[Vec<f64>], assignments: &[usize]) -> Result<f64> {
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusteringError::SingleCluster);
    }
    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[assignments[j]] += squared_distance(&points[i], &points[j]).sqrt();
            }
        }
        let own = assignments[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SilhouetteMode {
    /// Silhouette over all fitted points.
    Global,
    /// Mean over folds of the silhouette of the points outside each fold.
    Folds(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub silhouette: SilhouetteMode,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 10,
            restarts: 10,
            max_iterations: 300,
            seed: 0,
            silhouette: SilhouetteMode::Global,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansRun {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

/// Greedy distance-weighted seeding: each new center is the best of
/// `2 + ln k` candidates drawn proportionally to squared distance.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let candidates: Vec<usize> = match WeightedIndex::new(&closest) {
            Ok(dist) => (0..trials).map(|_| dist.sample(rng)).collect(),
            Err(_) => (0..trials).map(|_| rng.random_range(0..n)).collect(),
        };
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for c in candidates {
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, &d)| d.min(squared_distance(p, &points[c])))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(b, _, _)| potential < *b) {
                best = Some((potential, c, updated));
            }
        }
        let (_, c, updated) = best.expect("at least two seeding trials");
        centers.push(points[c].clone());
        closest = updated;
    }
    centers
}

/// One Lloyd run from seeded centers; stops when assignments stop changing.
pub fn lloyd(points: &[Vec<f64>], k: usize, max_iterations: usize, rng: &mut ChaCha8Rng) -> KMeansRun {
    let dim = points[0].len();
    let mut centroids = seed_centers(points, k, rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
    let inertia_of = |c: &[Vec<f64>], a: &[usize]| -> f64 {
        points.iter().zip(a).map(|(p, &j)| squared_distance(p, &c[j])).sum()
    };
    let mut inertia = inertia_of(&centroids, &assignments);
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // An empty cluster takes over the point farthest from its centroid.
                let far = (0..points.len())
                    .filter(|&i| counts[assignments[i]] > 1)
                    .fold(None, |best: Option<(usize, f64)>, i| {
                        let d = squared_distance(&points[i], &centroids[assignments[i]]);
                        match best {
                            Some((_, bd)) if bd >= d => best,
                            _ => Some((i, d)),
                        }
                    });
                if let Some((i, _)) = far {
                    let old = assignments[i];
                    counts[old] -= 1;
                    for (s, v) in sums[old].iter_mut().zip(&points[i]) {
                        *s -= v;
                    }
                    assignments[i] = c;
                    counts[c] = 1;
                    sums[c] = points[i].clone();
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(&centroids, p)).collect();
        let next_inertia = inertia_of(&centroids, &next);
        debug_assert!(
            next_inertia <= inertia * (1.0 + 1e-9) + 1e-12,
            "k-means inertia increased: {inertia} -> {next_inertia}"
        );
        inertia = next_inertia;
        if next == assignments {
            break;
        }
        assignments = next;
    }
    KMeansRun {
        centroids,
        assignments,
        inertia,
        iterations,
    }
}

/// Best of `restarts` Lloyd runs by inertia; the earliest wins ties.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, max_iterations: usize, seed: u64) -> KMeansRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let mut best: Option<KMeansRun> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, k, max_iterations, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub silhouette: f64,
    pub seed: u64,
    /// Mean silhouette for every evaluated k, as `(k, score)`.
    pub silhouette_by_k: Vec<(usize, f64)>,
}

impl ClusterModel {
    pub fn assign(&self, point: &[f64]) -> usize {
        nearest(&self.centroids, point)
    }
}

fn fold_silhouette(points: &[Vec<f64>], assignments: &[usize], folds: usize) -> Result<f64> {
    let folds = folds.clamp(2, points.len());
    let mut total = 0.0;
    let mut used = 0;
    for f in 0..folds {
        let keep: Vec<usize> = (0..points.len()).filter(|i| i % folds != f).collect();
        let pts: Vec<Vec<f64>> = keep.iter().map(|&i| points[i].clone()).collect();
        let asg: Vec<usize> = keep.iter().map(|&i| assignments[i]).collect();
        if let Ok(s) = silhouette(&pts, &asg) {
            total += s;
            used += 1;
        }
    }
    if used == 0 {
        return Err(ClusteringError::SingleCluster);
    }
    Ok(total / used as f64)
}

/// Runs k-means for every k in range and keeps the highest mean silhouette;
/// the smaller k wins ties. A k whose best run has coincident centroids or an
/// empty cluster is skipped.
pub fn fit_kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<ClusterModel> {
    check_rect(points)?;
    let n = points.len();
    let k_max = cfg.k_max.min(n.saturating_sub(1));
    if cfg.k_min < 2 || k_max < cfg.k_min {
        return Err(ClusteringError::TooFewPoints {
            need: cfg.k_min.max(2) + 1,
            got: n,
        });
    }
    let mut best: Option<(f64, KMeansRun)> = None;
    let mut by_k = Vec::new();
    for k in cfg.k_min..=k_max {
        let run = kmeans(points, k, cfg.restarts, cfg.max_iterations, cfg.seed);
        let mut counts = vec![0usize; k];
        run.assignments.iter().for_each(|&a| counts[a] += 1);
        let distinct = (0..k).all(|a| (a + 1..k).all(|b| run.centroids[a] != run.centroids[b]));
        if !distinct || counts.contains(&0) {
            continue;
        }
        let score = match cfg.silhouette {
            SilhouetteMode::Global => silhouette(points, &run.assignments)?,
            SilhouetteMode::Folds(f) => fold_silhouette(points, &run.assignments, f)?,
        };
        by_k.push((k, score));
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, run));
        }
    }
    let (score, run) = best.ok_or(ClusteringError::NoValidK)?;
    Ok(ClusterModel {
        k: run.centroids.len(),
        centroids: run.centroids,
        silhouette: score,
        seed: cfg.seed,
        silhouette_by_k: by_k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub variance_target: f64,
    pub kmeans: KMeansConfig,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            variance_target: 0.90,
            kmeans: KMeansConfig::default(),
        }
    }
}

/// Fitted feature-space pipeline: raw features to cluster id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseClusterer {
    pub standardizer: Standardizer,
    pub pca: PcaModel,
    pub kmeans: ClusterModel,
}

impl CaseClusterer {
    pub fn fit(rows: &[Vec<f64>], cfg: &ClusteringConfig) -> Result<Self> {
        let standardizer = Standardizer::fit(rows)?;
        let z: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.transform(r)).collect::<Result<_>>()?;
        let pca = PcaModel::fit(&z, cfg.variance_target)?;
        let scores: Vec<Vec<f64>> = z.iter().map(|r| pca.project(r)).collect::<Result<_>>()?;
        let kmeans = fit_kmeans(&scores, &cfg.kmeans)?;
        Ok(Self {
            standardizer,
            pca,
            kmeans,
        })
    }

    pub fn embed(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.pca.project(&self.standardizer.transform(features)?)
    }

    pub fn assign(&self, features: &[f64]) -> Result<usize> {
        Ok(self.kmeans.assign(&self.embed(features)?))
    }

    pub fn k(&self) -> usize {
        self.kmeans.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, center: &[f64], scale: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| center.iter().map(|c| c + scale * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    }

    #[test]
    fn standardizer_hand_values() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.transform(&[1.0, 5.0]).unwrap(), vec![-1.0, 0.0]);
        assert_eq!(s.transform(&[3.0, 5.0]).unwrap(), vec![1.0, 0.0]);
        assert!(Standardizer::fit(&[]).is_err());
    }

    #[test]
    fn standardized_columns_are_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = gaussian(&mut rng, 50, &[3.0, -7.0, 100.0], 4.0);
        let s = Standardizer::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.transform(r).unwrap()).collect();
        for j in 0..3 {
            let m: f64 = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            assert!(m.abs() <= 1e-12);
        }
    }

    #[test]
    fn pca_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![t as f64, 2.0 * t as f64, -(t as f64)]).collect();
        let pca = PcaModel::fit(&rows, 0.9).unwrap();
        assert_eq!(pca.retained(), 1);
        assert!((pca.explained_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pca_isotropic_needs_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows = gaussian(&mut rng, 1000, &[0.0, 0.0, 0.0], 1.0);
        let pca = PcaModel::fit(&rows, 0.9).unwrap();
        assert_eq!(pca.retained(), 3);
        for r in &pca.explained_ratio {
            assert!((r - 1.0 / 3.0).abs() < 0.05);
        }
    }

    #[test]
    fn pca_rank_zero_rejected() {
        assert_eq!(
            PcaModel::fit(&[vec![1.0, 2.0], vec![1.0, 2.0]], 0.9),
            Err(ClusteringError::RankZero)
        );
    }

    fn check_pca_invariants(rows: &[Vec<f64>], target: f64) {
        let pca = PcaModel::fit(rows, target).unwrap();
        let m = pca.retained();
        for a in 0..m {
            for b in 0..m {
                let dot: f64 = pca.components[a].iter().zip(&pca.components[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-9, "dot({a},{b}) = {dot}");
            }
        }
        let cum: f64 = pca.explained_ratio[..m].iter().sum();
        assert!(cum >= target - 1e-12);
        let prev: f64 = pca.explained_ratio[..m - 1].iter().sum();
        assert!(prev < target);
        // Reconstruction error equals the discarded variance.
        let n = rows.len() as f64;
        let err: f64 = rows
            .iter()
            .map(|r| squared_distance(r, &pca.reconstruct(&pca.project(r).unwrap())))
            .sum::<f64>()
            / n;
        let discarded: f64 = pca.eigenvalues[m..].iter().sum();
        assert!((err - discarded).abs() <= 1e-6 * discarded.max(1e-12) + 1e-9, "{err} vs {discarded}");
    }

    #[test]
    fn pca_invariants_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, p) in [(30, 5), (12, 40), (8, 8)] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..p).map(|j| rng.sample::<f64, _>(StandardNormal) * (1.0 + j as f64 * 0.3)).collect())
                .collect();
            check_pca_invariants(&rows, 0.9);
        }
    }

    #[test]
    fn silhouette_hand_cases() {
        let far = vec![vec![0.0], vec![0.0], vec![10.0], vec![10.0]];
        assert_eq!(silhouette(&far, &[0, 0, 1, 1]).unwrap(), 1.0);
        let same = vec![vec![1.0]; 4];
        assert_eq!(silhouette(&same, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(silhouette(&same, &[0, 0, 0, 0]), Err(ClusteringError::SingleCluster));

        // Points 0, 1, 4, 6 in clusters {0,1} and {4,6}, brute force by hand:
        // p0: a=1, b=5 -> 0.8; p1: a=1, b=4 -> 0.75
        // p4: a=2, b=3.5 -> 3/7; p6: a=2, b=5.5 -> 7/11
        let pts = vec![vec![0.0], vec![1.0], vec![4.0], vec![6.0]];
        let want = (0.8 + 0.75 + 1.5 / 3.5 + 3.5 / 5.5) / 4.0;
        assert!((silhouette(&pts, &[0, 0, 1, 1]).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn two_blobs_select_k2() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pts = gaussian(&mut rng, 30, &[0.0, 0.0], 0.5);
        pts.extend(gaussian(&mut rng, 30, &[20.0, 20.0], 0.5));
        let cfg = KMeansConfig {
            k_max: 5,
            seed: 9,
            ..Default::default()
        };
        let m = fit_kmeans(&pts, &cfg).unwrap();
        assert_eq!(m.k, 2);
        assert!(m.silhouette > 0.8);
        let again = fit_kmeans(&pts, &cfg).unwrap();
        assert_eq!(m, again);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(m.assign(p), m.assign(&pts[if i < 30 { 0 } else { 30 }]));
        }
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let c = vec![vec![-1.0], vec![1.0]];
        assert_eq!(nearest(&c, &[0.0]), 0);
    }

    #[test]
    fn inertia_never_increases() {
        // debug_assert inside lloyd checks every iteration.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = gaussian(&mut rng, 80, &[0.0, 0.0, 0.0], 3.0);
        for k in 2..6 {
            let run = kmeans(&pts, k, 3, 300, 1);
            assert!(run.inertia.is_finite());
        }
    }

    #[test]
    fn perturbation_keeps_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rows = gaussian(&mut rng, 20, &[0.0; 6], 1.0);
        rows.extend(gaussian(&mut rng, 20, &[8.0; 6], 1.0));
        let model = CaseClusterer::fit(&rows, &ClusteringConfig::default()).unwrap();
        for r in &rows {
            let nudged: Vec<f64> = r.iter().map(|v| v + 1e-9).collect();
            assert_eq!(model.assign(r).unwrap(), model.assign(&nudged).unwrap());
        }
    }
}
