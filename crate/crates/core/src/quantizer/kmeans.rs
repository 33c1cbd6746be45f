//! Lloyd k-means under cosine or Euclidean distance with greedy k-means++
//! seeding and deterministic empty-cluster repair.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, squared_euclidean, Matrix};

use super::{CodebookLayer, Metric};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansConfig {
    pub max_iters: usize,
    /// Stop once the fraction of points that changed cluster drops below this.
    pub tol: f64,
    pub seed: u64,
    /// ChaCha stream id, so each layer draws from an independent sequence.
    pub stream: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iters: 100,
            tol: 1e-4,
            seed: 0,
            stream: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub layer: CodebookLayer,
    pub assignments: Vec<usize>,
    /// Update/reassign rounds performed after the initial assignment.
    pub iterations: usize,
    pub converged: bool,
    pub repairs: usize,
    /// Objective after the initial assignment and after every round.
    pub objective_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&0.0)
    }
}

/// Distance used by both seeding and the objective: `1 - cos` or squared Euclidean.
pub fn distance(metric: Metric, x: &[f64], c: &[f64]) -> f64 {
    match metric {
        Metric::Cosine => {
            let (nx, nc) = (norm(x), norm(c));
            if nx == 0.0 || nc == 0.0 {
                1.0
            } else {
                1.0 - dot(x, c) / (nx * nc)
            }
        }
        Metric::Euclidean => squared_euclidean(x, c),
    }
}

/// Sum of point-to-assigned-centroid distances, accumulated in index order.
pub fn objective(data: &Matrix, centroids: &Matrix, assignments: &[usize], metric: Metric) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &j)| distance(metric, data.row(i), centroids.row(j)))
        .sum()
}

fn eligible(metric: Metric, x: &[f64]) -> bool {
    metric == Metric::Euclidean || norm(x) > 0.0
}

fn basis_e0(dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    if dim > 0 {
        e[0] = 1.0;
    }
    e
}

/// Greedy k-means++: each step samples `2 + ⌊ln k⌋` candidates with probability
/// proportional to the squared distance to the nearest chosen center and keeps
/// the candidate that minimizes the total potential.
///
/// Zero vectors are never chosen as cosine centers. When no eligible point has
/// positive potential, the lowest-index unchosen eligible point is used; under
/// cosine with no eligible point left the center falls back to `e0`.
pub fn kmeans_plus_plus(data: &Matrix, k: usize, metric: Metric, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let n = data.rows();
    validate_k(k, n)?;
    let dim = data.dim();
    let ok: Vec<bool> = data.iter_rows().map(|x| eligible(metric, x)).collect();
    let pool: Vec<usize> = (0..n).filter(|&i| ok[i]).collect();
    let mut chosen = vec![false; n];
    let mut centers = Matrix::zeros(0, dim);

    let first = if pool.is_empty() {
        None
    } else {
        Some(pool[rng.random_range(0..pool.len())])
    };
    let first_center = match first {
        Some(i) => {
            chosen[i] = true;
            data.row(i).to_vec()
        }
        None => basis_e0(dim),
    };
    let sq = |x: &[f64], c: &[f64]| {
        let d = distance(metric, x, c);
        match metric {
            Metric::Cosine => d * d,
            Metric::Euclidean => d,
        }
    };
    let mut pot: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| if ok[i] { sq(data.row(i), &first_center) } else { 0.0 })
        .collect();
    centers.push_row(&first_center)?;

    let trials = 2 + (k as f64).ln().floor() as usize;
    for _ in 1..k {
        let total: f64 = pot.iter().sum();
        let next = if total > 0.0 {
            let dist = WeightedIndex::new(&pot).map_err(|e| Error::invalid(format!("k-means++ weights: {e}")))?;
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for _ in 0..trials {
                let cand = dist.sample(rng);
                let c = data.row(cand);
                let updated: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|i| if ok[i] { pot[i].min(sq(data.row(i), c)) } else { 0.0 })
                    .collect();
                let s: f64 = updated.iter().sum();
                if best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, cand, updated));
                }
            }
            let (_, cand, updated) = best.expect("at least two trials");
            pot = updated;
            Some(cand)
        } else {
            (0..n).find(|&i| ok[i] && !chosen[i])
        };
        let center = match next {
            Some(i) => {
                chosen[i] = true;
                data.row(i).to_vec()
            }
            None => match metric {
                Metric::Cosine => basis_e0(dim),
                Metric::Euclidean => {
                    let i = (0..n).find(|&i| !chosen[i]).unwrap_or(0);
                    chosen[i] = true;
                    data.row(i).to_vec()
                }
            },
        };
        if total <= 0.0 {
            for i in 0..n {
                if ok[i] {
                    pot[i] = pot[i].min(sq(data.row(i), &center));
                }
            }
        }
        centers.push_row(&center)?;
    }
    Ok(centers)
}

fn validate_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::InvalidK { k, count: n })
    } else {
        Ok(())
    }
}

/// Nearest centroid under `metric`: cosine maximizes `⟨x,c⟩/‖c‖` (zero `x` maps to 0),
/// Euclidean minimizes the squared distance. Ties go to the lowest index.
pub(crate) fn nearest(metric: Metric, x: &[f64], centroids: &Matrix, cnorms: &[f64]) -> usize {
    let mut best = 0;
    match metric {
        Metric::Cosine => {
            if norm(x) == 0.0 {
                return 0;
            }
            let mut best_s = f64::NEG_INFINITY;
            for (j, c) in centroids.iter_rows().enumerate() {
                let s = if cnorms[j] > 0.0 {
                    dot(x, c) / cnorms[j]
                } else {
                    f64::NEG_INFINITY
                };
                if s > best_s {
                    best_s = s;
                    best = j;
                }
            }
        }
        Metric::Euclidean => {
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter_rows().enumerate() {
                let d = squared_euclidean(x, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
        }
    }
    best
}

pub(crate) fn assign_all(data: &Matrix, centroids: &Matrix, metric: Metric) -> Vec<usize> {
    let cnorms: Vec<f64> = centroids.iter_rows().map(norm).collect();
    (0..data.rows())
        .into_par_iter()
        .map(|i| nearest(metric, data.row(i), centroids, &cnorms))
        .collect()
}

/// Recomputes centroids from assignments. Returns the clusters left without a
/// usable centroid (empty, or zero mean direction under cosine); their previous
/// centroid is kept in place.
fn update(data: &Matrix, centroids: &mut Matrix, assignments: &[usize], metric: Metric) -> Vec<usize> {
    let k = centroids.rows();
    let dim = data.dim();
    let mut sums = Matrix::zeros(k, dim);
    let mut counts = vec![0usize; k];
    for (i, &j) in assignments.iter().enumerate() {
        let x = data.row(i);
        let s = sums.row_mut(j);
        match metric {
            Metric::Cosine => {
                let nx = norm(x);
                if nx > 0.0 {
                    counts[j] += 1;
                    for (a, b) in s.iter_mut().zip(x) {
                        *a += b / nx;
                    }
                }
            }
            Metric::Euclidean => {
                counts[j] += 1;
                for (a, b) in s.iter_mut().zip(x) {
                    *a += b;
                }
            }
        }
    }
    let mut degenerate = Vec::new();
    for (j, &count) in counts.iter().enumerate() {
        let s = sums.row(j);
        if count == 0 || (metric == Metric::Cosine && norm(s) == 0.0) {
            degenerate.push(j);
            continue;
        }
        let inv = count as f64;
        for (c, v) in centroids.row_mut(j).iter_mut().zip(s) {
            *c = v / inv;
        }
    }
    degenerate
}

/// Distances at or below this count as zero when looking for a repair donor,
/// so rounding noise between identical vectors is not mistaken for spread.
pub fn repair_floor(metric: Metric, x: &[f64]) -> f64 {
    match metric {
        Metric::Cosine => 1e-12,
        Metric::Euclidean => 1e-12 * (1.0 + dot(x, x)),
    }
}

/// Moves the worst-fit point into each degenerate cluster. The donor must come
/// from a cluster with at least two members and sit at positive distance from
/// its centroid; for cosine, zero vectors are skipped. Returns repairs made.
fn repair(
    data: &Matrix,
    centroids: &mut Matrix,
    assignments: &mut [usize],
    degenerate: &[usize],
    metric: Metric,
) -> usize {
    if degenerate.is_empty() {
        return 0;
    }
    let k = centroids.rows();
    let mut counts = vec![0usize; k];
    for &j in assignments.iter() {
        counts[j] += 1;
    }
    let mut repaired = 0;
    for &j in degenerate {
        let mut best: Option<(f64, usize)> = None;
        for (i, &a) in assignments.iter().enumerate() {
            if counts[a] < 2 || a == j || !eligible(metric, data.row(i)) {
                continue;
            }
            let x = data.row(i);
            let d = distance(metric, x, centroids.row(a));
            if d > repair_floor(metric, x) && best.is_none_or(|b| d > b.0) {
                best = Some((d, i));
            }
        }
        if let Some((_, i)) = best {
            counts[assignments[i]] -= 1;
            counts[j] += 1;
            assignments[i] = j;
            centroids.row_mut(j).copy_from_slice(data.row(i));
            repaired += 1;
        }
    }
    repaired
}

/// Runs Lloyd iterations from the given initial centroids.
pub fn lloyd(data: &Matrix, init: Matrix, metric: Metric, max_iters: usize, tol: f64) -> Result<KMeansFit> {
    if data.rows() == 0 {
        return Err(Error::EmptyInput("k-means needs at least one vector"));
    }
    crate::linalg::check_dim(init.dim(), data.dim())?;
    let n = data.rows();
    let mut centroids = init;
    let mut assignments = assign_all(data, &centroids, metric);
    let mut trace = vec![objective(data, &centroids, &assignments, metric)];
    let mut repairs = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let degenerate = update(data, &mut centroids, &assignments, metric);
        repairs += repair(data, &mut centroids, &mut assignments, &degenerate, metric);
        let next = assign_all(data, &centroids, metric);
        let changed = next.iter().zip(&assignments).filter(|(a, b)| a != b).count();
        assignments = next;
        trace.push(objective(data, &centroids, &assignments, metric));
        if (changed as f64) / (n as f64) < tol {
            converged = true;
            break;
        }
    }
    Ok(KMeansFit {
        layer: CodebookLayer::new(centroids, metric)?,
        assignments,
        iterations,
        converged,
        repairs,
        objective_trace: trace,
    })
}

/// Seeds with greedy k-means++ and runs Lloyd to convergence. Fully determined
/// by the inputs and `cfg`.
pub fn kmeans_train(data: &Matrix, k: usize, metric: Metric, cfg: &KMeansConfig) -> Result<KMeansFit> {
    if data.rows() == 0 {
        return Err(Error::EmptyInput("k-means needs at least one vector"));
    }
    validate_k(k, data.rows())?;
    let mut rng = seeded_rng(cfg.seed, cfg.stream);
    let init = kmeans_plus_plus(data, k, metric, &mut rng)?;
    lloyd(data, init, metric, cfg.max_iters, cfg.tol)
}

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn separates_axes() {
        let data = m(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
        for metric in [Metric::Cosine, Metric::Euclidean] {
            let fit = kmeans_train(&data, 2, metric, &KMeansConfig::default()).unwrap();
            let a = &fit.assignments;
            assert_eq!(a[0], a[1]);
            assert_eq!(a[2], a[3]);
            assert_ne!(a[0], a[2]);
            assert_eq!(fit.objective(), 0.0);
        }
    }

    #[test]
    fn k_equal_to_count_gives_singletons() {
        let data = m(&[&[1.0, 0.2], &[-0.3, 1.0], &[0.5, -1.0]]);
        let fit = kmeans_train(&data, 3, Metric::Cosine, &KMeansConfig::default()).unwrap();
        let mut a = fit.assignments.clone();
        a.sort();
        assert_eq!(a, vec![0, 1, 2]);
        assert!(fit.objective().abs() < 1e-12);
    }

    #[test]
    fn identical_vectors_leave_one_cluster_populated() {
        let data = m(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        let fit = kmeans_train(&data, 2, Metric::Cosine, &KMeansConfig::default()).unwrap();
        assert!(fit.assignments.iter().all(|&a| a == 0));
        assert!(fit.converged);
        for c in fit.layer.centroids.iter_rows() {
            assert!(norm(c) > 0.0);
        }
    }

    #[test]
    fn empty_cluster_is_repaired_from_the_farthest_point() {
        let data = m(&[&[0.0], &[1.0], &[10.0]]);
        let init = m(&[&[0.5], &[100.0]]);
        let fit = lloyd(&data, init, Metric::Euclidean, 100, 1e-4).unwrap();
        assert!(fit.repairs >= 1);
        assert_eq!(fit.assignments, vec![0, 0, 1]);
    }

    #[test]
    fn rejects_bad_k() {
        let data = m(&[&[1.0, 0.0]]);
        assert!(matches!(
            kmeans_train(&data, 2, Metric::Cosine, &KMeansConfig::default()),
            Err(Error::InvalidK { .. })
        ));
        assert!(kmeans_train(&data, 0, Metric::Cosine, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn all_zero_data_falls_back_to_basis_vector() {
        let data = m(&[&[0.0, 0.0]]);
        let fit = kmeans_train(&data, 1, Metric::Cosine, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.layer.centroids.row(0), &[1.0, 0.0]);
        assert_eq!(fit.assignments, vec![0]);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = seeded_rng(3, 0);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let data = Matrix::from_rows(&rows).unwrap();
        for metric in [Metric::Cosine, Metric::Euclidean] {
            let fit = kmeans_train(&data, 5, metric, &KMeansConfig::default()).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", fit.objective_trace);
            }
        }
    }
}
