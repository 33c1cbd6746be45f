//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use geosid::GeoPoint;

pub const R_KM: f64 = 6371.0;

/// Great-circle distance via the haversine formula, written out from scratch.
pub fn haversine_oracle(a: GeoPoint, b: GeoPoint) -> f64 {
    let to_rad = std::f64::consts::PI / 180.0;
    let (p1, p2) = (a.lat * to_rad, b.lat * to_rad);
    let dp = p2 - p1;
    let dl = (b.lon - a.lon) * to_rad;
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R_KM * h.min(1.0).sqrt().asin()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleMetric {
    Cosine,
    Euclidean,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn oracle_distance(metric: OracleMetric, x: &[f64], c: &[f64]) -> f64 {
    match metric {
        OracleMetric::Euclidean => x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum(),
        OracleMetric::Cosine => {
            let (nx, nc) = (norm(x), norm(c));
            if nx == 0.0 || nc == 0.0 {
                1.0
            } else {
                1.0 - x.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() / (nx * nc)
            }
        }
    }
}

pub struct OracleFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Plain Lloyd iteration run until no assignment changes: every point is
/// compared against every centroid, centroids are member means (of unit
/// vectors for cosine), and an emptied cluster takes the farthest point of a
/// cluster that can spare one.
#[allow(clippy::needless_range_loop)]
pub fn lloyd_oracle(points: &[Vec<f64>], init: Vec<Vec<f64>>, metric: OracleMetric, max_iters: usize) -> OracleFit {
    let k = init.len();
    let dim = points[0].len();
    let mut centroids = init;
    let assign = |centroids: &Vec<Vec<f64>>| -> Vec<usize> {
        points
            .iter()
            .map(|x| {
                if metric == OracleMetric::Cosine && norm(x) == 0.0 {
                    return 0;
                }
                let mut best = 0;
                for (j, c) in centroids.iter().enumerate().skip(1) {
                    if oracle_distance(metric, x, c) < oracle_distance(metric, x, &centroids[best]) {
                        best = j;
                    }
                }
                best
            })
            .collect()
    };
    let mut a = assign(&centroids);
    for _ in 0..max_iters {
        let mut bad = Vec::new();
        for j in 0..k {
            let members: Vec<Vec<f64>> = points
                .iter()
                .zip(&a)
                .filter(|(x, &aj)| aj == j && (metric == OracleMetric::Euclidean || norm(x) > 0.0))
                .map(|(x, _)| match metric {
                    OracleMetric::Euclidean => x.clone(),
                    OracleMetric::Cosine => {
                        let n = norm(x);
                        x.iter().map(|v| v / n).collect()
                    }
                })
                .collect();
            let mut sum = vec![0.0; dim];
            for m in &members {
                for d in 0..dim {
                    sum[d] += m[d];
                }
            }
            if members.is_empty() || (metric == OracleMetric::Cosine && norm(&sum) == 0.0) {
                bad.push(j);
            } else {
                centroids[j] = sum.iter().map(|s| s / members.len() as f64).collect();
            }
        }
        for &j in &bad {
            let sizes: Vec<usize> = (0..k).map(|c| a.iter().filter(|&&x| x == c).count()).collect();
            let mut best: Option<(f64, usize)> = None;
            for (i, x) in points.iter().enumerate() {
                if sizes[a[i]] < 2 || a[i] == j || (metric == OracleMetric::Cosine && norm(x) == 0.0) {
                    continue;
                }
                let d = oracle_distance(metric, x, &centroids[a[i]]);
                let floor = match metric {
                    OracleMetric::Cosine => 1e-12,
                    OracleMetric::Euclidean => 1e-12 * (1.0 + norm(x).powi(2)),
                };
                if d > floor && best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, i));
                }
            }
            if let Some((_, i)) = best {
                a[i] = j;
                centroids[j] = points[i].clone();
            }
        }
        let next = assign(&centroids);
        let done = next == a;
        a = next;
        if done {
            break;
        }
    }
    let objective = points
        .iter()
        .zip(&a)
        .map(|(x, &j)| oracle_distance(metric, x, &centroids[j]))
        .sum();
    OracleFit {
        assignments: a,
        centroids,
        objective,
    }
}

/// Smallest objective over every assignment of `points` to `k` non-empty
/// clusters, each centroid being the optimal one for its members.
pub fn exhaustive_optimum(points: &[Vec<f64>], k: usize, metric: OracleMetric) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let used: std::collections::BTreeSet<_> = labels.iter().copied().collect();
        if used.len() == k {
            let mut total = 0.0;
            for j in 0..k {
                let members: Vec<&Vec<f64>> = points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == j)
                    .map(|(p, _)| p)
                    .collect();
                let dim = points[0].len();
                let mut c = vec![0.0; dim];
                for m in &members {
                    let scale = match metric {
                        OracleMetric::Cosine => 1.0 / norm(m).max(f64::MIN_POSITIVE),
                        OracleMetric::Euclidean => 1.0 / members.len() as f64,
                    };
                    for d in 0..dim {
                        c[d] += m[d] * scale;
                    }
                }
                total += members.iter().map(|m| oracle_distance(metric, m, &c)).sum::<f64>();
            }
            best = best.min(total);
        }
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}
