mod common;

use common::{exhaustive_optimum, lloyd_oracle, OracleMetric};
use geosid::linalg::Matrix;
use geosid::quantizer::kmeans::{kmeans_plus_plus, kmeans_train, lloyd, seeded_rng};
use geosid::quantizer::{KMeansConfig, Metric};
use rand::Rng;
use rand_distr::StandardNormal;

fn oracle_metric(m: Metric) -> OracleMetric {
    match m {
        Metric::Cosine => OracleMetric::Cosine,
        Metric::Euclidean => OracleMetric::Euclidean,
    }
}

fn random_rows(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn compare(rows: &[Vec<f64>], k: usize, metric: Metric, seed: u64) {
    let data = Matrix::from_rows(rows).unwrap();
    let init = kmeans_plus_plus(&data, k, metric, &mut seeded_rng(seed, 1)).unwrap();
    let init_rows: Vec<Vec<f64>> = init.iter_rows().map(<[f64]>::to_vec).collect();
    let fit = lloyd(&data, init, metric, 200, 1e-12).unwrap();
    let oracle = lloyd_oracle(rows, init_rows, oracle_metric(metric), 200);
    assert_eq!(fit.assignments, oracle.assignments, "seed {seed}");
    assert_eq!(fit.objective(), oracle.objective, "seed {seed}");
    for (j, c) in oracle.centroids.iter().enumerate() {
        assert_eq!(fit.layer.centroid(j), c.as_slice(), "seed {seed} centroid {j}");
    }
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = seeded_rng(11, 0);
    for seed in 0..200 {
        let n = rng.random_range(2..=20);
        let k = rng.random_range(1..=4usize.min(n));
        let metric = if seed % 2 == 0 {
            Metric::Cosine
        } else {
            Metric::Euclidean
        };
        // one-dimensional cosine makes every centroid pair an exact tie
        let m = rng.random_range(if metric == Metric::Cosine { 2 } else { 1 }..=6);
        let rows = random_rows(&mut rng, n, m);
        compare(&rows, k, metric, seed);
    }
}

#[test]
fn matches_oracle_with_duplicates_and_zero_vectors() {
    let mut rng = seeded_rng(12, 0);
    for seed in 0..100 {
        let mut rows = random_rows(&mut rng, 6, 3);
        rows.push(rows[0].clone());
        rows.push(rows[1].clone());
        rows.push(vec![0.0; 3]);
        let metric = if seed % 2 == 0 {
            Metric::Cosine
        } else {
            Metric::Euclidean
        };
        compare(&rows, 3, metric, seed);
    }
}

#[test]
fn separated_clusters_reach_exhaustive_optimum() {
    let mut rng = seeded_rng(13, 0);
    for seed in 0..20 {
        let centers = [[10.0, 0.0], [0.0, 10.0], [-10.0, -10.0]];
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let c = centers[i % 3];
                vec![c[0] + rng.random_range(-0.5..0.5), c[1] + rng.random_range(-0.5..0.5)]
            })
            .collect();
        for metric in [Metric::Euclidean, Metric::Cosine] {
            let data = Matrix::from_rows(&rows).unwrap();
            let cfg = KMeansConfig {
                seed,
                ..KMeansConfig::default()
            };
            let fit = kmeans_train(&data, 3, metric, &cfg).unwrap();
            let best = exhaustive_optimum(&rows, 3, oracle_metric(metric));
            assert!(
                (fit.objective() - best).abs() <= 1e-9 * (1.0 + best),
                "{metric:?}: {} vs {best}",
                fit.objective()
            );
        }
    }
}

#[test]
fn one_hot_axes_are_recovered() {
    let rows: Vec<Vec<f64>> = (0..4)
        .flat_map(|axis| {
            (1..=2).map(move |s| {
                let mut v = vec![0.0; 4];
                v[axis] = s as f64;
                v
            })
        })
        .collect();
    let data = Matrix::from_rows(&rows).unwrap();
    let fit = kmeans_train(&data, 4, Metric::Cosine, &KMeansConfig::default()).unwrap();
    assert_eq!(fit.objective(), 0.0);
    assert_eq!(exhaustive_optimum(&rows, 4, OracleMetric::Cosine), 0.0);
    for group in fit.assignments.chunks(2) {
        assert!(group.iter().all(|&a| a == group[0]));
    }
}
