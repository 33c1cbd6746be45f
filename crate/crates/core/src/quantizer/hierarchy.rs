//! Layer-by-layer training: cluster, snap the centroids to `f32`, reassign,
//! and hand the residuals to the next layer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::kmeans::{assign_all, kmeans_train, KMeansConfig};
use super::{CodebookLayer, Metric, TrainConfig};

#[derive(Clone, Debug)]
pub struct LayerFit {
    pub layer: CodebookLayer,
    pub codes: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub repairs: usize,
}

/// Trains one layer. Codes are recomputed against the `f32`-snapped centroids,
/// so later assignment from a stored codebook reproduces them exactly.
pub fn train_layer(data: &Matrix, k: usize, metric: Metric, cfg: &KMeansConfig) -> Result<LayerFit> {
    let fit = kmeans_train(data, k, metric, cfg)?;
    let mut layer = fit.layer;
    layer.snap_to_f32();
    let codes = assign_all(data, &layer.centroids, metric);
    log::debug!(
        "layer stream {}: k={k} dim={} iterations={} converged={} repairs={}",
        cfg.stream,
        data.dim(),
        fit.iterations,
        fit.converged,
        fit.repairs
    );
    Ok(LayerFit {
        layer,
        codes,
        iterations: fit.iterations,
        converged: fit.converged,
        repairs: fit.repairs,
    })
}

/// Residual of every row against its assigned centroid.
pub fn residuals(data: &Matrix, layer: &CodebookLayer, codes: &[usize]) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = (0..data.rows())
        .into_par_iter()
        .map(|i| layer.residual(data.row(i), codes[i]))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, layer.dim()));
    }
    Matrix::from_rows(&rows)
}

#[derive(Clone, Debug)]
pub struct HierarchyFit {
    pub layers: Vec<CodebookLayer>,
    pub codes: Vec<(usize, usize)>,
    /// Residuals left after the second layer, input to the geo stage.
    pub residuals: Matrix,
}

/// First two layers of plain residual quantization over the embeddings.
pub fn train_hierarchy(embeddings: &Matrix, cfg: &TrainConfig) -> Result<HierarchyFit> {
    cfg.validate()?;
    if embeddings.rows() == 0 {
        return Err(Error::EmptyInput("no embeddings to train on"));
    }
    if !embeddings.dim().is_multiple_of(2) {
        return Err(Error::OddDimension(embeddings.dim()));
    }
    let metric = cfg.variant.metric();
    let l1 = train_layer(embeddings, cfg.layer_sizes[0], metric, &cfg.kmeans(1)).map_err(|e| e.at("layer 1"))?;
    let r1 = residuals(embeddings, &l1.layer, &l1.codes)?;
    let l2 = train_layer(&r1, cfg.layer_sizes[1], metric, &cfg.kmeans(2)).map_err(|e| e.at("layer 2"))?;
    let r2 = residuals(&r1, &l2.layer, &l2.codes)?;
    Ok(HierarchyFit {
        codes: l1.codes.iter().copied().zip(l2.codes.iter().copied()).collect(),
        layers: vec![l1.layer, l2.layer],
        residuals: r2,
    })
}

/// Third-layer codebook over the (possibly geo-enhanced) second-layer residuals.
pub fn train_third_layer(vectors: &Matrix, k: usize, cfg: &TrainConfig) -> Result<LayerFit> {
    train_layer(vectors, k, cfg.variant.metric(), &cfg.kmeans(3)).map_err(|e| e.at("layer 3"))
}
