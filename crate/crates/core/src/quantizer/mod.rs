//! Residual k-means quantization.
//!
//! Each layer clusters the residuals left by the previous one. Cosine layers
//! assign by maximum cosine similarity and remove the projection onto the
//! assigned centroid; Euclidean layers assign by nearest centroid and subtract it.

pub mod hierarchy;
pub mod kmeans;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::georope::{build_geo_vector, GeoAttributes, NormalizedGeo};
use crate::linalg::{check_dim, dot, norm, Matrix};

pub use hierarchy::{train_hierarchy, train_layer, train_third_layer, HierarchyFit, LayerFit};
pub use kmeans::{kmeans_plus_plus, kmeans_train, lloyd, KMeansConfig, KMeansFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Cosine,
    Euclidean,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

/// One trained layer: `K` centroids of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct CodebookLayer {
    pub centroids: Matrix,
    pub metric: Metric,
}

impl CodebookLayer {
    pub fn new(centroids: Matrix, metric: Metric) -> Result<Self> {
        if centroids.rows() == 0 {
            return Err(Error::InvalidK { k: 0, count: 0 });
        }
        if centroids.as_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("centroids must be finite"));
        }
        if metric == Metric::Cosine && centroids.iter_rows().any(|c| norm(c) == 0.0) {
            return Err(Error::DegenerateCentroid);
        }
        Ok(CodebookLayer { centroids, metric })
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.dim()
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        self.centroids.row(j)
    }

    /// Code of `r` under this layer's metric.
    pub fn assign(&self, r: &[f64]) -> Result<usize> {
        match self.metric {
            Metric::Cosine => assign_cosine(r, self),
            Metric::Euclidean => {
                check_dim(self.dim(), r.len())?;
                let norms: Vec<f64> = self.centroids.iter_rows().map(norm).collect();
                Ok(kmeans::nearest(Metric::Euclidean, r, &self.centroids, &norms))
            }
        }
    }

    /// Residual of `r` after quantizing it to centroid `j`.
    pub fn residual(&self, r: &[f64], j: usize) -> Result<Vec<f64>> {
        if j >= self.k() {
            return Err(Error::CodeOutOfRange {
                layer: 0,
                index: j,
                capacity: self.k(),
            });
        }
        let c = self.centroid(j);
        match self.metric {
            Metric::Cosine => project_residual(r, c),
            Metric::Euclidean => {
                check_dim(c.len(), r.len())?;
                Ok(r.iter().zip(c).map(|(a, b)| a - b).collect())
            }
        }
    }

    /// Rounds centroids to `f32` so they survive the 32-bit artifact encoding.
    pub fn snap_to_f32(&mut self) {
        self.centroids.snap_to_f32();
    }
}

/// Index of the centroid with the highest cosine similarity to `r`; ties go to
/// the lowest index and a zero `r` maps to 0.
pub fn assign_cosine(r: &[f64], layer: &CodebookLayer) -> Result<usize> {
    check_dim(layer.dim(), r.len())?;
    let norms: Vec<f64> = layer.centroids.iter_rows().map(norm).collect();
    Ok(kmeans::nearest(Metric::Cosine, r, &layer.centroids, &norms))
}

/// `r - (⟨r,c⟩/‖c‖²)·c`, orthogonal to `c`.
pub fn project_residual(r: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    check_dim(c.len(), r.len())?;
    let cc = dot(c, c);
    if cc == 0.0 {
        return Err(Error::DegenerateCentroid);
    }
    let t = dot(r, c) / cc;
    Ok(r.iter().zip(c).map(|(a, b)| a - t * b).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Cosine layers with the geo rotary encoding.
    ProGeo,
    /// Euclidean k-means on every layer with subtraction residuals, no geography.
    RqKmeansEuclidean,
    /// Cosine layers without any geographic signal.
    CosineOnly,
    /// Cosine layers; `[r; d_norm; σ_norm]` at the geo stage.
    ConcatGeo,
    /// Cosine layers; `(d_norm, σ_norm)` tiled and added onto the residual.
    AddGeo,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::ProGeo,
        Variant::RqKmeansEuclidean,
        Variant::CosineOnly,
        Variant::ConcatGeo,
        Variant::AddGeo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::ProGeo => "pro_geo",
            Variant::RqKmeansEuclidean => "rq_kmeans_euclidean",
            Variant::CosineOnly => "cosine_only",
            Variant::ConcatGeo => "concat_geo",
            Variant::AddGeo => "add_geo",
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            Variant::RqKmeansEuclidean => Metric::Euclidean,
            _ => Metric::Cosine,
        }
    }

    pub fn uses_geo(&self) -> bool {
        matches!(self, Variant::ProGeo | Variant::ConcatGeo | Variant::AddGeo)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pro_geo" | "progeo" => Variant::ProGeo,
            "rq_kmeans_euclidean" | "rq_kmeans" | "euclidean" => Variant::RqKmeansEuclidean,
            "cosine_only" | "none" => Variant::CosineOnly,
            "concat_geo" | "concat" => Variant::ConcatGeo,
            "add_geo" | "add" => Variant::AddGeo,
            other => return Err(Error::invalid(format!("unknown variant '{other}'"))),
        })
    }
}

/// Where the geographic enhancement is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RopeLayer {
    /// Before layer-2 clustering, on first-layer residuals.
    Second,
    /// Before layer-3 clustering, on second-layer residuals.
    Third,
    /// Both of the above, with layer-3 frames recomputed from the enhanced layer-2 groups.
    Both,
}

impl RopeLayer {
    pub fn at_second(&self) -> bool {
        matches!(self, RopeLayer::Second | RopeLayer::Both)
    }

    pub fn at_third(&self) -> bool {
        matches!(self, RopeLayer::Third | RopeLayer::Both)
    }
}

impl fmt::Display for RopeLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RopeLayer::Second => "second",
            RopeLayer::Third => "third",
            RopeLayer::Both => "both",
        })
    }
}

impl FromStr for RopeLayer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "second" | "2" => Ok(RopeLayer::Second),
            "third" | "3" => Ok(RopeLayer::Third),
            "both" | "2,3" => Ok(RopeLayer::Both),
            other => Err(Error::invalid(format!("unknown rope layer '{other}'"))),
        }
    }
}

/// Source of the two geo angles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coords {
    /// Distance and azimuth relative to the group's geo-centroid.
    Local,
    /// Absolute position: longitude (halved) in the azimuth slot, latitude + π/2 in the distance slot.
    Global,
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coords::Local => "local",
            Coords::Global => "global",
        })
    }
}

impl FromStr for Coords {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "local" => Ok(Coords::Local),
            "global" => Ok(Coords::Global),
            other => Err(Error::invalid(format!("unknown coordinate mode '{other}'"))),
        }
    }
}

/// Distance that maps to `d_norm = π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DScale {
    /// Largest member distance within each group.
    PerCluster,
    Fixed(f64),
}

impl fmt::Display for DScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DScale::PerCluster => f.write_str("per_cluster"),
            DScale::Fixed(km) => write!(f, "{km}"),
        }
    }
}

impl FromStr for DScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("per_cluster") || s.eq_ignore_ascii_case("auto") {
            return Ok(DScale::PerCluster);
        }
        let km: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("d_scale must be 'per_cluster' or kilometers, got '{s}'")))?;
        if km > 0.0 && km.is_finite() {
            Ok(DScale::Fixed(km))
        } else {
            Err(Error::invalid(format!("d_scale must be positive, got {km}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub layer_sizes: Vec<usize>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub variant: Variant,
    pub geo_attributes: GeoAttributes,
    pub alpha: f64,
    pub beta: f64,
    pub rope_layer: RopeLayer,
    pub coords: Coords,
    pub d_scale: DScale,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layer_sizes: vec![512, 512, 512],
            max_iters: 100,
            tol: 1e-4,
            seed: 0,
            variant: Variant::ProGeo,
            geo_attributes: GeoAttributes::FULL,
            alpha: 0.5,
            beta: 0.5,
            rope_layer: RopeLayer::Third,
            coords: Coords::Local,
            d_scale: DScale::PerCluster,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::invalid("layer_sizes needs at least two entries"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::invalid("every layer size must be at least 1"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha and beta must be finite and non-negative, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::invalid("tol must be non-negative"));
        }
        if self.variant == Variant::ProGeo && self.geo_attributes.is_empty() {
            return Err(Error::invalid("pro_geo needs at least one geo attribute"));
        }
        if let DScale::Fixed(km) = self.d_scale {
            if km.is_nan() || km <= 0.0 {
                return Err(Error::invalid("d_scale must be positive"));
            }
        }
        Ok(())
    }

    pub fn kmeans(&self, layer: usize) -> KMeansConfig {
        KMeansConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            stream: layer as u64,
        }
    }

    /// Dimension of the vector produced by [`build_variant_vector`] from an `m`-dimensional residual.
    pub fn enhanced_dim(&self, m: usize) -> usize {
        match self.variant {
            Variant::ProGeo => crate::georope::geo_vector_dim(m, self.geo_attributes),
            Variant::ConcatGeo => m + 2,
            _ => m,
        }
    }
}

/// Geo-enhanced vector for the configured variant.
pub fn build_variant_vector(r: &[f64], geo: NormalizedGeo, cfg: &TrainConfig) -> Result<Vec<f64>> {
    match cfg.variant {
        Variant::ProGeo => build_geo_vector(r, geo, cfg.alpha, cfg.beta, cfg.geo_attributes),
        Variant::ConcatGeo => {
            let mut v = Vec::with_capacity(r.len() + 2);
            v.extend_from_slice(r);
            v.push(geo.d_norm);
            v.push(geo.sigma_norm);
            Ok(v)
        }
        Variant::AddGeo => Ok(r
            .iter()
            .enumerate()
            .map(|(i, x)| x + if i % 2 == 0 { geo.d_norm } else { geo.sigma_norm })
            .collect()),
        Variant::CosineOnly | Variant::RqKmeansEuclidean => Ok(r.to_vec()),
    }
}
