//! Geographic rotary encoding.
//!
//! A residual `r ∈ R^M` is split into `M/2` planes, each rotated by the same
//! angle. The mirror transform stacks a forward and a reverse rotation,
//! `T_θ(v) = [R(θ)v; R(-θ)v]`, so the inner product of two transformed vectors
//! depends only on the angle difference:
//! `⟨T_θ1(a), T_θ2(b)⟩ = 2·cos(θ1-θ2)·⟨a,b⟩`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{to_local_polar, EarthModel, GeoPoint, LocalPolar};
use crate::linalg::{cosine, dot, norm};
use crate::quantizer::kmeans::seeded_rng;

/// Angles fed to the rotations: `sigma_norm ∈ [-π/2, π/2]`, `d_norm ∈ [0, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedGeo {
    pub sigma_norm: f64,
    pub d_norm: f64,
}

/// Which rotated copies enter the geo vector: `σ+`, `σ-`, `d+`, `d-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeoAttributes {
    pub sigma_plus: bool,
    pub sigma_minus: bool,
    pub d_plus: bool,
    pub d_minus: bool,
}

impl GeoAttributes {
    pub const FULL: GeoAttributes = GeoAttributes {
        sigma_plus: true,
        sigma_minus: true,
        d_plus: true,
        d_minus: true,
    };
    pub const NONE: GeoAttributes = GeoAttributes {
        sigma_plus: false,
        sigma_minus: false,
        d_plus: false,
        d_minus: false,
    };

    pub fn count(&self) -> usize {
        [self.sigma_plus, self.sigma_minus, self.d_plus, self.d_minus]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// The eight attribute combinations of the attribute ablation, in table order.
    pub fn ablation_rows() -> Vec<GeoAttributes> {
        ["d+", "d-", "d+,d-", "s+", "s-", "s+,s-", "s+,d+", "s+,s-,d+,d-"]
            .iter()
            .map(|s| s.parse().expect("static attribute list"))
            .collect()
    }
}

impl Default for GeoAttributes {
    fn default() -> Self {
        GeoAttributes::FULL
    }
}

impl fmt::Display for GeoAttributes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (self.sigma_plus, "s+"),
            (self.sigma_minus, "s-"),
            (self.d_plus, "d+"),
            (self.d_minus, "d-"),
        ];
        let parts: Vec<&str> = names.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for GeoAttributes {
    type Err = Error;

    /// Comma list of `s+`, `s-`, `d+`, `d-` (`sigma+`/`σ+` also accepted), or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") || s.eq_ignore_ascii_case("full") {
            return Ok(GeoAttributes::FULL);
        }
        if s.eq_ignore_ascii_case("none") {
            return Ok(GeoAttributes::NONE);
        }
        let mut out = GeoAttributes::NONE;
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let slot = match tok {
                "s+" | "sigma+" | "σ+" => &mut out.sigma_plus,
                "s-" | "sigma-" | "σ-" | "σ−" => &mut out.sigma_minus,
                "d+" => &mut out.d_plus,
                "d-" | "d−" => &mut out.d_minus,
                other => {
                    return Err(Error::invalid(format!(
                        "unknown geo attribute '{other}' (expected s+, s-, d+, d-)"
                    )))
                }
            };
            *slot = true;
        }
        Ok(out)
    }
}

/// Rotates every consecutive pair `(v[2i], v[2i+1])` by `theta`.
pub fn rotate_blockwise(v: &[f64], theta: f64) -> Result<Vec<f64>> {
    if !v.len().is_multiple_of(2) {
        return Err(Error::OddDimension(v.len()));
    }
    let (s, c) = theta.sin_cos();
    let mut out = Vec::with_capacity(v.len());
    for p in v.chunks_exact(2) {
        out.push(c * p[0] - s * p[1]);
        out.push(s * p[0] + c * p[1]);
    }
    Ok(out)
}

/// `[R(θ)v; R(-θ)v]`, of length `2M` and norm `√2·‖v‖`.
pub fn mirror_transform(v: &[f64], theta: f64) -> Result<Vec<f64>> {
    let mut out = rotate_blockwise(v, theta)?;
    out.extend(rotate_blockwise(v, -theta)?);
    Ok(out)
}

/// Halves the azimuth and maps distance linearly onto `[0, π]`, saturating at `d_scale_km`.
pub fn normalize_geo(polar: LocalPolar, d_scale_km: f64) -> Result<NormalizedGeo> {
    if d_scale_km.is_nan() || d_scale_km <= 0.0 || !d_scale_km.is_finite() {
        return Err(Error::invalid(format!(
            "distance scale must be positive, got {d_scale_km}"
        )));
    }
    Ok(NormalizedGeo {
        sigma_norm: polar.sigma / 2.0,
        d_norm: PI * (polar.d / d_scale_km).min(1.0),
    })
}

/// Output length of [`build_geo_vector`] for an `m`-dimensional residual.
pub fn geo_vector_dim(m: usize, attrs: GeoAttributes) -> usize {
    match attrs.count() {
        0 => 0,
        1 => 2 * m,
        n => n * m,
    }
}

/// Stacks the selected rotations of `r2` in the order `σ+, σ-, d+, d-`, with
/// `σ± = R(±α·σ_norm)` and `d± = R(±β·d_norm)`. A single selected rotation is
/// stacked with the unrotated residual instead.
pub fn build_geo_vector(
    r2: &[f64],
    geo: NormalizedGeo,
    alpha: f64,
    beta: f64,
    attrs: GeoAttributes,
) -> Result<Vec<f64>> {
    if attrs.is_empty() {
        return Err(Error::invalid("geo attribute set is empty"));
    }
    if !r2.len().is_multiple_of(2) {
        return Err(Error::OddDimension(r2.len()));
    }
    let angles = [
        (attrs.sigma_plus, alpha * geo.sigma_norm),
        (attrs.sigma_minus, -alpha * geo.sigma_norm),
        (attrs.d_plus, beta * geo.d_norm),
        (attrs.d_minus, -beta * geo.d_norm),
    ];
    let mut out = Vec::with_capacity(geo_vector_dim(r2.len(), attrs));
    for (_, theta) in angles.iter().filter(|(on, _)| *on) {
        out.extend(rotate_blockwise(r2, *theta)?);
    }
    if attrs.count() == 1 {
        out.extend_from_slice(r2);
    }
    Ok(out)
}

/// Frozen per-group reference for local polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoFrame {
    pub center: GeoPoint,
    pub d_scale_km: f64,
}

impl GeoFrame {
    pub fn normalize(&self, p: GeoPoint, earth: EarthModel) -> Result<NormalizedGeo> {
        normalize_geo(to_local_polar(self.center, p, earth), self.d_scale_km)
    }
}

/// Cosine distance `1 - cos(a, b)`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine(a, b)
}

/// Change in cosine distance caused by applying `T_θ1` to `r1` and `T_θ2` to `r2`.
pub fn delta_dcos(r1: &[f64], r2: &[f64], theta1: f64, theta2: f64) -> Result<f64> {
    let a = mirror_transform(r1, theta1)?;
    let b = mirror_transform(r2, theta2)?;
    Ok(cosine_distance(&a, &b) - cosine_distance(r1, r2))
}

/// Closed form of [`delta_dcos`]: `2·cos α·sin²(Δθ/2)`.
pub fn predicted_delta_dcos(cos_alpha: f64, delta_theta: f64) -> f64 {
    let s = (delta_theta / 2.0).sin();
    2.0 * cos_alpha * s * s
}

fn random_vector(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_angle(rng: &mut impl Rng) -> f64 {
    // (-π, π]
    PI - rng.random::<f64>() * 2.0 * PI
}

/// Worst relative error of the inner-product identity over random trials in `R^{2m}`.
/// The error is scaled by `‖[r1;r1]‖·‖[r2;r2]‖`.
pub fn verify_lemma_a1(trials: usize, m: usize, seed: u64) -> Result<f64> {
    if trials == 0 || m == 0 {
        return Err(Error::invalid("trials and m must be at least 1"));
    }
    let mut rng = seeded_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let r1 = random_vector(&mut rng, 2 * m);
        let r2 = random_vector(&mut rng, 2 * m);
        let (t1, t2) = (random_angle(&mut rng), random_angle(&mut rng));
        let lhs = dot(&mirror_transform(&r1, t1)?, &mirror_transform(&r2, t2)?);
        let dup = |r: &[f64]| [r, r].concat();
        let (d1, d2) = (dup(&r1), dup(&r2));
        let rhs = (t1 - t2).cos() * dot(&d1, &d2);
        let scale = norm(&d1) * norm(&d2);
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

/// Worst absolute error of the closed-form change in cosine distance over random trials.
pub fn verify_delta_dcos(trials: usize, m: usize, seed: u64) -> Result<f64> {
    if trials == 0 || m == 0 {
        return Err(Error::invalid("trials and m must be at least 1"));
    }
    let mut rng = seeded_rng(seed, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let r1 = random_vector(&mut rng, 2 * m);
        let r2 = random_vector(&mut rng, 2 * m);
        let (t1, t2) = (random_angle(&mut rng), random_angle(&mut rng));
        let got = delta_dcos(&r1, &r2, t1, t2)?;
        let want = predicted_delta_dcos(cosine(&r1, &r2), t1 - t2);
        worst = worst.max((got - want).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rotation_fixtures() {
        let v = [0.3, -1.2, 2.0, 0.5];
        assert_eq!(rotate_blockwise(&v, 0.0).unwrap(), v.to_vec());
        assert!(close(
            &rotate_blockwise(&[1.0, 0.0], PI / 2.0).unwrap(),
            &[0.0, 1.0],
            1e-12
        ));
        assert!(close(
            &rotate_blockwise(&[1.0, 0.0, 2.0, 0.0], PI).unwrap(),
            &[-1.0, 0.0, -2.0, 0.0],
            1e-12
        ));
        assert!(matches!(
            rotate_blockwise(&[1.0, 2.0, 3.0], 0.1),
            Err(Error::OddDimension(3))
        ));
    }

    #[test]
    fn mirror_fixtures() {
        let v = [0.3, -1.2, 2.0, 0.5];
        assert_eq!(mirror_transform(&v, 0.0).unwrap(), [v, v].concat());
        assert!(close(
            &mirror_transform(&[1.0, 0.0], PI / 2.0).unwrap(),
            &[0.0, 1.0, 0.0, -1.0],
            1e-12
        ));
        let t = mirror_transform(&v, 1.234).unwrap();
        assert!((norm(&t) / norm(&v) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalize_fixtures() {
        let g = normalize_geo(LocalPolar { d: 0.0, sigma: PI }, 5.0).unwrap();
        assert_eq!((g.sigma_norm, g.d_norm), (PI / 2.0, 0.0));
        let g = normalize_geo(LocalPolar { d: 5.0, sigma: 0.0 }, 5.0).unwrap();
        assert_eq!((g.sigma_norm, g.d_norm), (0.0, PI));
        let g = normalize_geo(
            LocalPolar {
                d: 2.5,
                sigma: -PI / 2.0,
            },
            5.0,
        )
        .unwrap();
        assert!((g.sigma_norm + PI / 4.0).abs() < 1e-15 && (g.d_norm - PI / 2.0).abs() < 1e-15);
        let g = normalize_geo(LocalPolar { d: 50.0, sigma: 0.0 }, 5.0).unwrap();
        assert_eq!(g.d_norm, PI);
        assert!(normalize_geo(LocalPolar { d: 1.0, sigma: 0.0 }, 0.0).is_err());
        assert!(normalize_geo(LocalPolar { d: 1.0, sigma: 0.0 }, -1.0).is_err());
    }

    #[test]
    fn geo_vector_layouts() {
        let r = [0.5, -0.25, 1.0, 2.0];
        let geo = NormalizedGeo {
            sigma_norm: 0.7,
            d_norm: 2.1,
        };
        let full = build_geo_vector(&r, geo, 0.5, 0.5, GeoAttributes::FULL).unwrap();
        assert_eq!(full.len(), 16);
        assert!((norm(&full) - 2.0 * norm(&r)).abs() < 1e-12);
        let mut expect = mirror_transform(&r, 0.35).unwrap();
        expect.extend(mirror_transform(&r, 1.05).unwrap());
        assert!(close(&full, &expect, 1e-15));

        let pair: GeoAttributes = "s+,s-".parse().unwrap();
        let zero = NormalizedGeo {
            sigma_norm: 0.0,
            d_norm: 1.0,
        };
        assert_eq!(build_geo_vector(&r, zero, 0.5, 0.5, pair).unwrap(), [r, r].concat());

        let single: GeoAttributes = "d-".parse().unwrap();
        let v = build_geo_vector(&r, geo, 0.5, 0.5, single).unwrap();
        assert_eq!(v.len(), 8);
        assert!(close(&v[..4], &rotate_blockwise(&r, -1.05).unwrap(), 1e-15));
        assert_eq!(&v[4..], &r);

        assert!(build_geo_vector(&r, geo, 0.5, 0.5, GeoAttributes::NONE).is_err());
        for attrs in GeoAttributes::ablation_rows() {
            let v = build_geo_vector(&r, geo, 0.5, 0.5, attrs).unwrap();
            assert_eq!(v.len(), geo_vector_dim(4, attrs));
        }
    }

    #[test]
    fn attribute_parsing_round_trips() {
        for attrs in GeoAttributes::ablation_rows() {
            assert_eq!(attrs.to_string().parse::<GeoAttributes>().unwrap(), attrs);
        }
        assert_eq!("all".parse::<GeoAttributes>().unwrap(), GeoAttributes::FULL);
        assert!("x+".parse::<GeoAttributes>().is_err());
    }

    #[test]
    fn lemma_corners() {
        let a = [0.3, -1.2, 2.0, 0.5];
        let b = [1.0, 0.4, -0.7, 0.2];
        let lhs = dot(&mirror_transform(&a, 0.9).unwrap(), &mirror_transform(&b, 0.9).unwrap());
        assert!((lhs - 2.0 * dot(&a, &b)).abs() < 1e-12);
        let ortho = dot(
            &mirror_transform(&a, PI / 2.0).unwrap(),
            &mirror_transform(&b, 0.0).unwrap(),
        );
        assert!(ortho.abs() < 1e-9);
    }

    #[test]
    fn delta_dcos_corners() {
        let a = [0.3, -1.2, 2.0, 0.5];
        assert!(delta_dcos(&a, &[1.0, 0.4, -0.7, 0.2], 0.4, 0.4).unwrap().abs() < 1e-12);
        assert!((delta_dcos(&a, &a, PI / 2.0, -PI / 2.0).unwrap() - 2.0).abs() < 1e-9);
        assert!(
            delta_dcos(&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], 0.0, 2.0)
                .unwrap()
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn verifiers_are_tight() {
        assert!(verify_lemma_a1(200, 8, 1).unwrap() <= 1e-9);
        assert!(verify_delta_dcos(200, 8, 1).unwrap() <= 1e-9);
        assert!(verify_lemma_a1(0, 8, 1).is_err());
    }
}
