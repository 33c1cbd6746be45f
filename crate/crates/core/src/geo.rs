//! Geodesy on a spherical Earth: haversine distance, initial azimuth, the
//! arithmetic geo-centroid of a cluster, and per-POI local polar coordinates.
//!
//! Degrees appear only in [`GeoPoint`]; everything else is radians or kilometers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0;

/// Latitude/longitude in degrees, latitude in [-90, 90], longitude in (-180, 180].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validates latitude and wraps longitude into (-180, 180].
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate ({lat}, {lon})")));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_lon(lon),
        })
    }

    fn radians(&self) -> (f64, f64) {
        (self.lat.to_radians(), self.lon.to_radians())
    }
}

/// Wraps a longitude in degrees into (-180, 180].
pub fn normalize_lon(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l <= -180.0 {
        l += 360.0;
    } else if l > 180.0 {
        l -= 360.0;
    }
    l
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarthModel {
    pub radius_km: f64,
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self> {
        if radius_km > 0.0 && radius_km.is_finite() {
            Ok(EarthModel { radius_km })
        } else {
            Err(Error::invalid(format!(
                "earth radius must be positive, got {radius_km}"
            )))
        }
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel {
            radius_km: MEAN_EARTH_RADIUS_KM,
        }
    }
}

/// Distance `d` (km) and azimuth `sigma` (radians, (-π, π]) of a POI relative to a center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPolar {
    pub d: f64,
    pub sigma: f64,
}

pub fn haversine_km(a: GeoPoint, b: GeoPoint, earth: EarthModel) -> f64 {
    let (p1, l1) = a.radians();
    let (p2, l2) = b.radians();
    let sp = ((p2 - p1) / 2.0).sin();
    let sl = ((l2 - l1) / 2.0).sin();
    let h = (sp * sp + p1.cos() * p2.cos() * sl * sl).clamp(0.0, 1.0);
    2.0 * earth.radius_km * h.sqrt().asin()
}

/// Initial bearing from `center` to `p`: 0 is north, +π/2 is east.
pub fn azimuth_rad(center: GeoPoint, p: GeoPoint) -> f64 {
    let (p0, l0) = center.radians();
    let (p1, l1) = p.radians();
    let dl = l1 - l0;
    let x = p0.cos() * p1.sin() - p0.sin() * p1.cos() * dl.cos();
    let y = dl.sin() * p1.cos();
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let s = y.atan2(x);
    // atan2 can return exactly -π; fold it to the principal (-π, π] range
    if s <= -PI {
        s + 2.0 * PI
    } else {
        s
    }
}

/// Arithmetic mean of latitudes and of longitudes.
///
/// Clusters straddling the antimeridian get a meaningless mean; a warning is
/// logged when the longitude spread exceeds 180 degrees.
pub fn geo_centroid(points: &[GeoPoint]) -> Result<GeoPoint> {
    if points.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let n = points.len() as f64;
    let (mut lat, mut lon) = (0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lat += p.lat;
        lon += p.lon;
        lo = lo.min(p.lon);
        hi = hi.max(p.lon);
    }
    if hi - lo > 180.0 {
        log::warn!(
            "cluster of {} points spans {:.1} degrees of longitude; centroid may be meaningless",
            points.len(),
            hi - lo
        );
    }
    Ok(GeoPoint {
        lat: (lat / n).clamp(-90.0, 90.0),
        lon: normalize_lon(lon / n),
    })
}

pub fn to_local_polar(center: GeoPoint, p: GeoPoint, earth: EarthModel) -> LocalPolar {
    LocalPolar {
        d: haversine_km(center, p, earth),
        sigma: azimuth_rad(center, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    const E: EarthModel = EarthModel {
        radius_km: MEAN_EARTH_RADIUS_KM,
    };

    #[test]
    fn haversine_fixtures() {
        assert_eq!(haversine_km(pt(0.0, 0.0), pt(0.0, 0.0), E), 0.0);
        let deg = MEAN_EARTH_RADIUS_KM * PI / 180.0;
        assert!((haversine_km(pt(0.0, 0.0), pt(0.0, 1.0), E) - deg).abs() < 1e-9);
        assert!((haversine_km(pt(0.0, 0.0), pt(0.0, 1.0), E) - 111.1949).abs() < 1e-3);
        let quarter = MEAN_EARTH_RADIUS_KM * PI / 2.0;
        assert!((haversine_km(pt(0.0, 0.0), pt(90.0, 0.0), E) - quarter).abs() < 1e-9);
        assert!((haversine_km(pt(0.0, 0.0), pt(90.0, 0.0), E) - 10007.543).abs() < 1e-2);
    }

    #[test]
    fn antipodes_hit_the_upper_bound() {
        let d = haversine_km(pt(0.0, 0.0), pt(0.0, 180.0), E);
        assert!((d - PI * MEAN_EARTH_RADIUS_KM).abs() < 1e-6);
    }

    #[test]
    fn azimuth_conventions() {
        assert!(azimuth_rad(pt(0.0, 0.0), pt(1.0, 0.0)).abs() < 1e-12);
        assert!((azimuth_rad(pt(0.0, 0.0), pt(0.0, 1.0)) - PI / 2.0).abs() < 1e-12);
        assert!((azimuth_rad(pt(0.0, 0.0), pt(0.0, -1.0)) + PI / 2.0).abs() < 1e-12);
        assert_eq!(azimuth_rad(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
        // due south: atan2(+0, negative) is +π
        assert!((azimuth_rad(pt(0.0, 0.0), pt(-1.0, 0.0)) - PI).abs() < 1e-12);
    }

    #[test]
    fn centroid_cases() {
        assert_eq!(geo_centroid(&[pt(10.0, 20.0)]).unwrap(), pt(10.0, 20.0));
        assert_eq!(geo_centroid(&[pt(0.0, 0.0), pt(2.0, 4.0)]).unwrap(), pt(1.0, 2.0));
        assert!(matches!(geo_centroid(&[]), Err(Error::EmptyCluster)));
    }

    #[test]
    fn local_polar_composes_distance_and_azimuth() {
        let c = pt(0.0, 0.0);
        assert_eq!(to_local_polar(c, c, E), LocalPolar { d: 0.0, sigma: 0.0 });
        let east = to_local_polar(c, pt(0.0, 1.0), E);
        assert!((east.d - 111.1949).abs() < 1e-3 && (east.sigma - PI / 2.0).abs() < 1e-3);
        let north = to_local_polar(c, pt(1.0, 0.0), E);
        assert!((north.d - 111.1949).abs() < 1e-3 && north.sigma.abs() < 1e-3);
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(normalize_lon(-180.0), 180.0);
        assert_eq!(normalize_lon(190.0), -170.0);
        assert_eq!(normalize_lon(180.0), 180.0);
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }
}
