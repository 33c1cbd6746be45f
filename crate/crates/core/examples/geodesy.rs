//! Haversine distances, azimuths and local polar coordinates around a cluster centroid.
//!
//! cargo run --example geodesy

use geosid::geo::{azimuth_rad, geo_centroid, haversine_km, to_local_polar};
use geosid::{EarthModel, GeoPoint};

fn main() -> geosid::Result<()> {
    let earth = EarthModel::default();
    let shanghai = GeoPoint::new(31.2304, 121.4737)?;
    let hangzhou = GeoPoint::new(30.2741, 120.1551)?;
    let suzhou = GeoPoint::new(31.2990, 120.5853)?;

    println!(
        "Shanghai -> Hangzhou: {:.1} km",
        haversine_km(shanghai, hangzhou, earth)
    );
    println!(
        "azimuth Shanghai -> Hangzhou: {:.1} deg",
        azimuth_rad(shanghai, hangzhou).to_degrees()
    );

    let pts = [shanghai, hangzhou, suzhou];
    let center = geo_centroid(&pts)?;
    println!("centroid: ({:.4}, {:.4})", center.lat, center.lon);
    for (name, p) in ["Shanghai", "Hangzhou", "Suzhou"].iter().zip(pts) {
        let polar = to_local_polar(center, p, earth);
        println!(
            "  {name:<9} d = {:6.1} km  sigma = {:7.2} deg",
            polar.d,
            polar.sigma.to_degrees()
        );
    }
    Ok(())
}
