use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::geo::GeoPoint;
use crate::sid::Sid;

/// FeatureCollection with one Point feature per POI; coordinates are `[lon, lat]`.
pub fn geojson_value<'a>(pois: impl IntoIterator<Item = (&'a str, Sid, GeoPoint)>) -> Value {
    let features: Vec<Value> = pois
        .into_iter()
        .map(|(id, sid, p)| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [p.lon, p.lat] },
                "properties": {
                    "id": id,
                    "sid": sid.base().to_string(),
                    "j1": sid.j1,
                    "j2": sid.j2,
                    "j3": sid.j3,
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

pub fn export_geojson<'a>(
    pois: impl IntoIterator<Item = (&'a str, Sid, GeoPoint)>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &geojson_value(pois))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_feature_is_lon_first() {
        let p = GeoPoint::new(31.5, 121.25).unwrap();
        let v = geojson_value([("a", Sid::triple(1, 2, 3), p)]);
        assert_eq!(v["type"], "FeatureCollection");
        let f = &v["features"][0];
        assert_eq!(f["geometry"]["coordinates"], json!([121.25, 31.5]));
        assert_eq!(f["properties"]["sid"], "1-2-3");
        assert_eq!(f["properties"]["j3"], 3);
        assert_eq!(v["features"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn empty_collection() {
        let v = geojson_value(std::iter::empty());
        assert_eq!(v, json!({ "type": "FeatureCollection", "features": [] }));
    }

    #[test]
    fn writes_parseable_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.geojson");
        export_geojson([("a", Sid::triple(0, 0, 0), GeoPoint::new(1.0, 2.0).unwrap())], &path).unwrap();
        let back: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back["features"][0]["properties"]["id"], "a");
    }
}
