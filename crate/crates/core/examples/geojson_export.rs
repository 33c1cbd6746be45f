//! Writes a trained assignment as a GeoJSON FeatureCollection for map viewers.
//!
//! cargo run --release --example geojson_export [out.geojson]

use geosid::data_io::{export_geojson, generate_synthetic, SynthConfig};
use geosid::pipeline;
use geosid::quantizer::TrainConfig;

fn main() -> geosid::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sids.geojson".into());
    let corpus = generate_synthetic(&SynthConfig::default())?;
    let cfg = TrainConfig {
        layer_sizes: vec![4, 4, 8],
        ..TrainConfig::default()
    };
    let res = pipeline::run(&corpus, &cfg)?;
    export_geojson(
        corpus
            .records
            .iter()
            .zip(&res.sids)
            .map(|(r, s)| (r.id.as_str(), *s, r.location)),
        &out,
    )?;
    println!("wrote {} features to {out}", corpus.len());
    Ok(())
}
