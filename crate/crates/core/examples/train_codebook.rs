//! Trains a three-layer codebook on a synthetic corpus, saves it, reloads it and
//! re-assigns every POI.
//!
//! cargo run --release --example train_codebook

use geosid::data_io::{generate_synthetic, load_codebook, save_codebook, SynthConfig};
use geosid::pipeline::{self, format_table};
use geosid::quantizer::TrainConfig;

fn main() -> geosid::Result<()> {
    let corpus = generate_synthetic(&SynthConfig::default())?;
    let cfg = TrainConfig {
        layer_sizes: vec![4, 4, 8],
        ..TrainConfig::default()
    };
    let res = pipeline::run(&corpus, &cfg)?;
    println!("trained {} POIs in {:.2?}", corpus.len(), res.wall_time);
    print!("{}", format_table("variant", &[(cfg.variant.to_string(), &res.report)]));

    let dir = std::env::temp_dir().join("geosid-train-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("codebook.bin");
    save_codebook(&res.artifact, &path)?;
    let loaded = load_codebook(&path)?;
    let again = pipeline::assign(&loaded, &corpus)?;
    assert_eq!(again, res.sids);
    println!("reloaded {} and reproduced all {} SIDs", path.display(), again.len());
    for (r, s) in corpus.records.iter().zip(&res.sids).take(5) {
        println!("  {}  {s}", r.id);
    }
    Ok(())
}
