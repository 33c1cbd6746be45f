//! Pro-GEO against the Euclidean RQ-Kmeans baseline and the other variants on
//! synthetic corpora where each semantic cluster is split across two cities 40 km apart.
//!
//! cargo run --release --example ablation_compare

use geosid::data_io::{generate_synthetic, SynthConfig};
use geosid::pipeline::{self, format_table};
use geosid::quantizer::TrainConfig;

fn main() -> geosid::Result<()> {
    for seed in 0..5 {
        let corpus = generate_synthetic(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })?;
        let base = TrainConfig {
            layer_sizes: vec![4, 4, 8],
            seed,
            ..TrainConfig::default()
        };
        let rows = pipeline::compare(&corpus, &pipeline::variant_ablation(&base))?;
        let pro = rows[0].report.avg_dist_km;
        let euc = rows[1].report.avg_dist_km;
        println!("seed {seed}: Pro-GEO / RQ-Kmeans avg distance = {:.3}", pro / euc);
        let refs: Vec<(String, _)> = rows.iter().map(|r| (r.label.clone(), &r.report)).collect();
        println!("{}", format_table("variant", &refs));
    }
    Ok(())
}
