//! Sweep of the rotation scales (alpha, beta) over the default eight-pair grid.
//!
//! cargo run --release --example alpha_beta_sweep [seed]

use geosid::data_io::{generate_synthetic, SynthConfig};
use geosid::pipeline::{self, format_table, SweepGrid};
use geosid::quantizer::TrainConfig;

fn main() -> geosid::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let corpus = generate_synthetic(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let base = TrainConfig {
        layer_sizes: vec![4, 4, 8],
        seed,
        ..TrainConfig::default()
    };
    let rows = pipeline::sweep_alpha_beta(&corpus, &SweepGrid::default(), &base)?;
    let refs: Vec<(String, _)> = rows
        .iter()
        .map(|r| (format!("({}, {})", r.alpha, r.beta), &r.report))
        .collect();
    print!("{}", format_table("(alpha, beta)", &refs));
    Ok(())
}
