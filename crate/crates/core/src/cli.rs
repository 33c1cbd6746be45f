//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or validation errors, 2 on I/O errors.
//! Diagnostics go to stderr; results go to stdout or the `--out` path.
//! `GEOSID_THREADS` sets the worker count (0 or unset = all cores); results do
//! not depend on it.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data_io::{
    export_geojson, generate_synthetic, load_codebook, load_corpus_dir, save_codebook, save_corpus_dir, SynthConfig,
};
use crate::error::{Error, Result};
use crate::georope::{verify_delta_dcos, verify_lemma_a1, GeoAttributes};
use crate::pipeline::{self, ReportRow, SweepGrid};
use crate::quantizer::{Coords, DScale, RopeLayer, TrainConfig, Variant};

pub const LEMMA_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "geosid",
    version,
    about = "Proximity-aware residual quantization of POIs into semantic-geographic IDs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a three-layer codebook on a corpus and write the artifact.
    Train(TrainCmd),
    /// Assign SIDs to a corpus with a trained codebook.
    Assign(CodebookCmd),
    /// Quantization report (CUR, ICR, distance percentiles) of a codebook on a corpus.
    Report(CodebookCmd),
    /// Train several configurations on one corpus and tabulate their reports.
    Compare(CompareCmd),
    /// Train over a grid of (alpha, beta) pairs.
    Sweep(SweepCmd),
    /// Generate a synthetic corpus directory.
    Synth(SynthCmd),
    /// Numerically check the rotary inner-product identity and the cosine-distance shift.
    VerifyLemma(VerifyCmd),
    /// Write the SID assignments as a GeoJSON FeatureCollection.
    ExportGeojson(ExportCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable table.
    Table,
    /// One JSON object per line.
    Records,
}

#[derive(Args, Debug, Clone)]
pub struct TrainOpts {
    /// Codebook sizes per layer, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "512,512,512")]
    pub k: Vec<usize>,
    /// pro_geo, rq_kmeans_euclidean, cosine_only (none), concat_geo, add_geo.
    #[arg(long, default_value = "pro_geo")]
    pub variant: String,
    /// Geo attributes: comma list of s+, s-, d+, d-, or "all".
    #[arg(long, default_value = "all")]
    pub attributes: String,
    /// Scale of the azimuth rotation angle.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Scale of the distance rotation angle.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Layer whose input receives the geo encoding: second, third or both.
    #[arg(long, default_value = "third")]
    pub rope_layer: String,
    /// local (relative to group centroid) or global (absolute lat/lon).
    #[arg(long, default_value = "local")]
    pub coords: String,
    /// Distance mapped to the full rotation: "per_cluster" or kilometers.
    #[arg(long, default_value = "per_cluster")]
    pub d_scale: String,
    /// Maximum Lloyd iterations per layer.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Convergence threshold on the fraction of changed assignments.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// PRNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TrainOpts {
    pub fn to_config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            layer_sizes: self.k.clone(),
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            variant: self.variant.parse::<Variant>()?,
            geo_attributes: self.attributes.parse::<GeoAttributes>()?,
            alpha: self.alpha,
            beta: self.beta,
            rope_layer: self.rope_layer.parse::<RopeLayer>()?,
            coords: self.coords.parse::<Coords>()?,
            d_scale: self.d_scale.parse::<DScale>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    /// Corpus directory holding pois.jsonl and embeddings.bin.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Codebook artifact to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the quantization report (stdout if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct CodebookCmd {
    /// Codebook artifact written by `train`.
    #[arg(long)]
    pub codebook: PathBuf,
    /// Corpus directory holding pois.jsonl and embeddings.bin.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    /// One row per variant.
    Variants,
    /// The eight geo-attribute combinations.
    Attributes,
}

#[derive(Args, Debug)]
pub struct CompareCmd {
    /// Corpus directory holding pois.jsonl and embeddings.bin.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Variants to compare, comma separated (ignored with --ablation).
    #[arg(long, value_delimiter = ',', default_value = "pro_geo,rq_kmeans_euclidean")]
    pub variants: Vec<String>,
    /// Predefined ablation table instead of --variants.
    #[arg(long, value_enum)]
    pub ablation: Option<Ablation>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SweepCmd {
    /// Corpus directory holding pois.jsonl and embeddings.bin.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub train: TrainOpts,
    /// Pairs as "alpha,beta;alpha,beta;..." (default: eight-pair grid).
    #[arg(long)]
    pub grid: Option<String>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    /// Output corpus directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of semantic clusters.
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 100)]
    pub pois_per_cluster: usize,
    /// Geographic blobs per semantic cluster.
    #[arg(long, default_value_t = 2)]
    pub subclusters: usize,
    /// Distance between adjacent blob centers, km.
    #[arg(long, default_value_t = 40.0)]
    pub separation_km: f64,
    /// Blob radius, km.
    #[arg(long, default_value_t = 3.0)]
    pub spread_km: f64,
    /// Embedding dimension (even).
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Standard deviation of embedding noise.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Magnitude of the shared sub-type axis.
    #[arg(long, default_value_t = 0.5)]
    pub attribute_scale: f64,
    /// Opposite tilt of the sub-type axis between sibling clusters.
    #[arg(long, default_value_t = 0.2)]
    pub attribute_tilt: f64,
}

#[derive(Args, Debug)]
pub struct VerifyCmd {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Vector dimension (even); rotations act on dim/2 planes.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct ExportCmd {
    /// Codebook artifact written by `train`.
    #[arg(long)]
    pub codebook: PathBuf,
    /// Assign this corpus instead of exporting the training assignments.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// GeoJSON file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render_rows(first: &str, rows: &[ReportRow], format: Format) -> Result<String> {
    match format {
        Format::Table => {
            let refs: Vec<(String, &_)> = rows.iter().map(|r| (r.label.clone(), &r.report)).collect();
            Ok(pipeline::format_table(first, &refs))
        }
        Format::Records => pipeline::format_records(rows),
    }
}

#[derive(Serialize)]
struct AssignRecord<'a> {
    id: &'a str,
    sid: String,
    j1: u32,
    j2: u32,
    j3: u32,
}

#[derive(Serialize)]
struct VerifyRecord {
    check: &'static str,
    max_error: f64,
    tolerance: f64,
    pass: bool,
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Train(c) => {
            let cfg = c.train.to_config()?;
            let corpus = load_corpus_dir(&c.corpus).map_err(|e| e.at("load corpus"))?;
            let res = pipeline::run(&corpus, &cfg)?;
            save_codebook(&res.artifact, &c.out).map_err(|e| e.at("save codebook"))?;
            log::info!("trained {} POIs in {:.2?}", corpus.len(), res.wall_time);
            let row = ReportRow {
                label: cfg.variant.to_string(),
                capacity: res.artifact.capacities(),
                report: res.report,
            };
            emit(c.report.as_deref(), &render_rows("variant", &[row], c.format)?, stdout)?;
        }
        Command::Assign(c) => {
            let artifact = load_codebook(&c.codebook).map_err(|e| e.at("load codebook"))?;
            let corpus = load_corpus_dir(&c.corpus).map_err(|e| e.at("load corpus"))?;
            let sids = pipeline::assign(&artifact, &corpus)?;
            let mut text = String::new();
            match c.format {
                Format::Table => {
                    let w = corpus.records.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
                    text.push_str(&format!("{:<w$}  sid\n", "id"));
                    for (r, s) in corpus.records.iter().zip(&sids) {
                        text.push_str(&format!("{:<w$}  {s}\n", r.id));
                    }
                }
                Format::Records => {
                    let recs: Vec<AssignRecord> = corpus
                        .records
                        .iter()
                        .zip(&sids)
                        .map(|(r, s)| AssignRecord {
                            id: &r.id,
                            sid: s.to_string(),
                            j1: s.j1,
                            j2: s.j2,
                            j3: s.j3,
                        })
                        .collect();
                    text = pipeline::format_records(&recs)?;
                }
            }
            emit(c.out.as_deref(), &text, stdout)?;
        }
        Command::Report(c) => {
            let artifact = load_codebook(&c.codebook).map_err(|e| e.at("load codebook"))?;
            let corpus = load_corpus_dir(&c.corpus).map_err(|e| e.at("load corpus"))?;
            let report = pipeline::report(&artifact, &corpus)?;
            let row = ReportRow {
                label: artifact.config.variant.to_string(),
                capacity: artifact.capacities(),
                report,
            };
            emit(c.out.as_deref(), &render_rows("variant", &[row], c.format)?, stdout)?;
        }
        Command::Compare(c) => {
            let base = c.train.to_config()?;
            let cfgs = match c.ablation {
                Some(Ablation::Attributes) => pipeline::attribute_ablation(&base),
                Some(Ablation::Variants) => pipeline::variant_ablation(&base),
                None => c
                    .variants
                    .iter()
                    .map(|v| {
                        let variant: Variant = v.parse()?;
                        Ok((
                            variant.to_string(),
                            TrainConfig {
                                variant,
                                ..base.clone()
                            },
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let corpus = load_corpus_dir(&c.corpus).map_err(|e| e.at("load corpus"))?;
            let rows = pipeline::compare(&corpus, &cfgs)?;
            let first = if c.ablation == Some(Ablation::Attributes) {
                "attributes"
            } else {
                "variant"
            };
            emit(c.out.as_deref(), &render_rows(first, &rows, c.format)?, stdout)?;
        }
        Command::Sweep(c) => {
            let base = c.train.to_config()?;
            let grid = match &c.grid {
                Some(g) => g.parse::<SweepGrid>()?,
                None => SweepGrid::default(),
            };
            let corpus = load_corpus_dir(&c.corpus).map_err(|e| e.at("load corpus"))?;
            let rows = pipeline::sweep_alpha_beta(&corpus, &grid, &base)?;
            let text = match c.format {
                Format::Table => {
                    let refs: Vec<(String, &_)> = rows
                        .iter()
                        .map(|r| (format!("({}, {})", r.alpha, r.beta), &r.report))
                        .collect();
                    pipeline::format_table("(alpha, beta)", &refs)
                }
                Format::Records => pipeline::format_records(&rows)?,
            };
            emit(c.out.as_deref(), &text, stdout)?;
        }
        Command::Synth(c) => {
            let cfg = SynthConfig {
                n_semantic_clusters: c.clusters,
                pois_per_cluster: c.pois_per_cluster,
                geo_subclusters_per_semantic: c.subclusters,
                subcluster_separation_km: c.separation_km,
                subcluster_spread_km: c.spread_km,
                embedding_dim: c.dim,
                noise_std: c.noise,
                attribute_scale: c.attribute_scale,
                attribute_tilt: c.attribute_tilt,
                seed: c.seed,
                ..SynthConfig::default()
            };
            let corpus = generate_synthetic(&cfg)?;
            save_corpus_dir(&corpus, &c.out).map_err(|e| e.at("save corpus"))?;
            writeln!(
                stderr,
                "wrote {} POIs (dim {}) to {}",
                corpus.len(),
                corpus.dim(),
                c.out.display()
            )?;
        }
        Command::VerifyLemma(c) => {
            if c.dim == 0 || c.dim % 2 != 0 {
                return Err(Error::OddDimension(c.dim));
            }
            let m = c.dim / 2;
            let lemma = verify_lemma_a1(c.trials, m, c.seed)?;
            let shift = verify_delta_dcos(c.trials, m, c.seed)?;
            let recs = [
                VerifyRecord {
                    check: "inner_product_identity",
                    max_error: lemma,
                    tolerance: LEMMA_TOLERANCE,
                    pass: lemma <= LEMMA_TOLERANCE,
                },
                VerifyRecord {
                    check: "cosine_distance_shift",
                    max_error: shift,
                    tolerance: LEMMA_TOLERANCE,
                    pass: shift <= LEMMA_TOLERANCE,
                },
            ];
            let text = match c.format {
                Format::Table => {
                    let mut t = format!("{:<24}  {:>12}  {:>9}  result\n", "check", "max_error", "tolerance");
                    for r in &recs {
                        t.push_str(&format!(
                            "{:<24}  {:>12.3e}  {:>9.0e}  {}\n",
                            r.check,
                            r.max_error,
                            r.tolerance,
                            if r.pass { "pass" } else { "FAIL" }
                        ));
                    }
                    t
                }
                Format::Records => pipeline::format_records(&recs)?,
            };
            stdout.write_all(text.as_bytes())?;
            if !recs.iter().all(|r| r.pass) {
                writeln!(stderr, "error: identity check exceeded tolerance {LEMMA_TOLERANCE:e}")?;
                return Ok(1);
            }
        }
        Command::ExportGeojson(c) => {
            let artifact = load_codebook(&c.codebook).map_err(|e| e.at("load codebook"))?;
            match &c.corpus {
                Some(dir) => {
                    let corpus = load_corpus_dir(dir).map_err(|e| e.at("load corpus"))?;
                    let sids = pipeline::assign(&artifact, &corpus)?;
                    export_geojson(
                        corpus
                            .records
                            .iter()
                            .zip(&sids)
                            .map(|(r, s)| (r.id.as_str(), *s, r.location)),
                        &c.out,
                    )?;
                }
                None => export_geojson(
                    artifact
                        .sids
                        .entries()
                        .iter()
                        .map(|e| (e.id.as_str(), e.sid, e.location)),
                    &c.out,
                )?,
            }
        }
    }
    Ok(0)
}

fn configure_threads() {
    let Ok(v) = std::env::var("GEOSID_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) => {
            // build_global fails if a pool already exists; the existing pool is kept
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => log::warn!("ignoring GEOSID_THREADS={v:?}: not a number"),
    }
}

fn report_error(e: &Error, stderr: &mut dyn Write) {
    let mut msg = format!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        if !msg.ends_with(&s.to_string()) {
            msg.push_str(&format!(": {s}"));
        }
        src = s.source();
    }
    let _ = writeln!(stderr, "{msg}");
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    configure_threads();
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e, stderr);
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

/// Entry point for the binary: real argv, real streams, logging to stderr.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = run_with(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
