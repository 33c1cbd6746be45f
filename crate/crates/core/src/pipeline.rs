//! End-to-end training and evaluation.
//!
//! `run` trains layer 1, optionally enhances the first-layer residuals with
//! geography (keyed by `j1`), trains layer 2, optionally enhances the
//! second-layer residuals (keyed by `(j1, j2)`), trains layer 3, and scores the
//! resulting identifiers. Every geo frame used is stored in the artifact so
//! [`assign`] reproduces the training identifiers and can place unseen POIs.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::codebook::FrameTable;
use crate::data_io::{CodebookArtifact, Corpus, FrameStage};
use crate::error::{Error, Result};
use crate::geo::{geo_centroid, haversine_km, EarthModel, GeoPoint};
use crate::georope::{GeoAttributes, GeoFrame, NormalizedGeo};
use crate::linalg::Matrix;
use crate::metrics::{quant_report, Assignments, QuantReport};
use crate::quantizer::hierarchy::{residuals, train_layer};
use crate::quantizer::{build_variant_vector, Coords, DScale, TrainConfig, Variant};
use crate::sid::{assemble, Sid, SidEntry, SidIndex};

/// Distance scale used when every member of a group sits on its centroid.
pub const FALLBACK_D_SCALE_KM: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct RunResult {
    pub artifact: CodebookArtifact,
    /// Identifier of each corpus record, in record order.
    pub sids: Vec<Sid>,
    pub report: QuantReport,
    pub wall_time: Duration,
    pub config: TrainConfig,
}

impl RunResult {
    pub fn assignments(&self, corpus: &Corpus) -> Assignments {
        corpus
            .records
            .iter()
            .zip(&self.sids)
            .map(|(r, s)| (r.id.clone(), *s))
            .collect()
    }
}

fn stage_keys(stage: FrameStage, c1: &[usize], c2: &[usize]) -> Vec<Vec<u32>> {
    (0..c1.len())
        .map(|i| match stage {
            FrameStage::Second => vec![c1[i] as u32],
            FrameStage::Third => vec![c1[i] as u32, c2[i] as u32],
        })
        .collect()
}

/// Geo-centroid and distance scale of every group.
pub fn build_frames(
    keys: &[Vec<u32>],
    locations: &[GeoPoint],
    d_scale: DScale,
    earth: EarthModel,
) -> Result<BTreeMap<Vec<u32>, GeoFrame>> {
    let mut groups: BTreeMap<&Vec<u32>, Vec<GeoPoint>> = BTreeMap::new();
    for (k, p) in keys.iter().zip(locations) {
        groups.entry(k).or_default().push(*p);
    }
    let mut out = BTreeMap::new();
    for (key, pts) in groups {
        let center = geo_centroid(&pts)?;
        let d_scale_km = match d_scale {
            DScale::Fixed(km) => km,
            DScale::PerCluster => {
                let max = pts.iter().map(|p| haversine_km(center, *p, earth)).fold(0.0, f64::max);
                if max > 0.0 {
                    max
                } else {
                    FALLBACK_D_SCALE_KM
                }
            }
        };
        out.insert(key.clone(), GeoFrame { center, d_scale_km });
    }
    Ok(out)
}

/// Absolute-position angles: half the longitude and the latitude shifted onto `[0, π]`.
pub fn global_geo(p: GeoPoint) -> NormalizedGeo {
    NormalizedGeo {
        sigma_norm: p.lon.to_radians() / 2.0,
        d_norm: p.lat.to_radians() + FRAC_PI_2,
    }
}

fn geo_for(
    cfg: &TrainConfig,
    frames: &FrameTable,
    stage: FrameStage,
    key: &[u32],
    p: GeoPoint,
    earth: EarthModel,
) -> Result<NormalizedGeo> {
    match cfg.coords {
        Coords::Global => Ok(global_geo(p)),
        Coords::Local => match frames.get(&(stage, key.to_vec())) {
            Some(f) => f.normalize(p, earth),
            None => {
                log::warn!("no geo frame for group {key:?}; using the POI as its own origin");
                Ok(NormalizedGeo {
                    sigma_norm: 0.0,
                    d_norm: 0.0,
                })
            }
        },
    }
}

fn enhance(
    data: &Matrix,
    keys: &[Vec<u32>],
    locations: &[GeoPoint],
    frames: &FrameTable,
    stage: FrameStage,
    cfg: &TrainConfig,
) -> Result<Matrix> {
    let earth = EarthModel::default();
    let rows: Vec<Vec<f64>> = (0..data.rows())
        .into_par_iter()
        .map(|i| {
            let geo = geo_for(cfg, frames, stage, &keys[i], locations[i], earth)?;
            build_variant_vector(data.row(i), geo, cfg)
        })
        .collect::<Result<_>>()?;
    Matrix::from_rows(&rows)
}

fn add_frames(
    table: &mut FrameTable,
    stage: FrameStage,
    keys: &[Vec<u32>],
    locations: &[GeoPoint],
    cfg: &TrainConfig,
) -> Result<()> {
    if cfg.coords == Coords::Local {
        for (k, f) in build_frames(keys, locations, cfg.d_scale, EarthModel::default())? {
            table.insert((stage, k), f);
        }
    }
    Ok(())
}

/// Trains all three layers on the corpus and scores the identifiers.
pub fn run(corpus: &Corpus, cfg: &TrainConfig) -> Result<RunResult> {
    let start = Instant::now();
    cfg.validate().map_err(|e| e.at("config"))?;
    if cfg.layer_sizes.len() != 3 {
        return Err(Error::invalid(format!(
            "the pipeline trains exactly three layers, got {} sizes",
            cfg.layer_sizes.len()
        ))
        .at("config"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no POIs").at("config"));
    }
    let x = corpus.ordered_embeddings();
    let locations: Vec<GeoPoint> = corpus.records.iter().map(|r| r.location).collect();
    let metric = cfg.variant.metric();
    let geo = cfg.variant.uses_geo();
    let mut frames = FrameTable::new();

    let l1 = train_layer(&x, cfg.layer_sizes[0], metric, &cfg.kmeans(1)).map_err(|e| e.at("layer 1"))?;
    let r1 = residuals(&x, &l1.layer, &l1.codes).map_err(|e| e.at("layer 1"))?;

    let in2 = if geo && cfg.rope_layer.at_second() {
        let keys = stage_keys(FrameStage::Second, &l1.codes, &[]);
        add_frames(&mut frames, FrameStage::Second, &keys, &locations, cfg).map_err(|e| e.at("geo frames"))?;
        enhance(&r1, &keys, &locations, &frames, FrameStage::Second, cfg).map_err(|e| e.at("geo encoding"))?
    } else {
        r1
    };
    let l2 = train_layer(&in2, cfg.layer_sizes[1], metric, &cfg.kmeans(2)).map_err(|e| e.at("layer 2"))?;
    let r2 = residuals(&in2, &l2.layer, &l2.codes).map_err(|e| e.at("layer 2"))?;

    let in3 = if geo && cfg.rope_layer.at_third() {
        let keys = stage_keys(FrameStage::Third, &l1.codes, &l2.codes);
        add_frames(&mut frames, FrameStage::Third, &keys, &locations, cfg).map_err(|e| e.at("geo frames"))?;
        enhance(&r2, &keys, &locations, &frames, FrameStage::Third, cfg).map_err(|e| e.at("geo encoding"))?
    } else {
        r2
    };
    let l3 = train_layer(&in3, cfg.layer_sizes[2], metric, &cfg.kmeans(3)).map_err(|e| e.at("layer 3"))?;

    let caps = [l1.layer.k(), l2.layer.k(), l3.layer.k()];
    let sids = (0..corpus.len())
        .map(|i| assemble(l1.codes[i], l2.codes[i], l3.codes[i], caps))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.at("assemble"))?;
    let index = SidIndex::new(corpus.records.iter().zip(&sids).map(|(r, s)| SidEntry {
        id: r.id.clone(),
        sid: *s,
        location: r.location,
    }))
    .map_err(|e| e.at("assemble"))?;
    let artifact = CodebookArtifact {
        config: cfg.clone(),
        layers: vec![l1.layer, l2.layer, l3.layer],
        frames,
        sids: index,
    };
    let assignments: Assignments = corpus
        .records
        .iter()
        .zip(&sids)
        .map(|(r, s)| (r.id.clone(), *s))
        .collect();
    let report = quant_report(&assignments, &corpus.locations(), caps).map_err(|e| e.at("report"))?;
    Ok(RunResult {
        artifact,
        sids,
        report,
        wall_time: start.elapsed(),
        config: cfg.clone(),
    })
}

/// Identifiers for the corpus under a trained codebook. For the training corpus
/// this reproduces the training identifiers exactly.
pub fn assign(artifact: &CodebookArtifact, corpus: &Corpus) -> Result<Vec<Sid>> {
    let cfg = &artifact.config;
    if artifact.layers.len() != 3 {
        return Err(Error::Format(format!(
            "codebook has {} layers, expected 3",
            artifact.layers.len()
        )));
    }
    if corpus.dim() != artifact.layers[0].dim() {
        return Err(Error::DimensionMismatch {
            expected: artifact.layers[0].dim(),
            got: corpus.dim(),
        });
    }
    let geo = cfg.variant.uses_geo();
    let earth = EarthModel::default();
    let caps = artifact.capacities();
    let [l1, l2, l3] = [&artifact.layers[0], &artifact.layers[1], &artifact.layers[2]];
    corpus
        .records
        .par_iter()
        .map(|rec| {
            let x = corpus.embeddings.row(rec.embedding_ref);
            let p = rec.location;
            let j1 = l1.assign(x)?;
            let r1 = l1.residual(x, j1)?;
            let v2 = if geo && cfg.rope_layer.at_second() {
                let g = geo_for(cfg, &artifact.frames, FrameStage::Second, &[j1 as u32], p, earth)?;
                build_variant_vector(&r1, g, cfg)?
            } else {
                r1
            };
            let j2 = l2.assign(&v2)?;
            let r2 = l2.residual(&v2, j2)?;
            let v3 = if geo && cfg.rope_layer.at_third() {
                let g = geo_for(
                    cfg,
                    &artifact.frames,
                    FrameStage::Third,
                    &[j1 as u32, j2 as u32],
                    p,
                    earth,
                )?;
                build_variant_vector(&r2, g, cfg)?
            } else {
                r2
            };
            let j3 = l3.assign(&v3)?;
            assemble(j1, j2, j3, caps)
        })
        .collect()
}

/// Scores an existing codebook against a corpus.
pub fn report(artifact: &CodebookArtifact, corpus: &Corpus) -> Result<QuantReport> {
    let sids = assign(artifact, corpus).map_err(|e| e.at("assign"))?;
    let assignments: Assignments = corpus
        .records
        .iter()
        .zip(&sids)
        .map(|(r, s)| (r.id.clone(), *s))
        .collect();
    quant_report(&assignments, &corpus.locations(), artifact.capacities())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub capacity: [usize; 3],
    #[serde(flatten)]
    pub report: QuantReport,
}

/// Runs every configuration (in parallel) and returns one row per entry, in input order.
pub fn compare(corpus: &Corpus, cfgs: &[(String, TrainConfig)]) -> Result<Vec<ReportRow>> {
    if cfgs.len() < 2 {
        return Err(Error::invalid("compare needs at least two configurations"));
    }
    cfgs.par_iter()
        .map(|(label, cfg)| {
            let res = run(corpus, cfg)?;
            Ok(ReportRow {
                label: label.clone(),
                capacity: res.artifact.capacities(),
                report: res.report,
            })
        })
        .collect()
}

/// `(alpha, beta)` pairs for a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid(pub Vec<(f64, f64)>);

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid(vec![
            (0.0, 0.0),
            (0.25, 0.25),
            (0.25, 0.5),
            (0.5, 0.25),
            (0.5, 0.5),
            (0.5, 1.0),
            (1.0, 0.5),
            (1.0, 1.0),
        ])
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::invalid("sweep grid is empty"));
        }
        if let Some(p) = self
            .0
            .iter()
            .find(|(a, b)| !(*a >= 0.0 && *b >= 0.0 && a.is_finite() && b.is_finite()))
        {
            return Err(Error::invalid(format!(
                "sweep pair {p:?} must be finite and non-negative"
            )));
        }
        Ok(())
    }
}

impl FromStr for SweepGrid {
    type Err = Error;

    /// `a,b;a,b;...`
    fn from_str(s: &str) -> Result<Self> {
        let pairs = s
            .split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                let (a, b) = p
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("sweep pair '{p}' must be 'alpha,beta'")))?;
                let num = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("'{t}' is not a number")))
                };
                Ok((num(a)?, num(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = SweepGrid(pairs);
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    #[serde(flatten)]
    pub report: QuantReport,
}

pub fn sweep_alpha_beta(corpus: &Corpus, grid: &SweepGrid, base: &TrainConfig) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    grid.0
        .par_iter()
        .map(|&(alpha, beta)| {
            let cfg = TrainConfig {
                alpha,
                beta,
                ..base.clone()
            };
            let res = run(corpus, &cfg)?;
            Ok(SweepRow {
                alpha,
                beta,
                report: res.report,
            })
        })
        .collect()
}

/// Label used for an attribute combination, e.g. `R(s+,d+)`.
pub fn attribute_label(attrs: GeoAttributes) -> String {
    format!("R({attrs})")
}

/// The eight attribute-combination configurations, Pro-GEO otherwise unchanged.
pub fn attribute_ablation(base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    GeoAttributes::ablation_rows()
        .into_iter()
        .map(|a| {
            (
                attribute_label(a),
                TrainConfig {
                    variant: Variant::ProGeo,
                    geo_attributes: a,
                    ..base.clone()
                },
            )
        })
        .collect()
}

/// One configuration per variant, sharing everything else with `base`.
pub fn variant_ablation(base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    Variant::ALL
        .iter()
        .map(|&v| {
            (
                v.name().to_string(),
                TrainConfig {
                    variant: v,
                    ..base.clone()
                },
            )
        })
        .collect()
}

const HEADERS: [&str; 8] = ["", "CUR", "ICR", "Avg. Dist.", "p90 Dist.", "p95 Dist.", "SIDs", "POIs"];

fn numeric_cells(r: &QuantReport) -> [String; 7] {
    [
        format!("{:.2}%", 100.0 * r.cur),
        format!("{:.2}%", 100.0 * r.icr),
        format!("{:.2}", r.avg_dist_km),
        format!("{:.2}", r.p90_dist_km),
        format!("{:.2}", r.p95_dist_km),
        r.group_count.to_string(),
        r.poi_count.to_string(),
    ]
}

/// Aligned text table; the first column holds `labels`.
pub fn format_table(first_header: &str, rows: &[(String, &QuantReport)]) -> String {
    let mut cells: Vec<Vec<String>> = vec![HEADERS.iter().map(|s| s.to_string()).collect()];
    cells[0][0] = first_header.to_string();
    for (label, r) in rows {
        let mut line = vec![label.clone()];
        line.extend(numeric_cells(r));
        cells.push(line);
    }
    let widths: Vec<usize> = (0..HEADERS.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.push_str("Distances in km to each SID group's geo-centroid; CUR = distinct SIDs / (K1*K2*K3).\n");
    out
}

/// One JSON object per line.
pub fn format_records<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{generate_synthetic, SynthConfig};

    fn small_corpus() -> Corpus {
        generate_synthetic(&SynthConfig {
            n_semantic_clusters: 2,
            pois_per_cluster: 40,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn cfg(variant: Variant) -> TrainConfig {
        TrainConfig {
            layer_sizes: vec![2, 2, 4],
            variant,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn assign_reproduces_training() {
        let corpus = small_corpus();
        for rope in ["second", "third", "both"] {
            for variant in Variant::ALL {
                let c = TrainConfig {
                    rope_layer: rope.parse().unwrap(),
                    ..cfg(variant)
                };
                let res = run(&corpus, &c).unwrap();
                assert_eq!(assign(&res.artifact, &corpus).unwrap(), res.sids, "{variant} {rope}");
                assert_eq!(res.sids.len(), corpus.len());
            }
        }
    }

    #[test]
    fn global_coordinates_run() {
        let corpus = small_corpus();
        let c = TrainConfig {
            coords: Coords::Global,
            ..cfg(Variant::ProGeo)
        };
        let res = run(&corpus, &c).unwrap();
        assert!(res.artifact.frames.is_empty());
        assert_eq!(assign(&res.artifact, &corpus).unwrap(), res.sids);
    }

    #[test]
    fn first_two_layers_ignore_the_geo_stage() {
        let corpus = small_corpus();
        let a = run(&corpus, &cfg(Variant::CosineOnly)).unwrap();
        let b = run(&corpus, &cfg(Variant::ProGeo)).unwrap();
        assert_eq!(a.artifact.layers[..2], b.artifact.layers[..2]);
        for (x, y) in a.sids.iter().zip(&b.sids) {
            assert_eq!((x.j1, x.j2), (y.j1, y.j2));
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let corpus = small_corpus();
        let a = run(&corpus, &cfg(Variant::ProGeo)).unwrap();
        let b = run(&corpus, &cfg(Variant::ProGeo)).unwrap();
        assert_eq!(a.artifact, b.artifact);
        assert_eq!(a.report, b.report);
    }

    #[test]
    fn frames_fall_back_for_zero_spread() {
        let keys = vec![vec![0], vec![0], vec![1]];
        let p = GeoPoint::new(10.0, 10.0).unwrap();
        let q = GeoPoint::new(10.0, 10.5).unwrap();
        let f = build_frames(&keys, &[p, q, p], DScale::PerCluster, EarthModel::default()).unwrap();
        assert_eq!(f[&vec![1]].d_scale_km, FALLBACK_D_SCALE_KM);
        assert!(f[&vec![0]].d_scale_km > 20.0);
        let f = build_frames(&keys, &[p, q, p], DScale::Fixed(7.0), EarthModel::default()).unwrap();
        assert_eq!(f[&vec![0]].d_scale_km, 7.0);
    }

    #[test]
    fn compare_keeps_input_order() {
        let corpus = small_corpus();
        let rows = compare(
            &corpus,
            &[("a".into(), cfg(Variant::ProGeo)), ("b".into(), cfg(Variant::ProGeo))],
        )
        .unwrap();
        assert_eq!(rows[0].label, "a");
        assert_eq!(rows[0].report, rows[1].report);
        assert!(compare(&corpus, &[("a".into(), cfg(Variant::ProGeo))]).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g: SweepGrid = "0,0; 0.5,0.5".parse().unwrap();
        assert_eq!(g.0, vec![(0.0, 0.0), (0.5, 0.5)]);
        assert!("".parse::<SweepGrid>().is_err());
        assert!("-1,0".parse::<SweepGrid>().is_err());
        assert_eq!(SweepGrid::default().0.len(), 8);
    }

    #[test]
    fn rejects_wrong_layer_count() {
        let corpus = small_corpus();
        let c = TrainConfig {
            layer_sizes: vec![2, 2],
            ..cfg(Variant::ProGeo)
        };
        assert!(run(&corpus, &c).is_err());
    }

    #[test]
    fn table_has_one_line_per_row() {
        let r = QuantReport {
            cur: 0.0767,
            icr: 0.5708,
            avg_dist_km: 25.41,
            p90_dist_km: 44.91,
            p95_dist_km: 75.57,
            group_count: 3,
            poi_count: 10,
        };
        let t = format_table("variant", &[("pro_geo".into(), &r)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("Avg. Dist.") && lines[0].contains("p95 Dist."));
        assert!(lines[1].contains("7.67%") && lines[1].contains("25.41"));
    }
}
