use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::linalg::Matrix;

use super::embeddings::{read_embeddings, write_embeddings};
use super::{EMBEDDINGS_FILE, POIS_FILE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub id: String,
    pub location: GeoPoint,
    /// Row of this POI in the embedding matrix.
    pub embedding_ref: usize,
    pub category: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PoiLine {
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
}

/// Validated POI records plus their embedding matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub records: Vec<PoiRecord>,
    pub embeddings: Matrix,
}

impl Corpus {
    /// Checks unique ids, in-range embedding rows, finite values and an even dimension.
    pub fn new(records: Vec<PoiRecord>, embeddings: Matrix) -> Result<Self> {
        if !embeddings.dim().is_multiple_of(2) {
            return Err(Error::OddDimension(embeddings.dim()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::record(&r.id, "duplicate POI id"));
            }
            if r.embedding_ref >= embeddings.rows() {
                return Err(Error::record(
                    &r.id,
                    format!(
                        "embedding row {} out of range ({} rows)",
                        r.embedding_ref,
                        embeddings.rows()
                    ),
                ));
            }
            if let Some(bad) = embeddings.row(r.embedding_ref).iter().find(|v| !v.is_finite()) {
                return Err(Error::record(&r.id, format!("non-finite embedding value {bad}")));
            }
            if !(-90.0..=90.0).contains(&r.location.lat) || !(r.location.lon > -180.0 && r.location.lon <= 180.0) {
                return Err(Error::record(&r.id, "coordinates out of range"));
            }
        }
        Ok(Corpus { records, embeddings })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim()
    }

    /// Embeddings in record order.
    pub fn ordered_embeddings(&self) -> Matrix {
        let mut m = Matrix::zeros(0, self.dim());
        for r in &self.records {
            m.push_row(self.embeddings.row(r.embedding_ref))
                .expect("uniform dimension");
        }
        m
    }

    pub fn locations(&self) -> HashMap<String, GeoPoint> {
        self.records.iter().map(|r| (r.id.clone(), r.location)).collect()
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<PoiLine> {
    serde_json::from_str(line).map_err(|e| Error::record(format!("line {lineno}"), e.to_string()))
}

pub fn read_pois(path: impl AsRef<Path>) -> Result<Vec<PoiRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_line(&line, i + 1)?;
        let location = GeoPoint::new(p.lat, p.lon).map_err(|e| Error::record(&p.id, e.to_string()))?;
        if p.lon == -180.0 {
            log::debug!("POI {}: longitude -180 normalized to 180", p.id);
        }
        out.push(PoiRecord {
            embedding_ref: out.len(),
            id: p.id,
            location,
            category: p.category,
        });
    }
    Ok(out)
}

pub fn write_pois(path: impl AsRef<Path>, records: &[PoiRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let line = PoiLine {
            id: r.id.clone(),
            lat: r.location.lat,
            lon: r.location.lon,
            category: r.category.clone(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_corpus(poi_path: impl AsRef<Path>, embedding_path: impl AsRef<Path>) -> Result<Corpus> {
    let records = read_pois(poi_path)?;
    let embeddings = read_embeddings(embedding_path)?;
    if records.len() != embeddings.rows() {
        return Err(Error::Format(format!(
            "{} POI records but {} embedding rows",
            records.len(),
            embeddings.rows()
        )));
    }
    Corpus::new(records, embeddings)
}

/// Writes records in order; the embedding file is written in record order too,
/// so reloading assigns `embedding_ref` = line number.
pub fn save_corpus(corpus: &Corpus, poi_path: impl AsRef<Path>, embedding_path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<PoiRecord> = corpus
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| PoiRecord {
            embedding_ref: i,
            ..r.clone()
        })
        .collect();
    write_pois(poi_path, &records)?;
    write_embeddings(embedding_path, &corpus.ordered_embeddings())
}

pub fn load_corpus_dir(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    load_corpus(dir.join(POIS_FILE), dir.join(EMBEDDINGS_FILE))
}

pub fn save_corpus_dir(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    save_corpus(corpus, dir.join(POIS_FILE), dir.join(EMBEDDINGS_FILE))
}
