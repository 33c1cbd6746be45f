//! Codebook artifact.
//!
//! ```text
//! "GSCB" | u32 version | u32 header_len | header (key=value lines, UTF-8)
//! u32 layer_count, per layer: u8 metric | u32 k | u32 dim | k·dim f32
//! u32 frame_count, per frame: u8 stage | u32 key_len | key_len u32 | f64 lat | f64 lon | f64 d_scale_km
//! u32 sid_count,  per POI:   u32 id_len | id bytes | u32 j1 | u32 j2 | u32 j3 | f64 lat | f64 lon
//! u64 FNV-1a of all preceding bytes
//! ```
//! All integers and floats little-endian.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::georope::GeoFrame;
use crate::linalg::Matrix;
use crate::quantizer::{CodebookLayer, Metric, TrainConfig};
use crate::sid::{Sid, SidEntry, SidIndex};

use super::{seal, unseal, ByteReader, ByteWriter};

pub const MAGIC: &[u8; 4] = b"GSCB";
pub const VERSION: u32 = 1;

/// Layer whose input a frame set was used to enhance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameStage {
    /// Frames keyed by `(j1)`, applied to first-layer residuals.
    Second,
    /// Frames keyed by `(j1, j2)`, applied to second-layer residuals.
    Third,
}

impl FrameStage {
    fn tag(self) -> u8 {
        match self {
            FrameStage::Second => 2,
            FrameStage::Third => 3,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        match t {
            2 => Ok(FrameStage::Second),
            3 => Ok(FrameStage::Third),
            _ => Err(Error::Format(format!("unknown frame stage tag {t}"))),
        }
    }
}

pub type FrameTable = BTreeMap<(FrameStage, Vec<u32>), GeoFrame>;

#[derive(Clone, Debug, PartialEq)]
pub struct CodebookArtifact {
    pub config: TrainConfig,
    pub layers: Vec<CodebookLayer>,
    pub frames: FrameTable,
    pub sids: SidIndex,
}

impl CodebookArtifact {
    pub fn capacities(&self) -> [usize; 3] {
        let k = |i: usize| self.layers.get(i).map(|l| l.k()).unwrap_or(0);
        [k(0), k(1), k(2)]
    }

    pub fn frame(&self, stage: FrameStage, key: &[u32]) -> Option<&GeoFrame> {
        self.frames.get(&(stage, key.to_vec()))
    }
}

fn config_header(cfg: &TrainConfig) -> String {
    let sizes: Vec<String> = cfg.layer_sizes.iter().map(|k| k.to_string()).collect();
    format!(
        "format_version={VERSION}\nvariant={}\nlayer_sizes={}\nmax_iters={}\ntol={}\nseed={}\n\
         geo_attributes={}\nalpha={}\nbeta={}\nrope_layer={}\ncoords={}\nd_scale={}\n",
        cfg.variant,
        sizes.join(","),
        cfg.max_iters,
        cfg.tol,
        cfg.seed,
        cfg.geo_attributes,
        cfg.alpha,
        cfg.beta,
        cfg.rope_layer,
        cfg.coords,
        cfg.d_scale,
    )
}

fn parse_header(text: &str) -> Result<TrainConfig> {
    let mut kv = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header line '{line}'")))?;
        kv.insert(k.trim(), v.trim());
    }
    let get = |k: &str| {
        kv.get(k)
            .copied()
            .ok_or_else(|| Error::Format(format!("header missing '{k}'")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("header '{k}' is not a number")))
    };
    let int = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Format(format!("header '{k}' is not an integer")))
    };
    let layer_sizes = get("layer_sizes")?
        .split(',')
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Format("header 'layer_sizes' malformed".into()))?;
    Ok(TrainConfig {
        layer_sizes,
        max_iters: int("max_iters")? as usize,
        tol: num("tol")?,
        seed: int("seed")?,
        variant: get("variant")?.parse()?,
        geo_attributes: get("geo_attributes")?.parse()?,
        alpha: num("alpha")?,
        beta: num("beta")?,
        rope_layer: get("rope_layer")?.parse()?,
        coords: get("coords")?.parse()?,
        d_scale: get("d_scale")?.parse()?,
    })
}

pub fn encode_codebook(a: &CodebookArtifact) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u32(VERSION);
    let header = config_header(&a.config);
    w.str(&header)?;

    w.len_u32(a.layers.len())?;
    for layer in &a.layers {
        w.u8(match layer.metric {
            Metric::Cosine => 0,
            Metric::Euclidean => 1,
        });
        w.len_u32(layer.k())?;
        w.len_u32(layer.dim())?;
        for &v in layer.centroids.as_flat() {
            let f = v as f32;
            if f as f64 != v {
                return Err(Error::Format(
                    "centroid value is not exactly representable as f32".into(),
                ));
            }
            w.f32(f);
        }
    }

    w.len_u32(a.frames.len())?;
    for ((stage, key), frame) in &a.frames {
        w.u8(stage.tag());
        w.len_u32(key.len())?;
        for &j in key {
            w.u32(j);
        }
        w.f64(frame.center.lat);
        w.f64(frame.center.lon);
        w.f64(frame.d_scale_km);
    }

    w.len_u32(a.sids.len())?;
    for e in a.sids.entries() {
        w.str(&e.id)?;
        for j in e.sid.codes() {
            w.u32(j);
        }
        w.f64(e.location.lat);
        w.f64(e.location.lon);
    }
    Ok(seal(w.buf))
}

pub fn decode_codebook(bytes: &[u8]) -> Result<CodebookArtifact> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a codebook artifact (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: VERSION,
        });
    }
    let body = unseal(bytes)?;
    let mut r = ByteReader::new(&body[8..]);
    let config = parse_header(&r.str()?)?;

    let n_layers = r.len()?;
    let mut layers = Vec::with_capacity(n_layers.min(16));
    for _ in 0..n_layers {
        let metric = match r.u8()? {
            0 => Metric::Cosine,
            1 => Metric::Euclidean,
            t => return Err(Error::Format(format!("unknown metric tag {t}"))),
        };
        let k = r.len()?;
        let dim = r.len()?;
        let count = k
            .checked_mul(dim)
            .filter(|&c| c.checked_mul(4).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| Error::Format("layer block truncated".into()))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(r.f32()? as f64);
        }
        layers.push(CodebookLayer::new(Matrix::from_flat(dim, data)?, metric)?);
    }

    let n_frames = r.len()?;
    let mut frames = FrameTable::new();
    for _ in 0..n_frames {
        let stage = FrameStage::from_tag(r.u8()?)?;
        let key_len = r.len()?;
        let mut key = Vec::with_capacity(key_len.min(8));
        for _ in 0..key_len {
            key.push(r.u32()?);
        }
        let (lat, lon, d_scale_km) = (r.f64()?, r.f64()?, r.f64()?);
        let center = GeoPoint::new(lat, lon)?;
        frames.insert((stage, key), GeoFrame { center, d_scale_km });
    }

    let n_sids = r.len()?;
    let mut entries = Vec::with_capacity(n_sids.min(1 << 20));
    for _ in 0..n_sids {
        let id = r.str()?;
        let sid = Sid::triple(r.u32()?, r.u32()?, r.u32()?);
        let location = GeoPoint::new(r.f64()?, r.f64()?)?;
        entries.push(SidEntry { id, sid, location });
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bytes after SID index",
            r.remaining()
        )));
    }
    Ok(CodebookArtifact {
        config,
        layers,
        frames,
        sids: SidIndex::new(entries)?,
    })
}

pub fn save_codebook(artifact: &CodebookArtifact, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_codebook(artifact)?)?;
    Ok(())
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<CodebookArtifact> {
    decode_codebook(&fs::read(path)?)
}
