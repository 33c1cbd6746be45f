//! Proximity-aware residual quantization of points of interest.
//!
//! A POI (content embedding plus latitude/longitude) is mapped to a
//! hierarchical identifier `(j1, j2, j3)`:
//!
//! 1. two layers of cosine residual k-means over the embedding,
//! 2. a geographic encoding of the second-layer residual: each POI's distance
//!    and azimuth from its group's geo-centroid become rotation angles applied
//!    blockwise to the residual, forward and reverse,
//! 3. a third k-means layer over the encoded vectors.
//!
//! POIs that are semantically close but geographically far apart are pushed
//! into different third-layer codes.
//!
//! ```
//! use geosid::data_io::{generate_synthetic, SynthConfig};
//! use geosid::pipeline;
//! use geosid::quantizer::TrainConfig;
//!
//! let corpus = generate_synthetic(&SynthConfig { pois_per_cluster: 20, ..SynthConfig::default() })?;
//! let cfg = TrainConfig { layer_sizes: vec![4, 2, 4], seed: 7, ..TrainConfig::default() };
//! let run = pipeline::run(&corpus, &cfg)?;
//! assert_eq!(run.sids.len(), corpus.len());
//! assert_eq!(pipeline::assign(&run.artifact, &corpus)?, run.sids);
//! # Ok::<(), geosid::Error>(())
//! ```

pub mod cli;
pub mod data_io;
pub mod error;
pub mod geo;
pub mod georope;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod quantizer;
pub mod sid;

pub use error::{Error, Result};
pub use geo::{EarthModel, GeoPoint, LocalPolar};
pub use linalg::Matrix;
pub use sid::Sid;
