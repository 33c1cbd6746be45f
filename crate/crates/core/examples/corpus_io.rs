//! Builds a tiny corpus by hand, writes it as `pois.jsonl` + `embeddings.bin`,
//! and reads it back.
//!
//! cargo run --example corpus_io

use geosid::data_io::{load_corpus_dir, save_corpus_dir, Corpus, PoiRecord};
use geosid::{GeoPoint, Matrix};

fn main() -> geosid::Result<()> {
    let records = vec![
        PoiRecord {
            id: "bakery".into(),
            location: GeoPoint::new(48.8566, 2.3522)?,
            embedding_ref: 0,
            category: Some("food".into()),
        },
        PoiRecord {
            id: "library".into(),
            location: GeoPoint::new(48.8606, 2.3376)?,
            embedding_ref: 1,
            category: None,
        },
    ];
    let embeddings = Matrix::from_rows(&[[0.5, -0.25, 1.0, 0.0], [0.0, 1.0, -0.5, 0.75]])?;
    let corpus = Corpus::new(records, embeddings)?;

    let dir = std::env::temp_dir().join("geosid-corpus-example");
    save_corpus_dir(&corpus, &dir)?;
    let back = load_corpus_dir(&dir)?;
    assert_eq!(back, corpus);
    println!(
        "round-tripped {} POIs of dimension {} via {}",
        back.len(),
        back.dim(),
        dir.display()
    );
    print!("{}", std::fs::read_to_string(dir.join("pois.jsonl"))?);
    Ok(())
}
