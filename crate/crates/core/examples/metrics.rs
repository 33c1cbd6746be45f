//! Quantization and ranking metrics on a hand-built assignment.
//!
//! cargo run --example metrics

use std::collections::HashMap;

use geosid::metrics::{cur, geo_dispersion, hit_at_n, icr, ndcg_at_n, Assignments, RankingCase};
use geosid::{GeoPoint, Sid};

fn main() -> geosid::Result<()> {
    let a = Sid::triple(0, 0, 0);
    let b = Sid::triple(0, 1, 0);
    let c = Sid::triple(1, 0, 1);
    let pois = [
        ("p0", a, 31.230, 121.470),
        ("p1", a, 31.235, 121.480),
        ("p2", a, 31.228, 121.475),
        ("p3", b, 31.100, 121.300),
        ("p4", b, 31.400, 121.600),
        ("p5", c, 30.270, 120.150),
    ];
    let assignments: Assignments = pois.iter().map(|&(id, s, _, _)| (id.to_string(), s)).collect();
    let locations: HashMap<String, GeoPoint> = pois
        .iter()
        .map(|&(id, _, lat, lon)| Ok((id.to_string(), GeoPoint::new(lat, lon)?)))
        .collect::<geosid::Result<_>>()?;

    println!("ICR = {:.3}", icr(&assignments)?);
    println!("CUR = {:.4}", cur(&assignments, [2, 2, 2])?);
    let d = geo_dispersion(&assignments, &locations)?;
    println!(
        "avg {:.2} km, p90 {:.2} km, p95 {:.2} km, max {:.2} km",
        d.avg_km, d.p90_km, d.p95_km, d.max_km
    );

    let case = RankingCase {
        predicted: vec![c, b, a],
        truth: b,
    };
    for n in [1, 2, 5] {
        println!(
            "Hit@{n} = {}  NDCG@{n} = {:.4}",
            hit_at_n(&case, n),
            ndcg_at_n(&case, n)
        );
    }
    Ok(())
}
