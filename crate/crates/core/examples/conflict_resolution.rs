//! Resolving a shared SID back to concrete POIs: nearest to the user, a seeded
//! random pick, or a fourth code that makes every identifier unique.
//!
//! cargo run --example conflict_resolution

use geosid::sid::{hard_code_layer4, resolve_closest, resolve_random, Sid, SidEntry, SidIndex};
use geosid::GeoPoint;

fn main() -> geosid::Result<()> {
    let shared = Sid::triple(3, 1, 7);
    let places = [
        ("cafe-bund", 31.2400, 121.4900),
        ("cafe-jingan", 31.2290, 121.4460),
        ("cafe-xuhui", 31.1880, 121.4370),
        ("cafe-pudong", 31.2350, 121.5050),
    ];
    let mut entries: Vec<SidEntry> = places
        .iter()
        .map(|&(id, lat, lon)| {
            Ok(SidEntry {
                id: id.into(),
                sid: shared,
                location: GeoPoint::new(lat, lon)?,
            })
        })
        .collect::<geosid::Result<_>>()?;
    entries.push(SidEntry {
        id: "museum".into(),
        sid: Sid::triple(0, 2, 2),
        location: GeoPoint::new(31.2280, 121.4750)?,
    });
    let index = SidIndex::new(entries)?;

    let user = GeoPoint::new(31.2380, 121.4950)?;
    println!("{shared} is shared by {} POIs", index.group(&shared)?.len());
    println!(
        "closest two to the user: {:?}",
        resolve_closest(&index, &shared, user, 2)?
    );
    println!("seeded random pick: {}", resolve_random(&index, &shared, 42)?);
    for (id, sid) in hard_code_layer4(&index) {
        println!("  {id:<12} {sid}");
    }
    Ok(())
}
