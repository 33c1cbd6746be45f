//! Semantic-geographic identifiers and conflict resolution for POIs that share one.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, EarthModel, GeoPoint};
use crate::quantizer::kmeans::seeded_rng;

/// Code triple `(j1, j2, j3)`, optionally extended by a layer-4 ordinal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sid {
    pub j1: u32,
    pub j2: u32,
    pub j3: u32,
    pub j4: Option<u32>,
}

impl Sid {
    pub const fn triple(j1: u32, j2: u32, j3: u32) -> Self {
        Sid { j1, j2, j3, j4: None }
    }

    pub fn codes(&self) -> [u32; 3] {
        [self.j1, self.j2, self.j3]
    }

    /// The same identifier without its layer-4 ordinal.
    pub fn base(&self) -> Sid {
        Sid::triple(self.j1, self.j2, self.j3)
    }
}

impl fmt::Display for Sid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.j1, self.j2, self.j3)?;
        if let Some(j4) = self.j4 {
            write!(f, "-{j4}")?;
        }
        Ok(())
    }
}

impl FromStr for Sid {
    type Err = Error;

    /// Parses `j1-j2-j3` or `j1-j2-j3-j4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .trim()
            .split(['-', ','])
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("malformed SID '{s}'")))?;
        match parts[..] {
            [a, b, c] => Ok(Sid::triple(a, b, c)),
            [a, b, c, d] => Ok(Sid {
                j1: a,
                j2: b,
                j3: c,
                j4: Some(d),
            }),
            _ => Err(Error::invalid(format!("malformed SID '{s}'"))),
        }
    }
}

/// Builds a triple, checking each code against its layer capacity.
pub fn assemble(j1: usize, j2: usize, j3: usize, capacities: [usize; 3]) -> Result<Sid> {
    for (layer, (&j, &cap)) in [j1, j2, j3].iter().zip(&capacities).enumerate() {
        if j >= cap || j > u32::MAX as usize {
            return Err(Error::CodeOutOfRange {
                layer: layer + 1,
                index: j,
                capacity: cap,
            });
        }
    }
    Ok(Sid::triple(j1 as u32, j2 as u32, j3 as u32))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidEntry {
    pub id: String,
    pub sid: Sid,
    pub location: GeoPoint,
}

/// Triple → POIs sharing it (sorted by id), and POI id → triple.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SidIndex {
    entries: Vec<SidEntry>,
    groups: BTreeMap<Sid, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

impl SidIndex {
    /// Entries are stored sorted by POI id; ids must be unique.
    pub fn new(entries: impl IntoIterator<Item = SidEntry>) -> Result<Self> {
        let mut entries: Vec<SidEntry> = entries
            .into_iter()
            .map(|mut e| {
                e.sid = e.sid.base();
                e
            })
            .collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let mut by_id = HashMap::with_capacity(entries.len());
        let mut groups: BTreeMap<Sid, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(Error::record(&e.id, "duplicate POI id in SID index"));
            }
            groups.entry(e.sid).or_default().push(i);
        }
        Ok(SidIndex { entries, groups, by_id })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries in id order.
    pub fn entries(&self) -> &[SidEntry] {
        &self.entries
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> impl Iterator<Item = (&Sid, Vec<&SidEntry>)> + '_ {
        self.groups
            .iter()
            .map(move |(s, idx)| (s, idx.iter().map(|&i| &self.entries[i]).collect()))
    }

    /// Members of a triple, sorted by id.
    pub fn group(&self, sid: &Sid) -> Result<Vec<&SidEntry>> {
        self.groups
            .get(&sid.base())
            .map(|idx| idx.iter().map(|&i| &self.entries[i]).collect())
            .ok_or_else(|| Error::EmptySidGroup(sid.base().to_string()))
    }

    pub fn sid_of(&self, id: &str) -> Option<Sid> {
        self.by_id.get(id).map(|&i| self.entries[i].sid)
    }
}

/// Extends every triple with the POI's ordinal inside its group, in id order.
pub fn hard_code_layer4(index: &SidIndex) -> BTreeMap<String, Sid> {
    let mut out = BTreeMap::new();
    for (sid, members) in index.groups() {
        for (ord, e) in members.iter().enumerate() {
            out.insert(
                e.id.clone(),
                Sid {
                    j4: Some(ord as u32),
                    ..*sid
                },
            );
        }
    }
    out
}

/// Up to `k` members of `sid` ordered by distance to `user`, ties by id.
pub fn resolve_closest(index: &SidIndex, sid: &Sid, user: GeoPoint, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let earth = EarthModel::default();
    let mut members: Vec<(f64, &str)> = index
        .group(sid)?
        .into_iter()
        .map(|e| (haversine_km(user, e.location, earth), e.id.as_str()))
        .collect();
    members.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(members.into_iter().take(k).map(|(_, id)| id.to_string()).collect())
}

/// Uniform pick among the members of `sid`, fixed by `seed`.
pub fn resolve_random(index: &SidIndex, sid: &Sid, seed: u64) -> Result<String> {
    let members = index.group(sid)?;
    let mut rng = seeded_rng(seed, 0);
    Ok(members[rng.random_range(0..members.len())].id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, sid: Sid, lat: f64, lon: f64) -> SidEntry {
        SidEntry {
            id: id.into(),
            sid,
            location: GeoPoint::new(lat, lon).unwrap(),
        }
    }

    const A: Sid = Sid::triple(0, 0, 0);
    const B: Sid = Sid::triple(1, 0, 0);

    #[test]
    fn assemble_bounds() {
        let caps = [512, 512, 512];
        assert_eq!(assemble(0, 0, 0, caps).unwrap(), A);
        assert_eq!(assemble(511, 511, 511, caps).unwrap(), Sid::triple(511, 511, 511));
        assert!(matches!(
            assemble(512, 0, 0, caps),
            Err(Error::CodeOutOfRange { layer: 1, .. })
        ));
        assert!(assemble(0, 0, 2, [4, 4, 2]).is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [A, Sid { j4: Some(7), ..B }] {
            assert_eq!(s.to_string().parse::<Sid>().unwrap(), s);
        }
        assert!("1-2".parse::<Sid>().is_err());
    }

    #[test]
    fn layer4_follows_id_order() {
        let idx = SidIndex::new([
            entry("p_b", A, 0.0, 0.0),
            entry("p_a", A, 0.0, 0.0),
            entry("q", B, 0.0, 0.0),
        ])
        .unwrap();
        let l4 = hard_code_layer4(&idx);
        assert_eq!(l4["p_a"].j4, Some(0));
        assert_eq!(l4["p_b"].j4, Some(1));
        assert_eq!(l4["q"].j4, Some(0));
        assert_eq!(l4["q"].base(), B);
    }

    #[test]
    fn closest_match() {
        let idx = SidIndex::new([
            entry("x", A, 0.0, 0.0),
            entry("y", A, 0.0, 1.0),
            entry("z", B, 5.0, 5.0),
        ])
        .unwrap();
        let user = GeoPoint::new(0.0, 0.9).unwrap();
        assert_eq!(resolve_closest(&idx, &A, user, 5).unwrap(), vec!["y", "x"]);
        assert_eq!(resolve_closest(&idx, &A, user, 1).unwrap(), vec!["y"]);
        assert_eq!(resolve_closest(&idx, &B, user, 3).unwrap(), vec!["z"]);
        assert!(matches!(
            resolve_closest(&idx, &Sid::triple(9, 9, 9), user, 1),
            Err(Error::EmptySidGroup(_))
        ));
    }

    #[test]
    fn closest_ties_break_by_id() {
        let idx = SidIndex::new([entry("b", A, 1.0, 0.0), entry("a", A, -1.0, 0.0)]).unwrap();
        let user = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(resolve_closest(&idx, &A, user, 2).unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn random_pick_is_seeded_and_uniform() {
        let idx = SidIndex::new([
            entry("a", A, 0.0, 0.0),
            entry("b", A, 0.0, 0.0),
            entry("s", B, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(resolve_random(&idx, &B, 3).unwrap(), "s");
        assert_eq!(
            resolve_random(&idx, &A, 42).unwrap(),
            resolve_random(&idx, &A, 42).unwrap()
        );
        let hits = (0..10_000u64)
            .filter(|&s| resolve_random(&idx, &A, s).unwrap() == "a")
            .count();
        let freq = hits as f64 / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
        assert!(resolve_random(&idx, &Sid::triple(3, 3, 3), 0).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        assert!(SidIndex::new([entry("a", A, 0.0, 0.0), entry("a", B, 0.0, 0.0)]).is_err());
    }
}
