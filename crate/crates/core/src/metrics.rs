//! Codebook quality and ranking metrics.
//!
//! * ICR: share of POIs whose triple no other POI uses.
//! * CUR: distinct observed triples over the full capacity `K1·K2·K3`.
//! * Dispersion: haversine distance of each POI to the geo-centroid of its
//!   triple's group, reported as mean and nearest-rank p90/p95.
//! * Hit@N and NDCG@N for a single relevant item.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{geo_centroid, haversine_km, EarthModel, GeoPoint};
use crate::sid::Sid;

/// POI id → identifier. Ordered so every metric is independent of input order.
pub type Assignments = BTreeMap<String, Sid>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantReport {
    pub cur: f64,
    pub icr: f64,
    pub avg_dist_km: f64,
    pub p90_dist_km: f64,
    pub p95_dist_km: f64,
    pub group_count: usize,
    pub poi_count: usize,
}

fn group_sizes(assignments: &Assignments) -> BTreeMap<Sid, usize> {
    let mut sizes = BTreeMap::new();
    for sid in assignments.values() {
        *sizes.entry(sid.base()).or_insert(0) += 1;
    }
    sizes
}

pub fn icr(assignments: &Assignments) -> Result<f64> {
    if assignments.is_empty() {
        return Err(Error::EmptyInput("no assignments"));
    }
    let sizes = group_sizes(assignments);
    let unique = sizes.values().filter(|&&n| n == 1).count();
    Ok(unique as f64 / assignments.len() as f64)
}

pub fn cur(assignments: &Assignments, capacities: [usize; 3]) -> Result<f64> {
    if assignments.is_empty() {
        return Err(Error::EmptyInput("no assignments"));
    }
    let capacity = capacities
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
        .ok_or_else(|| Error::invalid("codebook capacity overflows"))?;
    if capacity == 0 {
        return Err(Error::invalid("codebook capacity is zero"));
    }
    let distinct: BTreeSet<Sid> = assignments.values().map(Sid::base).collect();
    Ok(distinct.len() as f64 / capacity as f64)
}

/// Value at 1-based rank `ceil(pct·N/100)` of an ascending list.
pub fn nearest_rank(sorted: &[f64], pct: u32) -> Option<f64> {
    if sorted.is_empty() || pct > 100 {
        return None;
    }
    let n = sorted.len();
    let rank = ((pct as usize * n).div_ceil(100)).max(1);
    Some(sorted[rank - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub avg_km: f64,
    pub p90_km: f64,
    pub p95_km: f64,
    pub max_km: f64,
}

/// Distances from each POI to its group's geo-centroid, pooled over all groups.
pub fn group_distances(assignments: &Assignments, locations: &HashMap<String, GeoPoint>) -> Result<Vec<f64>> {
    let earth = EarthModel::default();
    let mut groups: BTreeMap<Sid, Vec<GeoPoint>> = BTreeMap::new();
    for (id, sid) in assignments {
        let p = locations
            .get(id)
            .ok_or_else(|| Error::record(id, "no location for POI"))?;
        groups.entry(sid.base()).or_default().push(*p);
    }
    let mut out = Vec::with_capacity(assignments.len());
    for pts in groups.values() {
        let c = geo_centroid(pts)?;
        out.extend(pts.iter().map(|p| haversine_km(c, *p, earth)));
    }
    Ok(out)
}

pub fn geo_dispersion(assignments: &Assignments, locations: &HashMap<String, GeoPoint>) -> Result<Dispersion> {
    let mut d = group_distances(assignments, locations)?;
    if d.is_empty() {
        return Err(Error::EmptyInput("no assignments"));
    }
    d.sort_by(f64::total_cmp);
    let avg = d.iter().sum::<f64>() / d.len() as f64;
    Ok(Dispersion {
        avg_km: avg,
        p90_km: nearest_rank(&d, 90).unwrap_or(0.0),
        p95_km: nearest_rank(&d, 95).unwrap_or(0.0),
        max_km: *d.last().unwrap_or(&0.0),
    })
}

pub fn quant_report(
    assignments: &Assignments,
    locations: &HashMap<String, GeoPoint>,
    capacities: [usize; 3],
) -> Result<QuantReport> {
    let disp = geo_dispersion(assignments, locations)?;
    Ok(QuantReport {
        cur: cur(assignments, capacities)?,
        icr: icr(assignments)?,
        avg_dist_km: disp.avg_km,
        p90_dist_km: disp.p90_km,
        p95_dist_km: disp.p95_km,
        group_count: group_sizes(assignments).len(),
        poi_count: assignments.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingCase {
    pub predicted: Vec<Sid>,
    pub truth: Sid,
}

impl RankingCase {
    pub fn has_duplicates(&self) -> bool {
        let set: BTreeSet<&Sid> = self.predicted.iter().collect();
        set.len() != self.predicted.len()
    }

    /// 1-based position of the first prediction equal to the truth.
    pub fn rank(&self) -> Option<usize> {
        self.predicted.iter().position(|p| *p == self.truth).map(|i| i + 1)
    }
}

pub fn hit_at_n(case: &RankingCase, n: usize) -> u32 {
    match case.rank() {
        Some(r) if r <= n => 1,
        _ => 0,
    }
}

pub fn ndcg_at_n(case: &RankingCase, n: usize) -> f64 {
    match case.rank() {
        Some(r) if r <= n => 1.0 / ((1 + r) as f64).log2(),
        _ => 0.0,
    }
}
