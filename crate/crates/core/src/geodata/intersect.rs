//! Segment queries against buildings and terrain.

use rstar::AABB;
use serde::{Deserialize, Serialize};

use super::{Building, EnvironmentMap, LocalPoint, Terrain};
use crate::error::Result;

/// Default terrain sampling step along a segment, in metres.
pub const DEFAULT_TERRAIN_STEP: f64 = 1.0;

/// Portion of a TX-RX segment passing through one building below its roof.
///
/// Parameters `t` run from 0 at TX to 1 at RX.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingCut {
    /// Index into [`EnvironmentMap::buildings`].
    pub building: usize,
    /// 3D length of the below-roof part of the segment inside the footprint.
    pub chord: f64,
    /// `chord` as a fraction of the segment length.
    pub fraction: f64,
    /// Roof height above terrain.
    pub height: f64,
    pub t_entry: f64,
    pub t_exit: f64,
}

/// Maximal run of the segment below the terrain surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainRun {
    pub t_start: f64,
    pub t_end: f64,
    /// 3D length of the run.
    pub length: f64,
}

/// Buildings whose footprint the segment crosses below roof level, ordered
/// by entry distance from `tx`. A building crossed more than once (concave
/// footprint) yields one cut whose chord sums all below-roof intervals.
pub fn segment_building_intersections(
    map: &EnvironmentMap,
    tx: &LocalPoint,
    rx: &LocalPoint,
) -> Vec<BuildingCut> {
    let length = tx.distance(rx);
    let env = AABB::from_corners(tx.xy(), rx.xy());
    let mut cuts: Vec<BuildingCut> = map
        .buildings_near(&env)
        .filter_map(|i| {
            let intervals = below_roof_intervals(&map.buildings()[i], tx, rx);
            let fraction: f64 = intervals.iter().map(|(a, b)| b - a).sum();
            (fraction > 0.0).then(|| BuildingCut {
                building: i,
                chord: fraction * length,
                fraction,
                height: map.buildings()[i].roof_height,
                t_entry: intervals[0].0,
                t_exit: intervals[intervals.len() - 1].1,
            })
        })
        .collect();
    // building index last so the order never depends on the map's list order
    // unless two cuts coincide exactly
    cuts.sort_by(|a, b| {
        a.t_entry
            .total_cmp(&b.t_entry)
            .then(a.t_exit.total_cmp(&b.t_exit))
            .then(a.fraction.total_cmp(&b.fraction))
            .then(a.height.total_cmp(&b.height))
            .then(a.building.cmp(&b.building))
    });
    cuts
}

/// Sorted disjoint parameter intervals where the segment is inside the
/// footprint and strictly below the roof elevation.
fn below_roof_intervals(b: &Building, tx: &LocalPoint, rx: &LocalPoint) -> Vec<(f64, f64)> {
    let p = tx.xy();
    let d = [rx.x - tx.x, rx.y - tx.y];
    let ring = &b.footprint;
    let n = ring.len();

    let mut ts = vec![0.0, 1.0];
    for k in 0..n {
        let (a, c) = (ring[k], ring[(k + 1) % n]);
        let e = [c[0] - a[0], c[1] - a[1]];
        let denom = d[0] * e[1] - d[1] * e[0];
        let w = [a[0] - p[0], a[1] - p[1]];
        if denom.abs() > 1e-15 {
            let t = (w[0] * e[1] - w[1] * e[0]) / denom;
            let u = (w[0] * d[1] - w[1] * d[0]) / denom;
            if (0.0..=1.0).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
                ts.push(t);
            }
        } else if (w[0] * d[1] - w[1] * d[0]).abs() < 1e-12 {
            // collinear edge: its endpoints bound the overlap
            let dd = d[0] * d[0] + d[1] * d[1];
            if dd > 0.0 {
                for q in [a, c] {
                    let t = ((q[0] - p[0]) * d[0] + (q[1] - p[1]) * d[1]) / dd;
                    if (0.0..=1.0).contains(&t) {
                        ts.push(t);
                    }
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let roof = b.roof_elevation();
    let dz = rx.z - tx.z;
    // parameter range where z(t) < roof
    let (lo, hi) = if dz == 0.0 {
        if tx.z < roof {
            (0.0, 1.0)
        } else {
            return Vec::new();
        }
    } else {
        let t_star = (roof - tx.z) / dz;
        if dz > 0.0 {
            (0.0, t_star.min(1.0))
        } else {
            (t_star.max(0.0), 1.0)
        }
    };

    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in ts.windows(2) {
        let (a, c) = (w[0], w[1]);
        if c - a <= 1e-12 {
            continue;
        }
        let mid = 0.5 * (a + c);
        if !b.contains([p[0] + mid * d[0], p[1] + mid * d[1]]) {
            continue;
        }
        let (a, c) = (a.max(lo), c.min(hi));
        if c > a {
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = c,
                _ => out.push((a, c)),
            }
        }
    }
    out
}

/// Runs of the segment strictly below the terrain, found by sampling at
/// `step` metres and refining each run boundary by bisection. Runs touching
/// either endpoint are included.
pub fn segment_terrain_intersections<T: Terrain + ?Sized>(
    terrain: &T,
    tx: &LocalPoint,
    rx: &LocalPoint,
    step: f64,
) -> Result<Vec<TerrainRun>> {
    let length = tx.distance(rx);
    let samples = ((length / step).ceil() as usize).max(1);
    let below = |t: f64| -> Result<bool> {
        let x = tx.x + t * (rx.x - tx.x);
        let y = tx.y + t * (rx.y - tx.y);
        let z = tx.z + t * (rx.z - tx.z);
        Ok(z < terrain.elevation(x, y)?)
    };
    let refine = |mut inside: f64, mut outside: f64| -> Result<f64> {
        for _ in 0..50 {
            let mid = 0.5 * (inside + outside);
            if below(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };

    let mut runs = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev_t = 0.0;
    for k in 0..=samples {
        let t = k as f64 / samples as f64;
        let b = below(t)?;
        match (start, b) {
            (None, true) => start = Some(if k == 0 { 0.0 } else { refine(t, prev_t)? }),
            (Some(s), false) => {
                let e = refine(prev_t, t)?;
                runs.push(TerrainRun {
                    t_start: s,
                    t_end: e,
                    length: (e - s) * length,
                });
                start = None;
            }
            _ => {}
        }
        prev_t = t;
    }
    if let Some(s) = start {
        runs.push(TerrainRun {
            t_start: s,
            t_end: 1.0,
            length: (1.0 - s) * length,
        });
    }
    Ok(runs)
}

impl EnvironmentMap {
    pub fn segment_building_intersections(&self, tx: &LocalPoint, rx: &LocalPoint) -> Vec<BuildingCut> {
        segment_building_intersections(self, tx, rx)
    }

    pub fn segment_terrain_intersections(
        &self,
        tx: &LocalPoint,
        rx: &LocalPoint,
        step: f64,
    ) -> Result<Vec<TerrainRun>> {
        segment_terrain_intersections(self, tx, rx, step)
    }
}
