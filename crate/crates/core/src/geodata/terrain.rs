//! Terrain elevation from contour lines.

use rstar::{PointDistance, RTree, AABB};

use super::{polyline_segments, Bounds, ContourLine, Segment};
use crate::error::Result;

/// Anything that can report ground elevation at a local `(x, y)`.
pub trait Terrain: Sync {
    fn elevation(&self, x: f64, y: f64) -> Result<f64>;
}

impl<F: Fn(f64, f64) -> f64 + Sync> Terrain for F {
    fn elevation(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self(x, y))
    }
}

/// Inverse-distance interpolation between the two elevations bounding the
/// region between contours that contains a query point.
///
/// At `p` the nearest contour gives `e1` at distance `d1`. The other level
/// `e2` is that of the first contour of a different elevation met by a ray
/// from `p`, cast away from the nearest contour first. With `d2` the
/// distance from `p` to the nearest contour at `e2`, the elevation is
/// `(e1 d2 + e2 d1) / (d1 + d2)`. When no ray meets a second level, `p`
/// sits on a plateau at `e1`.
///
/// Within a region bounded by two levels the result is continuous, and it
/// equals a contour's elevation on the contour itself.
#[derive(Debug)]
pub struct ContourField {
    segments: RTree<Segment>,
    elevations: Vec<f64>,
    /// Segments of each distinct elevation, sorted by elevation.
    levels: Vec<(f64, RTree<Segment>)>,
    max_ray: f64,
}

const ON_CURVE: f64 = 1e-9;
/// Extra ray directions tried when the ray away from the nearest contour
/// finds no second level.
const FAN_RAYS: usize = 31;

impl ContourField {
    pub fn new(contours: &[ContourLine], bounds: Bounds) -> Self {
        let max_ray = 2.0 * bounds.width().hypot(bounds.height()) + 1.0;
        let mut distinct: Vec<f64> = contours.iter().map(|c| c.elevation).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let levels = distinct
            .into_iter()
            .map(|e| {
                let lines = contours.iter().filter(|c| c.elevation == e).map(|c| &c.polyline);
                (e, RTree::bulk_load(polyline_segments(lines)))
            })
            .collect();
        Self {
            segments: RTree::bulk_load(polyline_segments(contours.iter().map(|c| &c.polyline))),
            elevations: contours.iter().map(|c| c.elevation).collect(),
            levels,
            max_ray,
        }
    }

    pub fn elevation(&self, x: f64, y: f64) -> Result<f64> {
        let p = [x, y];
        let Some(nearest) = self.segments.nearest_neighbor(&p) else {
            return Err(crate::error::Error::NoTerrainData);
        };
        let e1 = self.elevations[nearest.data];
        let foot = nearest.geom().nearest_point(&p);
        let d1 = nearest.geom().distance_2(&p).sqrt();
        if d1 < ON_CURVE {
            return Ok(e1);
        }
        let away = (p[1] - foot[1]).atan2(p[0] - foot[0]);
        let Some(e2) = self.neighbour_level(p, away, e1) else {
            return Ok(e1);
        };
        let d2 = self
            .levels
            .binary_search_by(|(e, _)| e.total_cmp(&e2))
            .ok()
            .and_then(|k| self.levels[k].1.nearest_neighbor(&p))
            .map_or(d1, |s| s.geom().distance_2(&p).sqrt());
        Ok((e1 * d2 + e2 * d1) / (d1 + d2))
    }

    /// Elevation other than `e1` of a contour bounding the region around
    /// `p`: the first contour hit by a ray from `p`, trying the direction
    /// `away` first and then a fan of [`FAN_RAYS`] directions.
    fn neighbour_level(&self, p: [f64; 2], away: f64, e1: f64) -> Option<f64> {
        (0..=FAN_RAYS).find_map(|k| {
            let a = away + std::f64::consts::TAU * k as f64 / (FAN_RAYS + 1) as f64;
            let (_, contour) = self.first_hit(p, [a.cos(), a.sin()])?;
            let e = self.elevations[contour];
            (e != e1).then_some(e)
        })
    }

    /// Nearest crossing of the ray `p + s dir`, `s > 0`, with any contour.
    fn first_hit(&self, p: [f64; 2], dir: [f64; 2]) -> Option<(f64, usize)> {
        let mut reach = 16.0f64;
        loop {
            let reach_now = reach.min(self.max_ray);
            let end = [p[0] + reach_now * dir[0], p[1] + reach_now * dir[1]];
            let env = AABB::from_corners(p, end);
            let mut best: Option<(f64, usize)> = None;
            for seg in self.segments.locate_in_envelope_intersecting(&env) {
                if let Some(s) = ray_segment(p, dir, seg.geom().from, seg.geom().to) {
                    if s > ON_CURVE && s <= reach_now && best.is_none_or(|(b, _)| s < b) {
                        best = Some((s, seg.data));
                    }
                }
            }
            if best.is_some() || reach_now >= self.max_ray {
                return best;
            }
            reach *= 4.0;
        }
    }
}

/// Ray parameter `s` at which `p + s dir` meets segment `ab`.
fn ray_segment(p: [f64; 2], dir: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let denom = dir[0] * e[1] - dir[1] * e[0];
    if denom.abs() < 1e-15 {
        return None;
    }
    let w = [a[0] - p[0], a[1] - p[1]];
    let s = (w[0] * e[1] - w[1] * e[0]) / denom;
    let u = (w[0] * dir[1] - w[1] * dir[0]) / denom;
    if (0.0..=1.0).contains(&u) {
        Some(s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, y: f64, elevation: f64) -> ContourLine {
        ContourLine {
            id: id.into(),
            polyline: vec![[-100.0, y], [100.0, y]],
            elevation,
        }
    }

    fn field(lines: &[ContourLine]) -> ContourField {
        let bounds = Bounds {
            min_x: -100.0,
            min_y: -100.0,
            max_x: 100.0,
            max_y: 100.0,
        };
        ContourField::new(lines, bounds)
    }

    #[test]
    fn on_curve_returns_its_elevation() {
        let f = field(&[line("a", 0.0, 250.0), line("b", 20.0, 260.0)]);
        assert_eq!(f.elevation(13.0, 0.0).unwrap(), 250.0);
    }

    #[test]
    fn midpoint_between_contours() {
        let f = field(&[line("a", 0.0, 100.0), line("b", 20.0, 110.0)]);
        assert!((f.elevation(3.0, 10.0).unwrap() - 105.0).abs() < 0.01);
    }

    #[test]
    fn linear_between_parallel_contours() {
        let f = field(&[line("a", 0.0, 100.0), line("b", 20.0, 110.0), line("c", 30.0, 130.0)]);
        assert!((f.elevation(0.0, 5.0).unwrap() - 102.5).abs() < 1e-9);
        assert!((f.elevation(0.0, 18.0).unwrap() - 109.0).abs() < 1e-9);
        assert!((f.elevation(0.0, 22.0).unwrap() - 114.0).abs() < 1e-9);
    }

    #[test]
    fn beyond_the_last_contour_is_flat() {
        let f = field(&[line("a", 0.0, 100.0), line("b", 20.0, 110.0)]);
        assert_eq!(f.elevation(0.0, 40.0).unwrap(), 110.0);
        assert_eq!(f.elevation(0.0, -5.0).unwrap(), 100.0);
    }

    #[test]
    fn inside_a_closed_summit_contour_is_flat() {
        let ring = ContourLine {
            id: "top".into(),
            polyline: vec![[-10.0, -10.0], [10.0, -10.0], [10.0, 10.0], [-10.0, 10.0], [-10.0, -10.0]],
            elevation: 300.0,
        };
        let f = field(&[ring, line("low", -50.0, 290.0)]);
        assert_eq!(f.elevation(0.0, 2.0).unwrap(), 300.0);
    }
}
