//! Snapping GPS fixes onto road centerlines.

use rstar::PointDistance;
use serde::{Deserialize, Serialize};

use super::{EnvironmentMap, GeoPoint};

/// Maximum distance from a centerline at which a fix is snapped, in metres.
pub const DEFAULT_ROAD_GATE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadProjection {
    pub point: GeoPoint,
    /// False when no centerline lies within the gate; `point` is then the
    /// input unchanged.
    pub projected: bool,
    /// Distance from the input to the nearest centerline, if any road exists.
    pub distance: Option<f64>,
    pub road: Option<usize>,
}

impl EnvironmentMap {
    /// Closest point on any road centerline, or `p` itself when the nearest
    /// centerline is farther than `gate` metres.
    pub fn project_to_road(&self, p: &GeoPoint, gate: f64) -> RoadProjection {
        let local = self.to_local(p);
        let unchanged = |distance: Option<f64>, road: Option<usize>| RoadProjection {
            point: *p,
            projected: false,
            distance,
            road,
        };
        let Some(seg) = self.road_index.nearest_neighbor(&local.xy()) else {
            return unchanged(None, None);
        };
        let distance = seg.geom().distance_2(&local.xy()).sqrt();
        if distance > gate {
            return unchanged(Some(distance), Some(seg.data));
        }
        let foot = seg.geom().nearest_point(&local.xy());
        let (latitude, longitude) = self.frame().plane_to_geo(foot[0], foot[1]);
        RoadProjection {
            point: GeoPoint {
                latitude,
                longitude,
                altitude: p.altitude,
            },
            projected: true,
            distance: Some(distance),
            road: Some(seg.data),
        }
    }
}
