//! Environment maps: buildings, contour lines and roads in a local metric
//! frame, plus the geometric queries used by feature extraction.

mod format;
mod geodesy;
mod intersect;
mod roads;
mod terrain;

use rstar::primitives::{GeomWithData, Line, Rectangle};
use rstar::{RTree, AABB};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{load_map, parse_map, MapDocument, RingRecord};
pub use geodesy::{
    geodesic_distance, spherical_distance, vincenty_distance, Distance, GeoPoint, LocalFrame,
    LocalPoint, WGS84_A, WGS84_B, WGS84_F,
};
pub use intersect::{
    segment_building_intersections, segment_terrain_intersections, BuildingCut, TerrainRun,
    DEFAULT_TERRAIN_STEP,
};
pub use roads::{RoadProjection, DEFAULT_ROAD_GATE};
pub use terrain::{ContourField, Terrain};

/// Terrain class of a map, which selects the feature set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainClass {
    /// Class #1: flat ground, constant elevation.
    Flat,
    /// Class #2: terrain described by contour lines.
    Hilly,
}

impl TerrainClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TerrainClass::Flat => "flat",
            TerrainClass::Hilly => "hilly",
        }
    }
}

impl std::str::FromStr for TerrainClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" | "1" | "#1" => Ok(TerrainClass::Flat),
            "hilly" | "2" | "#2" => Ok(TerrainClass::Hilly),
            _ => Err(Error::InvalidInput {
                name: "terrain class",
                message: format!("{s:?} is neither flat nor hilly"),
            }),
        }
    }
}

/// Extruded building footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: String,
    /// Open ring of local `[x, y]` vertices.
    pub footprint: Vec<[f64; 2]>,
    /// Metres above the local terrain.
    pub roof_height: f64,
    /// Metres above sea level.
    pub base_elevation: f64,
}

impl Building {
    pub fn roof_elevation(&self) -> f64 {
        self.base_elevation + self.roof_height
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        point_in_ring(&self.footprint, p)
    }

    fn envelope(&self) -> AABB<[f64; 2]> {
        AABB::from_points(self.footprint.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLine {
    pub id: String,
    pub polyline: Vec<[f64; 2]>,
    /// Metres above sea level.
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    pub name: String,
}

/// Axis-aligned rectangle in local metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    fn of_points<'a>(points: impl Iterator<Item = &'a [f64; 2]>) -> Option<Self> {
        let mut b: Option<Bounds> = None;
        for p in points {
            let nb = b.get_or_insert(Bounds {
                min_x: p[0],
                min_y: p[1],
                max_x: p[0],
                max_y: p[1],
            });
            nb.min_x = nb.min_x.min(p[0]);
            nb.min_y = nb.min_y.min(p[1]);
            nb.max_x = nb.max_x.max(p[0]);
            nb.max_y = nb.max_y.max(p[1]);
        }
        b
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, p: [f64; 2], slack: f64) -> bool {
        p[0] >= self.min_x - slack
            && p[0] <= self.max_x + slack
            && p[1] >= self.min_y - slack
            && p[1] <= self.max_y + slack
    }
}

type BuildingBox = GeomWithData<Rectangle<[f64; 2]>, usize>;
pub(crate) type Segment = GeomWithData<Line<[f64; 2]>, usize>;

/// Immutable, validated environment map.
#[derive(Debug)]
pub struct EnvironmentMap {
    frame: LocalFrame,
    terrain_class: TerrainClass,
    ground_elevation: f64,
    buildings: Vec<Building>,
    contours: Vec<ContourLine>,
    roads: Vec<Road>,
    bounds: Bounds,
    building_index: RTree<BuildingBox>,
    road_index: RTree<Segment>,
    contour_field: Option<ContourField>,
}

/// How far outside the map bounds a query point may lie.
const BOUNDS_SLACK: f64 = 1.0;

impl EnvironmentMap {
    /// Builds a map from geometry already expressed in the local frame of
    /// `origin`. Buildings are validated; `ground_elevation` is the constant
    /// terrain height used by flat maps.
    pub fn from_local(
        origin: GeoPoint,
        terrain_class: TerrainClass,
        ground_elevation: f64,
        buildings: Vec<Building>,
        contours: Vec<ContourLine>,
        roads: Vec<Road>,
    ) -> Result<Self> {
        origin.validate()?;
        for b in &buildings {
            validate_footprint(b)?;
        }
        for c in &contours {
            if c.polyline.len() < 2 || !c.elevation.is_finite() {
                return Err(Error::Geometry {
                    id: c.id.clone(),
                    message: "contour needs at least 2 vertices and a finite elevation".into(),
                });
            }
        }
        for r in &roads {
            if r.centerline.len() < 2 {
                return Err(Error::Geometry {
                    id: r.id.clone(),
                    message: "road needs at least 2 vertices".into(),
                });
            }
        }
        let bounds = Bounds::of_points(
            buildings
                .iter()
                .flat_map(|b| b.footprint.iter())
                .chain(contours.iter().flat_map(|c| c.polyline.iter()))
                .chain(roads.iter().flat_map(|r| r.centerline.iter())),
        )
        .unwrap_or(Bounds {
            min_x: 0.0,
            min_y: 0.0,
            max_x: 0.0,
            max_y: 0.0,
        });

        let building_index = RTree::bulk_load(
            buildings
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let env = b.envelope();
                    GeomWithData::new(Rectangle::from_corners(env.lower(), env.upper()), i)
                })
                .collect(),
        );
        let road_index = RTree::bulk_load(polyline_segments(roads.iter().map(|r| &r.centerline)));
        let contour_field = if contours.is_empty() {
            None
        } else {
            Some(ContourField::new(&contours, bounds))
        };

        Ok(Self {
            frame: LocalFrame::new(origin),
            terrain_class,
            ground_elevation,
            buildings,
            contours,
            roads,
            bounds,
            building_index,
            road_index,
            contour_field,
        })
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    pub fn origin(&self) -> GeoPoint {
        self.frame.origin()
    }

    pub fn terrain_class(&self) -> TerrainClass {
        self.terrain_class
    }

    pub fn ground_elevation(&self) -> f64 {
        self.ground_elevation
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn contours(&self) -> &[ContourLine] {
        &self.contours
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn to_local(&self, p: &GeoPoint) -> LocalPoint {
        self.frame.to_local(p)
    }

    pub fn to_geo(&self, p: &LocalPoint) -> GeoPoint {
        self.frame.to_geo(p)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.bounds.contains(p, BOUNDS_SLACK)
    }

    /// Terrain elevation in metres above sea level.
    pub fn elevation_at(&self, p: &LocalPoint) -> Result<f64> {
        if !self.contains(p.xy()) {
            return Err(Error::InvalidInput {
                name: "position",
                message: format!("({:.1}, {:.1}) lies outside the map bounds", p.x, p.y),
            });
        }
        self.terrain_elevation(p.x, p.y)
    }

    fn terrain_elevation(&self, x: f64, y: f64) -> Result<f64> {
        match self.terrain_class {
            TerrainClass::Flat => Ok(self.ground_elevation),
            TerrainClass::Hilly => self
                .contour_field
                .as_ref()
                .ok_or(Error::NoTerrainData)?
                .elevation(x, y),
        }
    }

    /// Whether `p` lies inside any building footprint.
    pub fn inside_building(&self, p: [f64; 2]) -> bool {
        self.building_index
            .locate_all_at_point(&p)
            .any(|b| self.buildings[b.data].contains(p))
    }

    pub(crate) fn buildings_near(&self, env: &AABB<[f64; 2]>) -> impl Iterator<Item = usize> + '_ {
        self.building_index
            .locate_in_envelope_intersecting(env)
            .map(|b| b.data)
    }
}

impl Terrain for EnvironmentMap {
    fn elevation(&self, x: f64, y: f64) -> Result<f64> {
        self.terrain_elevation(x, y)
    }
}

pub(crate) fn polyline_segments<'a>(lines: impl Iterator<Item = &'a Vec<[f64; 2]>>) -> Vec<Segment> {
    lines
        .enumerate()
        .flat_map(|(i, line)| {
            line.windows(2)
                .filter(|w| w[0] != w[1])
                .map(move |w| GeomWithData::new(Line::new(w[0], w[1]), i))
        })
        .collect()
}

/// Crossing-number point-in-polygon test on an open ring.
pub(crate) fn point_in_ring(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn ring_area(ring: &[[f64; 2]]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

fn validate_footprint(b: &Building) -> Result<()> {
    let fail = |message: &str| Error::Geometry {
        id: b.id.clone(),
        message: message.to_string(),
    };
    let ring = &b.footprint;
    if ring.len() < 3 {
        return Err(fail("footprint needs at least 3 vertices"));
    }
    if !(b.roof_height > 0.0) || !b.roof_height.is_finite() {
        return Err(fail("roof height must be positive"));
    }
    if !b.base_elevation.is_finite() {
        return Err(fail("base elevation must be finite"));
    }
    if ring_area(ring).abs() <= 0.0 {
        return Err(fail("footprint has zero area"));
    }
    let n = ring.len();
    for i in 0..n {
        let (a1, a2) = (ring[i], ring[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return Err(fail("footprint is self-intersecting"));
            }
        }
    }
    Ok(())
}
