//! Map file reader and writer.
//!
//! A map file is a UTF-8 JSON object:
//!
//! ```json
//! {
//!   "type": "EnvironmentMap",
//!   "crs": "EPSG:4326",
//!   "origin": {"lat": 44.49, "lon": 11.34},
//!   "ground_elevation": 54.0,
//!   "layers": {
//!     "buildings": { "type": "FeatureCollection", "features": [...] },
//!     "contours":  { "type": "FeatureCollection", "features": [...] },
//!     "roads":     { "type": "FeatureCollection", "features": [...] }
//!   }
//! }
//! ```
//!
//! Coordinates are WGS-84 `[lon, lat]`. Buildings are `Polygon` or
//! `MultiPolygon` features with a numeric `height` (roof height above
//! terrain, metres) and an optional `base_elevation` (metres above sea
//! level, taken from the terrain at the footprint centroid when absent).
//! Contours are `LineString`/`MultiLineString` features with a numeric
//! `elevation`. Roads are `LineString`/`MultiLineString` features with an
//! optional `name`. Only `layers.buildings` is required. `origin` defaults to
//! the centre of the coordinate bounding box and `ground_elevation`, the
//! terrain height of flat maps, to 0.

use std::path::Path;

use geojson::{feature::Id, Feature, FeatureCollection, Geometry, GeometryValue, JsonObject, Position};
use serde_json::{json, Map, Value};

use super::{
    Building, ContourLine, EnvironmentMap, GeoPoint, LocalFrame, LocalPoint, Road, TerrainClass,
};
use crate::error::{Error, Result};

const ACCEPTED_CRS: [&str; 5] = [
    "EPSG:4326",
    "WGS84",
    "WGS 84",
    "urn:ogc:def:crs:OGC:1.3:CRS84",
    "urn:ogc:def:crs:EPSG::4326",
];

/// A ring or polyline of `(lon, lat)` pairs with its feature id.
#[derive(Debug, Clone, PartialEq)]
pub struct RingRecord {
    pub id: String,
    pub coords: Vec<(f64, f64)>,
    /// Building height, contour elevation, or unused for roads.
    pub value: f64,
    /// Building base elevation, or unused.
    pub base_elevation: Option<f64>,
    /// Road name, or unused.
    pub name: Option<String>,
}

/// Geographic content of a map file, used to write fixtures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapDocument {
    pub origin: Option<GeoPoint>,
    pub ground_elevation: Option<f64>,
    pub buildings: Vec<RingRecord>,
    pub contours: Vec<RingRecord>,
    pub roads: Vec<RingRecord>,
}

impl MapDocument {
    pub fn to_json(&self) -> String {
        let positions = |r: &RingRecord| -> Vec<Position> {
            r.coords.iter().map(|&(lon, lat)| Position::from([lon, lat])).collect()
        };
        let feature = |r: &RingRecord, geometry: GeometryValue, props: JsonObject| Feature {
            bbox: None,
            geometry: Some(Geometry::new(geometry)),
            id: Some(Id::String(r.id.clone())),
            properties: Some(props),
            foreign_members: None,
        };
        let obj = |v: Value| match v {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        let buildings = FeatureCollection::new(self.buildings.iter().map(|r| {
            let mut ring = positions(r);
            if let Some(first) = ring.first().cloned() {
                ring.push(first);
            }
            let mut props = obj(json!({ "height": r.value }));
            if let Some(base) = r.base_elevation {
                props.insert("base_elevation".into(), json!(base));
            }
            feature(r, GeometryValue::Polygon { coordinates: vec![ring] }, props)
        }));
        let contours = FeatureCollection::new(self.contours.iter().map(|r| {
            feature(
                r,
                GeometryValue::LineString { coordinates: positions(r) },
                obj(json!({ "elevation": r.value })),
            )
        }));
        let roads = FeatureCollection::new(self.roads.iter().map(|r| {
            feature(
                r,
                GeometryValue::LineString { coordinates: positions(r) },
                obj(json!({ "name": r.name.clone().unwrap_or_default() })),
            )
        }));
        let mut doc = json!({
            "type": "EnvironmentMap",
            "crs": "EPSG:4326",
            "layers": {
                "buildings": buildings,
                "contours": contours,
                "roads": roads,
            }
        });
        if let Some(o) = self.origin {
            doc["origin"] = json!({ "lat": o.latitude, "lon": o.longitude });
        }
        if let Some(g) = self.ground_elevation {
            doc["ground_elevation"] = json!(g);
        }
        serde_json::to_string_pretty(&doc).expect("map documents serialize")
    }
}

pub fn load_map(path: impl AsRef<Path>, terrain_class: TerrainClass) -> Result<EnvironmentMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_map(&text, terrain_class).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

fn parse_error(message: impl Into<String>) -> Error {
    Error::Parse {
        path: "<map>".into(),
        message: message.into(),
    }
}

fn schema(message: impl Into<String>) -> Error {
    Error::Schema {
        message: message.into(),
        ids: Vec::new(),
    }
}

fn check_crs(crs: &Value) -> Result<()> {
    let name = match crs {
        Value::String(s) => Some(s.as_str()),
        Value::Object(o) => o
            .get("properties")
            .and_then(|p| p.get("name"))
            .and_then(Value::as_str),
        _ => None,
    };
    match name {
        Some(n) if ACCEPTED_CRS.iter().any(|a| a.eq_ignore_ascii_case(n)) => Ok(()),
        _ => Err(schema(format!("crs must be WGS-84 geographic, found {crs}"))),
    }
}

fn feature_id(f: &Feature, layer: &str, index: usize) -> String {
    match &f.id {
        Some(Id::String(s)) => s.clone(),
        Some(Id::Number(n)) => n.to_string(),
        None => format!("{layer}/{index}"),
    }
}

fn number_property(f: &Feature, key: &str) -> Option<f64> {
    f.properties.as_ref()?.get(key)?.as_f64()
}

fn lon_lat(id: &str, p: &Position) -> Result<(f64, f64)> {
    let s = p.as_slice();
    if s.len() < 2 {
        return Err(schema(format!("feature {id} has a position with fewer than 2 coordinates")));
    }
    let (lon, lat) = (s[0], s[1]);
    GeoPoint::new(lat, lon).map_err(|_| schema(format!("feature {id} has coordinates outside WGS-84 range")))?;
    Ok((lon, lat))
}

fn polygons(id: &str, f: &Feature) -> Result<Vec<Vec<(f64, f64)>>> {
    let rings = match f.geometry.as_ref().map(|g| &g.value) {
        Some(GeometryValue::Polygon { coordinates }) => vec![coordinates],
        Some(GeometryValue::MultiPolygon { coordinates }) => coordinates.iter().collect(),
        other => {
            return Err(schema(format!(
                "building {id} must be a Polygon or MultiPolygon, found {}",
                other.map_or("no geometry", |g| g.type_name())
            )))
        }
    };
    let mut out = Vec::new();
    for poly in rings {
        let Some(outer) = poly.first() else {
            return Err(schema(format!("building {id} has an empty polygon")));
        };
        if poly.len() > 1 {
            log::warn!("building {id}: {} interior ring(s) ignored", poly.len() - 1);
        }
        let mut ring = outer.iter().map(|p| lon_lat(id, p)).collect::<Result<Vec<_>>>()?;
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        out.push(ring);
    }
    Ok(out)
}

fn lines(id: &str, layer: &str, f: &Feature) -> Result<Vec<Vec<(f64, f64)>>> {
    let parts = match f.geometry.as_ref().map(|g| &g.value) {
        Some(GeometryValue::LineString { coordinates }) => vec![coordinates],
        Some(GeometryValue::MultiLineString { coordinates }) => coordinates.iter().collect(),
        other => {
            return Err(schema(format!(
                "{layer} feature {id} must be a LineString or MultiLineString, found {}",
                other.map_or("no geometry", |g| g.type_name())
            )))
        }
    };
    parts
        .into_iter()
        .map(|line| line.iter().map(|p| lon_lat(id, p)).collect())
        .collect()
}

fn layer(layers: &Map<String, Value>, name: &str, required: bool) -> Result<FeatureCollection> {
    match layers.get(name) {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| parse_error(format!("layer {name} is not a FeatureCollection: {e}"))),
        None if required => Err(schema(format!("missing required layer {name:?}"))),
        None => Ok(FeatureCollection::default()),
    }
}

fn suffixed(id: &str, k: usize, parts: usize) -> String {
    if parts > 1 {
        format!("{id}#{k}")
    } else {
        id.to_string()
    }
}

/// Parses and validates a map document.
pub fn parse_map(text: &str, terrain_class: TerrainClass) -> Result<EnvironmentMap> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))?;
    let top = doc.as_object().ok_or_else(|| parse_error("top level is not a JSON object"))?;
    match top.get("type").and_then(Value::as_str) {
        Some("EnvironmentMap") => {}
        other => return Err(schema(format!("type must be \"EnvironmentMap\", found {other:?}"))),
    }
    if let Some(crs) = top.get("crs") {
        check_crs(crs)?;
    }
    let layers = top
        .get("layers")
        .and_then(Value::as_object)
        .ok_or_else(|| schema("missing required object \"layers\""))?;
    let building_fc = layer(layers, "buildings", true)?;
    let contour_fc = layer(layers, "contours", false)?;
    let road_fc = layer(layers, "roads", false)?;

    let ground_elevation = match top.get("ground_elevation") {
        None => 0.0,
        Some(v) => v.as_f64().ok_or_else(|| schema("ground_elevation must be a number"))?,
    };

    struct RawBuilding {
        id: String,
        ring: Vec<(f64, f64)>,
        height: f64,
        base: Option<f64>,
    }
    let mut raw_buildings = Vec::new();
    let mut missing = Vec::new();
    for (i, f) in building_fc.features.iter().enumerate() {
        let id = feature_id(f, "buildings", i);
        let Some(height) = number_property(f, "height") else {
            missing.push(id);
            continue;
        };
        let base = number_property(f, "base_elevation");
        let rings = polygons(&id, f)?;
        let parts = rings.len();
        for (k, ring) in rings.into_iter().enumerate() {
            raw_buildings.push(RawBuilding {
                id: suffixed(&id, k, parts),
                ring,
                height,
                base,
            });
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema {
            message: format!("buildings missing a numeric height: {}", missing.join(", ")),
            ids: missing,
        });
    }

    let mut raw_contours = Vec::new();
    let mut missing = Vec::new();
    for (i, f) in contour_fc.features.iter().enumerate() {
        let id = feature_id(f, "contours", i);
        let Some(elevation) = number_property(f, "elevation") else {
            missing.push(id);
            continue;
        };
        let parts = lines(&id, "contour", f)?;
        let n = parts.len();
        for (k, line) in parts.into_iter().enumerate() {
            raw_contours.push((suffixed(&id, k, n), line, elevation));
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema {
            message: format!("contours missing a numeric elevation: {}", missing.join(", ")),
            ids: missing,
        });
    }

    let mut raw_roads = Vec::new();
    for (i, f) in road_fc.features.iter().enumerate() {
        let id = feature_id(f, "roads", i);
        let name = f
            .properties
            .as_ref()
            .and_then(|p| p.get("name"))
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let parts = lines(&id, "road", f)?;
        let n = parts.len();
        for (k, line) in parts.into_iter().enumerate() {
            raw_roads.push((suffixed(&id, k, n), line, name.clone()));
        }
    }

    let origin = match top.get("origin") {
        Some(v) => {
            let lat = v.get("lat").and_then(Value::as_f64);
            let lon = v.get("lon").and_then(Value::as_f64);
            match (lat, lon) {
                (Some(lat), Some(lon)) => GeoPoint::new(lat, lon)?,
                _ => return Err(schema("origin must be {\"lat\": number, \"lon\": number}")),
            }
        }
        None => {
            let all = raw_buildings
                .iter()
                .flat_map(|b| b.ring.iter())
                .chain(raw_contours.iter().flat_map(|c| c.1.iter()))
                .chain(raw_roads.iter().flat_map(|r| r.1.iter()));
            let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
            for &(lon, lat) in all {
                lo = (lo.0.min(lon), lo.1.min(lat));
                hi = (hi.0.max(lon), hi.1.max(lat));
            }
            if lo.0.is_finite() {
                GeoPoint::new((lo.1 + hi.1) / 2.0, (lo.0 + hi.0) / 2.0)?
            } else {
                return Err(schema("map has no geometry and no origin"));
            }
        }
    };
    let frame = LocalFrame::new(origin);
    let local = |ring: &[(f64, f64)]| -> Vec<[f64; 2]> {
        ring.iter()
            .map(|&(lon, lat)| {
                let p = frame.to_local(&GeoPoint {
                    latitude: lat,
                    longitude: lon,
                    altitude: None,
                });
                [p.x, p.y]
            })
            .collect()
    };

    let contours: Vec<ContourLine> = raw_contours
        .iter()
        .map(|(id, line, elevation)| ContourLine {
            id: id.clone(),
            polyline: local(line),
            elevation: *elevation,
        })
        .collect();
    let roads: Vec<Road> = raw_roads
        .iter()
        .map(|(id, line, name)| Road {
            id: id.clone(),
            centerline: local(line),
            name: name.clone(),
        })
        .collect();

    let mut buildings = Vec::with_capacity(raw_buildings.len());
    let mut derived = Vec::new();
    for (i, rb) in raw_buildings.into_iter().enumerate() {
        if rb.base.is_none() {
            derived.push(i);
        }
        buildings.push(Building {
            id: rb.id,
            footprint: local(&rb.ring),
            roof_height: rb.height,
            base_elevation: rb.base.unwrap_or(ground_elevation),
        });
    }
    let map = EnvironmentMap::from_local(origin, terrain_class, ground_elevation, buildings, contours, roads)?;
    if derived.is_empty() || terrain_class == TerrainClass::Flat {
        return Ok(map);
    }
    // base elevation defaults to the terrain under the footprint's vertex centroid
    let mut buildings = map.buildings().to_vec();
    for i in derived {
        let fp = &buildings[i].footprint;
        let n = fp.len() as f64;
        let cx = fp.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = fp.iter().map(|p| p[1]).sum::<f64>() / n;
        buildings[i].base_elevation = map.elevation_at(&LocalPoint::new(cx, cy, 0.0))?;
    }
    EnvironmentMap::from_local(
        origin,
        terrain_class,
        ground_elevation,
        buildings,
        map.contours().to_vec(),
        map.roads().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(features: &str) -> String {
        format!(
            r#"{{"type": "EnvironmentMap", "layers": {{"buildings": {{"type": "FeatureCollection", "features": [{features}]}}}}}}"#
        )
    }

    const BLOCK: &str = r#"{"type": "Feature", "id": "b1", "properties": {"height": 12.5},
        "geometry": {"type": "Polygon", "coordinates": [[[11.0, 44.0], [11.0002, 44.0], [11.0002, 44.0002], [11.0, 44.0002], [11.0, 44.0]]]}}"#;

    #[test]
    fn minimal_file_with_one_building() {
        let map = parse_map(&minimal(BLOCK), TerrainClass::Flat).unwrap();
        assert_eq!(map.buildings().len(), 1);
        assert_eq!(map.terrain_class(), TerrainClass::Flat);
        assert_eq!(map.buildings()[0].roof_height, 12.5);
        assert_eq!(map.buildings()[0].footprint.len(), 4);
        // origin defaults to the bounding-box centre
        assert!((map.origin().latitude - 44.0001).abs() < 1e-12);
        assert!((map.origin().longitude - 11.0001).abs() < 1e-12);
    }

    #[test]
    fn missing_heights_are_listed() {
        let no_height = BLOCK.replace(r#""height": 12.5"#, r#""levels": 4"#);
        let other = no_height.replace("\"b1\"", "\"b7\"");
        let text = minimal(&format!("{no_height}, {BLOCK}, {other}"));
        match parse_map(&text, TerrainClass::Flat).unwrap_err() {
            Error::Schema { ids, .. } => assert_eq!(ids, ["b1", "b7"]),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn projected_crs_is_rejected() {
        let text = minimal(BLOCK).replacen('{', r#"{"crs": "EPSG:32632", "#, 1);
        assert!(matches!(parse_map(&text, TerrainClass::Flat), Err(Error::Schema { .. })));
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse_map("{\"type\": ", TerrainClass::Flat), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_building_layer_is_a_schema_error() {
        let text = r#"{"type": "EnvironmentMap", "layers": {}}"#;
        assert!(matches!(parse_map(text, TerrainClass::Flat), Err(Error::Schema { .. })));
    }

    #[test]
    fn document_round_trips_through_json() {
        let doc = MapDocument {
            origin: Some(GeoPoint::new(44.0, 11.0).unwrap()),
            ground_elevation: Some(42.0),
            buildings: vec![RingRecord {
                id: "b".into(),
                coords: vec![(11.0, 44.0), (11.0001, 44.0), (11.0001, 44.0001)],
                value: 9.0,
                base_elevation: None,
                name: None,
            }],
            contours: vec![],
            roads: vec![RingRecord {
                id: "r".into(),
                coords: vec![(10.999, 44.0), (11.001, 44.0)],
                value: 0.0,
                base_elevation: None,
                name: Some("Via Emilia".into()),
            }],
        };
        let map = parse_map(&doc.to_json(), TerrainClass::Flat).unwrap();
        assert_eq!(map.origin(), GeoPoint::new(44.0, 11.0).unwrap());
        assert_eq!(map.ground_elevation(), 42.0);
        assert_eq!(map.buildings()[0].base_elevation, 42.0);
        assert_eq!(map.roads()[0].name, "Via Emilia");
        assert!(map.buildings()[0].footprint[0][0].abs() < 1e-9);
    }
}
