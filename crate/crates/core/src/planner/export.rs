//! Raster images, their georeferencing sidecar and coverage outlines.

use std::collections::BTreeMap;
use std::fmt::Write;

use geojson::{Feature, FeatureCollection, Geometry, GeometryValue, JsonObject, Position};
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, RgbaImage};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::legend::parse_color;
use super::{CoverageRaster, SERVER_COLORS};
use crate::error::{Error, Result};
use crate::geodata::{point_in_ring, ring_area, LocalFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "layer", content = "index")]
pub enum RasterLayer {
    /// Best-server level wherever some concentrator covers.
    Merged,
    /// One concentrator's level wherever its classifier covers.
    Concentrator(usize),
    /// One colour per best server.
    BestServer,
}

impl RasterLayer {
    pub fn name(&self) -> String {
        match self {
            RasterLayer::Merged => "merged".into(),
            RasterLayer::Concentrator(k) => format!("concentrator-{k}"),
            RasterLayer::BestServer => "best-server".into(),
        }
    }
}

fn check_layer(raster: &CoverageRaster, layer: RasterLayer) -> Result<()> {
    match layer {
        RasterLayer::Concentrator(k) if k >= raster.concentrators.len() => Err(Error::InvalidInput {
            name: "layer",
            message: format!("raster has {} concentrators, no index {k}", raster.concentrators.len()),
        }),
        _ => Ok(()),
    }
}

fn node_color(raster: &CoverageRaster, layer: RasterLayer, n: usize) -> [u8; 4] {
    let no = parse_color(&raster.legend.no_coverage);
    match layer {
        RasterLayer::Merged => raster.merged_rss[n].map_or(no, |v| parse_color(raster.legend.color(v))),
        RasterLayer::Concentrator(k) => {
            let g = &raster.concentrators[k];
            match (g.coverage[n], g.rss[n]) {
                (Some(true), Some(v)) => parse_color(raster.legend.color(v)),
                _ => no,
            }
        }
        RasterLayer::BestServer => raster.best_server[n].map_or(no, |k| parse_color(SERVER_COLORS[k % SERVER_COLORS.len()])),
    }
}

/// One pixel per lattice node, north up.
pub fn raster_png(raster: &CoverageRaster, layer: RasterLayer) -> Result<Vec<u8>> {
    check_layer(raster, layer)?;
    let (w, h) = (raster.lattice.columns, raster.lattice.rows);
    let mut img = RgbaImage::new(w as u32, h as u32);
    for n in 0..w * h {
        let (i, j) = (n % w, n / w);
        img.put_pixel(i as u32, (h - 1 - j) as u32, image::Rgba(node_color(raster, layer, n)));
    }
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(img.as_raw(), w as u32, h as u32, ExtendedColorType::Rgba8)
        .map_err(|e| Error::InvalidInput {
            name: "raster",
            message: e.to_string(),
        })?;
    Ok(out)
}

/// Georeferencing for [`raster_png`]: pixel centres are lattice nodes,
/// pixel row 0 is the northern row.
pub fn sidecar_text(raster: &CoverageRaster, layer: RasterLayer) -> String {
    let l = &raster.lattice;
    let mut s = String::new();
    let mut line = |k: &str, v: String| writeln!(s, "{k}: {v}").expect("writing to a String");
    line("format", "vhfplan-raster v1".into());
    line("layer", layer.name());
    line("crs", "EPSG:4326".into());
    line("columns", l.columns.to_string());
    line("rows", l.rows.to_string());
    line("step_x_m", l.spec.step_x.to_string());
    line("step_y_m", l.spec.step_y.to_string());
    line("south_west_lat", l.south_west.latitude.to_string());
    line("south_west_lon", l.south_west.longitude.to_string());
    line("north_east_lat", l.north_east.latitude.to_string());
    line("north_east_lon", l.north_east.longitude.to_string());
    line("pixel_anchor", "centre of the lattice node; row 0 is north".into());
    for b in &raster.legend.bins {
        line("legend", format!("{} {} {}", b.lower, b.upper, b.color));
    }
    line("no_coverage", raster.legend.no_coverage.clone());
    s
}

type Vertex = (i64, i64);

/// Outlines of the covered cells of a `columns x rows` mask, in lattice
/// vertex units: cell `(i, j)` spans vertices `(i, j)` to `(i + 1, j + 1)`.
/// Each polygon is an outer ring (counter-clockwise) followed by its holes
/// (clockwise); rings are closed and cells touching only at a corner belong
/// to different polygons.
pub(crate) fn trace_mask(mask: &[bool], columns: usize, rows: usize) -> Vec<Vec<Vec<[f64; 2]>>> {
    let covered = |i: i64, j: i64| {
        i >= 0 && j >= 0 && (i as usize) < columns && (j as usize) < rows && mask[j as usize * columns + i as usize]
    };
    // directed boundary edges with the covered cell on their left
    let mut edges: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    let mut add = |a: Vertex, b: Vertex| edges.entry(a).or_default().push(b);
    for j in 0..rows as i64 {
        for i in 0..columns as i64 {
            if !covered(i, j) {
                continue;
            }
            if !covered(i, j - 1) {
                add((i, j), (i + 1, j));
            }
            if !covered(i + 1, j) {
                add((i + 1, j), (i + 1, j + 1));
            }
            if !covered(i, j + 1) {
                add((i + 1, j + 1), (i, j + 1));
            }
            if !covered(i - 1, j) {
                add((i, j + 1), (i, j));
            }
        }
    }

    let mut rings: Vec<Vec<[f64; 2]>> = Vec::new();
    let starts: Vec<Vertex> = edges.keys().copied().collect();
    for start in starts {
        while !edges[&start].is_empty() {
            rings.push(trace_ring(&mut edges, start));
        }
    }

    let (outers, holes): (Vec<_>, Vec<_>) = rings.into_iter().partition(|r| ring_area(r) > 0.0);
    let mut polygons: Vec<Vec<Vec<[f64; 2]>>> = outers.into_iter().map(|r| vec![r]).collect();
    for hole in holes {
        // centre of the covered cell left of the hole's first edge
        let (a, b) = (hole[0], hole[1 % hole.len()]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt().max(1.0);
        let probe = [
            (a[0] + b[0]) / 2.0 - 0.5 * (b[1] - a[1]) / len,
            (a[1] + b[1]) / 2.0 + 0.5 * (b[0] - a[0]) / len,
        ];
        let owner = polygons
            .iter_mut()
            .filter(|p| point_in_ring(&p[0], probe))
            .min_by(|p, q| ring_area(&p[0]).total_cmp(&ring_area(&q[0])));
        if let Some(p) = owner {
            p.push(hole);
        }
    }
    for p in &mut polygons {
        for r in p.iter_mut() {
            r.push(r[0]);
        }
    }
    polygons
}

fn trace_ring(edges: &mut BTreeMap<Vertex, Vec<Vertex>>, start: Vertex) -> Vec<[f64; 2]> {
    let mut ring = vec![start];
    let mut at = start;
    let mut dir: Option<Vertex> = None;
    loop {
        let outs = edges.get_mut(&at).expect("traced vertices have edges");
        if outs.is_empty() {
            break;
        }
        // at a corner shared by two diagonal cells, turn left
        let pick = match dir {
            Some(d) if outs.len() > 1 => outs
                .iter()
                .position(|&b| d.0 * (b.1 - at.1) - d.1 * (b.0 - at.0) > 0)
                .unwrap_or(0),
            _ => 0,
        };
        let next = outs.swap_remove(pick);
        dir = Some((next.0 - at.0, next.1 - at.1));
        at = next;
        if at == start {
            break;
        }
        ring.push(at);
    }
    drop_collinear(ring)
}

fn drop_collinear(ring: Vec<Vertex>) -> Vec<[f64; 2]> {
    let n = ring.len();
    let kept: Vec<Vertex> = (0..n)
        .filter(|&k| {
            let (p, c, q) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            (c.0 - p.0) * (q.1 - c.1) - (c.1 - p.1) * (q.0 - c.0) != 0
        })
        .map(|k| ring[k])
        .collect();
    kept.into_iter().map(|(x, y)| [x as f64, y as f64]).collect()
}

/// Outline of each concentrator's classifier coverage as a GeoJSON
/// `FeatureCollection` of `MultiPolygon`s, ids `concentrator-<k>`. Every
/// node stands for a `step_x` by `step_y` cell centred on it.
pub fn coverage_boundary(raster: &CoverageRaster, frame: &LocalFrame) -> FeatureCollection {
    let l = &raster.lattice;
    let to_position = |v: &[f64; 2]| {
        let x = l.min_x + (v[0] - 0.5) * l.spec.step_x;
        let y = l.min_y + (v[1] - 0.5) * l.spec.step_y;
        let (lat, lon) = frame.plane_to_geo(x, y);
        Position::from([lon, lat])
    };
    FeatureCollection::new(raster.concentrators.iter().enumerate().map(|(k, g)| {
        let mask: Vec<bool> = g.coverage.iter().map(|c| *c == Some(true)).collect();
        let polygons = trace_mask(&mask, l.columns, l.rows)
            .iter()
            .map(|p| p.iter().map(|r| r.iter().map(to_position).collect()).collect())
            .collect();
        let props: JsonObject = match json!({ "label": g.label, "concentrator": k, "tx_power": g.tx_power }) {
            serde_json::Value::Object(m) => m,
            _ => unreachable!(),
        };
        Feature {
            bbox: None,
            geometry: Some(Geometry::new(GeometryValue::MultiPolygon { coordinates: polygons })),
            id: Some(geojson::feature::Id::String(format!("concentrator-{k}"))),
            properties: Some(props),
            foreign_members: None,
        }
    }))
}
