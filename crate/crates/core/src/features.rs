//! Per-location feature vectors.
//!
//! Every link is described by seven numbers whose order depends on the
//! terrain class:
//!
//! | index | Flat     | Hilly    |
//! |-------|----------|----------|
//! | 0     | `d`      | `d`      |
//! | 1     | `phi`    | `phi`    |
//! | 2     | `h_max`  | `h_max`  |
//! | 3     | `h_av`   | `h_av`   |
//! | 4     | `ptb`    | `ptb`    |
//! | 5     | `d_tx`   | `dh`     |
//! | 6     | `d_rx`   | `ptg`    |
//!
//! `d` is the 3D TX-RX distance, `phi` the elevation angle of the receiver
//! seen from the transmitter (radians, positive when RX is higher), `h_max`
//! and `h_av` the largest and mean height of the blocking buildings, `ptb`
//! and `ptg` the fractions of the link inside buildings and underground,
//! `d_tx`/`d_rx` the free runs from each antenna to the first blocking
//! building, and `dh` the TX-minus-RX antenna elevation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{
    geodesic_distance, EnvironmentMap, GeoPoint, LocalPoint, TerrainClass, DEFAULT_TERRAIN_STEP,
};

pub const FEATURE_COUNT: usize = 7;

pub const FLAT_FEATURES: [&str; FEATURE_COUNT] = ["d", "phi", "h_max", "h_av", "ptb", "d_tx", "d_rx"];
pub const HILLY_FEATURES: [&str; FEATURE_COUNT] = ["d", "phi", "h_max", "h_av", "ptb", "dh", "ptg"];

pub fn feature_names(class: TerrainClass) -> [&'static str; FEATURE_COUNT] {
    match class {
        TerrainClass::Flat => FLAT_FEATURES,
        TerrainClass::Hilly => HILLY_FEATURES,
    }
}

/// An antenna standing `mast_height` metres above the terrain at `position`.
/// The altitude of `position`, if any, is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Antenna {
    pub position: GeoPoint,
    pub mast_height: f64,
}

impl Antenna {
    pub fn new(position: GeoPoint, mast_height: f64) -> Result<Self> {
        let a = Self {
            position,
            mast_height,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        if !(self.mast_height >= 0.0 && self.mast_height.is_finite()) {
            return Err(Error::InvalidInput {
                name: "mast_height",
                message: format!("must be finite and >= 0, got {}", self.mast_height),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub terrain_class: TerrainClass,
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingProfile {
    pub h_max: f64,
    pub h_av: f64,
    pub ptb: f64,
    pub d_tx: f64,
    pub d_rx: f64,
    /// Number of blocking buildings.
    pub k: usize,
}

/// All quantities computed for one link, whichever terrain class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBreakdown {
    pub d: f64,
    pub d_wgs84: f64,
    /// True when the horizontal distance fell back to the spherical formula.
    pub approximate: bool,
    pub phi: f64,
    pub dh: f64,
    pub blocking: BlockingProfile,
    /// `None` on flat maps.
    pub ptg: Option<f64>,
    /// Number of underground runs, `None` on flat maps.
    pub n: Option<usize>,
}

impl FeatureBreakdown {
    pub fn vector(&self, class: TerrainClass) -> FeatureVector {
        let b = &self.blocking;
        let tail = match class {
            TerrainClass::Flat => [b.d_tx, b.d_rx],
            TerrainClass::Hilly => [self.dh, self.ptg.unwrap_or(0.0)],
        };
        FeatureVector {
            values: [self.d, self.phi, b.h_max, b.h_av, b.ptb, tail[0], tail[1]],
            terrain_class: class,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// Sampling step along the link for the underground fraction, metres.
    pub terrain_step: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            terrain_step: DEFAULT_TERRAIN_STEP,
        }
    }
}

/// Horizontal separations below this many metres count as one position.
pub const MIN_SEPARATION: f64 = 1e-3;

/// Antenna tips in the local frame with `z` the absolute elevation, plus
/// the distances every feature is normalised by.
struct Link {
    tx: LocalPoint,
    rx: LocalPoint,
    dh: f64,
    d_wgs84: f64,
    approximate: bool,
    d: f64,
}

fn antenna_tip(map: &EnvironmentMap, a: &Antenna) -> Result<LocalPoint> {
    a.validate()?;
    let mut p = map.to_local(&GeoPoint {
        altitude: None,
        ..a.position
    });
    p.z = map.elevation_at(&p)? + a.mast_height;
    Ok(p)
}

impl Link {
    fn new(map: &EnvironmentMap, tx: &Antenna, rx: &Antenna) -> Result<Self> {
        let t = antenna_tip(map, tx)?;
        let r = antenna_tip(map, rx)?;
        let dist = geodesic_distance(&tx.position, &rx.position);
        let dh = t.z - r.z;
        Ok(Self {
            tx: t,
            rx: r,
            dh,
            d_wgs84: dist.meters,
            approximate: dist.approximate,
            d: dh.hypot(dist.meters),
        })
    }

    fn require_distinct(&self) -> Result<()> {
        if self.d_wgs84 >= MIN_SEPARATION {
            Ok(())
        } else {
            Err(Error::InvalidInput {
                name: "rx",
                message: "transmitter and receiver share a horizontal position".into(),
            })
        }
    }

    fn blocking(&self, map: &EnvironmentMap) -> BlockingProfile {
        let cuts = map.segment_building_intersections(&self.tx, &self.rx);
        if cuts.is_empty() {
            return BlockingProfile {
                h_max: 0.0,
                h_av: 0.0,
                ptb: 0.0,
                d_tx: self.d,
                d_rx: self.d,
                k: 0,
            };
        }
        let k = cuts.len();
        let h_max = cuts.iter().map(|c| c.height).fold(f64::NEG_INFINITY, f64::max);
        let h_av = cuts.iter().map(|c| c.height).sum::<f64>() / k as f64;
        let ptb = cuts.iter().map(|c| c.fraction).sum::<f64>().min(1.0);
        let first = cuts.iter().map(|c| c.t_entry).fold(f64::INFINITY, f64::min);
        let last = cuts.iter().map(|c| c.t_exit).fold(f64::NEG_INFINITY, f64::max);
        BlockingProfile {
            h_max,
            h_av: h_av.min(h_max),
            ptb,
            d_tx: first * self.d,
            d_rx: (1.0 - last) * self.d,
            k,
        }
    }

    fn ground(&self, map: &EnvironmentMap, step: f64) -> Result<(f64, usize)> {
        let runs = map.segment_terrain_intersections(&self.tx, &self.rx, step)?;
        let ptg = runs.iter().map(|r| r.t_end - r.t_start).sum::<f64>().min(1.0);
        Ok((ptg, runs.len()))
    }
}

/// TX antenna elevation minus RX antenna elevation, metres.
pub fn differential_height(tx: &Antenna, rx: &Antenna, map: &EnvironmentMap) -> Result<f64> {
    Ok(antenna_tip(map, tx)?.z - antenna_tip(map, rx)?.z)
}

/// `sqrt(dh^2 + d_wgs84^2)` with `d_wgs84` the ellipsoidal distance.
pub fn tx_rx_distance(tx: &Antenna, rx: &Antenna, map: &EnvironmentMap) -> Result<f64> {
    let link = Link::new(map, tx, rx)?;
    link.require_distinct()?;
    Ok(link.d)
}

/// Elevation angle of the receiver seen from the transmitter, radians.
pub fn angular_deviation(tx: &Antenna, rx: &Antenna, map: &EnvironmentMap) -> Result<f64> {
    let link = Link::new(map, tx, rx)?;
    link.require_distinct()?;
    Ok((-link.dh).atan2(link.d_wgs84))
}

pub fn blocking_profile(map: &EnvironmentMap, tx: &Antenna, rx: &Antenna) -> Result<BlockingProfile> {
    let link = Link::new(map, tx, rx)?;
    link.require_distinct()?;
    Ok(link.blocking(map))
}

/// Fraction of the link lying underground.
pub fn portion_through_ground(
    map: &EnvironmentMap,
    tx: &Antenna,
    rx: &Antenna,
    options: &FeatureOptions,
) -> Result<f64> {
    let link = Link::new(map, tx, rx)?;
    link.require_distinct()?;
    Ok(link.ground(map, options.terrain_step)?.0)
}

pub fn feature_breakdown(
    map: &EnvironmentMap,
    tx: &Antenna,
    rx: &Antenna,
    options: &FeatureOptions,
) -> Result<FeatureBreakdown> {
    let link = Link::new(map, tx, rx)?;
    link.require_distinct()?;
    let (ptg, n) = match map.terrain_class() {
        TerrainClass::Flat => (None, None),
        TerrainClass::Hilly => {
            let (ptg, n) = link.ground(map, options.terrain_step)?;
            (Some(ptg), Some(n))
        }
    };
    Ok(FeatureBreakdown {
        d: link.d,
        d_wgs84: link.d_wgs84,
        approximate: link.approximate,
        phi: (-link.dh).atan2(link.d_wgs84),
        dh: link.dh,
        blocking: link.blocking(map),
        ptg,
        n,
    })
}

pub fn extract_features(map: &EnvironmentMap, tx: &Antenna, rx: &Antenna) -> Result<FeatureVector> {
    extract_features_with(map, tx, rx, &FeatureOptions::default())
}

pub fn extract_features_with(
    map: &EnvironmentMap,
    tx: &Antenna,
    rx: &Antenna,
    options: &FeatureOptions,
) -> Result<FeatureVector> {
    Ok(feature_breakdown(map, tx, rx, options)?.vector(map.terrain_class()))
}

/// One row of a feature dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub position: GeoPoint,
    pub features: FeatureVector,
}

/// Writes `id,lat,lon,<7 feature columns>,terrain_class` rows with a header
/// named after the first row's terrain class.
pub fn write_feature_dump<W: Write>(out: W, rows: &[FeatureRow]) -> Result<()> {
    let class = rows.first().map_or(TerrainClass::Flat, |r| r.features.terrain_class);
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput {
        name: "feature dump",
        message: e.to_string(),
    };
    let mut header = vec!["id", "lat", "lon"];
    header.extend(feature_names(class));
    header.push("terrain_class");
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut rec = vec![
            r.id.clone(),
            r.position.latitude.to_string(),
            r.position.longitude.to_string(),
        ];
        rec.extend(r.features.values.iter().map(f64::to_string));
        rec.push(r.features.terrain_class.as_str().to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("feature dump", e))?;
    Ok(())
}
