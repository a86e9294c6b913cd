//! Synthetic flat towns with a known propagation law, for end-to-end tests
//! and demos.
//!
//! A town is a square grid of blocks separated by streets. Each block holds
//! four rectangular buildings of random height. One concentrator stands on
//! the street intersection nearest the centre. Measurements are drive-test
//! fixes along the streets, logged with GPS noise. The true level at a fix is
//!
//! ```text
//! P_tx + G_tx + G_rx - (pl0 + 10 n log10(d)) - chord_loss * chord + N(0, sigma^2)
//! ```
//!
//! where `d` is the 3D antenna distance and `chord` the length of the
//! antenna-to-antenna segment inside building volumes. Levels under the
//! sensitivity are logged as not heard.

use chrono::{DateTime, Duration, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Measurement, NO_COVERAGE_DBM, SENSITIVITY_DBM};
use crate::error::{Error, Result};
use crate::features::Antenna;
use crate::geodata::{parse_map, EnvironmentMap, GeoPoint, LocalFrame, MapDocument, RingRecord, TerrainClass};
use crate::planner::Concentrator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationLaw {
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    /// Loss at 1 m, dB.
    pub pl0: f64,
    pub exponent: f64,
    /// dB per metre inside buildings.
    pub chord_loss: f64,
    pub noise_sigma: f64,
}

impl Default for PropagationLaw {
    fn default() -> Self {
        Self {
            tx_power: 21.0,
            tx_gain: 0.0,
            rx_gain: 0.0,
            pl0: 36.0,
            exponent: 3.5,
            chord_loss: 0.5,
            noise_sigma: 3.0,
        }
    }
}

impl PropagationLaw {
    /// Noise-free level for a link of 3D length `d` with `chord` metres
    /// inside buildings.
    pub fn mean_level(&self, d: f64, chord: f64) -> f64 {
        self.tx_power + self.tx_gain + self.rx_gain - (self.pl0 + 10.0 * self.exponent * d.max(1.0).log10())
            - self.chord_loss * chord
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TownSpec {
    pub origin: GeoPoint,
    /// `town/district` tag.
    pub area: String,
    pub seed: u64,
    pub blocks: usize,
    pub block_size: f64,
    pub street_width: f64,
    pub min_height: f64,
    pub max_height: f64,
    pub ground_elevation: f64,
    pub tx_mast_height: f64,
    pub rx_mast_height: f64,
    pub measurements: usize,
    /// Standard deviation of the logged position error, metres.
    pub gps_sigma: f64,
    pub law: PropagationLaw,
}

impl TownSpec {
    pub fn new(origin: GeoPoint, area: &str, seed: u64) -> Self {
        Self {
            origin,
            area: area.to_string(),
            seed,
            blocks: 8,
            block_size: 50.0,
            street_width: 16.0,
            min_height: 6.0,
            max_height: 24.0,
            ground_elevation: 40.0,
            tx_mast_height: 30.0,
            rx_mast_height: 1.5,
            measurements: 2000,
            gps_sigma: 2.0,
            law: PropagationLaw::default(),
        }
    }

    fn pitch(&self) -> f64 {
        self.block_size + self.street_width
    }

    fn extent(&self) -> f64 {
        self.blocks as f64 * self.pitch() + self.street_width
    }

    /// Street centreline coordinates along either axis.
    fn streets(&self) -> Vec<f64> {
        let half = self.extent() / 2.0;
        (0..=self.blocks)
            .map(|k| -half + self.street_width / 2.0 + k as f64 * self.pitch())
            .collect()
    }
}

/// Axis-aligned box `[x0, x1] x [y0, y1] x [z0, z1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Length of segment `a -> b` inside the box, by clipping the parameter
/// interval against each pair of slabs.
pub fn slab_chord(a: [f64; 3], b: [f64; 3], block: &Block) -> f64 {
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for k in 0..3 {
        let d = b[k] - a[k];
        if d == 0.0 {
            if a[k] < block.min[k] || a[k] > block.max[k] {
                return 0.0;
            }
            continue;
        }
        let (mut lo, mut hi) = ((block.min[k] - a[k]) / d, (block.max[k] - a[k]) / d);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 >= t1 {
            return 0.0;
        }
    }
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
    (t1 - t0) * len
}

#[derive(Debug)]
pub struct SyntheticTown {
    pub spec: TownSpec,
    pub document: MapDocument,
    /// `document` as read back through the map parser.
    pub map: EnvironmentMap,
    pub blocks: Vec<Block>,
    pub tx: Concentrator,
    pub measurements: Vec<Measurement>,
    /// Noise-free level at each measurement's true position.
    pub mean_levels: Vec<f64>,
}

pub fn generate_town(spec: &TownSpec) -> Result<SyntheticTown> {
    if spec.blocks == 0 || !(spec.block_size > 12.0) || !(spec.street_width > 0.0) || !(spec.max_height >= spec.min_height && spec.min_height > 0.0) {
        return Err(Error::InvalidInput {
            name: "town",
            message: format!("degenerate town layout {spec:?}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frame = LocalFrame::new(spec.origin);
    let ground = spec.ground_elevation;
    let streets = spec.streets();
    let half = spec.extent() / 2.0;

    let mut blocks = Vec::new();
    for bx in 0..spec.blocks {
        for by in 0..spec.blocks {
            let x0 = streets[bx] + spec.street_width / 2.0;
            let y0 = streets[by] + spec.street_width / 2.0;
            let (sx, sy) = (rng.random_range(0.35..0.65), rng.random_range(0.35..0.65));
            let xs = [x0, x0 + sx * spec.block_size, x0 + spec.block_size];
            let ys = [y0, y0 + sy * spec.block_size, y0 + spec.block_size];
            for i in 0..2 {
                for j in 0..2 {
                    let gap = 1.5;
                    let inset = [
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..3.0),
                    ];
                    let height = rng.random_range(spec.min_height..=spec.max_height);
                    blocks.push(Block {
                        min: [xs[i] + if i == 0 { inset[0] } else { gap }, ys[j] + if j == 0 { inset[1] } else { gap }, ground],
                        max: [
                            xs[i + 1] - if i == 1 { inset[0] } else { gap },
                            ys[j + 1] - if j == 1 { inset[1] } else { gap },
                            ground + height,
                        ],
                    });
                }
            }
        }
    }

    let to_lon_lat = |x: f64, y: f64| {
        let (lat, lon) = frame.plane_to_geo(x, y);
        (lon, lat)
    };
    let mut document = MapDocument {
        origin: Some(spec.origin),
        ground_elevation: Some(ground),
        ..MapDocument::default()
    };
    for (k, b) in blocks.iter().enumerate() {
        document.buildings.push(RingRecord {
            id: format!("b{k}"),
            coords: vec![
                to_lon_lat(b.min[0], b.min[1]),
                to_lon_lat(b.max[0], b.min[1]),
                to_lon_lat(b.max[0], b.max[1]),
                to_lon_lat(b.min[0], b.max[1]),
            ],
            value: b.max[2] - b.min[2],
            base_elevation: Some(ground),
            name: None,
        });
    }
    for (k, &s) in streets.iter().enumerate() {
        for (axis, id) in [(0, "ew"), (1, "ns")] {
            let (a, b) = if axis == 0 { ((-half, s), (half, s)) } else { ((s, -half), (s, half)) };
            document.roads.push(RingRecord {
                id: format!("{id}{k}"),
                coords: vec![to_lon_lat(a.0, a.1), to_lon_lat(b.0, b.1)],
                value: 0.0,
                base_elevation: None,
                name: Some(format!("{} street {k}", if axis == 0 { "east-west" } else { "north-south" })),
            });
        }
    }
    let map = parse_map(&document.to_json(), TerrainClass::Flat)?;

    let centre = streets[spec.blocks / 2];
    let tx_xy = [centre, centre];
    let (lat, lon) = frame.plane_to_geo(tx_xy[0], tx_xy[1]);
    let tx = Concentrator {
        antenna: Antenna::new(GeoPoint::new(lat, lon)?, spec.tx_mast_height)?,
        tx_power: spec.law.tx_power,
        label: format!("{} concentrator", spec.area),
    };
    let tx_tip = [tx_xy[0], tx_xy[1], ground + spec.tx_mast_height];

    let noise = Normal::new(0.0, spec.law.noise_sigma.max(0.0)).expect("finite sigma");
    let gps = Normal::new(0.0, spec.gps_sigma.max(0.0)).expect("finite sigma");
    let start: DateTime<Utc> = DateTime::from_timestamp(1_714_550_400, 0).expect("valid epoch");
    let mut measurements = Vec::with_capacity(spec.measurements);
    let mut mean_levels = Vec::with_capacity(spec.measurements);
    while measurements.len() < spec.measurements {
        let street = streets[rng.random_range(0..streets.len())];
        let along = rng.random_range(-half + 2.0..half - 2.0);
        let xy = if rng.random_bool(0.5) { [along, street] } else { [street, along] };
        if (xy[0] - tx_xy[0]).hypot(xy[1] - tx_xy[1]) < 5.0 {
            continue;
        }
        let rx_tip = [xy[0], xy[1], ground + spec.rx_mast_height];
        let d = ((rx_tip[0] - tx_tip[0]).powi(2) + (rx_tip[1] - tx_tip[1]).powi(2) + (rx_tip[2] - tx_tip[2]).powi(2)).sqrt();
        let chord: f64 = blocks.iter().map(|b| slab_chord(tx_tip, rx_tip, b)).sum();
        let mean = spec.law.mean_level(d, chord);
        let level = mean + noise.sample(&mut rng);
        let rssi = if level >= SENSITIVITY_DBM {
            (level * 100.0).round() / 100.0
        } else {
            NO_COVERAGE_DBM
        };
        let logged = [xy[0] + gps.sample(&mut rng), xy[1] + gps.sample(&mut rng)];
        let (lat, lon) = frame.plane_to_geo(logged[0], logged[1]);
        let i = measurements.len();
        measurements.push(Measurement {
            timestamp: start + Duration::seconds(i as i64),
            position: GeoPoint::new(lat, lon)?.with_altitude(ground),
            speed: rng.random_range(3.0..12.0),
            heading: rng.random_range(0.0..360.0),
            satellite_count: rng.random_range(6..13),
            meter_address: format!("{:08X}", rng.random::<u32>()),
            rssi,
        });
        mean_levels.push(mean);
    }

    Ok(SyntheticTown {
        spec: spec.clone(),
        document,
        map,
        blocks,
        tx,
        measurements,
        mean_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_chord_through_a_cube() {
        let b = Block {
            min: [0.0, 0.0, 0.0],
            max: [10.0, 10.0, 10.0],
        };
        assert!((slab_chord([-5.0, 5.0, 5.0], [15.0, 5.0, 5.0], &b) - 10.0).abs() < 1e-12);
        assert_eq!(slab_chord([-5.0, 5.0, 15.0], [15.0, 5.0, 15.0], &b), 0.0);
        // diagonal through opposite corners
        let d = slab_chord([-1.0, -1.0, -1.0], [11.0, 11.0, 11.0], &b);
        assert!((d - 300f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn towns_are_reproducible() {
        let mut spec = TownSpec::new(GeoPoint::new(44.5, 11.3).unwrap(), "a/centre", 5);
        spec.measurements = 50;
        let a = generate_town(&spec).unwrap();
        let b = generate_town(&spec).unwrap();
        assert_eq!(a.measurements, b.measurements);
        assert_eq!(a.map.buildings().len(), spec.blocks * spec.blocks * 4);
        assert!(a.measurements.iter().all(|m| m.rssi == -120.0 || m.rssi >= -119.0));
    }
}
