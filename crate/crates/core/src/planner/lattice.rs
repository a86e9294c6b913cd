//! Prediction lattices and coverage rasters.

use serde::{Deserialize, Serialize};

use super::Legend;
use crate::error::{Error, Result};
use crate::geodata::{GeoPoint, LocalFrame};

pub const DEFAULT_LATTICE_STEP: f64 = 8.0;

/// Rectangle given by two opposite corners, sampled every `step_x` metres
/// east and `step_y` metres north.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub corner_a: GeoPoint,
    pub corner_b: GeoPoint,
    pub step_x: f64,
    pub step_y: f64,
}

impl LatticeSpec {
    pub fn new(corner_a: GeoPoint, corner_b: GeoPoint) -> Self {
        Self {
            corner_a,
            corner_b,
            step_x: DEFAULT_LATTICE_STEP,
            step_y: DEFAULT_LATTICE_STEP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.corner_a.validate()?;
        self.corner_b.validate()?;
        if !(self.step_x > 0.0 && self.step_y > 0.0 && self.step_x.is_finite() && self.step_y.is_finite()) {
            return Err(Error::InvalidInput {
                name: "lattice",
                message: format!("steps must be positive, got {} x {}", self.step_x, self.step_y),
            });
        }
        if self.corner_a.latitude == self.corner_b.latitude && self.corner_a.longitude == self.corner_b.longitude {
            return Err(Error::InvalidInput {
                name: "lattice",
                message: "corners coincide".into(),
            });
        }
        Ok(())
    }
}

/// Nodes of a lattice in a map frame. Node `(i, j)` sits `i` steps east
/// and `j` steps north of the south-west corner and has index
/// `j * columns + i`, so row 0 is the southern edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub spec: LatticeSpec,
    pub columns: usize,
    pub rows: usize,
    /// Local coordinates of node 0.
    pub min_x: f64,
    pub min_y: f64,
    /// Geographic position of node 0.
    pub south_west: GeoPoint,
    /// Geographic position of the last node.
    pub north_east: GeoPoint,
}

fn nodes_along(extent: f64, step: f64) -> usize {
    // one node per started step plus the closing node
    ((extent / step - 1e-9).ceil().max(0.0) as usize) + 1
}

impl Lattice {
    pub fn new(spec: LatticeSpec, frame: &LocalFrame) -> Result<Self> {
        spec.validate()?;
        let flat = |p: &GeoPoint| {
            frame.to_local(&GeoPoint {
                altitude: None,
                ..*p
            })
        };
        let (a, b) = (flat(&spec.corner_a), flat(&spec.corner_b));
        let (min_x, max_x) = (a.x.min(b.x), a.x.max(b.x));
        let (min_y, max_y) = (a.y.min(b.y), a.y.max(b.y));
        let columns = nodes_along(max_x - min_x, spec.step_x);
        let rows = nodes_along(max_y - min_y, spec.step_y);
        let geo = |x: f64, y: f64| {
            let (latitude, longitude) = frame.plane_to_geo(x, y);
            GeoPoint {
                latitude,
                longitude,
                altitude: None,
            }
        };
        Ok(Self {
            spec,
            columns,
            rows,
            min_x,
            min_y,
            south_west: geo(min_x, min_y),
            north_east: geo(
                min_x + (columns - 1) as f64 * spec.step_x,
                min_y + (rows - 1) as f64 * spec.step_y,
            ),
        })
    }

    pub fn len(&self) -> usize {
        self.columns * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Local `(x, y)` of node `index`.
    pub fn node_xy(&self, index: usize) -> [f64; 2] {
        let (i, j) = (index % self.columns, index / self.columns);
        [
            self.min_x + i as f64 * self.spec.step_x,
            self.min_y + j as f64 * self.spec.step_y,
        ]
    }
}

/// Predictions of one concentrator over a lattice. Every vector has one
/// entry per node; `None` marks nodes where no link could be built (outside
/// the map, or at the concentrator itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentratorGrid {
    pub label: String,
    pub tx_power: f64,
    /// Shift added to the regression output for this transmit power, dB.
    pub power_delta: f64,
    /// Predicted level shifted to `tx_power`, dBm.
    pub rss: Vec<Option<f64>>,
    /// Classifier decision.
    pub coverage: Vec<Option<bool>>,
    /// `rss >= sensitivity`.
    pub budget_coverage: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRaster {
    pub lattice: Lattice,
    pub concentrators: Vec<ConcentratorGrid>,
    /// Classifier-covering concentrator with the strongest level.
    pub best_server: Vec<Option<usize>>,
    /// Level of the best server.
    pub merged_rss: Vec<Option<f64>>,
    pub inside_building: Vec<bool>,
    pub legend: Legend,
    pub notes: Vec<String>,
}

/// Per node, the covering concentrator with the highest level and that
/// level. Ties go to the lowest index.
pub fn best_server(grids: &[ConcentratorGrid], nodes: usize) -> (Vec<Option<usize>>, Vec<Option<f64>>) {
    let mut best = vec![None; nodes];
    let mut merged = vec![None; nodes];
    for n in 0..nodes {
        let mut top: Option<(usize, f64)> = None;
        for (k, g) in grids.iter().enumerate() {
            if g.coverage[n] != Some(true) {
                continue;
            }
            let Some(rss) = g.rss[n] else { continue };
            if top.is_none_or(|(_, r)| rss > r) {
                top = Some((k, rss));
            }
        }
        best[n] = top.map(|t| t.0);
        merged[n] = top.map(|t| t.1);
    }
    (best, merged)
}

impl CoverageRaster {
    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("rasters serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> LocalFrame {
        LocalFrame::new(GeoPoint::new(44.0, 11.0).unwrap())
    }

    fn spec_for(width: f64, height: f64, step: f64) -> LatticeSpec {
        let f = frame();
        let (la, lo) = f.plane_to_geo(0.0, 0.0);
        let (lb, lob) = f.plane_to_geo(width, height);
        LatticeSpec {
            corner_a: GeoPoint::new(la, lo).unwrap(),
            corner_b: GeoPoint::new(lb, lob).unwrap(),
            step_x: step,
            step_y: step,
        }
    }

    #[test]
    fn eighty_metres_at_eight() {
        let l = Lattice::new(spec_for(80.0, 80.0, 8.0), &frame()).unwrap();
        assert_eq!((l.columns, l.rows), (11, 11));
    }

    #[test]
    fn partial_steps_round_up() {
        let l = Lattice::new(spec_for(81.0, 8.0, 8.0), &frame()).unwrap();
        assert_eq!((l.columns, l.rows), (12, 2));
    }

    #[test]
    fn row_zero_is_south() {
        let l = Lattice::new(spec_for(16.0, 16.0, 8.0), &frame()).unwrap();
        let [_, y0] = l.node_xy(0);
        let [_, y8] = l.node_xy(8);
        assert!(y8 > y0);
        assert!(l.north_east.latitude > l.south_west.latitude);
    }
}
