//! Flag groups shared by several commands and their value parsers.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use vhfplan_core::features::Antenna;
use vhfplan_core::geodata::{GeoPoint, TerrainClass, DEFAULT_ROAD_GATE};
use vhfplan_core::planner::{Concentrator, LinkBudget, PipelineOptions, TrainingConfig, TX_POWER_LEVELS};
use vhfplan_core::tuning::{BoundPolicy, GridSpec};

fn numbers(s: &str, want: std::ops::RangeInclusive<usize>, what: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !want.contains(&parts.len()) {
        return Err(format!("{what}: expected {} comma-separated numbers, got {s:?}", want.start()));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("{what}: {p:?}: {e}")))
        .collect()
}

/// `LAT,LON`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLonArg {
    pub lat: f64,
    pub lon: f64,
}

impl FromStr for LatLonArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = numbers(s, 2..=2, "LAT,LON")?;
        Ok(Self { lat: v[0], lon: v[1] })
    }
}

impl LatLonArg {
    pub fn point(&self) -> vhfplan_core::Result<GeoPoint> {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// `LAT,LON,MAST_HEIGHT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteArg {
    pub lat: f64,
    pub lon: f64,
    pub mast_height: f64,
}

impl FromStr for SiteArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = numbers(s, 3..=3, "LAT,LON,MAST_HEIGHT")?;
        Ok(Self { lat: v[0], lon: v[1], mast_height: v[2] })
    }
}

impl SiteArg {
    pub fn concentrator(&self, tx_power: f64, label: &str) -> vhfplan_core::Result<Concentrator> {
        let c = Concentrator {
            antenna: Antenna::new(GeoPoint::new(self.lat, self.lon)?, self.mast_height)?,
            tx_power,
            label: label.to_string(),
        };
        c.validate()?;
        Ok(c)
    }
}

/// `LAT,LON,MAST_HEIGHT,TX_POWER[,LABEL]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentratorArg {
    pub site: SiteArg,
    pub tx_power: f64,
    pub label: Option<String>,
}

impl FromStr for ConcentratorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.splitn(5, ',').collect();
        if parts.len() < 4 {
            return Err(format!("LAT,LON,MAST_HEIGHT,TX_POWER[,LABEL]: got {s:?}"));
        }
        let site = parts[..3].join(",").parse()?;
        let tx_power = parts[3].trim().parse::<f64>().map_err(|e| format!("TX_POWER {:?}: {e}", parts[3]))?;
        let label = parts.get(4).map(|l| l.trim().to_string()).filter(|l| !l.is_empty());
        Ok(Self { site, tx_power, label })
    }
}

/// `C_MIN:C_MAX:GAMMA_MIN:GAMMA_MAX[:STEP]`, exponents of two.
pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let v: Vec<i32> = s
        .split(':')
        .map(|p| p.trim().parse::<i32>().map_err(|e| format!("grid {s:?}: {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let g = match v[..] {
        [c_min, c_max, gamma_min, gamma_max] => GridSpec { c_min, c_max, gamma_min, gamma_max, step: 1 },
        [c_min, c_max, gamma_min, gamma_max, step] => GridSpec { c_min, c_max, gamma_min, gamma_max, step },
        _ => return Err(format!("grid {s:?}: expected C_MIN:C_MAX:GAMMA_MIN:GAMMA_MAX[:STEP]")),
    };
    g.validate().map_err(|e| e.to_string())?;
    Ok(g)
}

pub fn parse_tx_power(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if TX_POWER_LEVELS.contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} dBm is not one of {TX_POWER_LEVELS:?}"))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MapArgs {
    /// Map file (JSON with building, contour and road layers).
    #[arg(long)]
    pub map: PathBuf,
    /// Terrain class of the map: flat or hilly.
    #[arg(long, default_value = "flat")]
    pub terrain: TerrainClass,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    /// Transmit antenna gain, dB.
    #[arg(long, default_value_t = 0.0)]
    pub tx_gain: f64,
    /// Receive antenna gain, dB.
    #[arg(long, default_value_t = 0.0)]
    pub rx_gain: f64,
    /// Receiver sensitivity, dBm.
    #[arg(long, default_value_t = -119.0, allow_negative_numbers = true)]
    pub sensitivity: f64,
    /// Transmit power the training measurements were taken at, dBm; the
    /// model's own when absent.
    #[arg(long)]
    pub reference_power: Option<f64>,
}

impl BudgetArgs {
    pub fn budget(&self, default_reference: f64) -> LinkBudget {
        LinkBudget {
            tx_gain: self.tx_gain,
            rx_gain: self.rx_gain,
            sensitivity: self.sensitivity,
            reference_tx_power: self.reference_power.unwrap_or(default_reference),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    /// Receiver antenna height above ground, metres.
    #[arg(long, default_value_t = 1.5)]
    pub rx_mast: f64,
    /// Snap GPS fixes within this many metres onto roads.
    #[arg(long, default_value_t = DEFAULT_ROAD_GATE)]
    pub road_gate: f64,
    /// Keep GPS fixes where they were logged.
    #[arg(long)]
    pub no_road_snap: bool,
    /// Terrain sampling step along hilly links, metres.
    #[arg(long)]
    pub terrain_step: Option<f64>,
}

impl PipelineArgs {
    pub fn options(&self) -> PipelineOptions {
        let mut o = PipelineOptions {
            rx_mast_height: self.rx_mast,
            road_gate: (!self.no_road_snap).then_some(self.road_gate),
            ..PipelineOptions::default()
        };
        if let Some(step) = self.terrain_step {
            o.features.terrain_step = step;
        }
        o
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainingArgs {
    /// Seed of the train/test permutation and the folds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Classification grid, C_MIN:C_MAX:GAMMA_MIN:GAMMA_MAX[:STEP] as powers of two.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub cls_grid: Option<GridSpec>,
    /// Regression grid, same form as --cls-grid.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub reg_grid: Option<GridSpec>,
    /// Width of the insensitive tube of the regression loss, dB.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl TrainingArgs {
    pub fn config(&self, pipeline: &PipelineArgs) -> TrainingConfig {
        let d = TrainingConfig::default();
        TrainingConfig {
            seed: self.seed,
            train_fraction: self.train_fraction,
            folds: self.folds,
            classification_grid: self.cls_grid.unwrap_or(d.classification_grid),
            regression_grid: self.reg_grid.unwrap_or(d.regression_grid),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            pipeline: pipeline.options(),
            ..d
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    /// Starting accuracy bound, percent; the terrain class default otherwise.
    #[arg(long)]
    pub accuracy_bound: Option<f64>,
    /// Accuracy bound decrement per relaxation, percent.
    #[arg(long, default_value_t = 5.0)]
    pub accuracy_step: f64,
    /// Starting RMSE bound, dB.
    #[arg(long, default_value_t = 8.0)]
    pub rmse_bound: f64,
    /// Growth of the squared RMSE bound per relaxation, dB^2.
    #[arg(long, default_value_t = 4.0)]
    pub rmse_increment: f64,
}

impl BoundArgs {
    pub fn policies(&self, class: TerrainClass) -> (BoundPolicy, BoundPolicy) {
        let lower_bound = match (self.accuracy_bound, BoundPolicy::accuracy(class)) {
            (Some(b), _) => b,
            (None, BoundPolicy::Accuracy { lower_bound, .. }) => lower_bound,
            (None, BoundPolicy::Rmse { .. }) => unreachable!("accuracy() builds an accuracy policy"),
        };
        (
            BoundPolicy::Accuracy { lower_bound, step: self.accuracy_step },
            BoundPolicy::Rmse { upper_bound: self.rmse_bound, increment: self.rmse_increment },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concentrator_labels_may_contain_commas() {
        let c: ConcentratorArg = "44.5,11.3,30,24,roof, north".parse().unwrap();
        assert_eq!(c.tx_power, 24.0);
        assert_eq!(c.label.as_deref(), Some("roof, north"));
        assert!("44.5,11.3,30".parse::<ConcentratorArg>().is_err());
    }

    #[test]
    fn grids_take_an_optional_step() {
        assert_eq!(parse_grid("-8:10:-8:6").unwrap(), GridSpec::classification());
        assert_eq!(parse_grid("0:4:-2:2:2").unwrap().step, 2);
        assert!(parse_grid("3:1:0:0").is_err());
        assert!(parse_grid("1:2:3").is_err());
    }

    #[test]
    fn only_radio_power_levels() {
        assert_eq!(parse_tx_power("27").unwrap(), 27.0);
        assert!(parse_tx_power("22").is_err());
    }
}
