//! Prediction modes, metrics, coverage rasters and the planning service.

mod export;
mod lattice;
mod legend;
mod metrics;
mod modes;
mod report;
pub mod service;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Antenna, FeatureOptions};
use crate::geodata::DEFAULT_ROAD_GATE;

pub use export::{coverage_boundary, raster_png, sidecar_text, RasterLayer};
pub use lattice::{best_server, CoverageRaster, ConcentratorGrid, Lattice, LatticeSpec, DEFAULT_LATTICE_STEP};
pub use legend::{
    Legend, LegendBin, LEGEND_BIN_DBM, LEGEND_MAX_DBM, LEGEND_MIN_DBM, NO_COVERAGE_COLOR, SERVER_COLORS,
};
pub use metrics::{classification_metrics, compute_metrics, in_full_scale_band, ClassificationMetrics, EvaluationReport};
pub use modes::{
    label_measurements, run_pm1, run_pm2, run_pm3, train_blind, BlindOutcome, DonorArea, Pm1Config, Pm1Outcome,
    Pm3Outcome, Pm3Variant, TrainingConfig, POWER_EXTRAPOLATION_NOTE,
};
pub use report::{render_table, PredictionMode, TableRow};

/// Transmit power levels the concentrator radio supports, dBm.
pub const TX_POWER_LEVELS: [f64; 4] = [21.0, 24.0, 27.0, 30.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concentrator {
    pub antenna: Antenna,
    pub tx_power: f64,
    pub label: String,
}

impl Concentrator {
    pub fn validate(&self) -> Result<()> {
        self.antenna.validate()?;
        if !TX_POWER_LEVELS.contains(&self.tx_power) {
            return Err(Error::InvalidInput {
                name: "tx_power",
                message: format!("{} dBm is not one of {TX_POWER_LEVELS:?}", self.tx_power),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmit antenna gain, dB.
    pub tx_gain: f64,
    /// Receive antenna gain, dB.
    pub rx_gain: f64,
    /// Receiver sensitivity, dBm.
    pub sensitivity: f64,
    /// Transmit power of the training measurements, dBm.
    pub reference_tx_power: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_gain: 0.0,
            rx_gain: 0.0,
            sensitivity: crate::dataset::SENSITIVITY_DBM,
            reference_tx_power: TX_POWER_LEVELS[0],
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if [self.tx_gain, self.rx_gain, self.sensitivity, self.reference_tx_power]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput {
                name: "link budget",
                message: format!("non-finite entry in {self:?}"),
            });
        }
        if self.sensitivity != crate::dataset::SENSITIVITY_DBM {
            log::warn!(
                "receiver sensitivity overridden to {} dBm (radio nominal {} dBm)",
                self.sensitivity,
                crate::dataset::SENSITIVITY_DBM
            );
        }
        Ok(())
    }

    /// Shift applied to levels predicted at the reference power.
    pub fn power_delta(&self, tx_power: f64) -> f64 {
        tx_power - self.reference_tx_power
    }
}

/// How measurement positions and receivers are turned into links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Receiver antenna height above ground, metres.
    pub rx_mast_height: f64,
    /// Snap GPS fixes within this distance onto road centerlines; `None`
    /// disables snapping.
    pub road_gate: Option<f64>,
    pub features: FeatureOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            rx_mast_height: 1.5,
            road_gate: Some(DEFAULT_ROAD_GATE),
            features: FeatureOptions::default(),
        }
    }
}
