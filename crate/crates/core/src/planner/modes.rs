//! The prediction modes.
//!
//! * PM1 trains and tests on one area.
//! * Blind training pools several donor areas and picks hyperparameters
//!   with the bounded smallest-gamma search.
//! * PM2 predicts coverage rasters with blind models.
//! * PM3 scores blind models against measurements of an unseen area.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vhfplan_svm::{
    train_csvc, train_epsilon_svr, Class, KernelParams, Scaler, SolverParams, SvcModel, SvcParams, SvrModel,
    SvrParams, DEFAULT_EPSILON,
};

use super::lattice::best_server;
use super::{
    compute_metrics, ConcentratorGrid, CoverageRaster, EvaluationReport, Lattice, LatticeSpec, Legend, LinkBudget,
    PipelineOptions,
};
use super::Concentrator;
use crate::dataset::{
    class_balance, filter_test_by_decision, label, permute_and_split, LabeledSample, Measurement, SplitDataset,
    DEFAULT_TRAIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::features::{extract_features_with, Antenna};
use crate::geodata::{EnvironmentMap, TerrainClass};
use crate::models::{ModelMeta, TrainedModels};
use crate::tuning::{
    cross_validate_classifier, cross_validate_regressor, grid_search_best, grid_search_bounded, rmse,
    shuffled_folds, stratified_folds, BoundPolicy, Candidate, GridSpec, Objective, TuningReport, DEFAULT_FOLDS,
};

/// Smallest measurement set PM1 accepts.
pub const PM1_MIN_MEASUREMENTS: usize = 100;

pub const POWER_EXTRAPOLATION_NOTE: &str = "levels at powers other than the training power are extrapolated by adding \
     the power difference to the regression output; `coverage` is the classifier decision at the training power, \
     `budget_coverage` compares the shifted level with the sensitivity";

/// Settings shared by every training path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub seed: u64,
    pub train_fraction: f64,
    pub folds: usize,
    pub classification_grid: GridSpec,
    pub regression_grid: GridSpec,
    pub epsilon: f64,
    #[serde(skip)]
    pub solver: SolverParams,
    pub pipeline: PipelineOptions,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            folds: DEFAULT_FOLDS,
            classification_grid: GridSpec::classification(),
            regression_grid: GridSpec::regression(),
            epsilon: DEFAULT_EPSILON,
            solver: SolverParams::default(),
            pipeline: PipelineOptions::default(),
        }
    }
}

/// Features and labels of every measurement, in input order. Fixes are
/// first snapped onto the road network when a gate is configured.
pub fn label_measurements(
    map: &EnvironmentMap,
    tx: &Concentrator,
    measurements: &[Measurement],
    area: &str,
    options: &PipelineOptions,
) -> Result<Vec<LabeledSample>> {
    tx.validate()?;
    measurements
        .par_iter()
        .map(|m| {
            let position = match options.road_gate {
                Some(gate) if !map.roads().is_empty() => map.project_to_road(&m.position, gate).point,
                _ => m.position,
            };
            let rx = Antenna::new(position, options.rx_mast_height)?;
            let fv = extract_features_with(map, &tx.antenna, &rx, &options.features)?;
            let mut s = label(m, fv, area)?;
            s.position = position;
            Ok(s)
        })
        .collect()
}

fn rows(samples: &[LabeledSample], scaler: &Scaler) -> Vec<Vec<f64>> {
    samples.iter().map(|s| scaler.transform(&s.features.values)).collect()
}

fn train_pair(
    cls_x: &[Vec<f64>],
    cls_y: &[Class],
    reg_x: &[Vec<f64>],
    reg_y: &[f64],
    svc: Candidate,
    svr: Candidate,
    config: &TrainingConfig,
) -> Result<(SvcModel, SvrModel)> {
    let svc_model = train_csvc(
        cls_x,
        cls_y,
        &SvcParams::new(svc.c(), KernelParams::new(svc.gamma())?).with_solver(config.solver),
    )?
    .model;
    let svr_model = train_epsilon_svr(
        reg_x,
        reg_y,
        &SvrParams::new(svr.c(), KernelParams::new(svr.gamma())?)
            .with_epsilon(config.epsilon)
            .with_solver(config.solver),
    )?
    .model;
    Ok((svc_model, svr_model))
}

/// Scores and decisions of trained models on a set of labelled samples.
/// Regression is scored on `regression_set`, with levels shifted by
/// `power_delta`.
fn evaluate(
    models: &TrainedModels,
    test_cls: &[LabeledSample],
    regression_set: &[LabeledSample],
    power_delta: f64,
) -> Result<EvaluationReport> {
    let decisions: Vec<Class> = test_cls.iter().map(|s| models.classify(&s.features)).collect::<Result<_>>()?;
    let labels: Vec<Class> = test_cls.iter().map(|s| s.label).collect();
    let rssi: Vec<f64> = test_cls.iter().map(|s| s.rssi).collect();
    let regression: Vec<(f64, f64)> = regression_set
        .iter()
        .map(|s| Ok((models.predict_rss(&s.features)? + power_delta, s.rssi)))
        .collect::<Result<_>>()?;
    compute_metrics(&decisions, &labels, &rssi, &regression)
}

fn worst_on_error(r: Result<f64>, what: &str, c: Candidate) -> f64 {
    r.unwrap_or_else(|e| {
        log::warn!("{what} cell C=2^{} gamma=2^{} failed: {e}", c.c_exp, c.gamma_exp);
        f64::NAN
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pm1Outcome {
    pub models: TrainedModels,
    pub report: EvaluationReport,
    pub split: SplitDataset,
    pub classification_tuning: TuningReport,
    pub regression_tuning: TuningReport,
    pub class_balance: f64,
}

pub type Pm1Config = TrainingConfig;

/// Local training and testing: features, split, scaling, cross-validated
/// grid search, final training and scoring on the held-out split.
pub fn run_pm1(
    map: &EnvironmentMap,
    measurements: &[Measurement],
    tx: &Concentrator,
    budget: &LinkBudget,
    area: &str,
    config: &TrainingConfig,
) -> Result<Pm1Outcome> {
    budget.validate()?;
    if measurements.len() < PM1_MIN_MEASUREMENTS {
        return Err(Error::InsufficientData {
            required: PM1_MIN_MEASUREMENTS,
            actual: measurements.len(),
        });
    }
    let samples = label_measurements(map, tx, measurements, area, &config.pipeline)?;
    let balance = class_balance(&samples).unwrap_or(0.0);
    if samples.iter().all(|s| s.label == samples[0].label) {
        return Err(vhfplan_svm::SvmError::SingleClassData.into());
    }
    let split = permute_and_split(&samples, config.seed, config.train_fraction)?;
    let scaler = Scaler::fit(&split.train_cls.iter().map(|s| s.features.values).collect::<Vec<_>>())?;

    let cls_x = rows(&split.train_cls, &scaler);
    let cls_y: Vec<Class> = split.train_cls.iter().map(|s| s.label).collect();
    let reg_x = rows(&split.train_reg, &scaler);
    let reg_y: Vec<f64> = split.train_reg.iter().map(|s| s.rssi).collect();

    let cls_folds = stratified_folds(&cls_y, config.folds, config.seed)?;
    let cls_search = grid_search_best(&config.classification_grid, Objective::Maximize, |c| {
        worst_on_error(
            cross_validate_classifier(&cls_x, &cls_y, &cls_folds, config.folds, c, config.solver),
            "classification",
            c,
        )
    })?;
    let reg_folds = shuffled_folds(reg_x.len(), config.folds, config.seed)?;
    let reg_search = grid_search_best(&config.regression_grid, Objective::Minimize, |c| {
        worst_on_error(
            cross_validate_regressor(&reg_x, &reg_y, &reg_folds, config.folds, c, config.epsilon, config.solver),
            "regression",
            c,
        )
    })?;

    let (svc, svr) = train_pair(&cls_x, &cls_y, &reg_x, &reg_y, cls_search.best, reg_search.best, config)?;
    let models = TrainedModels {
        meta: ModelMeta::new(map.terrain_class(), vec![area.to_string()], budget.reference_tx_power, config.seed),
        scaler,
        svc,
        svr,
    };
    let report = evaluate(&models, &split.test_cls, &split.test_reg, budget.power_delta(tx.tx_power))?;
    Ok(Pm1Outcome {
        classification_tuning: TuningReport::from_best(&cls_search, Objective::Maximize, "5-fold cross-validation on train_cls"),
        regression_tuning: TuningReport::from_best(&reg_search, Objective::Minimize, "5-fold cross-validation on train_reg"),
        models,
        report,
        split,
        class_balance: balance,
    })
}

/// Measurements of one donor area used for blind training.
#[derive(Debug, Clone, Copy)]
pub struct DonorArea<'a> {
    pub map: &'a EnvironmentMap,
    pub measurements: &'a [Measurement],
    pub tx: &'a Concentrator,
    /// `town/district` tag.
    pub area: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlindOutcome {
    pub models: TrainedModels,
    pub classification_tuning: TuningReport,
    pub regression_tuning: TuningReport,
    /// Pooled donor held-out sets the bounded search was scored on.
    pub donor_test_cls: usize,
    pub donor_test_reg: usize,
}

/// Pools the donors' splits, fits the scaler on the pooled classification
/// training set and runs the bounded search, scoring every cell on the
/// pooled donor test sets.
pub fn train_blind(
    donors: &[DonorArea<'_>],
    budget: &LinkBudget,
    accuracy_policy: &BoundPolicy,
    rmse_policy: &BoundPolicy,
    config: &TrainingConfig,
) -> Result<BlindOutcome> {
    budget.validate()?;
    let Some(first) = donors.first() else {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    };
    let class = first.map.terrain_class();
    let (mut train_cls, mut test_cls, mut train_reg, mut test_reg) = (vec![], vec![], vec![], vec![]);
    for (k, d) in donors.iter().enumerate() {
        if d.map.terrain_class() != class {
            return Err(Error::TerrainClassMismatch {
                model: class,
                map: d.map.terrain_class(),
            });
        }
        let samples = label_measurements(d.map, d.tx, d.measurements, d.area, &config.pipeline)?;
        let split = permute_and_split(&samples, config.seed.wrapping_add(k as u64), config.train_fraction)?;
        train_cls.extend(split.train_cls);
        test_cls.extend(split.test_cls);
        train_reg.extend(split.train_reg);
        test_reg.extend(split.test_reg);
    }
    class_balance(&train_cls);
    let scaler = Scaler::fit(&train_cls.iter().map(|s| s.features.values).collect::<Vec<_>>())?;
    let cls_x = rows(&train_cls, &scaler);
    let cls_y: Vec<Class> = train_cls.iter().map(|s| s.label).collect();
    let reg_x = rows(&train_reg, &scaler);
    let reg_y: Vec<f64> = train_reg.iter().map(|s| s.rssi).collect();
    let test_cls_x = rows(&test_cls, &scaler);
    let test_reg_x = rows(&test_reg, &scaler);
    if test_cls_x.is_empty() || test_reg_x.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }

    let cls_search = grid_search_bounded(&config.classification_grid, accuracy_policy, |c| {
        let r = (|| {
            let params = SvcParams::new(c.c(), KernelParams::new(c.gamma())?).with_solver(config.solver);
            let model = train_csvc(&cls_x, &cls_y, &params)?.model;
            let correct = test_cls_x
                .iter()
                .zip(&test_cls)
                .filter(|(x, s)| model.decide(x) == s.label)
                .count();
            Ok(100.0 * correct as f64 / test_cls.len() as f64)
        })();
        worst_on_error(r, "classification", c)
    })?;
    let reg_search = grid_search_bounded(&config.regression_grid, rmse_policy, |c| {
        let r = (|| {
            let params = SvrParams::new(c.c(), KernelParams::new(c.gamma())?)
                .with_epsilon(config.epsilon)
                .with_solver(config.solver);
            let model = train_epsilon_svr(&reg_x, &reg_y, &params)?.model;
            let residuals: Vec<f64> = test_reg_x
                .iter()
                .zip(&test_reg)
                .map(|(x, s)| model.predict(x) - s.rssi)
                .collect();
            Ok(rmse(&residuals))
        })();
        worst_on_error(r, "regression", c)
    })?;

    let (svc, svr) = train_pair(&cls_x, &cls_y, &reg_x, &reg_y, cls_search.best, reg_search.best, config)?;
    let areas = donors.iter().map(|d| d.area.to_string()).collect();
    Ok(BlindOutcome {
        models: TrainedModels {
            meta: ModelMeta::new(class, areas, budget.reference_tx_power, config.seed),
            scaler,
            svc,
            svr,
        },
        classification_tuning: TuningReport::from_bounded(&cls_search, accuracy_policy, "pooled donor test_cls"),
        regression_tuning: TuningReport::from_bounded(&reg_search, rmse_policy, "pooled donor test_reg"),
        donor_test_cls: test_cls.len(),
        donor_test_reg: test_reg.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pm3Variant {
    /// No district of the target town may have been trained on.
    Pm3,
    /// Other districts of the target town may have been trained on.
    #[serde(rename = "pm3prime")]
    Pm3Prime,
}

fn town(tag: &str) -> &str {
    tag.split('/').next().unwrap_or(tag)
}

fn check_leakage(models: &TrainedModels, target: &str, variant: Pm3Variant) -> Result<()> {
    let overlapping: Vec<String> = models
        .meta
        .training_areas
        .iter()
        .filter(|t| match variant {
            Pm3Variant::Pm3 => town(t) == town(target),
            Pm3Variant::Pm3Prime => t.as_str() == target,
        })
        .cloned()
        .collect();
    if overlapping.is_empty() {
        Ok(())
    } else {
        Err(Error::Leakage {
            target: target.to_string(),
            overlapping,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pm3Outcome {
    pub report: EvaluationReport,
    pub variant: Pm3Variant,
    pub area: String,
    /// Ids of the covered samples the classifier also placed in coverage,
    /// which is the set RMSE is measured on.
    pub regression_ids: Vec<String>,
}

/// Blind evaluation of `models` on every measurement of `area`.
#[allow(clippy::too_many_arguments)]
pub fn run_pm3(
    map: &EnvironmentMap,
    measurements: &[Measurement],
    tx: &Concentrator,
    budget: &LinkBudget,
    models: &TrainedModels,
    variant: Pm3Variant,
    area: &str,
    options: &PipelineOptions,
) -> Result<Pm3Outcome> {
    budget.validate()?;
    models.check_terrain(map.terrain_class())?;
    check_leakage(models, area, variant)?;
    let samples = label_measurements(map, tx, measurements, area, options)?;
    let covered: Vec<LabeledSample> = samples.iter().filter(|s| s.label == Class::Positive).cloned().collect();
    let kept = filter_test_by_decision(&covered, |s| models.classify(&s.features).unwrap_or(Class::Negative));
    let report = evaluate(models, &samples, &kept, budget.power_delta(tx.tx_power))?;
    Ok(Pm3Outcome {
        report,
        variant,
        area: area.to_string(),
        regression_ids: kept.iter().map(|s| s.id.clone()).collect(),
    })
}

/// Per-node predictions of every concentrator over a lattice.
pub fn run_pm2(
    map: &EnvironmentMap,
    concentrators: &[Concentrator],
    budget: &LinkBudget,
    models: &TrainedModels,
    lattice: &LatticeSpec,
    options: &PipelineOptions,
) -> Result<CoverageRaster> {
    budget.validate()?;
    models.check_terrain(map.terrain_class())?;
    for c in concentrators {
        c.validate()?;
    }
    let lattice = Lattice::new(*lattice, map.frame())?;
    let nodes: Vec<[f64; 2]> = (0..lattice.len()).map(|i| lattice.node_xy(i)).collect();
    let receivers: Vec<Antenna> = nodes
        .iter()
        .map(|&[x, y]| {
            let (latitude, longitude) = map.frame().plane_to_geo(x, y);
            Antenna {
                position: crate::geodata::GeoPoint {
                    latitude,
                    longitude,
                    altitude: None,
                },
                mast_height: options.rx_mast_height,
            }
        })
        .collect();
    let inside_building = nodes.iter().map(|&p| map.inside_building(p)).collect();

    let mut grids = Vec::with_capacity(concentrators.len());
    for c in concentrators {
        let delta = budget.power_delta(c.tx_power);
        let per_node: Vec<Option<(f64, bool)>> = receivers
            .par_iter()
            .map(|rx| {
                let fv = extract_features_with(map, &c.antenna, rx, &options.features).ok()?;
                let x = models.scale(&fv).ok()?;
                Some((models.svr.predict(&x) + delta, models.svc.decide(&x) == Class::Positive))
            })
            .collect();
        grids.push(ConcentratorGrid {
            label: c.label.clone(),
            tx_power: c.tx_power,
            power_delta: delta,
            rss: per_node.iter().map(|p| p.map(|p| p.0)).collect(),
            coverage: per_node.iter().map(|p| p.map(|p| p.1)).collect(),
            budget_coverage: per_node.iter().map(|p| p.map(|p| p.0 >= budget.sensitivity)).collect(),
        });
    }
    let (best, merged) = best_server(&grids, lattice.len());
    let mut notes = vec![POWER_EXTRAPOLATION_NOTE.to_string()];
    if models.meta.terrain_class == TerrainClass::Hilly {
        notes.push(format!("terrain sampled every {} m along each link", options.features.terrain_step));
    }
    Ok(CoverageRaster {
        lattice,
        concentrators: grids,
        best_server: best,
        merged_rss: merged,
        inside_building,
        legend: Legend::default(),
        notes,
    })
}
