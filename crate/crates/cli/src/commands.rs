//! One struct per subcommand; `run` does the work and writes the outputs.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use vhfplan_core::dataset::{label_of, load_measurements, write_measurements, Measurement};
use vhfplan_core::features::{write_feature_dump, FeatureRow};
use vhfplan_core::geodata::{load_map, EnvironmentMap, GeoPoint, TerrainClass};
use vhfplan_core::models::TrainedModels;
use vhfplan_core::planner::service::{serve, ServiceState};
use vhfplan_core::planner::{
    coverage_boundary, label_measurements, raster_png, render_table, run_pm1, run_pm2, run_pm3, sidecar_text,
    train_blind, CoverageRaster, DonorArea, LatticeSpec, Pm3Variant, PredictionMode, RasterLayer, TableRow,
    DEFAULT_LATTICE_STEP,
};
use vhfplan_core::synth::{generate_town, TownSpec};
use vhfplan_svm::Class;

use crate::args::{
    parse_tx_power, BoundArgs, BudgetArgs, ConcentratorArg, LatLonArg, MapArgs, PipelineArgs, SiteArg, TrainingArgs,
};
use crate::run::Run;
use crate::CliError;

fn open_map(run: &mut Run, args: &MapArgs) -> Result<EnvironmentMap, CliError> {
    run.input(&args.map)?;
    Ok(load_map(&args.map, args.terrain)?)
}

fn open_measurements(run: &mut Run, path: &Path) -> Result<Vec<Measurement>, CliError> {
    run.input(path)?;
    Ok(load_measurements(path)?)
}

fn open_model(run: &mut Run, path: &Path) -> Result<TrainedModels, CliError> {
    run.input(path)?;
    let models = TrainedModels::load(path)?;
    run.set_model_checksum(models.checksum());
    Ok(models)
}

fn markdown(run: &Run, rows: &[TableRow]) -> Vec<u8> {
    format!("{}\n{}", run.provenance_lines("<!-- ", " -->"), render_table(rows)).into_bytes()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

fn print_written(run: Run) -> Result<(), CliError> {
    let hash = run.config_hash().to_string();
    if let Some(path) = run.finish()? {
        println!("manifest {} (config {})", path.display(), &hash[..12]);
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateCmd {
    #[command(flatten)]
    map: MapArgs,
    /// Measurement logs to check; repeatable.
    #[arg(long)]
    measurements: Vec<PathBuf>,
    /// Model file whose checksum, version and terrain class to check.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl ValidateCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("validate", argv, &self, None, self.out.as_deref())?;
        let map = open_map(&mut run, &self.map)?;
        if map.terrain_class() == TerrainClass::Hilly && map.contours().is_empty() {
            return Err(vhfplan_core::Error::NoTerrainData.into());
        }
        println!(
            "map {}: {} terrain, {} buildings, {} contours, {} roads",
            self.map.map.display(),
            map.terrain_class().as_str(),
            map.buildings().len(),
            map.contours().len(),
            map.roads().len()
        );
        let mut logs = Vec::new();
        for path in &self.measurements {
            let rows = open_measurements(&mut run, path)?;
            let covered = rows.iter().filter(|m| label_of(m.rssi) == Some(Class::Positive)).count();
            println!("measurements {}: {} rows, {covered} covered", path.display(), rows.len());
            logs.push(json!({
                "path": path,
                "rows": rows.len(),
                "covered": covered,
                "not_covered": rows.len() - covered,
            }));
        }
        let model = match &self.model {
            Some(path) => {
                let models = open_model(&mut run, path)?;
                models.check_terrain(map.terrain_class())?;
                println!("model {}: {} areas, checksum {}", path.display(), models.meta.training_areas.len(), &models.checksum()[..12]);
                json!({
                    "path": path,
                    "checksum": models.checksum(),
                    "terrain_class": models.meta.terrain_class,
                    "training_areas": models.meta.training_areas,
                    "reference_tx_power": models.meta.reference_tx_power,
                })
            }
            None => Value::Null,
        };
        if self.out.is_some() {
            run.write_json(
                "validation.json",
                json!({
                    "map": {
                        "path": self.map.map,
                        "terrain_class": map.terrain_class(),
                        "origin": map.origin(),
                        "bounds": map.bounds(),
                        "buildings": map.buildings().len(),
                        "contours": map.contours().len(),
                        "roads": map.roads().len(),
                    },
                    "measurements": logs,
                    "model": model,
                }),
            )?;
        }
        print_written(run)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesCmd {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    measurements: PathBuf,
    /// Concentrator as LAT,LON,MAST_HEIGHT.
    #[arg(long, allow_hyphen_values = true)]
    tx: SiteArg,
    #[arg(long, default_value = "21", value_parser = parse_tx_power)]
    tx_power: f64,
    /// `town/district` tag of the measurements.
    #[arg(long, default_value = "area")]
    area: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl FeaturesCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("features", argv, &self, None, Some(&self.out))?;
        let map = open_map(&mut run, &self.map)?;
        let rows = open_measurements(&mut run, &self.measurements)?;
        let tx = self.tx.concentrator(self.tx_power, "tx")?;
        let samples = label_measurements(&map, &tx, &rows, &self.area, &self.pipeline.options())?;
        let dump: Vec<FeatureRow> = samples
            .iter()
            .map(|s| FeatureRow { id: s.id.clone(), position: s.position, features: s.features })
            .collect();
        let mut bytes = Vec::new();
        write_feature_dump(&mut bytes, &dump)?;
        run.write("features.csv", &bytes)?;
        println!("{} feature vectors, {} terrain", dump.len(), map.terrain_class().as_str());
        print_written(run)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Pm1Cmd {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    measurements: PathBuf,
    /// Concentrator as LAT,LON,MAST_HEIGHT.
    #[arg(long, allow_hyphen_values = true)]
    tx: SiteArg,
    #[arg(long, default_value = "21", value_parser = parse_tx_power)]
    tx_power: f64,
    #[arg(long, default_value = "area")]
    area: String,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl Pm1Cmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("pm1", argv, &self, Some(self.training.seed), Some(&self.out))?;
        let map = open_map(&mut run, &self.map)?;
        let rows = open_measurements(&mut run, &self.measurements)?;
        let tx = self.tx.concentrator(self.tx_power, "tx")?;
        let config = self.training.config(&self.pipeline);
        let outcome = run_pm1(&map, &rows, &tx, &self.budget.budget(21.0), &self.area, &config)?;
        run.set_model_checksum(outcome.models.checksum());
        run.write("pm1.model", &outcome.models.to_bytes())?;
        let split = &outcome.split;
        run.write_json(
            "report.json",
            json!({
                "mode": PredictionMode::Pm1,
                "area": self.area,
                "report": outcome.report,
                "class_balance": outcome.class_balance,
                "split": {
                    "train_cls": split.train_cls.len(),
                    "test_cls": split.test_cls.len(),
                    "train_reg": split.train_reg.len(),
                    "test_reg": split.test_reg.len(),
                },
                "tuning": {
                    "classification": outcome.classification_tuning,
                    "regression": outcome.regression_tuning,
                },
                "model_checksum": outcome.models.checksum(),
            }),
        )?;
        let row = TableRow { area: self.area.clone(), mode: PredictionMode::Pm1, report: outcome.report };
        run.write("report.md", &markdown(&run, &[row]))?;
        let r = &outcome.report;
        println!(
            "PM1 {}: A {:.2} %, RMSE {} dB, A_fs {} %, P_fp {:.2} %",
            self.area,
            r.accuracy,
            fmt_opt(r.rmse),
            fmt_opt(r.full_scale_accuracy),
            r.false_positive_pct
        );
        let (c, g) = (outcome.classification_tuning.selected, outcome.regression_tuning.selected);
        println!(
            "classifier C=2^{} gamma=2^{}, regressor C=2^{} gamma=2^{}",
            c.c_exp, c.gamma_exp, g.c_exp, g.gamma_exp
        );
        print_written(run)
    }
}

/// One `[[donor]]` table of a donors file. Paths are relative to the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DonorEntry {
    pub area: String,
    pub map: PathBuf,
    pub measurements: PathBuf,
    /// `LAT,LON,MAST_HEIGHT`.
    pub tx: String,
    #[serde(default = "reference_power")]
    pub tx_power: f64,
}

fn reference_power() -> f64 {
    21.0
}

#[derive(Debug, Deserialize)]
struct DonorsFile {
    donor: Vec<DonorEntry>,
}

fn read_donors(path: &Path) -> Result<Vec<DonorEntry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: DonorsFile = toml::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(file
        .donor
        .into_iter()
        .map(|d| DonorEntry { map: base.join(&d.map), measurements: base.join(&d.measurements), ..d })
        .collect())
}

#[derive(Debug, Args, Serialize)]
pub struct TrainCmd {
    /// TOML file of `[[donor]]` tables with area, map, measurements, tx and
    /// an optional tx_power.
    #[arg(long)]
    donors: PathBuf,
    #[arg(long, default_value = "flat")]
    terrain: TerrainClass,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    bounds: BoundArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl TrainCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let entries = read_donors(&self.donors)?;
        let mut run = Run::new(
            "train",
            argv,
            &json!({ "command": &self, "donors": &entries }),
            Some(self.training.seed),
            Some(&self.out),
        )?;
        run.input(&self.donors)?;
        let mut loaded = Vec::new();
        for d in &entries {
            let map = open_map(&mut run, &MapArgs { map: d.map.clone(), terrain: self.terrain })?;
            let rows = open_measurements(&mut run, &d.measurements)?;
            let site: SiteArg = d.tx.parse().map_err(|e: String| CliError::Parse {
                path: self.donors.clone(),
                message: format!("donor {}: {e}", d.area),
            })?;
            let tx = site.concentrator(d.tx_power, &d.area)?;
            loaded.push((map, rows, tx));
        }
        let donors: Vec<DonorArea<'_>> = loaded
            .iter()
            .zip(&entries)
            .map(|((map, rows, tx), d)| DonorArea { map, measurements: rows, tx, area: &d.area })
            .collect();
        let (accuracy, rmse) = self.bounds.policies(self.terrain);
        let config = self.training.config(&self.pipeline);
        let outcome = train_blind(&donors, &self.budget.budget(21.0), &accuracy, &rmse, &config)?;
        run.set_model_checksum(outcome.models.checksum());
        run.write("blind.model", &outcome.models.to_bytes())?;
        run.write_json(
            "training.json",
            json!({
                "training_areas": outcome.models.meta.training_areas,
                "terrain_class": self.terrain,
                "policies": { "accuracy": accuracy, "rmse": rmse },
                "donor_test_cls": outcome.donor_test_cls,
                "donor_test_reg": outcome.donor_test_reg,
                "tuning": {
                    "classification": outcome.classification_tuning,
                    "regression": outcome.regression_tuning,
                },
                "model_checksum": outcome.models.checksum(),
            }),
        )?;
        let (c, g) = (&outcome.classification_tuning, &outcome.regression_tuning);
        println!(
            "classifier C=2^{} gamma=2^{} ({:.2} % on donor tests, bound {:?})",
            c.selected.c_exp,
            c.selected.gamma_exp,
            c.score,
            c.trajectory.last()
        );
        println!(
            "regressor C=2^{} gamma=2^{} ({:.2} dB on donor tests, bound {:?})",
            g.selected.c_exp,
            g.selected.gamma_exp,
            g.score,
            g.trajectory.last()
        );
        print_written(run)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Pm2Cmd {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    model: PathBuf,
    /// LAT,LON,MAST_HEIGHT,TX_POWER[,LABEL]; repeatable.
    #[arg(long = "concentrator", required = true, allow_hyphen_values = true)]
    concentrators: Vec<ConcentratorArg>,
    /// One lattice corner as LAT,LON.
    #[arg(long, allow_hyphen_values = true)]
    corner_a: LatLonArg,
    /// The opposite corner as LAT,LON.
    #[arg(long, allow_hyphen_values = true)]
    corner_b: LatLonArg,
    /// Lattice step, metres.
    #[arg(long, default_value_t = DEFAULT_LATTICE_STEP)]
    step: f64,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl Pm2Cmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("pm2", argv, &self, None, Some(&self.out))?;
        let map = open_map(&mut run, &self.map)?;
        let models = open_model(&mut run, &self.model)?;
        let concentrators = self
            .concentrators
            .iter()
            .enumerate()
            .map(|(k, c)| c.site.concentrator(c.tx_power, c.label.as_deref().unwrap_or(&format!("C{}", k + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = LatticeSpec {
            corner_a: self.corner_a.point()?,
            corner_b: self.corner_b.point()?,
            step_x: self.step,
            step_y: self.step,
        };
        let budget = self.budget.budget(models.meta.reference_tx_power);
        let raster = run_pm2(&map, &concentrators, &budget, &models, &spec, &self.pipeline.options())?;
        let body = serde_json::to_value(&raster).expect("rasters serialize");
        run.write_json("raster.json", body)?;
        let l = &raster.lattice;
        println!("lattice {} x {} nodes at {} m", l.columns, l.rows, self.step);
        for (k, g) in raster.concentrators.iter().enumerate() {
            let covered = g.coverage.iter().filter(|c| **c == Some(true)).count();
            let served = raster.best_server.iter().filter(|b| **b == Some(k)).count();
            println!("{}: {covered} nodes covered, best server at {served}", g.label);
        }
        for note in &raster.notes {
            println!("note: {note}");
        }
        print_written(run)
    }
}

fn parse_variant(s: &str) -> Result<Pm3Variant, String> {
    match s {
        "pm3" | "3" => Ok(Pm3Variant::Pm3),
        "pm3prime" | "3'" => Ok(Pm3Variant::Pm3Prime),
        _ => Err(format!("{s:?} is neither pm3 nor pm3prime")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Pm3Cmd {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    /// Concentrator as LAT,LON,MAST_HEIGHT.
    #[arg(long, allow_hyphen_values = true)]
    tx: SiteArg,
    #[arg(long, default_value = "21", value_parser = parse_tx_power)]
    tx_power: f64,
    /// `town/district` tag of the target area.
    #[arg(long)]
    area: String,
    /// pm3: the town is unseen; pm3prime: only the district is unseen.
    #[arg(long, default_value = "pm3", value_parser = parse_variant)]
    variant: Pm3Variant,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl Pm3Cmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("pm3", argv, &self, None, Some(&self.out))?;
        let map = open_map(&mut run, &self.map)?;
        let models = open_model(&mut run, &self.model)?;
        let rows = open_measurements(&mut run, &self.measurements)?;
        let tx = self.tx.concentrator(self.tx_power, "tx")?;
        let budget = self.budget.budget(models.meta.reference_tx_power);
        let outcome =
            run_pm3(&map, &rows, &tx, &budget, &models, self.variant, &self.area, &self.pipeline.options())?;
        let mode = match self.variant {
            Pm3Variant::Pm3 => PredictionMode::Pm3,
            Pm3Variant::Pm3Prime => PredictionMode::Pm3Prime,
        };
        run.write_json(
            "report.json",
            json!({
                "mode": mode,
                "area": self.area,
                "report": outcome.report,
                "training_areas": models.meta.training_areas,
                "regression_ids": outcome.regression_ids,
                "model_checksum": models.checksum(),
            }),
        )?;
        let row = TableRow { area: self.area.clone(), mode, report: outcome.report };
        run.write("report.md", &markdown(&run, &[row]))?;
        let r = &outcome.report;
        println!(
            "PM{} {}: A {:.2} %, RMSE {} dB, A_fs {} %, P_fp {:.2} %",
            mode.label(),
            self.area,
            r.accuracy,
            fmt_opt(r.rmse),
            fmt_opt(r.full_scale_accuracy),
            r.false_positive_pct
        );
        print_written(run)
    }
}

fn parse_layer(s: &str) -> Result<RasterLayer, String> {
    match s {
        "merged" => Ok(RasterLayer::Merged),
        "best-server" => Ok(RasterLayer::BestServer),
        _ => s
            .strip_prefix("concentrator-")
            .and_then(|k| k.parse().ok())
            .map(RasterLayer::Concentrator)
            .ok_or_else(|| format!("{s:?} is not merged, best-server or concentrator-K")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ExportCmd {
    /// `raster.json` written by pm2.
    #[arg(long)]
    raster: PathBuf,
    /// The map the raster was predicted on.
    #[command(flatten)]
    map: MapArgs,
    /// merged, best-server or concentrator-K; repeatable, every layer when absent.
    #[arg(long = "layer", value_parser = parse_layer)]
    layers: Vec<RasterLayer>,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl ExportCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("export", argv, &self, None, Some(&self.out))?;
        run.input(&self.raster)?;
        let bytes = std::fs::read(&self.raster).map_err(|e| CliError::io(&self.raster, e))?;
        let raster: CoverageRaster = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
            path: self.raster.clone(),
            message: e.to_string(),
        })?;
        let map = open_map(&mut run, &self.map)?;
        let layers = if self.layers.is_empty() {
            let mut all = vec![RasterLayer::Merged, RasterLayer::BestServer];
            all.extend((0..raster.concentrators.len()).map(RasterLayer::Concentrator));
            all
        } else {
            self.layers.clone()
        };
        for layer in layers {
            let name = layer.name();
            run.write(&format!("{name}.png"), &raster_png(&raster, layer)?)?;
            let sidecar = format!("{}{}", sidecar_text(&raster, layer), run.provenance_lines("", ""));
            run.write(&format!("{name}.txt"), sidecar.as_bytes())?;
            println!("{name}: {} x {} px", raster.lattice.columns, raster.lattice.rows);
        }
        let outline = serde_json::to_value(coverage_boundary(&raster, map.frame())).expect("GeoJSON serializes");
        run.write_json("coverage.geojson", outline)?;
        print_written(run)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ServeCmd {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Largest nodes x concentrators product one request may ask for.
    #[arg(long)]
    max_predictions: Option<usize>,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Directory for the run manifest.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

impl ServeCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("serve", argv, &self, None, self.out.as_deref())?;
        let map = open_map(&mut run, &self.map)?;
        let models = open_model(&mut run, &self.model)?;
        let budget = self.budget.budget(models.meta.reference_tx_power);
        let mut state = ServiceState::new(map, models, budget)?;
        state.options = self.pipeline.options();
        if let Some(n) = self.max_predictions {
            state.max_predictions = n;
        }
        print_written(run)?;
        println!("serving {} on http://{}", self.map.map.display(), self.addr);
        let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io("tokio runtime", e))?;
        runtime.block_on(serve(Arc::new(state), self.addr))?;
        Ok(())
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthCmd {
    /// `town/district` tag.
    #[arg(long, default_value = "synth/centre")]
    area: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Town centre as LAT,LON.
    #[arg(long, default_value = "44.49,11.34", allow_hyphen_values = true)]
    origin: LatLonArg,
    /// Number of drive-test fixes.
    #[arg(long, default_value_t = 2000)]
    measurements: usize,
    /// Blocks per side.
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

impl SynthCmd {
    pub fn run(self, argv: Vec<String>) -> Result<(), CliError> {
        let mut run = Run::new("synth", argv, &self, Some(self.seed), Some(&self.out))?;
        let mut spec = TownSpec::new(self.origin.point()?, &self.area, self.seed);
        spec.measurements = self.measurements;
        if let Some(b) = self.blocks {
            spec.blocks = b;
        }
        let town = generate_town(&spec)?;
        run.write("map.json", town.document.to_json().as_bytes())?;
        let mut csv = Vec::new();
        write_measurements(&mut csv, &town.measurements)?;
        run.write("measurements.csv", &csv)?;
        let GeoPoint { latitude, longitude, .. } = town.tx.antenna.position;
        let tx = format!("{latitude},{longitude},{}", town.tx.antenna.mast_height);
        let samples: Vec<Class> = town.measurements.iter().filter_map(|m| label_of(m.rssi)).collect();
        let covered = samples.iter().filter(|c| **c == Class::Positive).count();
        run.write_json(
            "town.json",
            json!({
                "area": self.area,
                "terrain_class": "flat",
                "tx": tx,
                "tx_power": town.tx.tx_power,
                "covered": covered,
                "measurements": town.measurements.len(),
                "spec": town.spec,
            }),
        )?;
        println!("{}: {} buildings, {} fixes, {covered} covered", self.area, town.map.buildings().len(), samples.len());
        println!("concentrator --tx {tx}");
        print_written(run)
    }
}

#[derive(Debug, Args)]
pub struct RerunCmd {
    /// `manifest.json` of the run to repeat.
    manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RerunCmd {
    pub fn argv(&self) -> Result<Vec<String>, CliError> {
        let bytes = std::fs::read(&self.manifest).map_err(|e| CliError::io(&self.manifest, e))?;
        let parse = |message: String| CliError::Parse { path: self.manifest.clone(), message };
        let doc: Value = serde_json::from_slice(&bytes).map_err(|e| parse(e.to_string()))?;
        if doc["format"] != crate::run::MANIFEST_FORMAT {
            return Err(parse(format!("not a {} file", crate::run::MANIFEST_FORMAT)));
        }
        let mut argv: Vec<String> = serde_json::from_value(doc["argv"].clone()).map_err(|e| parse(e.to_string()))?;
        if argv.first().is_some_and(|c| c == "rerun") {
            return Err(parse("manifest records a rerun".into()));
        }
        if let Some(out) = &self.out {
            argv.push("--out".into());
            argv.push(out.display().to_string());
        }
        Ok(argv)
    }
}
