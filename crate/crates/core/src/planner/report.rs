//! Markdown result tables, one row per area and prediction mode.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::EvaluationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Train and test within one area.
    Pm1,
    /// Blind coverage rasters.
    Pm2,
    /// Blind evaluation on an area whose town was never trained on.
    Pm3,
    /// Blind evaluation on a district of a town that was trained on.
    #[serde(rename = "pm3prime")]
    Pm3Prime,
}

impl PredictionMode {
    pub fn label(self) -> &'static str {
        match self {
            PredictionMode::Pm1 => "1",
            PredictionMode::Pm2 => "2",
            PredictionMode::Pm3 => "3",
            PredictionMode::Pm3Prime => "3'",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub area: String,
    pub mode: PredictionMode,
    pub report: EvaluationReport,
}

pub const TABLE_HEADER: &str = "| Area | PM | A (%) | RMSE (dB) | A_fs (%) | P_fp (%) |\n|---|---|---|---|---|---|\n";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

impl TableRow {
    pub fn render(&self) -> String {
        let r = &self.report;
        format!(
            "| {} | {} | {} | {} | {} | {} |",
            self.area,
            self.mode.label(),
            cell(Some(r.accuracy)),
            cell(r.rmse),
            cell(r.full_scale_accuracy),
            cell(Some(r.false_positive_pct)),
        )
    }
}

pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    for row in rows {
        writeln!(out, "{}", row.render()).expect("writing to a String");
    }
    out
}
