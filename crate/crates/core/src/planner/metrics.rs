//! Classification and regression scores.

use serde::{Deserialize, Serialize};
use vhfplan_svm::Class;

use crate::dataset::{NO_COVERAGE_DBM, SENSITIVITY_DBM};
use crate::error::{Error, Result};
use crate::tuning::rmse;

/// Upper edge of the near-sensitivity band, dBm.
const FULL_SCALE_TOP: f64 = -110.0;

/// Whether a measured level counts towards full-scale accuracy: within
/// `[-119, -110]` dBm or not heard at all.
pub fn in_full_scale_band(rssi: f64) -> bool {
    rssi == NO_COVERAGE_DBM || (SENSITIVITY_DBM..=FULL_SCALE_TOP).contains(&rssi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    /// Percent of correct decisions.
    pub accuracy: f64,
    /// Percent of correct decisions within the near-sensitivity band;
    /// `None` when no sample falls in the band.
    pub full_scale_accuracy: Option<f64>,
    /// Percent of all samples wrongly placed inside the coverage area.
    pub false_positive_pct: f64,
    pub samples: usize,
    pub full_scale_samples: usize,
}

pub fn classification_metrics(decisions: &[Class], labels: &[Class], rssi: &[f64]) -> Result<ClassificationMetrics> {
    if decisions.len() != labels.len() || labels.len() != rssi.len() {
        return Err(Error::InvalidInput {
            name: "metrics",
            message: format!(
                "misaligned inputs: {} decisions, {} labels, {} levels",
                decisions.len(),
                labels.len(),
                rssi.len()
            ),
        });
    }
    if decisions.is_empty() {
        return Err(Error::InsufficientData { required: 1, actual: 0 });
    }
    let n = decisions.len();
    let mut correct = 0;
    let mut false_pos = 0;
    let mut band = 0;
    let mut band_correct = 0;
    for i in 0..n {
        let ok = decisions[i] == labels[i];
        correct += ok as usize;
        false_pos += (decisions[i] == Class::Positive && labels[i] == Class::Negative) as usize;
        if in_full_scale_band(rssi[i]) {
            band += 1;
            band_correct += ok as usize;
        }
    }
    let pct = |k: usize, of: usize| 100.0 * k as f64 / of as f64;
    Ok(ClassificationMetrics {
        accuracy: pct(correct, n),
        full_scale_accuracy: (band > 0).then(|| pct(band_correct, band)),
        false_positive_pct: pct(false_pos, n),
        samples: n,
        full_scale_samples: band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub full_scale_accuracy: Option<f64>,
    pub false_positive_pct: f64,
    /// dBm; `None` when the regression test set is empty.
    pub rmse: Option<f64>,
    pub classification_samples: usize,
    pub full_scale_samples: usize,
    pub regression_samples: usize,
}

/// `regression` pairs are `(predicted, measured)` levels of the regression
/// test subset.
pub fn compute_metrics(
    decisions: &[Class],
    labels: &[Class],
    rssi: &[f64],
    regression: &[(f64, f64)],
) -> Result<EvaluationReport> {
    let c = classification_metrics(decisions, labels, rssi)?;
    let residuals: Vec<f64> = regression.iter().map(|(p, m)| p - m).collect();
    Ok(EvaluationReport {
        accuracy: c.accuracy,
        full_scale_accuracy: c.full_scale_accuracy,
        false_positive_pct: c.false_positive_pct,
        rmse: (!residuals.is_empty()).then(|| rmse(&residuals)),
        classification_samples: c.samples,
        full_scale_samples: c.full_scale_samples,
        regression_samples: residuals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Class::{Negative as N, Positive as P};

    #[test]
    fn eight_of_ten() {
        let labels = [P, P, P, P, P, N, N, N, N, N];
        let mut decisions = labels;
        decisions[0] = N;
        decisions[9] = P;
        let m = classification_metrics(&decisions, &labels, &[-90.0; 10]).unwrap();
        assert_eq!(m.accuracy, 80.0);
        assert_eq!(m.false_positive_pct, 10.0);
        assert_eq!(m.full_scale_accuracy, None);
    }

    #[test]
    fn all_negative() {
        let m = classification_metrics(&[N; 4], &[N; 4], &[-120.0; 4]).unwrap();
        assert_eq!((m.accuracy, m.false_positive_pct, m.full_scale_accuracy), (100.0, 0.0, Some(100.0)));
    }

    #[test]
    fn band_edges() {
        assert!(in_full_scale_band(-119.0));
        assert!(in_full_scale_band(-110.0));
        assert!(in_full_scale_band(-120.0));
        assert!(!in_full_scale_band(-109.9));
    }

    #[test]
    fn empty_regression_set_has_no_rmse() {
        let r = compute_metrics(&[P], &[P], &[-80.0], &[]).unwrap();
        assert_eq!(r.rmse, None);
        let r = compute_metrics(&[P], &[P], &[-80.0], &[(-77.0, -80.0), (-84.0, -80.0)]).unwrap();
        assert!((r.rmse.unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
    }
}
