//! Z-score feature standardisation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};

/// Per-feature mean and standard deviation fitted on a training set.
///
/// The standard deviation uses the population convention (divide by `n`),
/// so applying a scaler to its own training set yields features with mean 0
/// and standard deviation 1 under the same convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    means: Vec<f64>,
    std_devs: Vec<f64>,
}

impl Scaler {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(SvmError::TooFewSamples {
                required: 2,
                actual: rows.len(),
            });
        }
        let dim = rows[0].as_ref().len();
        check_dims(rows, dim)?;

        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row.as_ref()) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);

        let mut std_devs = vec![0.0; dim];
        for row in rows {
            for ((s, v), m) in std_devs.iter_mut().zip(row.as_ref()).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (index, s) in std_devs.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            // relative test so that large constant features are still caught
            let scale = means[index].abs().max(1.0);
            if !(*s > 1e-12 * scale) {
                return Err(SvmError::DegenerateFeature { index });
            }
        }
        Ok(Self { means, std_devs })
    }

    /// Rebuilds a scaler from stored statistics, validating the invariants.
    pub fn from_parts(means: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        if means.len() != std_devs.len() {
            return Err(SvmError::DimensionMismatch {
                row: 0,
                expected: means.len(),
                actual: std_devs.len(),
            });
        }
        if let Some(index) = std_devs.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(SvmError::DegenerateFeature { index });
        }
        Ok(Self { means, std_devs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn std_devs(&self) -> &[f64] {
        &self.std_devs
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse_transform(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    pub fn transform_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r.as_ref())).collect()
    }
}

pub(crate) fn check_dims<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Result<()> {
    for (row, r) in rows.iter().enumerate() {
        let actual = r.as_ref().len();
        if actual != dim {
            return Err(SvmError::DimensionMismatch {
                row,
                expected: dim,
                actual,
            });
        }
    }
    Ok(())
}
