//! Epsilon-insensitive support vector regression.
//!
//! The dual is solved in the doubled-variable form `beta = [a*; a]` with
//! signs `[+1; -1]`, so that `beta' Q beta = (a* - a)' K (a* - a)` and the
//! predictor is `p(x) = sum_i (a*_i - a_i) K(x_i, x) + b`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};
use crate::kernel::{rbf, KernelParams, KernelSource, RbfRows};
use crate::scaler::check_dims;
use crate::solver::{solve, SignedKernel, SolverParams};
use crate::svc::Fit;

pub const DEFAULT_EPSILON: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelParams,
    pub solver: SolverParams,
}

impl SvrParams {
    pub fn new(c: f64, kernel: KernelParams) -> Self {
        Self {
            c,
            epsilon: DEFAULT_EPSILON,
            kernel,
            solver: SolverParams::default(),
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    support_vectors: Vec<Vec<f64>>,
    /// `a*_i - a_i` for each stored support vector.
    coefficients: Vec<f64>,
    bias: f64,
    kernel: KernelParams,
    c: f64,
    epsilon: f64,
}

impl SvrModel {
    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * rbf(&self.kernel, sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(SvmError::InvalidParameter {
                name: "C",
                value: self.c,
            });
        }
        if !(self.epsilon >= 0.0) {
            return Err(SvmError::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        if self.support_vectors.len() != self.coefficients.len() {
            return Err(SvmError::DimensionMismatch {
                row: 0,
                expected: self.support_vectors.len(),
                actual: self.coefficients.len(),
            });
        }
        if let Some(first) = self.support_vectors.first() {
            check_dims(&self.support_vectors, first.len())?;
        }
        for coef in &self.coefficients {
            if coef.abs() > self.c * (1.0 + 1e-12) || !coef.is_finite() {
                return Err(SvmError::InvalidParameter {
                    name: "coefficient",
                    value: *coef,
                });
            }
        }
        Ok(())
    }
}

pub fn train_epsilon_svr<R: AsRef<[f64]> + Sync>(
    x: &[R],
    targets: &[f64],
    params: &SvrParams,
) -> Result<Fit<SvrModel>> {
    let source = RbfRows::new(x, params.kernel);
    train_epsilon_svr_with(&source, x, targets, params)
}

/// Trains against an arbitrary kernel source whose sample `i` is `x[i]`.
///
/// `Fit::dual.alpha` holds `[a*; a]`, of length `2n`.
pub fn train_epsilon_svr_with<K: KernelSource, R: AsRef<[f64]>>(
    kernel: &K,
    x: &[R],
    targets: &[f64],
    params: &SvrParams,
) -> Result<Fit<SvrModel>> {
    if x.is_empty() {
        return Err(SvmError::EmptyTrainingSet);
    }
    if targets.len() != x.len() || kernel.len() != x.len() {
        return Err(SvmError::DimensionMismatch {
            row: 0,
            expected: x.len(),
            actual: targets.len(),
        });
    }
    check_dims(x, x[0].as_ref().len())?;
    if !(params.c > 0.0) || !params.c.is_finite() {
        return Err(SvmError::InvalidParameter {
            name: "C",
            value: params.c,
        });
    }
    if !(params.epsilon >= 0.0) || !params.epsilon.is_finite() {
        return Err(SvmError::InvalidParameter {
            name: "epsilon",
            value: params.epsilon,
        });
    }
    if let Some(bad) = targets.iter().find(|t| !t.is_finite()) {
        return Err(SvmError::InvalidParameter {
            name: "target",
            value: *bad,
        });
    }
    params.solver.validate()?;

    let n = x.len();
    let signs: Vec<f64> = (0..2 * n).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
    let map: Vec<usize> = (0..2 * n).map(|t| t % n).collect();
    let linear: Vec<f64> = (0..2 * n)
        .map(|t| {
            if t < n {
                params.epsilon - targets[t]
            } else {
                params.epsilon + targets[t - n]
            }
        })
        .collect();
    let mut q = SignedKernel::new(kernel, signs, map, params.solver.cache_bytes);
    let dual = solve(&mut q, &linear, params.c, &params.solver)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        let coef = dual.alpha[i] - dual.alpha[i + n];
        if coef != 0.0 {
            support_vectors.push(x[i].as_ref().to_vec());
            coefficients.push(coef);
        }
    }
    log::debug!(
        "epsilon-SVR: n={n} C={} gamma={} epsilon={} iterations={} SV={} violation={:e}",
        params.c,
        params.kernel.gamma(),
        params.epsilon,
        dual.iterations,
        coefficients.len(),
        dual.kkt_violation
    );
    Ok(Fit {
        model: SvrModel {
            support_vectors,
            coefficients,
            bias: dual.bias,
            kernel: params.kernel,
            c: params.c,
            epsilon: params.epsilon,
        },
        dual,
    })
}
