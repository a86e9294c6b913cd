//! C-parameterised support vector classification.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};
use crate::kernel::{rbf, KernelParams, KernelSource, RbfRows};
use crate::scaler::check_dims;
use crate::solver::{solve, DualSolution, SignedKernel, SolverParams};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "+1")]
    Positive,
    #[serde(rename = "-1")]
    Negative,
}

impl Class {
    pub fn sign(self) -> f64 {
        match self {
            Class::Positive => 1.0,
            Class::Negative => -1.0,
        }
    }

    /// `sign(0)` is resolved to [`Class::Positive`].
    pub fn from_decision_value(v: f64) -> Self {
        if v >= 0.0 {
            Class::Positive
        } else {
            Class::Negative
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Class::Positive => Class::Negative,
            Class::Negative => Class::Positive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvcParams {
    pub c: f64,
    pub kernel: KernelParams,
    pub solver: SolverParams,
}

impl SvcParams {
    pub fn new(c: f64, kernel: KernelParams) -> Self {
        Self {
            c,
            kernel,
            solver: SolverParams::default(),
        }
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }
}

/// Trained classifier: `d(x) = sgn(sum_i z_i a_i K(x_i, x) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    support_vectors: Vec<Vec<f64>>,
    /// `z_i * alpha_i` for each stored support vector.
    coefficients: Vec<f64>,
    bias: f64,
    kernel: KernelParams,
    c: f64,
}

/// A trained model together with the solver diagnostics.
#[derive(Debug, Clone)]
pub struct Fit<M> {
    pub model: M,
    pub dual: DualSolution,
}

impl SvcModel {
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

    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * rbf(&self.kernel, sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn decide(&self, x: &[f64]) -> Class {
        Class::from_decision_value(self.decision_value(x))
    }

    /// Checks the stored invariants, used after deserialisation.
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(SvmError::InvalidParameter {
                name: "C",
                value: self.c,
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
        // |z_i alpha_i| = alpha_i must lie in (0, C]
        for coef in &self.coefficients {
            if !(coef.abs() > 0.0) || coef.abs() > self.c * (1.0 + 1e-12) {
                return Err(SvmError::InvalidParameter {
                    name: "coefficient",
                    value: *coef,
                });
            }
        }
        let residual: f64 = self.coefficients.iter().sum();
        if residual.abs() > 1e-8 * self.c.max(1.0) * self.coefficients.len().max(1) as f64 {
            return Err(SvmError::InvalidParameter {
                name: "sum z_i alpha_i",
                value: residual,
            });
        }
        Ok(())
    }
}

pub fn train_csvc<R: AsRef<[f64]> + Sync>(
    x: &[R],
    labels: &[Class],
    params: &SvcParams,
) -> Result<Fit<SvcModel>> {
    let source = RbfRows::new(x, params.kernel);
    train_csvc_with(&source, x, labels, params)
}

/// Trains against an arbitrary kernel source whose sample `i` is `x[i]`.
pub fn train_csvc_with<K: KernelSource, R: AsRef<[f64]>>(
    kernel: &K,
    x: &[R],
    labels: &[Class],
    params: &SvcParams,
) -> Result<Fit<SvcModel>> {
    if x.is_empty() {
        return Err(SvmError::EmptyTrainingSet);
    }
    if labels.len() != x.len() || kernel.len() != x.len() {
        return Err(SvmError::DimensionMismatch {
            row: 0,
            expected: x.len(),
            actual: labels.len(),
        });
    }
    check_dims(x, x[0].as_ref().len())?;
    if !(params.c > 0.0) || !params.c.is_finite() {
        return Err(SvmError::InvalidParameter {
            name: "C",
            value: params.c,
        });
    }
    params.solver.validate()?;
    let has_pos = labels.contains(&Class::Positive);
    let has_neg = labels.contains(&Class::Negative);
    if !(has_pos && has_neg) {
        return Err(SvmError::SingleClassData);
    }

    let signs: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let n = x.len();
    let mut q = SignedKernel::new(kernel, signs.clone(), (0..n).collect(), params.solver.cache_bytes);
    let linear = vec![-1.0; n];
    let dual = solve(&mut q, &linear, params.c, &params.solver)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, a) in dual.alpha.iter().enumerate() {
        if *a > 0.0 {
            support_vectors.push(x[i].as_ref().to_vec());
            coefficients.push(signs[i] * a);
        }
    }
    log::debug!(
        "C-SVC: n={n} C={} gamma={} iterations={} SV={} violation={:e}",
        params.c,
        params.kernel.gamma(),
        dual.iterations,
        coefficients.len(),
        dual.kkt_violation
    );
    Ok(Fit {
        model: SvcModel {
            support_vectors,
            coefficients,
            bias: dual.bias,
            kernel: params.kernel,
            c: params.c,
        },
        dual,
    })
}
