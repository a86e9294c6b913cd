//! Sequential minimal optimization for the common dual form
//!
//! ```text
//! min  1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_i <= C
//! ```
//!
//! with `y_i` in {+1, -1} and `Q_ij = y_i y_j K_ij`. Both C-SVC and the
//! doubled-variable epsilon-SVR dual are instances of it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};
use crate::kernel::{KernelSource, RowCache};

const TAU: f64 = 1e-12;

/// How the two-variable working set is chosen at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingSetSelection {
    /// Most violating pair under the first-order KKT conditions.
    #[default]
    MaximalViolatingPair,
    /// First index as above, second index maximising the second-order
    /// decrease of the objective.
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Stop once the maximal KKT violation is at most this value.
    pub tol: f64,
    /// Cap on working-set selections before giving up.
    pub max_iterations: u64,
    pub working_set: WorkingSetSelection,
    /// Byte budget of the kernel row cache.
    pub cache_bytes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iterations: 10_000_000,
            working_set: WorkingSetSelection::default(),
            cache_bytes: 256 << 20,
        }
    }
}

impl SolverParams {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_working_set(mut self, working_set: WorkingSetSelection) -> Self {
        self.working_set = working_set;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(SvmError::InvalidParameter {
                name: "tol",
                value: self.tol,
            });
        }
        Ok(())
    }
}

/// Final state of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    /// Dual variables in solver order.
    pub alpha: Vec<f64>,
    /// Bias of the decision function (`-rho` in the usual notation).
    pub bias: f64,
    /// Dual objective value at `alpha`.
    pub objective: f64,
    /// Maximal KKT violation at termination, clamped at zero.
    pub kkt_violation: f64,
    /// `sum_i y_i alpha_i`, zero up to rounding.
    pub equality_residual: f64,
    pub iterations: u64,
}

/// Signed kernel matrix `Q_ij = s_i s_j K(m_i, m_j)` with cached rows.
///
/// `map` sends each solver variable to a kernel sample, which lets the
/// epsilon-SVR dual reuse one kernel row for both variables of a pair.
pub(crate) struct SignedKernel<'k, K: KernelSource> {
    kernel: &'k K,
    signs: Vec<f64>,
    map: Vec<usize>,
    diag: Vec<f64>,
    cache: RowCache,
    scratch: Vec<f64>,
}

impl<'k, K: KernelSource> SignedKernel<'k, K> {
    pub(crate) fn new(kernel: &'k K, signs: Vec<f64>, map: Vec<usize>, cache_bytes: usize) -> Self {
        debug_assert_eq!(signs.len(), map.len());
        let diag = map.iter().map(|&m| kernel.eval(m, m)).collect();
        let cache = RowCache::new(signs.len(), signs.len(), cache_bytes);
        Self {
            kernel,
            signs,
            map,
            diag,
            cache,
            scratch: vec![0.0; kernel.len()],
        }
    }

    fn len(&self) -> usize {
        self.signs.len()
    }

    fn row(&mut self, i: usize) -> Arc<[f64]> {
        let Self {
            kernel,
            signs,
            map,
            cache,
            scratch,
            ..
        } = self;
        cache.get_or_insert_with(i, || {
            kernel.fill_row(map[i], scratch);
            let si = signs[i];
            signs
                .iter()
                .zip(map.iter())
                .map(|(sj, &mj)| si * sj * scratch[mj])
                .collect()
        })
    }
}

pub(crate) fn solve<K: KernelSource>(
    q: &mut SignedKernel<'_, K>,
    linear: &[f64],
    c: f64,
    params: &SolverParams,
) -> Result<DualSolution> {
    let n = q.len();
    debug_assert_eq!(linear.len(), n);
    let y = q.signs.clone();
    let mut alpha = vec![0.0; n];
    // gradient of the objective, Q a + p, with a = 0
    let mut grad = linear.to_vec();
    let mut iterations = 0u64;

    let violation = loop {
        let Some((i, j, gap)) = select_working_set(q, &y, &alpha, &grad, c, params.working_set)
        else {
            break 0.0;
        };
        if gap <= params.tol {
            break gap;
        }
        if iterations >= params.max_iterations {
            return Err(SvmError::NonConvergence {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let qi = q.row(i);
        let qj = q.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        update_pair(&mut alpha, &grad, &y, q.diag[i], q.diag[j], qi[j], i, j, c);

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        if di != 0.0 || dj != 0.0 {
            for ((g, a), b) in grad.iter_mut().zip(qi.iter()).zip(qj.iter()) {
                *g += a * di + b * dj;
            }
        }
    };

    let objective = 0.5
        * alpha
            .iter()
            .zip(grad.iter().zip(linear))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>();
    let equality_residual = alpha.iter().zip(&y).map(|(a, s)| a * s).sum();
    let bias = -compute_rho(&alpha, &grad, &y, c);

    Ok(DualSolution {
        alpha,
        bias,
        objective,
        kkt_violation: violation.max(0.0),
        equality_residual,
        iterations,
    })
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

/// Returns `(i, j, m - M)` where `m - M` is the maximal KKT violation, or
/// `None` when one of the index sets is empty.
fn select_working_set<K: KernelSource>(
    q: &mut SignedKernel<'_, K>,
    y: &[f64],
    alpha: &[f64],
    grad: &[f64],
    c: f64,
    strategy: WorkingSetSelection,
) -> Option<(usize, usize, f64)> {
    let mut g_max = f64::NEG_INFINITY;
    let mut i_sel = None;
    let mut g_min = f64::INFINITY;
    let mut j_mvp = None;
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], c) && v > g_max {
            g_max = v;
            i_sel = Some(t);
        }
        if in_low(y[t], alpha[t], c) && v < g_min {
            g_min = v;
            j_mvp = Some(t);
        }
    }
    let i = i_sel?;
    let j_mvp = j_mvp?;
    let gap = g_max - g_min;

    let j = match strategy {
        WorkingSetSelection::MaximalViolatingPair => j_mvp,
        WorkingSetSelection::SecondOrder => {
            let qi = q.row(i);
            let mut best = j_mvp;
            let mut best_gain = f64::INFINITY;
            for t in 0..y.len() {
                if !in_low(y[t], alpha[t], c) {
                    continue;
                }
                let b = g_max + y[t] * grad[t];
                if b > 0.0 {
                    let mut a = q.diag[i] + q.diag[t] - 2.0 * y[i] * y[t] * qi[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain < best_gain {
                        best_gain = gain;
                        best = t;
                    }
                }
            }
            best
        }
    };
    Some((i, j, gap))
}

/// Analytic minimisation over the pair `(i, j)` keeping `y'a` fixed and
/// clipping to the box.
#[allow(clippy::too_many_arguments)]
fn update_pair(
    alpha: &mut [f64],
    grad: &[f64],
    y: &[f64],
    qii: f64,
    qjj: f64,
    qij: f64,
    i: usize,
    j: usize,
    c: f64,
) {
    if y[i] != y[j] {
        let mut quad = qii + qjj + 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = alpha[i] - alpha[j];
        alpha[i] += delta;
        alpha[j] += delta;
        if diff > 0.0 {
            if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = -diff;
        }
        if diff > 0.0 {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            }
        } else if alpha[j] > c {
            alpha[j] = c;
            alpha[i] = c + diff;
        }
    } else {
        let mut quad = qii + qjj - 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = alpha[i] + alpha[j];
        alpha[i] -= delta;
        alpha[j] += delta;
        if sum > c {
            if alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            }
        } else if alpha[j] < 0.0 {
            alpha[j] = 0.0;
            alpha[i] = sum;
        }
        if sum > c {
            if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            }
        } else if alpha[i] < 0.0 {
            alpha[i] = 0.0;
            alpha[j] = sum;
        }
    }
    // rounding in the updates above can leave values a hair outside the box
    for k in [i, j] {
        alpha[k] = alpha[k].clamp(0.0, c);
    }
}

/// Offset `rho` (bias = -rho): average of `y_i G_i` over free variables, or
/// the midpoint of the feasible interval when no variable is free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
