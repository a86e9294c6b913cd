//! RBF kernel and the kernel-row cache used by the solver.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvmError};

/// Parameters of the Gaussian RBF kernel `K(x, y) = exp(-gamma * |x - y|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelParams")]
pub struct KernelParams {
    gamma: f64,
}

#[derive(Deserialize)]
struct RawKernelParams {
    gamma: f64,
}

impl TryFrom<RawKernelParams> for KernelParams {
    type Error = SvmError;

    fn try_from(raw: RawKernelParams) -> Result<Self> {
        KernelParams::new(raw.gamma)
    }
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(SvmError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        rbf(self, x, y)
    }
}

#[inline]
pub fn rbf(params: &KernelParams, x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-params.gamma * d2).exp()
}

/// Random access to the entries of a kernel matrix over a fixed sample set.
pub trait KernelSource: Sync {
    fn len(&self) -> usize;

    fn eval(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.eval(i, j);
        }
    }
}

/// RBF kernel evaluated on demand over borrowed rows.
pub struct RbfRows<'a, R> {
    rows: &'a [R],
    params: KernelParams,
}

impl<'a, R: AsRef<[f64]> + Sync> RbfRows<'a, R> {
    pub fn new(rows: &'a [R], params: KernelParams) -> Self {
        Self { rows, params }
    }
}

impl<R: AsRef<[f64]> + Sync> KernelSource for RbfRows<'_, R> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    fn eval(&self, i: usize, j: usize) -> f64 {
        rbf(&self.params, self.rows[i].as_ref(), self.rows[j].as_ref())
    }
}

/// Least-recently-used cache of matrix rows bounded by a byte budget.
///
/// At least two rows are always retained, since the solver holds the rows
/// of both working-set variables at once.
pub(crate) struct RowCache {
    rows: Vec<Option<Arc<[f64]>>>,
    stamps: Vec<u64>,
    by_age: BTreeMap<u64, usize>,
    tick: u64,
    row_bytes: usize,
    budget_bytes: usize,
    used_bytes: usize,
}

impl RowCache {
    pub(crate) fn new(n_rows: usize, row_len: usize, budget_bytes: usize) -> Self {
        let row_bytes = row_len.max(1) * std::mem::size_of::<f64>();
        Self {
            rows: vec![None; n_rows],
            stamps: vec![0; n_rows],
            by_age: BTreeMap::new(),
            tick: 0,
            row_bytes,
            budget_bytes: budget_bytes.max(2 * row_bytes),
            used_bytes: 0,
        }
    }

    pub(crate) fn get_or_insert_with(
        &mut self,
        i: usize,
        compute: impl FnOnce() -> Vec<f64>,
    ) -> Arc<[f64]> {
        self.tick += 1;
        if let Some(row) = &self.rows[i] {
            let row = Arc::clone(row);
            self.by_age.remove(&self.stamps[i]);
            self.stamps[i] = self.tick;
            self.by_age.insert(self.tick, i);
            return row;
        }
        while self.used_bytes + self.row_bytes > self.budget_bytes {
            let Some((_, victim)) = self.by_age.pop_first() else {
                break;
            };
            self.rows[victim] = None;
            self.used_bytes -= self.row_bytes;
        }
        let row: Arc<[f64]> = compute().into();
        self.rows[i] = Some(Arc::clone(&row));
        self.stamps[i] = self.tick;
        self.by_age.insert(self.tick, i);
        self.used_bytes += self.row_bytes;
        row
    }

    #[cfg(test)]
    fn is_cached(&self, i: usize) -> bool {
        self.rows[i].is_some()
    }
}
