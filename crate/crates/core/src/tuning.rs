//! Hyperparameter search over power-of-two grids of `(C, gamma)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vhfplan_svm::{
    train_csvc_with, train_epsilon_svr_with, Class, KernelParams, KernelSource, SolverParams, SvcParams,
    SvrParams,
};

use crate::error::{Error, Result};
use crate::geodata::TerrainClass;

pub const DEFAULT_FOLDS: usize = 5;
pub const MAX_RELAXATIONS: usize = 50;

/// One grid cell: `C = 2^c_exp`, `gamma = 2^gamma_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    // field order gives the tie rule: smaller gamma first, then smaller C
    pub gamma_exp: i32,
    pub c_exp: i32,
}

impl Candidate {
    pub fn new(c_exp: i32, gamma_exp: i32) -> Self {
        Self { gamma_exp, c_exp }
    }

    pub fn c(&self) -> f64 {
        2f64.powi(self.c_exp)
    }

    pub fn gamma(&self) -> f64 {
        2f64.powi(self.gamma_exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_min: i32,
    pub c_max: i32,
    pub gamma_min: i32,
    pub gamma_max: i32,
    pub step: i32,
}

impl GridSpec {
    pub fn classification() -> Self {
        Self {
            c_min: -8,
            c_max: 10,
            gamma_min: -8,
            gamma_max: 6,
            step: 1,
        }
    }

    pub fn regression() -> Self {
        Self {
            c_min: -3,
            c_max: 10,
            gamma_min: -8,
            gamma_max: 3,
            step: 1,
        }
    }

    pub fn single(c_exp: i32, gamma_exp: i32) -> Self {
        Self {
            c_min: c_exp,
            c_max: c_exp,
            gamma_min: gamma_exp,
            gamma_max: gamma_exp,
            step: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step <= 0 || self.c_min > self.c_max || self.gamma_min > self.gamma_max {
            return Err(Error::InvalidInput {
                name: "grid",
                message: format!("empty or malformed grid {self:?}"),
            });
        }
        Ok(())
    }

    /// Cells sorted by gamma, then C.
    pub fn candidates(&self) -> Vec<Candidate> {
        let step = self.step.max(1) as usize;
        let mut out = Vec::new();
        for g in (self.gamma_min..=self.gamma_max).step_by(step) {
            for c in (self.c_min..=self.c_max).step_by(step) {
                out.push(Candidate::new(c, g));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Accuracy, percent.
    Maximize,
    /// RMSE, dBm.
    Minimize,
}

impl Objective {
    /// Whether `a` beats `b`. NaN never beats anything and loses to any number.
    fn better(self, a: f64, b: f64) -> bool {
        if a.is_nan() {
            return false;
        }
        if b.is_nan() {
            return true;
        }
        match self {
            Objective::Maximize => a > b,
            Objective::Minimize => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub candidate: Candidate,
    pub score: f64,
}

/// Scores every cell. Results are in `grid.candidates()` order whatever
/// the completion order.
pub fn evaluate_grid<F>(grid: &GridSpec, evaluate: F) -> Vec<CellScore>
where
    F: Fn(Candidate) -> f64 + Sync,
{
    grid.candidates()
        .into_par_iter()
        .map(|candidate| CellScore {
            candidate,
            score: evaluate(candidate),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Candidate,
    pub score: f64,
    pub cells: Vec<CellScore>,
}

/// Best-scoring cell; ties go to the smaller gamma, then the smaller C.
pub fn select_best(cells: &[CellScore], objective: Objective) -> Option<CellScore> {
    let mut sorted = cells.to_vec();
    sorted.sort_by_key(|c| c.candidate);
    let mut best: Option<CellScore> = None;
    for cell in sorted {
        if best.is_none_or(|b| objective.better(cell.score, b.score)) {
            best = Some(cell);
        }
    }
    best
}

pub fn grid_search_best<F>(grid: &GridSpec, objective: Objective, evaluate: F) -> Result<SearchResult>
where
    F: Fn(Candidate) -> f64 + Sync,
{
    grid.validate()?;
    let cells = evaluate_grid(grid, evaluate);
    let best = select_best(&cells, objective).expect("validated grids are nonempty");
    Ok(SearchResult {
        best: best.candidate,
        score: best.score,
        cells,
    })
}

/// Quality bound and the law by which it is loosened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundPolicy {
    /// Accept accuracy `>= lower_bound - step * k` after `k` relaxations.
    Accuracy { lower_bound: f64, step: f64 },
    /// Accept RMSE `<= sqrt(upper_bound^2 + increment * k)`.
    Rmse { upper_bound: f64, increment: f64 },
}

impl BoundPolicy {
    pub fn accuracy(class: TerrainClass) -> Self {
        let lower_bound = match class {
            TerrainClass::Flat => 75.0,
            TerrainClass::Hilly => 90.0,
        };
        BoundPolicy::Accuracy {
            lower_bound,
            step: 5.0,
        }
    }

    pub fn rmse() -> Self {
        BoundPolicy::Rmse {
            upper_bound: 8.0,
            increment: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BoundPolicy::Accuracy { lower_bound, step } => lower_bound > 0.0 && step > 0.0,
            BoundPolicy::Rmse { upper_bound, increment } => upper_bound > 0.0 && increment > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput {
                name: "bound policy",
                message: format!("bounds and steps must be positive: {self:?}"),
            })
        }
    }

    /// Bound in force after `k` relaxations.
    pub fn bound(&self, k: usize) -> f64 {
        match *self {
            BoundPolicy::Accuracy { lower_bound, step } => lower_bound - step * k as f64,
            BoundPolicy::Rmse { upper_bound, increment } => (upper_bound * upper_bound + increment * k as f64).sqrt(),
        }
    }

    pub fn objective(&self) -> Objective {
        match self {
            BoundPolicy::Accuracy { .. } => Objective::Maximize,
            BoundPolicy::Rmse { .. } => Objective::Minimize,
        }
    }

    pub fn qualifies(&self, score: f64, bound: f64) -> bool {
        match self {
            BoundPolicy::Accuracy { .. } => score >= bound,
            BoundPolicy::Rmse { .. } => score <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedResult {
    pub best: Candidate,
    pub score: f64,
    /// Bound the winner met.
    pub bound: f64,
    pub relaxations: usize,
    /// Bounds tried, first to last.
    pub trajectory: Vec<f64>,
    pub cells: Vec<CellScore>,
}

/// Smallest-gamma cell (then smallest C) meeting the bound, relaxing the
/// bound until some cell qualifies.
pub fn select_bounded(cells: &[CellScore], policy: &BoundPolicy) -> Result<BoundedResult> {
    let mut trajectory = Vec::new();
    for k in 0..=MAX_RELAXATIONS {
        let bound = policy.bound(k);
        trajectory.push(bound);
        if let Some(winner) = cells
            .iter()
            .filter(|c| policy.qualifies(c.score, bound))
            .min_by_key(|c| c.candidate)
        {
            return Ok(BoundedResult {
                best: winner.candidate,
                score: winner.score,
                bound,
                relaxations: k,
                trajectory,
                cells: cells.to_vec(),
            });
        }
    }
    Err(Error::NonTermination {
        relaxations: MAX_RELAXATIONS,
    })
}

pub fn grid_search_bounded<F>(grid: &GridSpec, policy: &BoundPolicy, evaluate: F) -> Result<BoundedResult>
where
    F: Fn(Candidate) -> f64 + Sync,
{
    grid.validate()?;
    policy.validate()?;
    select_bounded(&evaluate_grid(grid, evaluate), policy)
}

/// Fold index of every sample. Each class is shuffled separately and dealt
/// round-robin, so every fold holds `floor` or `ceil` of its share.
pub fn stratified_folds(labels: &[Class], k: usize, seed: u64) -> Result<Vec<usize>> {
    check_folds(k, labels.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    for class in [Class::Positive, Class::Negative] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::FoldDegeneracy { fold: members.len() });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

/// Fold index of every sample for unlabelled data.
pub fn shuffled_folds(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_folds(k, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

fn check_folds(k: usize, n: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidInput {
            name: "folds",
            message: format!("need at least 2 folds, got {k}"),
        });
    }
    if n < k {
        return Err(Error::InsufficientData { required: k, actual: n });
    }
    Ok(())
}

/// Mean of `score(fold)` over `0..k`.
pub fn fold_mean<F>(k: usize, score: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64>,
{
    let mut total = 0.0;
    for f in 0..k {
        total += score(f)?;
    }
    Ok(total / k as f64)
}

/// Dense RBF Gram matrix over all samples, shared by every fold.
struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    fn new(x: &[Vec<f64>], params: KernelParams) -> Self {
        let n = x.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
            for j in 0..i {
                let v = params.eval(&x[i], &x[j]);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }
}

/// The Gram matrix restricted to `rows`.
struct SubGram<'a> {
    gram: &'a Gram,
    rows: &'a [usize],
}

impl KernelSource for SubGram<'_> {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        self.gram.values[self.rows[i] * self.gram.n + self.rows[j]]
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        let base = &self.gram.values[self.rows[i] * self.gram.n..][..self.gram.n];
        for (o, &j) in out.iter_mut().zip(self.rows) {
            *o = base[j];
        }
    }
}

fn split_fold(fold: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..fold.len()).partition(|&i| fold[i] != f)
}

/// Mean held-out accuracy (percent) of a C-SVC over the given folds.
pub fn cross_validate_classifier(
    x: &[Vec<f64>],
    labels: &[Class],
    fold: &[usize],
    k: usize,
    candidate: Candidate,
    solver: SolverParams,
) -> Result<f64> {
    let kernel = KernelParams::new(candidate.gamma())?;
    let params = SvcParams::new(candidate.c(), kernel).with_solver(solver);
    let gram = Gram::new(x, kernel);
    fold_mean(k, |f| {
        let (train, test) = split_fold(fold, f);
        if test.is_empty() {
            return Err(Error::FoldDegeneracy { fold: f });
        }
        let xs: Vec<&[f64]> = train.iter().map(|&i| x[i].as_slice()).collect();
        let ys: Vec<Class> = train.iter().map(|&i| labels[i]).collect();
        let model = train_csvc_with(&SubGram { gram: &gram, rows: &train }, &xs, &ys, &params)?.model;
        let correct = test.iter().filter(|&&i| model.decide(&x[i]) == labels[i]).count();
        Ok(100.0 * correct as f64 / test.len() as f64)
    })
}

/// Mean held-out RMSE (dBm) of an epsilon-SVR over the given folds.
pub fn cross_validate_regressor(
    x: &[Vec<f64>],
    targets: &[f64],
    fold: &[usize],
    k: usize,
    candidate: Candidate,
    epsilon: f64,
    solver: SolverParams,
) -> Result<f64> {
    let kernel = KernelParams::new(candidate.gamma())?;
    let params = SvrParams::new(candidate.c(), kernel).with_epsilon(epsilon).with_solver(solver);
    let gram = Gram::new(x, kernel);
    fold_mean(k, |f| {
        let (train, test) = split_fold(fold, f);
        if test.is_empty() || train.is_empty() {
            return Err(Error::FoldDegeneracy { fold: f });
        }
        let xs: Vec<&[f64]> = train.iter().map(|&i| x[i].as_slice()).collect();
        let ys: Vec<f64> = train.iter().map(|&i| targets[i]).collect();
        let model = train_epsilon_svr_with(&SubGram { gram: &gram, rows: &train }, &xs, &ys, &params)?.model;
        let residuals: Vec<f64> = test.iter().map(|&i| model.predict(&x[i]) - targets[i]).collect();
        Ok(rmse(&residuals))
    })
}

pub fn rmse(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Every evaluated cell, the bound trajectory and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub strategy: String,
    /// Data the scores were measured on.
    pub scored_on: String,
    pub objective: Objective,
    pub cells: Vec<CellScore>,
    pub trajectory: Vec<f64>,
    pub selected: Candidate,
    pub score: f64,
}

impl TuningReport {
    pub fn from_best(result: &SearchResult, objective: Objective, scored_on: &str) -> Self {
        Self {
            strategy: "best".into(),
            scored_on: scored_on.into(),
            objective,
            cells: result.cells.clone(),
            trajectory: Vec::new(),
            selected: result.best,
            score: result.score,
        }
    }

    pub fn from_bounded(result: &BoundedResult, policy: &BoundPolicy, scored_on: &str) -> Self {
        Self {
            strategy: "bounded".into(),
            scored_on: scored_on.into(),
            objective: policy.objective(),
            cells: result.cells.clone(),
            trajectory: result.trajectory.clone(),
            selected: result.best,
            score: result.score,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        assert_eq!(GridSpec::classification().candidates().len(), 19 * 15);
        assert_eq!(GridSpec::regression().candidates().len(), 14 * 12);
        let c = Candidate::new(-3, 2);
        assert_eq!((c.c(), c.gamma()), (0.125, 4.0));
    }

    #[test]
    fn nan_is_worst() {
        let cells = [
            CellScore { candidate: Candidate::new(0, 0), score: f64::NAN },
            CellScore { candidate: Candidate::new(1, 0), score: 10.0 },
        ];
        assert_eq!(select_best(&cells, Objective::Maximize).unwrap().candidate, Candidate::new(1, 0));
        assert_eq!(select_best(&cells, Objective::Minimize).unwrap().candidate, Candidate::new(1, 0));
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<Class> = (0..23).map(|i| if i % 3 == 0 { Class::Negative } else { Class::Positive }).collect();
        let fold = stratified_folds(&labels, 5, 9).unwrap();
        for f in 0..5 {
            let neg = (0..23).filter(|&i| fold[i] == f && labels[i] == Class::Negative).count();
            assert!(neg >= 1 && neg <= 2);
        }
        assert_eq!(stratified_folds(&labels, 5, 9).unwrap(), fold);
    }

    #[test]
    fn too_few_of_a_class_is_degenerate() {
        let mut labels = vec![Class::Positive; 20];
        labels[0] = Class::Negative;
        labels[1] = Class::Negative;
        assert!(matches!(stratified_folds(&labels, 5, 1), Err(Error::FoldDegeneracy { .. })));
    }
}
