//! SMO against a dense projected-gradient QP solver and against the primal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vhfplan_svm::{
    train_csvc, train_epsilon_svr, Class, KernelParams, SolverParams, SvcParams, SvrParams,
};
use vhfplan_testkit::{qp, svm as reference};

const DIM: usize = 7;

fn random_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..DIM).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect()
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Class> {
    let mut z: Vec<Class> = (0..n)
        .map(|_| if rng.random_bool(0.5) { Class::Positive } else { Class::Negative })
        .collect();
    // both classes must be present
    z[0] = Class::Positive;
    z[1] = Class::Negative;
    z
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn tight() -> SolverParams {
    SolverParams::default().with_tol(1e-9)
}

/// Stopping tolerance for objective comparisons; the default 1e-3 leaves
/// gaps of a few 1e-6.
fn oracle_stop() -> SolverParams {
    SolverParams::default().with_tol(1e-6)
}

#[test]
fn csvc_objective_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.random_range(2..=10);
        let x = random_rows(&mut rng, n);
        let z = random_labels(&mut rng, n);
        let c = 2f64.powi(rng.random_range(-3..=6));
        let gamma = 2f64.powi(rng.random_range(-4..=2));
        let params = SvcParams::new(c, KernelParams::new(gamma).unwrap()).with_solver(oracle_stop());
        let fit = train_csvc(&x, &z, &params).unwrap();

        let k = reference::kernel_matrix(&x, gamma);
        let zs: Vec<f64> = z.iter().map(|l| l.sign()).collect();
        let dense = reference::csvc_dual(&k, &zs);
        let oracle = qp::solve(&dense.q, &dense.p, &dense.y, c, 200_000);

        let err = rel_err(fit.dual.objective, oracle.objective);
        assert!(
            err <= 1e-6,
            "case {case}: smo {} oracle {} rel {err:e}",
            fit.dual.objective,
            oracle.objective
        );
        // the solver may not beat the true optimum beyond tolerance
        assert!(fit.dual.objective >= oracle.objective - 1e-6 * oracle.objective.abs());
        let own = qp::objective(&dense.q, &dense.p, &fit.dual.alpha);
        assert!(rel_err(own, fit.dual.objective) < 1e-9);
    }
}

#[test]
fn svr_objective_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let n = rng.random_range(2..=8);
        let x = random_rows(&mut rng, n);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(-119.0..-60.0)).collect();
        let c = 2f64.powi(rng.random_range(-3..=6));
        let gamma = 2f64.powi(rng.random_range(-4..=2));
        let eps = [0.0, 1.0, 3.0][case % 3];
        let params = SvrParams::new(c, KernelParams::new(gamma).unwrap())
            .with_epsilon(eps)
            .with_solver(oracle_stop());
        let fit = train_epsilon_svr(&x, &m, &params).unwrap();

        let k = reference::kernel_matrix(&x, gamma);
        let dense = reference::svr_dual(&k, &m, eps);
        let oracle = qp::solve(&dense.q, &dense.p, &dense.y, c, 200_000);

        let err = rel_err(fit.dual.objective, oracle.objective);
        assert!(
            err <= 1e-6,
            "case {case}: smo {} oracle {} rel {err:e}",
            fit.dual.objective,
            oracle.objective
        );
        assert!(fit.dual.objective >= oracle.objective - 1e-6 * oracle.objective.abs());
    }
}

/// The bias is only as accurate as the stopping tolerance, so the primal
/// comparisons below run the solver to a much tighter tolerance.
///
/// Strong duality pins down the sign of the target term in the regression
/// dual: the trained expansion must attain a primal value equal to minus the
/// dual optimum.
#[test]
fn svr_dual_optimum_equals_primal_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.random_range(4..=12);
        let x = random_rows(&mut rng, n);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(-119.0..-60.0)).collect();
        let c = 2f64.powi(rng.random_range(-2..=4));
        let gamma = 2f64.powi(rng.random_range(-3..=1));
        let params = SvrParams::new(c, KernelParams::new(gamma).unwrap()).with_solver(tight());
        let fit = train_epsilon_svr(&x, &m, &params).unwrap();

        let k = reference::kernel_matrix(&x, gamma);
        let coef: Vec<f64> = (0..n).map(|i| fit.dual.alpha[i] - fit.dual.alpha[i + n]).collect();
        let primal = reference::svr_primal(&k, &m, &coef, fit.model.bias(), c, 3.0);
        assert!(
            rel_err(primal, -fit.dual.objective) < 1e-6,
            "primal {primal} dual {}",
            fit.dual.objective
        );
        // predictions follow the targets rather than their mirror image
        for (xi, mi) in x.iter().zip(&m) {
            let r = fit.model.predict(xi) - mi;
            assert!(r.abs() <= 3.0 + 1e-6 || fit.model.coefficients().iter().any(|v| {
                (v.abs() - c).abs() < 1e-9
            }));
        }
    }
}

#[test]
fn csvc_dual_optimum_equals_primal_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let n = rng.random_range(4..=12);
        let x = random_rows(&mut rng, n);
        let z = random_labels(&mut rng, n);
        let c = 2f64.powi(rng.random_range(-2..=4));
        let gamma = 2f64.powi(rng.random_range(-3..=1));
        let params = SvcParams::new(c, KernelParams::new(gamma).unwrap()).with_solver(tight());
        let fit = train_csvc(&x, &z, &params).unwrap();

        let k = reference::kernel_matrix(&x, gamma);
        let zs: Vec<f64> = z.iter().map(|l| l.sign()).collect();
        let coef: Vec<f64> = (0..n).map(|i| zs[i] * fit.dual.alpha[i]).collect();
        let primal = reference::csvc_primal(&k, &zs, &coef, fit.model.bias(), c);
        assert!(
            rel_err(primal, -fit.dual.objective) < 1e-6,
            "primal {primal} dual {}",
            fit.dual.objective
        );
    }
}

#[test]
fn default_tolerance_certifies_kkt_and_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..40 {
        let n = rng.random_range(10..=60);
        let x = random_rows(&mut rng, n);
        let z = random_labels(&mut rng, n);
        let gamma = 2f64.powi(rng.random_range(-4..=2));
        let c = 2f64.powi(rng.random_range(-3..=8));
        let fit = train_csvc(&x, &z, &SvcParams::new(c, KernelParams::new(gamma).unwrap())).unwrap();
        assert!(fit.dual.kkt_violation <= 1e-3);
        assert!(fit.dual.equality_residual.abs() <= 1e-8);
        assert!(fit.dual.alpha.iter().all(|a| (0.0..=c).contains(a)));

        let m: Vec<f64> = (0..n).map(|_| rng.random_range(-119.0..-50.0)).collect();
        let fit = train_epsilon_svr(&x, &m, &SvrParams::new(c, KernelParams::new(gamma).unwrap())).unwrap();
        assert!(fit.dual.kkt_violation <= 1e-3);
        assert!(fit.dual.equality_residual.abs() <= 1e-8);
        assert!(fit.dual.alpha.iter().all(|a| (0.0..=c).contains(a)));
        fit.model.validate().unwrap();
    }
}
