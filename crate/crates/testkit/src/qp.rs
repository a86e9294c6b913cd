//! Brute-force solver for small box- and equality-constrained convex QPs
//!
//! ```text
//! min 1/2 x'Qx + p'x   s.t.  y'x = 0,  0 <= x_i <= c
//! ```
//!
//! by accelerated projected gradient with adaptive restart. The projection
//! onto the feasible set is computed exactly by bisection on the multiplier
//! of the equality constraint.

pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn objective(q: &[Vec<f64>], p: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut v = 0.0;
    for i in 0..n {
        let mut qx = 0.0;
        for j in 0..n {
            qx += q[i][j] * x[j];
        }
        v += 0.5 * x[i] * qx + p[i] * x[i];
    }
    v
}

/// Euclidean projection of `v` onto `{x : y'x = 0, 0 <= x <= c}`.
///
/// `y` entries must be +1 or -1. The multiplier `lambda` of the equality
/// constraint is found exactly: `r(lambda) = y' clip(v - lambda y)` is
/// piecewise linear and non-increasing, so the root lies between two
/// adjacent breakpoints.
pub fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let residual = |lambda: f64| -> f64 { at(lambda).iter().zip(y).map(|(a, b)| a * b).sum() };
    let mut breaks: Vec<f64> = v
        .iter()
        .zip(y)
        .flat_map(|(vi, yi)| [vi / yi, (vi - c) / yi])
        .collect();
    breaks.sort_by(f64::total_cmp);
    let mut prev = (breaks[0], residual(breaks[0]));
    if prev.1 <= 0.0 {
        return at(prev.0);
    }
    for &b in &breaks[1..] {
        let r = residual(b);
        if r <= 0.0 {
            let (b0, r0) = prev;
            let lambda = if r0 == r { b } else { b0 + (b - b0) * r0 / (r0 - r) };
            return at(lambda);
        }
        prev = (b, r);
    }
    at(prev.0)
}

pub fn solve(q: &[Vec<f64>], p: &[f64], y: &[f64], c: f64, max_iterations: usize) -> QpSolution {
    let n = p.len();
    // Gershgorin bound on the largest eigenvalue
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1e-12, f64::max);
    let step = 1.0 / lipschitz;
    let grad = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * x[j]).sum::<f64>() + p[i])
            .collect()
    };

    let mut x = project(&vec![0.0; n], y, c);
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(q, p, &x);
    let mut iterations = 0;
    for k in 0..max_iterations {
        iterations = k + 1;
        let g = grad(&z);
        let trial: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let x_next = project(&trial, y, c);
        let f_next = objective(q, p, &x_next);
        if f_next > f_prev {
            // restart momentum
            t = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let moved: f64 = x_next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        z = x_next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        x = x_next;
        t = t_next;
        f_prev = f_next;
        if moved < 1e-15 * (1.0 + c) && k > 10 {
            break;
        }
    }
    QpSolution {
        objective: objective(q, p, &x),
        x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_is_feasible() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let x = project(&[3.0, -2.0, 0.5, 0.1], &y, 1.0);
        let r: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(r.abs() < 1e-12);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn two_variable_closed_form() {
        let k = 0.25;
        let q = vec![vec![1.0, -k], vec![-k, 1.0]];
        let sol = solve(&q, &[-1.0, -1.0], &[1.0, -1.0], 10.0, 100_000);
        let a = 1.0 / (1.0 - k);
        assert!((sol.x[0] - a).abs() < 1e-8);
        assert!((sol.objective + a).abs() < 1e-10);
    }
}
