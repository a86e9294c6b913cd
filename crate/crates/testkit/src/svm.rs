//! Dense SVM duals and primals for cross-checking a solver.
//!
//! The dual QPs are in the form accepted by [`crate::qp::solve`]. The
//! primal objectives are evaluated from a dual expansion `f(x) = sum_j
//! coef_j K(x_j, x) + b` and are what the duals must match up to sign at
//! the optimum.

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
                    (-gamma * d2).exp()
                })
                .collect()
        })
        .collect()
}

pub struct DenseQp {
    pub q: Vec<Vec<f64>>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
}

/// `min 1/2 a' (zz' .* K) a - e'a`, `z'a = 0`.
pub fn csvc_dual(k: &[Vec<f64>], z: &[f64]) -> DenseQp {
    let n = z.len();
    let q = (0..n)
        .map(|i| (0..n).map(|j| z[i] * z[j] * k[i][j]).collect())
        .collect();
    DenseQp {
        q,
        p: vec![-1.0; n],
        y: z.to_vec(),
    }
}

/// Dual in the stacked variable `[u; v]` where the expansion coefficient of
/// sample `i` is `u_i - v_i`:
/// `min 1/2 (u - v)' K (u - v) + eps sum(u + v) - m'(u - v)`, `sum(u - v) = 0`.
pub fn svr_dual(k: &[Vec<f64>], m: &[f64], eps: f64) -> DenseQp {
    let n = m.len();
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = (0..2 * n)
        .map(|s| {
            (0..2 * n)
                .map(|t| sign(s) * sign(t) * k[s % n][t % n])
                .collect()
        })
        .collect();
    let p = (0..2 * n)
        .map(|t| if t < n { eps - m[t] } else { eps + m[t - n] })
        .collect();
    DenseQp {
        q,
        p,
        y: (0..2 * n).map(sign).collect(),
    }
}

fn expansion(k: &[Vec<f64>], coef: &[f64], bias: f64) -> (f64, Vec<f64>) {
    let n = coef.len();
    let f: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| coef[j] * k[i][j]).sum::<f64>() + bias)
        .collect();
    let norm2: f64 = (0..n)
        .map(|i| coef[i] * (0..n).map(|j| coef[j] * k[i][j]).sum::<f64>())
        .sum();
    (norm2, f)
}

/// `1/2 |w|^2 + C sum max(0, 1 - z_i f(x_i))`.
pub fn csvc_primal(k: &[Vec<f64>], z: &[f64], coef: &[f64], bias: f64, c: f64) -> f64 {
    let (norm2, f) = expansion(k, coef, bias);
    0.5 * norm2
        + c * f
            .iter()
            .zip(z)
            .map(|(fi, zi)| (1.0 - zi * fi).max(0.0))
            .sum::<f64>()
}

/// `1/2 |w|^2 + C sum max(0, |m_i - f(x_i)| - eps)`.
pub fn svr_primal(k: &[Vec<f64>], m: &[f64], coef: &[f64], bias: f64, c: f64, eps: f64) -> f64 {
    let (norm2, f) = expansion(k, coef, bias);
    0.5 * norm2
        + c * f
            .iter()
            .zip(m)
            .map(|(fi, mi)| ((mi - fi).abs() - eps).max(0.0))
            .sum::<f64>()
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).fold(f64::INFINITY, f64::min)
}
