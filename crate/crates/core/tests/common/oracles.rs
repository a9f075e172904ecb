//! Independent reference implementations used by the integration and
//! acceptance tests. They share no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// PPMI straight from the definition, on a dense count matrix.
pub fn dense_ppmi(counts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = counts.len();
    let cols = counts.first().map_or(0, Vec::len);
    let total: f64 = counts.iter().flatten().sum();
    let row_sum: Vec<f64> = counts.iter().map(|r| r.iter().sum()).collect();
    let col_sum: Vec<f64> = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let f = counts[i][j];
                    if f <= 0.0 {
                        0.0
                    } else {
                        (f * total / (row_sum[i] * col_sum[j])).ln().max(0.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// All singular values, largest first, from a full dense decomposition.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    let n = rows[0].len();
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut s: Vec<f64> = a.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Exact SVM dual optimum by enumerating every assignment of each
/// multiplier to {0, C, free} and solving the KKT system on the free set.
pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

fn objective(q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    alpha.sum() - 0.5 * alpha.dot(&(q * alpha))
}

pub fn exhaustive_qp(gram: &[f64], y: &[f64], c: f64) -> QpSolution {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram[i * n + j]);
    let mut best: Option<(f64, DVector<f64>)> = None;
    let feas = 1e-9 * c.max(1.0);

    for code in 0..3usize.pow(n as u32) {
        // state per index: 0 -> at zero, 1 -> at C, 2 -> free
        let mut state = vec![0; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = k % 3;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
            if balance.abs() > feas {
                continue;
            }
        } else {
            let f = free.len();
            let mut sys = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            let q_alpha = &q * &alpha;
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    sys[(a, b)] = q[(i, j)];
                }
                sys[(a, f)] = y[i];
                sys[(f, a)] = y[i];
                rhs[a] = 1.0 - q_alpha[i];
            }
            rhs[f] = -(0..n).map(|i| y[i] * alpha[i]).sum::<f64>();
            let svd = sys.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12) else { continue };
            if (&sys * &sol - &rhs).amax() > 1e-8 {
                continue;
            }
            if free.iter().enumerate().any(|(a, _)| sol[a] < -feas || sol[a] > c + feas) {
                continue;
            }
            for (a, &i) in free.iter().enumerate() {
                alpha[i] = sol[a].clamp(0.0, c);
            }
        }
        let obj = objective(&q, &alpha);
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, alpha));
        }
    }
    let (objective, alpha) = best.expect("alpha = 0 is always feasible");
    let bias = bias_for(gram, y, c, alpha.as_slice());
    QpSolution {
        alpha: alpha.iter().copied().collect(),
        bias,
        objective,
    }
}

/// Bias from free multipliers (their mean), else the midpoint of the
/// feasible interval given by the bounded ones.
pub fn bias_for(gram: &[f64], y: &[f64], c: f64, alpha: &[f64]) -> f64 {
    let n = y.len();
    let g: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| alpha[j] * y[j] * gram[i * n + j]).sum())
        .collect();
    let eps = 1e-8 * c.max(1.0);
    let free: Vec<f64> = (0..n)
        .filter(|&i| alpha[i] > eps && alpha[i] < c - eps)
        .map(|i| y[i] - g[i])
        .collect();
    if !free.is_empty() {
        return free.iter().sum::<f64>() / free.len() as f64;
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        // y_i (g_i + b) >= 1 at zero, <= 1 at C
        let at_zero = alpha[i] <= eps;
        let bound = y[i] - g[i];
        let lower = (y[i] > 0.0) == at_zero;
        if lower {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo + hi) / 2.0,
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Decision values `sum_j alpha_j y_j K_ij + b` on the training points.
pub fn decisions(gram: &[f64], y: &[f64], alpha: &[f64], bias: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| (0..n).map(|j| alpha[j] * y[j] * gram[i * n + j]).sum::<f64>() + bias)
        .collect()
}

/// Normalized cubic polynomial kernel, written out independently.
pub fn cubic_kernel(x: &[f64], z: &[f64]) -> f64 {
    let k = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() + 1.0).powi(3);
    k(x, z) / (k(x, x) * k(z, z)).sqrt()
}

pub fn gram(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = cubic_kernel(&points[i], &points[j]);
        }
    }
    g
}

/// Feature-vector length for `n`-tuples with every block on and an
/// `n_k x n_p` grid: n + 2 n(n-1) + 2 C(n,2) n_k n_p.
pub fn feature_count(n: usize, n_k: usize, n_p: usize) -> usize {
    n + 2 * n * (n - 1) + 2 * (n * (n - 1) / 2) * n_k * n_p
}
