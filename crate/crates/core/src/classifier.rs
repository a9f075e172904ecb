//! Binary max-margin classifier over feature vectors.
//!
//! Features are standardized on the training set, compared with a
//! normalized cubic polynomial kernel, separated by an SVM whose dual is
//! solved with sequential minimal optimization, and mapped to probabilities
//! by a sigmoid fitted to the decision values (Platt scaling).

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::error::{Error, Result};

const MODEL_MAGIC: &[u8; 4] = b"TSMD";
const MODEL_VERSION: u32 = 1;

/// Per-feature affine map to zero mean and unit variance.
///
/// Features that are constant on the training set map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    /// `1 / std`, or 0 for constant features.
    inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("cannot standardize an empty set".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let inv_std = var
            .iter()
            .zip(&mean)
            .map(|(v, m)| {
                let sd = (v / n).sqrt();
                // rounding residue of a constant column is not variance
                if sd <= 1e-12 * m.abs().max(1.0) {
                    0.0
                } else {
                    1.0 / sd
                }
            })
            .collect();
        Ok(Standardizer { mean, inv_std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.inv_std)
            .map(|((x, m), s)| if *s == 0.0 { 0.0 } else { (x - m) * s })
            .collect()
    }
}

/// `K(x, y) = (x.y + offset)^degree`, normalized to
/// `K(x, y) / sqrt(K(x, x) K(y, y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyKernel {
    pub degree: u32,
    pub offset: f64,
}

impl Default for PolyKernel {
    fn default() -> Self {
        PolyKernel {
            degree: 3,
            offset: 1.0,
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl PolyKernel {
    pub fn unnormalized(&self, x: &[f64], y: &[f64]) -> f64 {
        (dot(x, y) + self.offset).powi(self.degree as i32)
    }

    fn normalize(raw: f64, kxx: f64, kyy: f64) -> f64 {
        let denom = (kxx * kyy).sqrt();
        if denom > 0.0 {
            (raw / denom).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        Self::normalize(
            self.unnormalized(x, y),
            self.unnormalized(x, x),
            self.unnormalized(y, y),
        )
    }

    /// Full normalized Gram matrix, row-major.
    pub fn gram(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let diag: Vec<f64> = rows.iter().map(|r| self.unnormalized(r, r)).collect();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = if i == j && diag[i] > 0.0 {
                    1.0
                } else {
                    Self::normalize(self.unnormalized(&rows[i], &rows[j]), diag[i], diag[j])
                };
            }
        });
        out
    }
}

/// Normalized third-order polynomial kernel with offset 1.
pub fn kernel(x: &[f64], y: &[f64]) -> f64 {
    PolyKernel::default().eval(x, y)
}

/// Labeled training vectors; labels are `+1.0` or `-1.0`.
#[derive(Debug, Clone)]
pub struct TrainSet {
    vectors: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl TrainSet {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: vectors.len(),
                got: labels.len(),
            });
        }
        let positives = labels.iter().filter(|&&l| l).count();
        let negatives = labels.len() - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::DegenerateLabels { positives, negatives });
        }
        let d = vectors[0].len();
        for v in &vectors {
            if v.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("training features"));
            }
        }
        Ok(TrainSet {
            vectors,
            labels: labels.into_iter().map(|l| if l { 1.0 } else { -1.0 }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn subset(&self, idx: &[usize]) -> Result<TrainSet> {
        TrainSet::new(
            idx.iter().map(|&i| self.vectors[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i] > 0.0).collect(),
        )
    }
}

/// Where the sigmoid is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Calibration {
    /// On the decision values of the training set itself.
    Training,
    /// On held-out decision values from an internal k-fold split.
    CrossValidated { folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub kernel: PolyKernel,
    pub calibration: Calibration,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            kernel: PolyKernel::default(),
            calibration: Calibration::Training,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) || !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need C > 0 and tol > 0, got C={} tol={}",
                self.c, self.tol
            )));
        }
        if let Calibration::CrossValidated { folds } = self.calibration {
            if folds < 2 {
                return Err(Error::InvalidInput("calibration needs at least 2 folds".into()));
            }
        }
        Ok(())
    }
}

/// Solution of the SVM dual
/// `max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij` s.t. `0 <= a <= C`, `sum a_i y_i = 0`.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// SMO with maximal-violating-pair working set selection.
///
/// `gram` is the `n x n` kernel matrix. Stops when the largest KKT violation
/// `max_{I_up} -y G - min_{I_low} -y G` falls to `tol`. Ties in selection go
/// to the lowest index.
pub fn solve_dual(gram: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = y.len();
    if gram.len() != n * n {
        return Err(Error::LengthMismatch {
            expected: n * n,
            got: gram.len(),
        });
    }
    let k = |i: usize, j: usize| gram[i * n + j];
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    const TAU: f64 = 1e-12;

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                what: "smo",
                iterations,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * q_ij).max(TAU);
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
            let quad = (k(i, i) + k(j, j) - 2.0 * q_ij).max(TAU);
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

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    // bias from free vectors, else midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
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
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = dual_objective(gram, y, &alpha);
    Ok(DualSolution {
        alpha,
        bias: -rho,
        objective,
        iterations,
    })
}

/// `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(gram: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Uncalibrated SVM: `f(x) = sum_i coef_i K(s_i, std(x)) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    standardizer: Standardizer,
    kernel: PolyKernel,
    support: Vec<Vec<f64>>,
    support_diag: Vec<f64>,
    coef: Vec<f64>,
    bias: f64,
    dual_objective: f64,
}

impl SvmModel {
    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dual_objective(&self) -> f64 {
        self.dual_objective
    }

    pub fn n_support(&self) -> usize {
        self.support.len()
    }

    fn decision_standardized(&self, z: &[f64]) -> f64 {
        let kzz = self.kernel.unnormalized(z, z);
        let mut f = self.bias;
        for ((s, c), kss) in self.support.iter().zip(&self.coef).zip(&self.support_diag) {
            f += c * PolyKernel::normalize(self.kernel.unnormalized(s, z), *kss, kzz);
        }
        f
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.standardizer.dim() {
            return Err(Error::LengthMismatch {
                expected: self.standardizer.dim(),
                got: x.len(),
            });
        }
        Ok(self.decision_standardized(&self.standardizer.apply(x)))
    }
}

/// Standardizes `ts`, builds the Gram matrix and solves the dual.
pub fn train_smo(ts: &TrainSet, config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    let standardizer = Standardizer::fit(&ts.vectors)?;
    let z: Vec<Vec<f64>> = ts.vectors.iter().map(|x| standardizer.apply(x)).collect();
    let gram = config.kernel.gram(&z);
    let sol = solve_dual(&gram, &ts.labels, config.c, config.tol, config.max_iter)?;
    log::debug!(
        "smo: n={} iterations={} objective={:.6}",
        ts.len(),
        sol.iterations,
        sol.objective
    );
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support.push(z[i].clone());
            coef.push(a * ts.labels[i]);
        }
    }
    let support_diag = support.iter().map(|s| config.kernel.unnormalized(s, s)).collect();
    Ok(SvmModel {
        standardizer,
        kernel: config.kernel,
        support,
        support_diag,
        coef,
        bias: sol.bias,
        dual_objective: sol.objective,
    })
}

const PLATT_MAX_ITER: usize = 200;
const PLATT_GRAD_TOL: f64 = 1e-10;

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `(p, 1 - p)` for `p = sigmoid(z)` without cancellation.
fn sigmoid_pair(z: f64) -> (f64, f64) {
    if z >= 0.0 {
        let e = (-z).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = z.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

struct PlattObjective<'a> {
    f: &'a [f64],
    t: Vec<f64>,
}

impl PlattObjective<'_> {
    fn loss(&self, a: f64, b: f64) -> f64 {
        self.f
            .iter()
            .zip(&self.t)
            .map(|(f, t)| {
                let z = a * f + b;
                log1p_exp(z) - t * z
            })
            .sum()
    }

    /// Gradient and Hessian `[h_aa, h_ab, h_bb]`.
    fn derivatives(&self, a: f64, b: f64) -> ([f64; 2], [f64; 3]) {
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for (f, t) in self.f.iter().zip(&self.t) {
            let (p, q) = sigmoid_pair(a * f + b);
            let d1 = p - t;
            let d2 = p * q;
            g[0] += f * d1;
            g[1] += d1;
            h[0] += f * f * d2;
            h[1] += f * d2;
            h[2] += d2;
        }
        (g, h)
    }
}

/// Fits `P(y = +1 | f) = sigmoid(A f + B)` by Newton's method on the
/// cross-entropy against smoothed targets `(N+ + 1)/(N+ + 2)` and
/// `1/(N- + 2)`.
pub fn platt_calibrate(decision: &[f64], labels: &[f64]) -> Result<(f64, f64)> {
    if decision.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: decision.len(),
            got: labels.len(),
        });
    }
    if decision.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite("decision values"));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels {
            positives: n_pos,
            negatives: n_neg,
        });
    }
    let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let lo = 1.0 / (n_neg as f64 + 2.0);
    let obj = PlattObjective {
        f: decision,
        t: labels.iter().map(|&y| if y > 0.0 { hi } else { lo }).collect(),
    };

    let mut a = 0.0;
    let mut b = ((n_pos as f64 + 1.0) / (n_neg as f64 + 1.0)).ln();
    let mut loss = obj.loss(a, b);
    let mut converged = false;
    for _ in 0..PLATT_MAX_ITER {
        let (g, h) = obj.derivatives(a, b);
        let gnorm = g[0].hypot(g[1]);
        if gnorm <= PLATT_GRAD_TOL {
            converged = true;
            break;
        }
        let (haa, hab, hbb) = (h[0] + 1e-12, h[1], h[2] + 1e-12);
        let det = haa * hbb - hab * hab;
        let da = -(hbb * g[0] - hab * g[1]) / det;
        let db = -(-hab * g[0] + haa * g[1]) / det;
        let slope = g[0] * da + g[1] * db;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nl = obj.loss(na, nb);
            if nl < loss + 1e-4 * step * slope {
                a = na;
                b = nb;
                loss = nl;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            // Near the optimum the loss stops resolving the decrease; take
            // the Newton step if it still shrinks the gradient.
            let (na, nb) = (a + da, b + db);
            let (ng, _) = obj.derivatives(na, nb);
            if ng[0].hypot(ng[1]) < gnorm {
                a = na;
                b = nb;
                loss = obj.loss(a, b);
            } else {
                break;
            }
        }
    }
    if !converged {
        let (g, _) = obj.derivatives(a, b);
        if g[0].hypot(g[1]) > PLATT_GRAD_TOL {
            return Err(Error::NoConvergence {
                what: "platt calibration",
                iterations: PLATT_MAX_ITER,
            });
        }
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::NonFinite("platt parameters"));
    }

    let mean = |sign: f64| {
        let (s, c) = decision
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y * sign > 0.0)
            .fold((0.0, 0usize), |(s, c), (f, _)| (s + f, c + 1));
        s / c as f64
    };
    if mean(1.0) > mean(-1.0) && a < 0.0 {
        return Err(Error::Calibration(format!(
            "negative slope {a} although positives score higher"
        )));
    }
    Ok((a, b))
}

/// Smallest probability returned; keeps outputs strictly inside (0, 1).
const PROB_FLOOR: f64 = 1e-15;

fn sigmoid(z: f64) -> f64 {
    sigmoid_pair(z).0.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Calibrated classifier bound to one feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    fingerprint: String,
    svm: SvmModel,
    platt_a: f64,
    platt_b: f64,
}

impl Model {
    /// Trains the SVM and fits the sigmoid as `config.calibration` says.
    pub fn train(ts: &TrainSet, config: &SvmConfig, fingerprint: &str) -> Result<Model> {
        let svm = train_smo(ts, config)?;
        let decision: Vec<f64> = match config.calibration {
            Calibration::Training => ts
                .vectors
                .iter()
                .map(|x| svm.decision_value(x))
                .collect::<Result<_>>()?,
            Calibration::CrossValidated { folds } => {
                let mut held_out = vec![0.0; ts.len()];
                for fold in 0..folds {
                    let train: Vec<usize> = (0..ts.len()).filter(|i| i % folds != fold).collect();
                    let test: Vec<usize> = (0..ts.len()).filter(|i| i % folds == fold).collect();
                    if test.is_empty() {
                        continue;
                    }
                    let inner = train_smo(&ts.subset(&train)?, config)?;
                    for i in test {
                        held_out[i] = inner.decision_value(&ts.vectors[i])?;
                    }
                }
                held_out
            }
        };
        let (platt_a, platt_b) = platt_calibrate(&decision, &ts.labels)?;
        Ok(Model {
            fingerprint: fingerprint.to_string(),
            svm,
            platt_a,
            platt_b,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn svm(&self) -> &SvmModel {
        &self.svm
    }

    pub fn dim(&self) -> usize {
        self.svm.standardizer.dim()
    }

    /// `(A, B)` of the calibration sigmoid `sigmoid(A f + B)`.
    pub fn platt(&self) -> (f64, f64) {
        (self.platt_a, self.platt_b)
    }

    pub fn check_fingerprint(&self, fingerprint: &str) -> Result<()> {
        if self.fingerprint != fingerprint {
            return Err(Error::FingerprintMismatch {
                model: self.fingerprint.clone(),
                features: fingerprint.to_string(),
            });
        }
        Ok(())
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        self.svm.decision_value(x)
    }

    pub fn prob_from_decision(&self, f: f64) -> f64 {
        sigmoid(self.platt_a * f + self.platt_b)
    }

    /// Calibrated probability that the raw feature vector `x` is positive.
    pub fn predict_prob(&self, x: &[f64]) -> Result<f64> {
        Ok(self.prob_from_decision(self.decision_value(x)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let svm = &self.svm;
        binio::write_header(w, MODEL_MAGIC, MODEL_VERSION)?;
        let fp = self.fingerprint.as_bytes();
        binio::write_u64(w, fp.len() as u64)?;
        w.write_all(fp)?;
        binio::write_u64(w, svm.standardizer.dim() as u64)?;
        binio::write_u64(w, svm.support.len() as u64)?;
        binio::write_u32(w, svm.kernel.degree)?;
        binio::write_f64(w, svm.kernel.offset)?;
        binio::write_f64(w, self.platt_a)?;
        binio::write_f64(w, self.platt_b)?;
        binio::write_f64(w, svm.bias)?;
        binio::write_f64(w, svm.dual_objective)?;
        binio::write_f64s(w, &svm.standardizer.mean)?;
        binio::write_f64s(w, &svm.standardizer.inv_std)?;
        binio::write_f64s(w, &svm.coef)?;
        for s in &svm.support {
            binio::write_f64s(w, s)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Model> {
        binio::read_header(r, MODEL_MAGIC, MODEL_VERSION, "model")?;
        let fp_len = binio::read_usize(r)?;
        if fp_len > 1024 {
            return Err(Error::format("model", "fingerprint too long"));
        }
        let mut fp = vec![0u8; fp_len];
        r.read_exact(&mut fp)?;
        let fingerprint = String::from_utf8(fp).map_err(|_| Error::format("model", "fingerprint not utf-8"))?;
        let dim = binio::read_usize(r)?;
        let n_sv = binio::read_usize(r)?;
        let kernel = PolyKernel {
            degree: binio::read_u32(r)?,
            offset: binio::read_f64(r)?,
        };
        let platt_a = binio::read_f64(r)?;
        let platt_b = binio::read_f64(r)?;
        let bias = binio::read_f64(r)?;
        let dual_objective = binio::read_f64(r)?;
        let mean = binio::read_f64s(r, dim)?;
        let inv_std = binio::read_f64s(r, dim)?;
        let coef = binio::read_f64s(r, n_sv)?;
        let support: Vec<Vec<f64>> = (0..n_sv).map(|_| binio::read_f64s(r, dim)).collect::<Result<_>>()?;
        let support_diag = support.iter().map(|s| kernel.unnormalized(s, s)).collect();
        Ok(Model {
            fingerprint,
            svm: SvmModel {
                standardizer: Standardizer { mean, inv_std },
                kernel,
                support,
                support_diag,
                coef,
                bias,
                dual_objective,
            },
            platt_a,
            platt_b,
        })
    }
}
