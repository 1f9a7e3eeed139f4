//! Multinomial logistic regression trained with L-BFGS.
//!
//! Objective over `n` examples with `k` classes and weights `W` (`k x (d+1)`,
//! the last column is the bias):
//!
//! ```text
//! f(W) = (1/n) sum_i -log softmax(W [x_i; 1])_{y_i} + (lambda/2) ||W[:, :d]||^2
//! ```
//!
//! The bias column is not penalised.

use crate::error::{Error, Result};
use crate::tensor::{gemm, GemmOperand};

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegConfig {
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the Euclidean gradient norm drops below this.
    pub grad_tol: f64,
    /// Number of correction pairs kept by L-BFGS.
    pub memory: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            max_iters: 500,
            grad_tol: 1e-5,
            memory: 10,
        }
    }
}

/// Borrowed design matrix: `n x d` row-major features and their labels.
#[derive(Clone, Copy, Debug)]
pub struct Design<'a> {
    pub features: &'a [f64],
    pub labels: &'a [u8],
    pub dim: usize,
    pub classes: usize,
}

impl<'a> Design<'a> {
    pub fn new(features: &'a [f64], labels: &'a [u8], dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 || classes < 2 {
            return Err(Error::param("need dim >= 1 and at least two classes"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::dim(format!(
                "{} feature values for {} labels of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::param("empty training set"));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::param(format!("label {bad} outside {classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            dim,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn param_count(&self) -> usize {
        self.classes * (self.dim + 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRegression {
    /// Row-major `classes x (dim + 1)`.
    pub weights: Vec<f64>,
    pub dim: usize,
    pub classes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

impl LogisticRegression {
    /// Class scores, row-major `n x classes`.
    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let n = features.len() / self.dim;
        logits(&self.weights, features, n, self.dim, self.classes)
    }

    pub fn predict(&self, features: &[f64]) -> Vec<u8> {
        self.logits(features)
            .chunks(self.classes)
            .map(|row| {
                let mut best = 0;
                for (c, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect()
    }

    pub fn accuracy(&self, features: &[f64], labels: &[u8]) -> f64 {
        let hits = self
            .predict(features)
            .iter()
            .zip(labels)
            .filter(|(p, l)| p == l)
            .count();
        hits as f64 / labels.len() as f64
    }
}

fn logits(w: &[f64], x: &[f64], n: usize, d: usize, k: usize) -> Vec<f64> {
    let mut z = vec![0.0; n * k];
    // X (n x d) times W[:, :d]^T, W stored row-major with stride d + 1.
    gemm(
        n,
        d,
        k,
        GemmOperand::row_major(x, d),
        GemmOperand {
            data: w,
            row_stride: 1,
            col_stride: (d + 1) as isize,
        },
        &mut z,
    );
    for row in z.chunks_mut(k) {
        for (c, v) in row.iter_mut().enumerate() {
            *v += w[c * (d + 1) + d];
        }
    }
    z
}

/// Objective value and gradient at `w`.
pub fn logreg_objective(design: &Design<'_>, w: &[f64], l2_lambda: f64) -> Result<(f64, Vec<f64>)> {
    let (n, d, k) = (design.len(), design.dim, design.classes);
    if w.len() != design.param_count() {
        return Err(Error::dim(format!(
            "{} weights, expected {}",
            w.len(),
            design.param_count()
        )));
    }
    let mut p = logits(w, design.features, n, d, k);
    let mut loss = 0.0;
    for (row, &y) in p.chunks_mut(k).zip(design.labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        loss += libm::log(sum) - libm::log(row[y as usize]);
        for v in row.iter_mut() {
            *v /= sum;
        }
        row[y as usize] -= 1.0;
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;

    // grad[:, :d] = (P - Y)^T X / n, grad[:, d] = column sums / n.
    let mut grad = vec![0.0; k * (d + 1)];
    let mut gx = vec![0.0; k * d];
    gemm(
        k,
        n,
        d,
        GemmOperand::transposed(&p, k),
        GemmOperand::row_major(design.features, d),
        &mut gx,
    );
    let mut penalty = 0.0;
    for c in 0..k {
        let mut bias = 0.0;
        for row in p.chunks(k) {
            bias += row[c];
        }
        grad[c * (d + 1) + d] = bias * inv_n;
        for j in 0..d {
            let wj = w[c * (d + 1) + j];
            penalty += wj * wj;
            grad[c * (d + 1) + j] = gx[c * d + j] * inv_n + l2_lambda * wj;
        }
    }
    loss += 0.5 * l2_lambda * penalty;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("logistic loss became {loss}")));
    }
    Ok((loss, grad))
}

pub fn train_logreg(design: &Design<'_>, config: &LogRegConfig) -> Result<(LogisticRegression, TrainReport)> {
    train_logreg_from(design, config, vec![0.0; design.param_count()])
}

/// L-BFGS from an explicit starting point, with a backtracking Armijo line
/// search. Deterministic: no randomness and a fixed evaluation order.
pub fn train_logreg_from(
    design: &Design<'_>,
    config: &LogRegConfig,
    start: Vec<f64>,
) -> Result<(LogisticRegression, TrainReport)> {
    if !(config.l2_lambda >= 0.0) || !config.l2_lambda.is_finite() {
        return Err(Error::param("l2_lambda must be finite and >= 0"));
    }
    let lambda = config.l2_lambda;
    let mut x = start;
    let (mut f, mut g) = logreg_objective(design, &x, lambda)?;
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        let gnorm = norm(&g);
        if gnorm < config.grad_tol {
            converged = true;
            break;
        }
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut t = if history.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = logreg_objective(design, &trial, lambda)?;
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        iterations += 1;
        let stalled = (f - f_new).abs() <= 1e-16 * f.abs().max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if stalled {
            break;
        }
    }
    let grad_norm = norm(&g);
    converged |= grad_norm < config.grad_tol;
    Ok((
        LogisticRegression {
            weights: x,
            dim: design.dim,
            classes: design.classes,
        },
        TrainReport {
            iterations,
            loss: f,
            grad_norm,
            converged,
        },
    ))
}

fn two_loop(g: &[f64], history: &std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
