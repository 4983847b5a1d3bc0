//! RBF-kernel C-SVM trained by SMO with second-order working-set selection.
//! Multiclass problems are handled one-vs-rest.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const TAU: f64 = 1e-12;

/// Kernel width. `Scale` resolves to `1 / (d · var(X))` on the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Named(GammaName),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaName {
    Scale,
}

impl Gamma {
    pub const SCALE: Gamma = Gamma::Named(GammaName::Scale);

    pub fn resolve(self, vectors: &[Vec<f64>]) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Named(GammaName::Scale) => {
                let d = vectors.first().map_or(0, Vec::len);
                let count = (vectors.len() * d) as f64;
                if count == 0.0 {
                    return 1.0;
                }
                let mean = vectors.iter().flatten().sum::<f64>() / count;
                let var = vectors.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
                if var > 0.0 {
                    1.0 / (d as f64 * var)
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    /// KKT stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, gamma: Gamma::SCALE, tol: 1e-3, max_iter: 100_000 }
    }
}

/// One binary machine: `f(x) = Σ coef_i K(sv_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i`, each within [−C, C].
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(sv, x, gamma))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    /// Sorted distinct labels seen in training.
    pub classes: Vec<usize>,
    /// Binary problems: one machine with `classes[1]` positive. Otherwise one
    /// machine per class (one-vs-rest).
    pub machines: Vec<BinarySvm>,
}

impl SvmModel {
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.decision(x, self.gamma)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let d = self.decision_values(x);
        if self.classes.len() == 2 {
            return if d[0] > 0.0 { self.classes[1] } else { self.classes[0] };
        }
        let mut best = 0;
        for (i, v) in d.iter().enumerate() {
            if *v > d[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn accuracy(&self, vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
        if vectors.is_empty() {
            return 0.0;
        }
        let correct = vectors.iter().zip(labels).filter(|(x, &y)| self.predict(x) == y).count();
        correct as f64 / vectors.len() as f64
    }
}

#[inline]
fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn kernel_matrix(vectors: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        k[i][i] = 1.0;
        for j in i + 1..n {
            let v = rbf(&vectors[i], &vectors[j], gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

pub fn train_svm(vectors: &[Vec<f64>], labels: &[usize], params: &SvmParams) -> Result<SvmModel> {
    if vectors.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} vectors, {} labels", vectors.len(), labels.len())));
    }
    if let Some(first) = vectors.first() {
        if vectors.iter().any(|v| v.len() != first.len()) {
            return Err(Error::ShapeMismatch("SVM vectors have unequal lengths".into()));
        }
    }
    if !(params.c > 0.0) {
        return Err(invalid!("SVM regularization C must be positive, got {}", params.c));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(invalid!("SVM training needs at least two classes, got {}", classes.len()));
    }
    let gamma = params.gamma.resolve(vectors);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid!("RBF gamma must be positive and finite, got {gamma}"));
    }
    let kernel = kernel_matrix(vectors, gamma);
    let positives: Vec<usize> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let machines = positives
        .iter()
        .map(|&pos| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == pos { 1.0 } else { -1.0 }).collect();
            solve_binary(&kernel, &y, params).map(|(alpha, bias, iterations)| {
                let mut support_vectors = Vec::new();
                let mut dual_coef = Vec::new();
                for (i, &a) in alpha.iter().enumerate() {
                    if a > 0.0 {
                        support_vectors.push(vectors[i].clone());
                        dual_coef.push(a * y[i]);
                    }
                }
                BinarySvm { support_vectors, dual_coef, bias, iterations }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel { gamma, c: params.c, classes, machines })
}

/// Solves the C-SVM dual on a precomputed kernel. Returns (α, bias, iterations).
pub fn solve_binary(kernel: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<(Vec<f64>, f64, usize)> {
    let n = y.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i][j];
    let in_up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let in_low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);

    let mut iter = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(t, &alpha) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i != usize::MAX {
            for t in 0..n {
                if !in_low(t, &alpha) {
                    continue;
                }
                let yg = y[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    let mut a = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj <= obj_min {
                        obj_min = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax + gmax2 < params.tol {
            break;
        }
        iter += 1;
        if iter > params.max_iter {
            return Err(Error::NumericalFailure(format!(
                "SMO did not converge within {} iterations",
                params.max_iter
            )));
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = kernel[i][i] + kernel[j][j] + 2.0 * q(i, j);
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
            let mut quad = kernel[i][i] + kernel[j][j] - 2.0 * q(i, j);
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
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
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
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
    Ok((alpha, -rho, iter))
}
