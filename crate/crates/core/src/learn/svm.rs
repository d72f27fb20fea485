use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{sigmoid, sq_dist};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; `None` means `1/p`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    /// Kernel columns kept in memory during training.
    pub cache_columns: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tolerance: 1e-3,
            cache_columns: 2000,
        }
    }
}

/// Soft-margin RBF SVM; `coef` holds `alpha_i * y_i` for each support vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

struct KernelCache<'a> {
    rows: &'a [Vec<f64>],
    gamma: f64,
    limit: usize,
    columns: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

impl KernelCache<'_> {
    fn column(&mut self, i: usize) -> &[f64] {
        if !self.columns.contains_key(&i) {
            if self.columns.len() >= self.limit.max(2) {
                if let Some(old) = self.order.pop_front() {
                    self.columns.remove(&old);
                }
            }
            let xi = &self.rows[i];
            let col = self.rows.iter().map(|r| (-self.gamma * sq_dist(xi, r)).exp()).collect();
            self.columns.insert(i, col);
            self.order.push_back(i);
        }
        &self.columns[&i]
    }
}

const TAU: f64 = 1e-12;

impl Svm {
    /// SMO with second-order working-set selection.
    pub fn fit(rows: &[Vec<f64>], labels: &[bool], params: &SvmParams) -> Result<Self> {
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(Error::Data("SVM needs both classes in training data".into()));
        }
        let n = rows.len();
        let p = rows[0].len();
        let gamma = params.gamma.unwrap_or(if p == 0 { 1.0 } else { 1.0 / p as f64 });
        let c = params.c;
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let mut cache = KernelCache {
            rows,
            gamma,
            limit: params.cache_columns,
            columns: HashMap::new(),
            order: VecDeque::new(),
        };
        let is_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
        let is_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
        let max_iter = (100 * n).max(10_000_000);
        let mut iter = 0;
        while iter < max_iter {
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..n {
                if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                    gmax = -y[t] * grad[t];
                    i = t;
                }
            }
            if i == usize::MAX {
                break;
            }
            let ki = cache.column(i).to_vec();
            let mut gmin = f64::INFINITY;
            let mut j = usize::MAX;
            let mut best_obj = f64::INFINITY;
            for t in 0..n {
                if !is_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = 2.0 - 2.0 * ki[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
            if gmax - gmin < params.tolerance || j == usize::MAX {
                break;
            }
            iter += 1;
            let kj = cache.column(j).to_vec();
            let qij = y[i] * y[j] * ki[j];
            let (old_i, old_j) = (alpha[i], alpha[j]);
            if y[i] != y[j] {
                let quad = (2.0 + 2.0 * qij).max(TAU);
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
                let quad = (2.0 - 2.0 * qij).max(TAU);
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
                grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
            }
        }

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
        let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(rows[t].clone());
                coef.push(alpha[t] * y[t]);
            }
        }
        Ok(Svm {
            gamma,
            support,
            coef,
            rho,
            iterations: iter,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * (-self.gamma * sq_dist(s, x)).exp())
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
