use serde::{Deserialize, Serialize};

use super::{population_stats, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub ridge: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            ridge: 1e-8,
            tolerance: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Ridge logistic regression on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Penalized negative log-likelihood and gradient; `theta` is weights then
/// bias, and the bias is not penalized.
fn objective(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], ridge: f64) -> (f64, Vec<f64>) {
    let p = theta.len() - 1;
    let mut grad = vec![0.0; p + 1];
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = theta[p] + x.iter().zip(theta).map(|(a, w)| a * w).sum::<f64>();
        // log(1 + e^z) - y z, computed stably
        loss += if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() } - y * z;
        let r = sigmoid(z) - y;
        for (g, a) in grad.iter_mut().zip(x) {
            *g += r * a;
        }
        grad[p] += r;
    }
    for j in 0..p {
        loss += 0.5 * ridge * theta[j] * theta[j];
        grad[j] += ridge * theta[j];
    }
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory BFGS with Armijo backtracking. Returns the minimizer and
/// the number of iterations used.
pub fn lbfgs<F>(mut f: F, x0: Vec<f64>, tolerance: f64, max_iterations: usize) -> (Vec<f64>, usize)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const MEMORY: usize = 10;
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iter = 0;
    while iter < max_iterations && norm(&g) >= tolerance {
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = if s_hist.is_empty() { 1.0 / norm(&g).max(1.0) } else { 1.0 };
        let (x_new, f_new, g_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = f(&cand);
            if fc <= fx + 1e-4 * step * slope || step < 1e-20 {
                break (cand, fc, gc);
            }
            step *= 0.5;
        };
        iter += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let stalled = f_new >= fx && norm(&s) == 0.0;
        x = x_new;
        fx = f_new;
        g = g_new;
        if stalled {
            break;
        }
        if sy > 1e-12 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
    }
    (x, iter)
}

impl Logistic {
    pub fn fit(rows: &[Vec<f64>], labels: &[bool], params: &LogisticParams) -> Result<Self> {
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(Error::Data("logistic regression needs both classes in training data".into()));
        }
        let refs: Vec<&Vec<f64>> = rows.iter().collect();
        let (center, var) = population_stats(&refs);
        let scale: Vec<f64> = var.iter().map(|v| if *v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        let xs: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(center.iter().zip(&scale)).map(|(v, (c, s))| (v - c) / s).collect())
            .collect();
        let ys: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let p = center.len();
        let (theta, iterations) = lbfgs(
            |t| objective(t, &xs, &ys, params.ridge),
            vec![0.0; p + 1],
            params.tolerance,
            params.max_iterations,
        );
        Ok(Logistic {
            center,
            scale,
            weights: theta[..p].to_vec(),
            bias: theta[p],
            iterations,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias
            + x.iter()
                .zip(&self.weights)
                .zip(self.center.iter().zip(&self.scale))
                .map(|((v, w), (c, s))| w * (v - c) / s)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
