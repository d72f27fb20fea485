use serde::{Deserialize, Serialize};

use super::population_stats;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub log_prior: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Gaussian naive Bayes; index 0 is the invalid class, 1 the valid class.
/// A class absent from training is `None` and never predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub classes: [Option<ClassModel>; 2],
}

impl NaiveBayes {
    pub fn fit(rows: &[Vec<f64>], labels: &[bool]) -> Self {
        let n = rows.len() as f64;
        let fit_class = |label: bool| -> Option<ClassModel> {
            let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &l)| l == label).map(|(r, _)| r).collect();
            if members.is_empty() {
                return None;
            }
            let (mean, var) = population_stats(&members);
            Some(ClassModel {
                log_prior: ((members.len() as f64 + 1.0) / (n + 2.0)).ln(),
                mean,
                var: var.into_iter().map(|v| v.max(VARIANCE_FLOOR)).collect(),
            })
        };
        NaiveBayes {
            classes: [fit_class(false), fit_class(true)],
        }
    }

    fn log_joint(c: &ClassModel, x: &[f64]) -> f64 {
        c.log_prior
            + x.iter()
                .zip(c.mean.iter().zip(&c.var))
                .map(|(v, (m, s2))| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m).powi(2) / s2))
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.classes {
            [None, None] => 0.0,
            [Some(_), None] => 0.0,
            [None, Some(_)] => 1.0,
            [Some(neg), Some(pos)] => {
                let a = Self::log_joint(neg, x);
                let b = Self::log_joint(pos, x);
                // sigmoid of the log-odds, stable on both tails
                let d = b - a;
                if d >= 0.0 {
                    1.0 / (1.0 + (-d).exp())
                } else {
                    let e = d.exp();
                    e / (1.0 + e)
                }
            }
        }
    }
}
