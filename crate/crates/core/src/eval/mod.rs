//! Cross-validation protocol, the pooled IR baseline and result reporting.

mod baseline;
mod cv;
mod report;
pub mod stats;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use baseline::{best_ir, ir_baseline_at_k, BaselineScore, PooledRanking};
pub use cv::{run_cv, CvConfig, CvRun, FoldResult, PipelineConfig, SelectionScope, TrialResult};
pub use report::{compare, grid_markdown, rank_configs, ALPHA, Comparison, EvalReport, MetricComparison, RankedConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fn_ += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn prf(&self) -> Prf {
        prf(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

/// Precision, recall and F with empty denominators giving 0.
pub fn prf(cm: &ConfusionMatrix) -> Prf {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let fscore = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf { precision, recall, fscore }
}

/// Shuffles each class separately and deals its rows round-robin, the
/// negatives continuing where the positives stopped so fold sizes stay
/// within one of each other. Each fold's indices are sorted.
pub fn stratified_folds(labels: &[bool], k: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if pos.len() < k || neg.len() < k {
        return Err(Error::Data(format!(
            "{k} folds need at least {k} rows per class, have {} valid and {} invalid",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = seed::rng(seed_value);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for mut class in [pos, neg] {
        class.shuffle(&mut rng);
        for i in class {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests;
