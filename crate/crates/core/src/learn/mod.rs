//! The six classifiers and their on-disk container.

mod forest;
mod knn;
mod logistic;
mod naive_bayes;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use forest::{Forest, ForestParams, Node, Tree};
pub use knn::Knn;
pub use logistic::{lbfgs, Logistic, LogisticParams};
pub use naive_bayes::{NaiveBayes, VARIANCE_FLOOR};
pub use svm::{Svm, SvmParams};

pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-column mean and population variance.
pub(crate) fn population_stats(rows: &[&Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    let mut mean = vec![0.0; p];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn5,
    NaiveBayes,
    Logistic,
    RandomForest,
    Svm,
    Vote,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Knn5,
        Algorithm::NaiveBayes,
        Algorithm::Logistic,
        Algorithm::RandomForest,
        Algorithm::Svm,
        Algorithm::Vote,
    ];

    pub const VOTE_MEMBERS: [Algorithm; 5] = [
        Algorithm::Knn5,
        Algorithm::NaiveBayes,
        Algorithm::Logistic,
        Algorithm::RandomForest,
        Algorithm::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn5 => "knn5",
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::Logistic => "logistic",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Svm => "svm",
            Algorithm::Vote => "vote",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown classifier '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub knn_k: usize,
    pub logistic: LogisticParams,
    pub forest: ForestParams,
    pub svm: SvmParams,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            knn_k: 5,
            logistic: LogisticParams::default(),
            forest: ForestParams::default(),
            svm: SvmParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Knn(Knn),
    NaiveBayes(NaiveBayes),
    Logistic(Logistic),
    RandomForest(Forest),
    Svm(Svm),
    Vote { members: Vec<TrainedModel> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub schema: Vec<String>,
    pub seed: u64,
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: bool,
    pub p_valid: f64,
}

impl Prediction {
    pub fn from_p(p: f64) -> Self {
        let p_valid = p.clamp(0.0, 1.0);
        Prediction {
            label: p_valid >= 0.5,
            p_valid,
        }
    }
}

/// Trains `algorithm` on rows whose columns are named by `schema`.
pub fn train(
    algorithm: Algorithm,
    schema: &[String],
    rows: &[Vec<f64>],
    labels: &[bool],
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    if rows.len() != labels.len() {
        return Err(Error::Invariant(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    if rows.is_empty() {
        return Err(Error::Data("no training rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != schema.len()) {
        return Err(Error::Invariant(format!("row has {} values, schema {}", r.len(), schema.len())));
    }
    let params = match algorithm {
        Algorithm::Knn5 => Params::Knn(Knn::fit(rows, labels, hyper.knn_k)),
        Algorithm::NaiveBayes => Params::NaiveBayes(NaiveBayes::fit(rows, labels)),
        Algorithm::Logistic => Params::Logistic(Logistic::fit(rows, labels, &hyper.logistic)?),
        Algorithm::RandomForest => Params::RandomForest(Forest::fit(rows, labels, &hyper.forest, seed)),
        Algorithm::Svm => Params::Svm(Svm::fit(rows, labels, &hyper.svm)?),
        Algorithm::Vote => Params::Vote {
            members: Algorithm::VOTE_MEMBERS
                .iter()
                .map(|&a| train(a, schema, rows, labels, hyper, seed::derive(seed, &[a as u64])))
                .collect::<Result<_>>()?,
        },
    };
    Ok(TrainedModel {
        format_version: FORMAT_VERSION,
        algorithm,
        schema: schema.to_vec(),
        seed,
        params,
    })
}

impl TrainedModel {
    /// `p_valid` for a row already in schema order.
    pub fn p_valid(&self, x: &[f64]) -> f64 {
        let p = match &self.params {
            Params::Knn(m) => m.predict(x),
            Params::NaiveBayes(m) => m.predict(x),
            Params::Logistic(m) => m.predict(x),
            Params::RandomForest(m) => m.predict(x),
            Params::Svm(m) => m.predict(x),
            Params::Vote { members } => members.iter().map(|m| m.p_valid(x)).sum::<f64>() / members.len() as f64,
        };
        p.clamp(0.0, 1.0)
    }

    pub fn check_schema(&self, columns: &[String]) -> Result<()> {
        if columns != self.schema.as_slice() {
            return Err(Error::Invariant(format!(
                "model expects {} columns [{}...], got {} [{}...]",
                self.schema.len(),
                self.schema.first().map_or("", String::as_str),
                columns.len(),
                columns.first().map_or("", String::as_str),
            )));
        }
        Ok(())
    }

    pub fn predict(&self, columns: &[String], x: &[f64]) -> Result<Prediction> {
        self.check_schema(columns)?;
        if x.len() != self.schema.len() {
            return Err(Error::Invariant(format!("vector of {} values, schema {}", x.len(), self.schema.len())));
        }
        Ok(Prediction::from_p(self.p_valid(x)))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let probe: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| Error::Decode(format!("model file: {e}")))?;
        let version = probe.get("format_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(FORMAT_VERSION)) {
            return Err(Error::Decode(format!(
                "model format version {version:?}, this build reads {FORMAT_VERSION}"
            )));
        }
        serde_json::from_value(probe).map_err(|e| Error::Decode(format!("model file: {e}")))
    }
}

#[cfg(test)]
mod tests;
