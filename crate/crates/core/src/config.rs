//! Flat `key = value` configuration files and the run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::corpus::Language;
use crate::error::{Error, Result};
use crate::eval::{CvConfig, PipelineConfig};
use crate::features::FeatureConfig;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value', got {line:?}", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key.to_owned(), value.trim().to_owned());
    }
    Ok(map)
}

/// Every setting of an experiment. Defaults are correlation selection,
/// SMOTE and a random forest.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub datasets: Vec<PathBuf>,
    /// `None` uses the dataset's own `dataset.conf`, else English.
    pub language: Option<Language>,
    pub features: FeatureConfig,
    pub pipeline: PipelineConfig,
    pub cv: CvConfig,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            datasets: Vec::new(),
            language: None,
            features: FeatureConfig::default(),
            pipeline: PipelineConfig::default(),
            cv: CvConfig::default(),
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for '{key}'"))),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_optional<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_owned(), |x| x.to_string())
}

/// Keys that change the feature matrix of a dataset.
const FEATURE_KEYS: [&str; 17] = [
    "language",
    "seed",
    "post_retrieval",
    "qq_depth",
    "perturb_fraction",
    "perturb_repeats",
    "lsa_rank",
    "lda_topics",
    "lda_alpha",
    "lda_beta",
    "lda_iterations",
    "lda_inference_iterations",
    "bm25_k1",
    "bm25_b",
    "dirichlet_mu",
    "jm_lambda",
    "format",
];

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply(&parse_key_values(text)?)?;
        Ok(cfg)
    }

    /// Applies settings in key order; `lda_alpha` follows `lda_topics`
    /// as `50 / topics` unless given explicitly.
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in map {
            if k != "lda_alpha" {
                self.set(k, v)?;
            }
        }
        match map.get("lda_alpha") {
            Some(v) => self.set("lda_alpha", v)?,
            None if map.contains_key("lda_topics") => {
                self.features.models.lda_alpha = 50.0 / self.features.models.lda_topics as f64;
            }
            None => {}
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.features.models;
        let h = &mut self.pipeline.hyper;
        match key {
            "datasets" => {
                self.datasets = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "language" => self.language = if value == "auto" { None } else { Some(value.parse()?) },
            "format" if value == "1" => {}
            "format" => return Err(Error::Config(format!("unsupported config format {value:?}"))),
            "out" => self.out = PathBuf::from(value),
            "jobs" => self.jobs = parse_optional(key, value)?,
            "seed" => {
                let s = parse(key, value)?;
                self.cv.seed = s;
                m.seed = s;
            }
            "trials" => self.cv.trials = parse(key, value)?,
            "folds" => self.cv.folds = parse(key, value)?,
            "selection" => self.pipeline.selection = value.parse()?,
            "threshold" => self.pipeline.threshold = parse(key, value)?,
            "selection_scope" => self.pipeline.scope = value.parse()?,
            "rebalance" => self.pipeline.rebalance = value.parse()?,
            "smote_k" => self.pipeline.smote_k = parse(key, value)?,
            "classifier" => self.pipeline.classifier = value.parse()?,
            "knn_k" => h.knn_k = parse(key, value)?,
            "rf_trees" => h.forest.trees = parse(key, value)?,
            "rf_features_per_split" => h.forest.features_per_split = parse_optional(key, value)?,
            "svm_c" => h.svm.c = parse(key, value)?,
            "svm_gamma" => h.svm.gamma = parse_optional(key, value)?,
            "svm_tolerance" => h.svm.tolerance = parse(key, value)?,
            "logistic_ridge" => h.logistic.ridge = parse(key, value)?,
            "logistic_max_iterations" => h.logistic.max_iterations = parse(key, value)?,
            "post_retrieval" => self.features.post_retrieval = parse_bool(key, value)?,
            "qq_depth" => self.features.depth = parse(key, value)?,
            "perturb_fraction" => self.features.perturb_fraction = parse(key, value)?,
            "perturb_repeats" => self.features.perturb_repeats = parse(key, value)?,
            "lsa_rank" => m.lsa_rank = parse(key, value)?,
            "lda_topics" => m.lda_topics = parse(key, value)?,
            "lda_alpha" => m.lda_alpha = parse(key, value)?,
            "lda_beta" => m.lda_beta = parse(key, value)?,
            "lda_iterations" => m.lda_iterations = parse(key, value)?,
            "lda_inference_iterations" => m.lda_inference_iterations = parse(key, value)?,
            "bm25_k1" => m.bm25_k1 = parse(key, value)?,
            "bm25_b" => m.bm25_b = parse(key, value)?,
            "dirichlet_mu" => m.dirichlet_mu = parse(key, value)?,
            "jm_lambda" => m.jm_lambda = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.features.models.validate()?;
        if self.cv.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.cv.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        if self.pipeline.smote_k == 0 {
            return Err(Error::Config("smote_k must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.features.perturb_fraction) {
            return Err(Error::Config("perturb_fraction must be in [0,1)".into()));
        }
        if self.features.depth == 0 {
            return Err(Error::Config("qq_depth must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` form of every setting except dataset paths,
    /// output directory and thread count.
    pub fn key_values(&self) -> BTreeMap<String, String> {
        let m = &self.features.models;
        let h = &self.pipeline.hyper;
        let p = &self.pipeline;
        let pairs: Vec<(&str, String)> = vec![
            ("format", "1".into()),
            ("language", self.language.map_or_else(|| "auto".to_owned(), |l| l.to_string())),
            ("seed", self.cv.seed.to_string()),
            ("trials", self.cv.trials.to_string()),
            ("folds", self.cv.folds.to_string()),
            ("selection", p.selection.to_string()),
            ("threshold", p.threshold.to_string()),
            ("selection_scope", p.scope.to_string()),
            ("rebalance", p.rebalance.to_string()),
            ("smote_k", p.smote_k.to_string()),
            ("classifier", p.classifier.to_string()),
            ("knn_k", h.knn_k.to_string()),
            ("rf_trees", h.forest.trees.to_string()),
            ("rf_features_per_split", show_optional(h.forest.features_per_split)),
            ("svm_c", h.svm.c.to_string()),
            ("svm_gamma", show_optional(h.svm.gamma)),
            ("svm_tolerance", h.svm.tolerance.to_string()),
            ("logistic_ridge", h.logistic.ridge.to_string()),
            ("logistic_max_iterations", h.logistic.max_iterations.to_string()),
            ("post_retrieval", self.features.post_retrieval.to_string()),
            ("qq_depth", self.features.depth.to_string()),
            ("perturb_fraction", self.features.perturb_fraction.to_string()),
            ("perturb_repeats", self.features.perturb_repeats.to_string()),
            ("lsa_rank", m.lsa_rank.to_string()),
            ("lda_topics", m.lda_topics.to_string()),
            ("lda_alpha", m.lda_alpha.to_string()),
            ("lda_beta", m.lda_beta.to_string()),
            ("lda_iterations", m.lda_iterations.to_string()),
            ("lda_inference_iterations", m.lda_inference_iterations.to_string()),
            ("bm25_k1", m.bm25_k1.to_string()),
            ("bm25_b", m.bm25_b.to_string()),
            ("dirichlet_mu", m.dirichlet_mu.to_string()),
            ("jm_lambda", m.jm_lambda.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.datasets.is_empty() {
            let paths: Vec<String> = self.datasets.iter().map(|p| p.display().to_string()).collect();
            out.push_str(&format!("datasets = {}\n", paths.join(",")));
        }
        for (k, v) in self.key_values() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// SHA-256 over the canonical settings.
    pub fn hash(&self) -> String {
        hash_pairs(self.key_values().iter())
    }

    /// SHA-256 over the settings that affect featurization only.
    pub fn feature_hash(&self) -> String {
        let kv = self.key_values();
        hash_pairs(kv.iter().filter(|(k, _)| FEATURE_KEYS.contains(&k.as_str())))
    }
}

fn hash_pairs<'a>(pairs: impl Iterator<Item = (&'a String, &'a String)>) -> String {
    let mut h = Sha256::new();
    for (k, v) in pairs {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    hex(&h.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}
