//! The 131-column link representation.
//!
//! | family | columns | naming |
//! |---|---|---|
//! | IR rank | 7 models x 2 directions = 14 | `ir.<model>.<dir>` |
//! | pre-retrieval QQ | 21 x 2 = 42 | `qq.pre.<metric>.<dir>` |
//! | post-retrieval QQ | 7 x 5 models x 2 = 70 | `qq.post.<metric>.<model>.<dir>` |
//! | document statistics | 5 | `doc.<stat>` |
//!
//! `fwd` uses the source artifact as the query against the target corpus,
//! `rev` the target artifact against the source corpus. Every value is
//! min-max normalised over the dataset after featurization.

mod matrix;
pub mod post;
pub mod pre;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Artifact, CandidateLink, Side, TraceDataset};
use crate::error::{Error, Result};
use crate::ir::{DatasetIndexes, Model, ModelConfig, SearchIndex};
use crate::seed;

pub use matrix::{format_sig9, ColumnBounds, FeatureMatrix, Normalization};
pub use post::PostParams;
pub use pre::{DocSimilarity, TermStats};

pub const IR_FEATURES: usize = 14;
pub const PRE_QQ_FEATURES: usize = 42;
pub const POST_QQ_FEATURES: usize = 70;
pub const DOC_FEATURES: usize = 5;
pub const TOTAL_FEATURES: usize = IR_FEATURES + PRE_QQ_FEATURES + POST_QQ_FEATURES + DOC_FEATURES;

const _: () = assert!(TOTAL_FEATURES == 131);
const _: () = assert!(pre::NAMES.len() * 2 == PRE_QQ_FEATURES);
const _: () = assert!(post::NAMES.len() * Model::POST_RETRIEVAL.len() * 2 == POST_QQ_FEATURES);
const _: () = assert!(Model::ALL.len() * 2 == IR_FEATURES);

pub const DOC_NAMES: [&str; DOC_FEATURES] = [
    "doc.source_unique_terms",
    "doc.target_unique_terms",
    "doc.source_total_terms",
    "doc.target_total_terms",
    "doc.overlap",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Reverse];

    pub fn suffix(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Reverse => "rev",
        }
    }

    pub fn query_side(self) -> Side {
        match self {
            Direction::Forward => Side::Source,
            Direction::Reverse => Side::Target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub models: ModelConfig,
    /// Post-retrieval QQ features are the expensive family; switching them
    /// off leaves 61 columns.
    pub post_retrieval: bool,
    pub depth: usize,
    pub perturb_fraction: f64,
    pub perturb_repeats: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let p = PostParams::default();
        FeatureConfig {
            models: ModelConfig::default(),
            post_retrieval: true,
            depth: p.depth,
            perturb_fraction: p.perturb_fraction,
            perturb_repeats: p.perturb_repeats,
        }
    }
}

impl FeatureConfig {
    fn post_params(&self) -> PostParams {
        PostParams {
            depth: self.depth,
            perturb_fraction: self.perturb_fraction,
            perturb_repeats: self.perturb_repeats,
        }
    }
}

pub fn ir_feature_names() -> Vec<String> {
    Model::ALL
        .iter()
        .flat_map(|m| Direction::BOTH.map(|d| format!("ir.{}.{}", m.name(), d.suffix())))
        .collect()
}

pub fn pre_feature_names() -> Vec<String> {
    pre::NAMES
        .iter()
        .flat_map(|n| Direction::BOTH.map(|d| format!("qq.pre.{n}.{}", d.suffix())))
        .collect()
}

pub fn post_feature_names() -> Vec<String> {
    let mut out = Vec::with_capacity(POST_QQ_FEATURES);
    for n in post::NAMES {
        for m in Model::POST_RETRIEVAL {
            for d in Direction::BOTH {
                out.push(format!("qq.post.{n}.{}.{}", m.name(), d.suffix()));
            }
        }
    }
    out
}

/// Column names in persisted order.
pub fn feature_names(post_retrieval: bool) -> Vec<String> {
    let mut names = ir_feature_names();
    names.extend(pre_feature_names());
    if post_retrieval {
        names.extend(post_feature_names());
    }
    names.extend(DOC_NAMES.iter().map(|s| (*s).to_owned()));
    names
}

/// `1 - (rank-1)/(n-1)`; a single-document corpus gives 1.
pub fn normalized_rank(rank: usize, corpus_size: usize) -> f64 {
    if corpus_size <= 1 {
        1.0
    } else {
        1.0 - (rank as f64 - 1.0) / (corpus_size as f64 - 1.0)
    }
}

/// Unique/total term counts of both artifacts and their Jaccard overlap.
pub fn doc_stats(source: &Artifact, target: &Artifact) -> [f64; DOC_FEATURES] {
    let s: HashSet<&str> = source.tokens.iter().map(String::as_str).collect();
    let t: HashSet<&str> = target.tokens.iter().map(String::as_str).collect();
    let union = s.union(&t).count();
    let overlap = if union == 0 {
        0.0
    } else {
        s.intersection(&t).count() as f64 / union as f64
    };
    [
        s.len() as f64,
        t.len() as f64,
        source.tokens.len() as f64,
        target.tokens.len() as f64,
        overlap,
    ]
}

/// Everything one artifact contributes when used as a query.
#[derive(Debug, Clone)]
pub struct QueryProfile {
    /// Per model in [`Model::ALL`] order: 1-based rank of every corpus doc.
    pub ranks: Vec<Vec<usize>>,
    pub pre: [f64; 21],
    /// Per model in [`Model::POST_RETRIEVAL`] order.
    pub post: Vec<[f64; 7]>,
}

/// Corpus-side state shared by every query against it.
#[derive(Debug)]
pub struct CorpusContext<'a> {
    pub index: &'a SearchIndex,
    pub sims: DocSimilarity,
    pub stats: TermStats,
}

impl<'a> CorpusContext<'a> {
    pub fn new(index: &'a SearchIndex) -> Self {
        let sims = DocSimilarity::build(index);
        let stats = TermStats::build(index, &sims);
        CorpusContext { index, sims, stats }
    }

    pub fn profile(&self, query: &Artifact, config: &FeatureConfig) -> QueryProfile {
        let q = self.index.prepare(&query.tokens, &query.id);
        let n = self.index.len();
        let mut ranks = Vec::with_capacity(Model::ALL.len());
        let mut post = Vec::new();
        for model in Model::ALL {
            let scores = self.index.scores(model, &q);
            let mut by_doc = vec![0usize; n];
            for r in self.index.rank_scores(&scores) {
                by_doc[r.doc] = r.rank;
            }
            ranks.push(by_doc);
            if config.post_retrieval && Model::POST_RETRIEVAL.contains(&model) {
                let key = seed::derive(
                    config.models.seed,
                    &[0x9057, seed::hash_str(&query.id), model as u64],
                );
                post.push(post::post_retrieval_qq(
                    self.index,
                    &self.sims,
                    model,
                    &q,
                    &scores,
                    &config.post_params(),
                    key,
                ));
            }
        }
        QueryProfile {
            ranks,
            pre: pre::pre_retrieval_qq(&q.bag, self.index, &self.stats),
            post,
        }
    }
}

/// The 14 rank features of one link given both query profiles.
pub fn ir_rank_features(
    fwd: &QueryProfile,
    rev: &QueryProfile,
    source_pos: usize,
    target_pos: usize,
    num_sources: usize,
    num_targets: usize,
) -> [f64; IR_FEATURES] {
    let mut out = [0.0; IR_FEATURES];
    for m in 0..Model::ALL.len() {
        out[2 * m] = normalized_rank(fwd.ranks[m][target_pos], num_targets);
        out[2 * m + 1] = normalized_rank(rev.ranks[m][source_pos], num_sources);
    }
    out
}

/// Raw (unnormalized) feature rows for every candidate link, in
/// [`TraceDataset::enumerate_links`] order.
pub fn featurize_raw(dataset: &TraceDataset, indexes: &DatasetIndexes, config: &FeatureConfig) -> Result<FeatureMatrix> {
    let fwd_ctx = CorpusContext::new(&indexes.target);
    let rev_ctx = CorpusContext::new(&indexes.source);
    let fwd: Vec<QueryProfile> = dataset
        .sources
        .par_iter()
        .map(|a| fwd_ctx.profile(a, config))
        .collect();
    let rev: Vec<QueryProfile> = dataset
        .targets
        .par_iter()
        .map(|a| rev_ctx.profile(a, config))
        .collect();

    let ns = dataset.sources.len();
    let nt = dataset.targets.len();
    let columns = feature_names(config.post_retrieval);
    let mut links = Vec::with_capacity(ns * nt);
    let mut values = Vec::with_capacity(ns * nt);
    for (si, s) in dataset.sources.iter().enumerate() {
        for (ti, t) in dataset.targets.iter().enumerate() {
            let mut row = Vec::with_capacity(columns.len());
            row.extend(ir_rank_features(&fwd[si], &rev[ti], si, ti, ns, nt));
            for m in 0..pre::NAMES.len() {
                row.push(fwd[si].pre[m]);
                row.push(rev[ti].pre[m]);
            }
            if config.post_retrieval {
                for m in 0..post::NAMES.len() {
                    for k in 0..Model::POST_RETRIEVAL.len() {
                        row.push(fwd[si].post[k][m]);
                        row.push(rev[ti].post[k][m]);
                    }
                }
            }
            row.extend(doc_stats(s, t));
            links.push(CandidateLink {
                source_id: s.id.clone(),
                target_id: t.id.clone(),
                label: dataset.is_valid(&s.id, &t.id),
            });
            values.push(row);
        }
    }
    let mut m = FeatureMatrix::new(columns, links, values)?;
    m.impute();
    Ok(m)
}

/// Builds both indexes, featurizes every candidate link and normalizes.
pub fn featurize(dataset: &TraceDataset, config: &FeatureConfig) -> Result<(FeatureMatrix, Normalization)> {
    let indexes = DatasetIndexes::build(dataset, &config.models)?;
    let mut m = featurize_raw(dataset, &indexes, config)?;
    let norm = m.normalize();
    check_layout(&m, config.post_retrieval)?;
    Ok((m, norm))
}

/// Asserts family counts and value bounds.
pub fn check_layout(m: &FeatureMatrix, post_retrieval: bool) -> Result<()> {
    let count = |prefix: &str| m.columns.iter().filter(|c| c.starts_with(prefix)).count();
    let expected = [
        ("ir.", IR_FEATURES),
        ("qq.pre.", PRE_QQ_FEATURES),
        ("qq.post.", if post_retrieval { POST_QQ_FEATURES } else { 0 }),
        ("doc.", DOC_FEATURES),
    ];
    for (prefix, n) in expected {
        if count(prefix) != n {
            return Err(Error::Invariant(format!("{} '{prefix}' columns, expected {n}", count(prefix))));
        }
    }
    if let Some(v) = m.values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Invariant(format!("normalized value {v} outside [0,1]")));
    }
    Ok(())
}

/// Lookup from link to row.
pub fn row_lookup(m: &FeatureMatrix) -> HashMap<(String, String), usize> {
    m.links
        .iter()
        .enumerate()
        .map(|(i, l)| ((l.source_id.clone(), l.target_id.clone()), i))
        .collect()
}

#[cfg(test)]
mod tests;
