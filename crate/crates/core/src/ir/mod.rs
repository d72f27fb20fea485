//! Term indexing and the seven retrieval models.
//!
//! Each corpus side gets its own [`SearchIndex`]: artifacts of the other
//! side are run against it as queries. Similarity models (VSM, LSA, LDA,
//! JS) treat the query as a pseudo-document; BM25 and the two smoothed
//! language models score it directly.

mod index;
mod lda;
mod lsa;
pub mod models;

use std::cell::OnceCell;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Artifact, Side, TraceDataset};
use crate::error::{Error, Result};
use crate::seed;

pub use index::{build_index, TermBag, TermId, TermIndex};
pub use lda::{LdaParams, TopicModel};
pub use lsa::LsaSpace;
pub use models::{Bm25Params, Smoothing, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Vsm,
    Lsa,
    Lda,
    Js,
    Bm25,
    LmDirichlet,
    LmJm,
}

impl Model {
    /// Fixed order; also the tie-break order when picking a best model.
    pub const ALL: [Model; 7] = [
        Model::Vsm,
        Model::Lsa,
        Model::Lda,
        Model::Js,
        Model::Bm25,
        Model::LmDirichlet,
        Model::LmJm,
    ];

    /// Models that get post-retrieval query-quality features.
    pub const POST_RETRIEVAL: [Model; 5] = [
        Model::Vsm,
        Model::Js,
        Model::Bm25,
        Model::LmDirichlet,
        Model::LmJm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Vsm => "vsm",
            Model::Lsa => "lsa",
            Model::Lda => "lda",
            Model::Js => "js",
            Model::Bm25 => "bm25",
            Model::LmDirichlet => "lm_dirichlet",
            Model::LmJm => "lm_jm",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .or(match s.as_str() {
                "lm_jelinek_mercer" => Some(Model::LmJm),
                "dirichlet" => Some(Model::LmDirichlet),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown retrieval model '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Requested LSA dimensionality, capped at the matrix rank.
    pub lsa_rank: usize,
    pub lda_topics: usize,
    pub lda_alpha: f64,
    pub lda_beta: f64,
    pub lda_iterations: usize,
    pub lda_inference_iterations: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub dirichlet_mu: f64,
    pub jm_lambda: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let lda = LdaParams::default();
        ModelConfig {
            lsa_rank: 100,
            lda_topics: lda.topics,
            lda_alpha: lda.alpha,
            lda_beta: lda.beta,
            lda_iterations: lda.iterations,
            lda_inference_iterations: lda.inference_iterations,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            dirichlet_mu: 2000.0,
            jm_lambda: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lsa_rank", self.lsa_rank as f64),
            ("lda_topics", self.lda_topics as f64),
            ("lda_alpha", self.lda_alpha),
            ("lda_beta", self.lda_beta),
            ("bm25_k1", self.bm25_k1),
            ("dirichlet_mu", self.dirichlet_mu),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.bm25_b) {
            return Err(Error::Config(format!("bm25_b must be in [0,1], got {}", self.bm25_b)));
        }
        if !(self.jm_lambda > 0.0 && self.jm_lambda <= 1.0) {
            return Err(Error::Config(format!("jm_lambda must be in (0,1], got {}", self.jm_lambda)));
        }
        Ok(())
    }

    pub fn lda_params(&self) -> LdaParams {
        LdaParams {
            topics: self.lda_topics,
            alpha: self.lda_alpha,
            beta: self.lda_beta,
            iterations: self.lda_iterations,
            inference_iterations: self.lda_inference_iterations,
        }
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    pub fn smoothing(&self, model: Model) -> Option<Smoothing> {
        match model {
            Model::LmDirichlet => Some(Smoothing::Dirichlet { mu: self.dirichlet_mu }),
            Model::LmJm => Some(Smoothing::JelinekMercer { lambda: self.jm_lambda }),
            _ => None,
        }
    }
}

/// One ranked corpus document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranked {
    pub doc: usize,
    pub doc_id: String,
    pub score: f64,
    /// 1-based position after sorting.
    pub rank: usize,
}

/// Query text prepared against one index. LSA projection and LDA fold-in
/// are computed on first use.
#[derive(Debug)]
pub struct Query {
    pub bag: TermBag,
    tfidf: SparseVec,
    key: u64,
    lsa: OnceCell<Vec<f64>>,
    theta: OnceCell<Vec<f64>>,
}

impl Query {
    pub fn tfidf(&self) -> &SparseVec {
        &self.tfidf
    }
}

/// A corpus side with every model's fitted state.
#[derive(Debug, Clone)]
pub struct SearchIndex {
    side: Side,
    index: TermIndex,
    tfidf: Vec<SparseVec>,
    lsa: LsaSpace,
    topics: TopicModel,
    config: ModelConfig,
}

impl SearchIndex {
    pub fn build(artifacts: &[Artifact], side: Side, config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let index = TermIndex::build(artifacts);
        let tfidf: Vec<SparseVec> = index.docs().iter().map(|d| models::tfidf(&index, d)).collect();
        let lsa = LsaSpace::build(index.num_terms(), &tfidf, config.lsa_rank)?;
        let side_key = match side {
            Side::Source => 1,
            Side::Target => 2,
        };
        let topics = TopicModel::fit(
            index.docs(),
            index.num_terms(),
            config.lda_params(),
            seed::derive(config.seed, &[0x1da, side_key]),
        );
        Ok(SearchIndex {
            side,
            index,
            tfidf,
            lsa,
            topics,
            config: *config,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn index(&self) -> &TermIndex {
        &self.index
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.index.num_docs()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn doc_tfidf(&self, d: usize) -> &SparseVec {
        &self.tfidf[d]
    }

    pub fn lsa(&self) -> &LsaSpace {
        &self.lsa
    }

    pub fn topics(&self) -> &TopicModel {
        &self.topics
    }

    /// `key` seeds the LDA fold-in for this query.
    pub fn prepare(&self, tokens: &[String], key: &str) -> Query {
        self.prepare_bag(self.index.bag(tokens), seed::hash_str(key))
    }

    pub fn prepare_bag(&self, bag: TermBag, key: u64) -> Query {
        Query {
            tfidf: models::tfidf(&self.index, &bag),
            bag,
            key,
            lsa: OnceCell::new(),
            theta: OnceCell::new(),
        }
    }

    fn query_lsa<'q>(&self, q: &'q Query) -> &'q [f64] {
        q.lsa.get_or_init(|| self.lsa.project(&q.tfidf))
    }

    fn query_theta<'q>(&self, q: &'q Query) -> &'q [f64] {
        q.theta.get_or_init(|| {
            self.topics
                .infer(&q.bag, seed::derive(self.config.seed, &[0x1fe, q.key]))
        })
    }

    /// Score of corpus document `d` for the query, where `d`'s content may
    /// be replaced by `doc_override` (global statistics stay frozen).
    pub fn score_doc(&self, model: Model, q: &Query, d: usize, doc_override: Option<&TermBag>) -> f64 {
        let doc = doc_override.unwrap_or_else(|| self.index.doc(d));
        match model {
            Model::Vsm => match doc_override {
                None => models::cosine_sparse(&q.tfidf, &self.tfidf[d]),
                Some(bag) => models::cosine_sparse(&q.tfidf, &models::tfidf(&self.index, bag)),
            },
            Model::Lsa => self.lsa.query_similarity(self.query_lsa(q), d),
            Model::Lda => models::hellinger_similarity(self.query_theta(q), self.topics.theta(d)),
            Model::Js => models::js_similarity(&q.bag, doc),
            Model::Bm25 => models::bm25(&self.index, &q.bag, doc, self.config.bm25()),
            Model::LmDirichlet | Model::LmJm => {
                let s = self.config.smoothing(model).expect("language model");
                models::lm_log_likelihood(&self.index, &q.bag, doc, s)
            }
        }
    }

    pub fn scores(&self, model: Model, q: &Query) -> Vec<f64> {
        (0..self.len()).map(|d| self.score_doc(model, q, d, None)).collect()
    }

    /// Sorts by descending score, ties by ascending doc id.
    pub fn rank_scores(&self, scores: &[f64]) -> Vec<Ranked> {
        let ids = self.index.doc_ids();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| ids[a].cmp(&ids[b])));
        order
            .into_iter()
            .enumerate()
            .map(|(pos, d)| Ranked {
                doc: d,
                doc_id: ids[d].clone(),
                score: scores[d],
                rank: pos + 1,
            })
            .collect()
    }

    pub fn rank(&self, model: Model, q: &Query) -> Vec<Ranked> {
        self.rank_scores(&self.scores(model, q))
    }

    /// Similarity between two indexed documents (similarity models only).
    pub fn doc_similarity(&self, model: Model, d1: usize, d2: usize) -> Result<f64> {
        Ok(match model {
            Model::Vsm => models::cosine_sparse(&self.tfidf[d1], &self.tfidf[d2]),
            Model::Lsa => self.lsa.doc_similarity(d1, d2),
            Model::Lda => models::hellinger_similarity(self.topics.theta(d1), self.topics.theta(d2)),
            Model::Js => models::js_similarity(self.index.doc(d1), self.index.doc(d2)),
            other => {
                return Err(Error::Config(format!(
                    "{other} is a query scoring model, not a document similarity"
                )))
            }
        })
    }
}

/// Both directional indexes of a dataset: the target side answers source
/// queries (forward) and the source side answers target queries (reverse).
#[derive(Debug, Clone)]
pub struct DatasetIndexes {
    pub source: SearchIndex,
    pub target: SearchIndex,
}

impl DatasetIndexes {
    pub fn build(dataset: &TraceDataset, config: &ModelConfig) -> Result<Self> {
        Ok(DatasetIndexes {
            source: SearchIndex::build(&dataset.sources, Side::Source, config)?,
            target: SearchIndex::build(&dataset.targets, Side::Target, config)?,
        })
    }

    pub fn corpus(&self, side: Side) -> &SearchIndex {
        match side {
            Side::Source => &self.source,
            Side::Target => &self.target,
        }
    }

    /// Index answering queries from `query_side`.
    pub fn for_queries_from(&self, query_side: Side) -> &SearchIndex {
        self.corpus(query_side.opposite())
    }

    /// Ranks `corpus_side` for `query`, which must come from the other side.
    pub fn rank(&self, model: Model, query: &Artifact, corpus_side: Side) -> Result<Vec<Ranked>> {
        if query.side == corpus_side {
            return Err(Error::Config(format!(
                "query '{}' and corpus are both on the {:?} side",
                query.id, corpus_side
            )));
        }
        let idx = self.corpus(corpus_side);
        let q = idx.prepare(&query.tokens, &query.id);
        Ok(idx.rank(model, &q))
    }
}

/// Writes `query_id,doc_id,model,score,rank` rows.
pub fn write_rankings_csv(path: &Path, rows: &[(String, Model, Vec<Ranked>)]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "query_id,doc_id,model,score,rank").expect("vec write");
    for (query, model, ranked) in rows {
        for r in ranked {
            writeln!(out, "{query},{},{model},{:.9e},{}", r.doc_id, r.score, r.rank).expect("vec write");
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) fn test_index(docs: &[&str]) -> TermIndex {
    TermIndex::build(&test_artifacts(docs, Side::Target))
}

#[cfg(test)]
pub(crate) fn test_artifacts(docs: &[&str], side: Side) -> Vec<Artifact> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            Artifact::from_tokens(
                format!("d{i}"),
                side,
                d.split_whitespace().map(str::to_owned).collect(),
            )
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn small_config() -> ModelConfig {
    ModelConfig {
        lda_topics: 3,
        lda_alpha: 0.5,
        lda_iterations: 50,
        lda_inference_iterations: 20,
        ..ModelConfig::default()
    }
}
