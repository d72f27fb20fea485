//! Closed-form scoring functions over a [`TermIndex`].

use super::index::{TermBag, TermId, TermIndex};

/// Sparse vector sorted by term id.
pub type SparseVec = Vec<(TermId, f64)>;

/// TF-IDF weights `tf * ln(N/df)` under the index statistics. Terms the
/// index has never seen get weight zero and are dropped.
pub fn tfidf(index: &TermIndex, bag: &TermBag) -> SparseVec {
    bag.counts
        .iter()
        .map(|&(t, c)| (t, f64::from(c) * index.idf(t)))
        .filter(|&(_, w)| w != 0.0)
        .collect()
}

pub fn dot(a: &[(TermId, f64)], b: &[(TermId, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

pub fn norm(a: &[(TermId, f64)]) -> f64 {
    a.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
}

/// Cosine with square-rooted norms; 0 when either side is all-zero.
pub fn cosine_sparse(a: &[(TermId, f64)], b: &[(TermId, f64)]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        (dot(a, b) / denom).clamp(-1.0, 1.0)
    }
}

pub fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (ab / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `1 - (1/sqrt 2) * || sqrt(p) - sqrt(q) ||`.
pub fn hellinger_similarity(p: &[f64], q: &[f64]) -> f64 {
    let sq: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum();
    (1.0 - sq.sqrt() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Jensen-Shannon divergence in bits between the maximum-likelihood term
/// distributions of two bags. Tokens outside the vocabulary are distinct
/// from everything on the other side, so each contributes half its mass.
pub fn js_divergence(p: &TermBag, q: &TermBag) -> f64 {
    let lp = f64::from(p.length);
    let lq = f64::from(q.length);
    let mut div = 0.5 * (f64::from(p.oov_length()) / lp + f64::from(q.oov_length()) / lq);
    let (a, b) = (&p.counts, &q.counts);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (pa, qb) = match (a.get(i), b.get(j)) {
            (Some(&(ta, ca)), Some(&(tb, cb))) if ta == tb => {
                i += 1;
                j += 1;
                (f64::from(ca) / lp, f64::from(cb) / lq)
            }
            (Some(&(ta, ca)), Some(&(tb, _))) if ta < tb => {
                i += 1;
                (f64::from(ca) / lp, 0.0)
            }
            (Some(&(_, ca)), None) => {
                i += 1;
                (f64::from(ca) / lp, 0.0)
            }
            (_, Some(&(_, cb))) => {
                j += 1;
                (0.0, f64::from(cb) / lq)
            }
            (None, None) => unreachable!(),
        };
        let m = 0.5 * (pa + qb);
        div += 0.5 * (xlog2x(pa) + xlog2x(qb)) - xlog2x(m);
    }
    div.clamp(0.0, 1.0)
}

/// `1 - JSD(p, q)`; an empty side scores 0 against anything.
pub fn js_similarity(p: &TermBag, q: &TermBag) -> f64 {
    if p.is_empty() || q.is_empty() {
        0.0
    } else {
        1.0 - js_divergence(p, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// Contribution of one occurrence of `term` in the query to the BM25 score
/// of a document with term frequency `tf` and length `doc_len`.
pub fn bm25_term(index: &TermIndex, term: TermId, tf: u32, doc_len: u32, p: Bm25Params) -> f64 {
    if tf == 0 || index.doc_freq(term) == 0 {
        return 0.0;
    }
    let avg = index.avg_doc_length();
    let rel_len = if avg > 0.0 { f64::from(doc_len) / avg } else { 1.0 };
    let tf = f64::from(tf);
    index.idf(term) * ((p.k1 + 1.0) * tf) / (tf + p.k1 * ((1.0 - p.b) + p.b * rel_len))
}

/// Okapi BM25 with the standard saturation denominator. Repeated query
/// terms count once per occurrence.
pub fn bm25(index: &TermIndex, query: &TermBag, doc: &TermBag, p: Bm25Params) -> f64 {
    query
        .counts
        .iter()
        .map(|&(t, qtf)| f64::from(qtf) * bm25_term(index, t, doc.tf(t), doc.length, p))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Bayesian smoothing with a Dirichlet prior of mass `mu`.
    Dirichlet { mu: f64 },
    /// Linear interpolation with the collection model, weight `lambda`.
    JelinekMercer { lambda: f64 },
}

/// Smoothed `p(w|d)`. An empty document falls back to the collection model.
pub fn lm_prob(index: &TermIndex, term: TermId, tf: u32, doc_len: u32, smoothing: Smoothing) -> f64 {
    let pc = index.collection_prob(term);
    let tf = f64::from(tf);
    let len = f64::from(doc_len);
    match smoothing {
        Smoothing::Dirichlet { mu } => {
            if len + mu == 0.0 {
                pc
            } else {
                (tf + mu * pc) / (len + mu)
            }
        }
        Smoothing::JelinekMercer { lambda } => {
            if len == 0.0 {
                pc
            } else {
                (1.0 - lambda) * tf / len + lambda * pc
            }
        }
    }
}

/// Query log-likelihood `sum ln p(w|d)`. Words with zero collection
/// frequency are skipped so the score stays finite.
pub fn lm_log_likelihood(index: &TermIndex, query: &TermBag, doc: &TermBag, smoothing: Smoothing) -> f64 {
    query
        .counts
        .iter()
        .filter(|&&(t, _)| index.collection_freq(t) > 0)
        .map(|&(t, qtf)| f64::from(qtf) * lm_prob(index, t, doc.tf(t), doc.length, smoothing).ln())
        .sum()
}
