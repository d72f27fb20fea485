//! Post-retrieval query-quality metrics, computed from the result list of
//! one model.

use std::collections::HashSet;

use rand::seq::index::sample;

use super::pre::{mean, population_variance, DocSimilarity};
use crate::ir::{Model, Query, Ranked, SearchIndex, TermBag, TermId};
use crate::seed;

pub const NAMES: [&str; 7] = [
    "subquery_overlap",
    "robustness",
    "first_rank_change",
    "clustering_tendency",
    "spatial_autocorrelation",
    "wig",
    "nqc",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostParams {
    /// Result-list depth (capped at corpus size).
    pub depth: usize,
    /// Fraction of a document's tokens deleted per perturbation.
    pub perturb_fraction: f64,
    pub perturb_repeats: usize,
}

impl Default for PostParams {
    fn default() -> Self {
        PostParams {
            depth: 50,
            perturb_fraction: 0.1,
            perturb_repeats: 10,
        }
    }
}

fn top_set(ranked: &[Ranked], depth: usize) -> HashSet<usize> {
    ranked.iter().take(depth).map(|r| r.doc).collect()
}

/// Mean of `|top(sub) ∩ top(full)| / depth` over leave-one-term-out
/// subqueries, and the fraction of subqueries whose first document
/// differs. Queries with fewer than two distinct indexed terms give
/// `(1.0, 0.0)`.
pub fn subquery_metrics(
    index: &SearchIndex,
    model: Model,
    query: &Query,
    ranked: &[Ranked],
    depth: usize,
) -> (f64, f64) {
    let terms: Vec<TermId> = query
        .bag
        .terms()
        .filter(|&t| index.index().doc_freq(t) > 0)
        .collect();
    if terms.len() < 2 || depth == 0 {
        return (1.0, 0.0);
    }
    let full_top = top_set(ranked, depth);
    let full_first = ranked[0].doc;
    let mut overlap = 0.0;
    let mut changed = 0usize;
    for (i, &t) in terms.iter().enumerate() {
        let sub = index.prepare_bag(query.bag.without_term(t), seed::derive(i as u64, &[0x5ab]));
        let sub_ranked = index.rank(model, &sub);
        let shared = sub_ranked
            .iter()
            .take(depth)
            .filter(|r| full_top.contains(&r.doc))
            .count();
        overlap += shared as f64 / depth as f64;
        if sub_ranked[0].doc != full_first {
            changed += 1;
        }
    }
    (overlap / terms.len() as f64, changed as f64 / terms.len() as f64)
}

/// Removes `round(fraction * len)` tokens uniformly without replacement.
pub fn perturb(bag: &TermBag, fraction: f64, rng: &mut seed::Rng) -> TermBag {
    let tokens: Vec<TermId> = bag
        .counts
        .iter()
        .flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize))
        .collect();
    let remove = ((fraction * tokens.len() as f64).round() as usize).min(tokens.len());
    let mut counts: std::collections::BTreeMap<TermId, u32> = bag.counts.iter().copied().collect();
    for i in sample(rng, tokens.len(), remove) {
        *counts.get_mut(&tokens[i]).expect("sampled token") -= 1;
    }
    TermBag::from_counts(counts, bag.oov_length())
}

/// Spearman correlation between two rank vectors without ties.
fn spearman_of_ranks(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    if a.len() < 2 {
        return 0.0;
    }
    let d2: f64 = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Mean Spearman correlation between the original top list and the order
/// after perturbing every listed document, over `repeats` trials.
pub fn robustness(
    index: &SearchIndex,
    model: Model,
    query: &Query,
    ranked: &[Ranked],
    params: &PostParams,
    seed: u64,
) -> f64 {
    let top: Vec<&Ranked> = ranked.iter().take(params.depth).collect();
    if top.len() < 2 || params.perturb_repeats == 0 {
        return 0.0;
    }
    let mut rng = seed::rng(seed);
    let ids = index.index().doc_ids();
    let mut total = 0.0;
    for _ in 0..params.perturb_repeats {
        let scores: Vec<f64> = top
            .iter()
            .map(|r| {
                let bag = perturb(index.index().doc(r.doc), params.perturb_fraction, &mut rng);
                index.score_doc(model, query, r.doc, Some(&bag))
            })
            .collect();
        let mut order: Vec<usize> = (0..top.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| ids[top[a].doc].cmp(&ids[top[b].doc]))
        });
        let mut new_rank = vec![0usize; top.len()];
        for (pos, &i) in order.iter().enumerate() {
            new_rank[i] = pos;
        }
        let original: Vec<usize> = (0..top.len()).collect();
        total += spearman_of_ranks(&original, &new_rank);
    }
    total / params.perturb_repeats as f64
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let d = (sxx * syy).sqrt();
    if d == 0.0 || !d.is_finite() {
        0.0
    } else {
        sxy / d
    }
}

/// The seven metrics in [`NAMES`] order for one query and model.
pub fn post_retrieval_qq(
    index: &SearchIndex,
    sims: &DocSimilarity,
    model: Model,
    query: &Query,
    scores: &[f64],
    params: &PostParams,
    seed: u64,
) -> [f64; 7] {
    if scores.is_empty() {
        return [0.0; 7];
    }
    let ranked = index.rank_scores(scores);
    let depth = params.depth.min(ranked.len());
    let top: Vec<&Ranked> = ranked.iter().take(depth).collect();
    let top_scores: Vec<f64> = top.iter().map(|r| r.score).collect();

    let (overlap, first_change) = subquery_metrics(index, model, query, &ranked, depth);
    let robust = robustness(index, model, query, &ranked, &PostParams { depth, ..*params }, seed);

    let clustering = if top.len() < 2 {
        0.0
    } else {
        let mut acc = 0.0;
        let mut pairs = 0usize;
        for (a, ra) in top.iter().enumerate() {
            for rb in &top[a + 1..] {
                acc += sims.get(ra.doc, rb.doc);
                pairs += 1;
            }
        }
        acc / pairs as f64
    };

    let neighbour_avg: Vec<f64> = top
        .iter()
        .map(|ri| {
            let (mut num, mut den) = (0.0, 0.0);
            for rj in &top {
                if rj.doc != ri.doc {
                    let w = sims.get(ri.doc, rj.doc);
                    num += w * rj.score;
                    den += w;
                }
            }
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .collect();
    let autocorrelation = pearson(&top_scores, &neighbour_avg);

    let corpus_mean = mean(scores);
    let qlen = f64::from(query.bag.length);
    let wig = if qlen == 0.0 {
        0.0
    } else {
        top_scores.iter().map(|s| s - corpus_mean).sum::<f64>() / (depth as f64 * qlen)
    };
    let nqc = if corpus_mean == 0.0 {
        0.0
    } else {
        population_variance(&top_scores).sqrt() / corpus_mean.abs()
    };

    [overlap, robust, first_change, clustering, autocorrelation, wig, nqc]
}
