//! Pre-retrieval query-quality metrics: collection statistics of the query
//! terms, computed without running the query.

use std::collections::BTreeSet;

use crate::ir::{models, SearchIndex, TermBag, TermId};

pub const NAMES: [&str; 21] = [
    "idf_avg",
    "idf_max",
    "idf_dev",
    "ictf_avg",
    "ictf_max",
    "ictf_dev",
    "entropy_avg",
    "entropy_max",
    "entropy_dev",
    "var_avg",
    "var_max",
    "var_sum",
    "scq_avg",
    "scq_max",
    "scq_sum",
    "scs",
    "qs",
    "pmi_avg",
    "pmi_max",
    "coherence",
    "ql",
];

/// Query-independent statistics of every indexed term.
#[derive(Debug, Clone)]
pub struct TermStats {
    pub idf: Vec<f64>,
    pub ictf: Vec<f64>,
    pub entropy: Vec<f64>,
    pub var: Vec<f64>,
    pub scq: Vec<f64>,
    /// Mean pairwise VSM similarity of the documents containing the term;
    /// `None` when fewer than two documents contain it.
    pub coherence: Vec<Option<f64>>,
}

/// Pairwise VSM similarity of all corpus documents, row-major.
#[derive(Debug, Clone)]
pub struct DocSimilarity {
    n: usize,
    sim: Vec<f64>,
}

impl DocSimilarity {
    pub fn build(index: &SearchIndex) -> Self {
        let n = index.len();
        let mut sim = vec![0.0; n * n];
        for i in 0..n {
            sim[i * n + i] = if index.doc_tfidf(i).is_empty() { 0.0 } else { 1.0 };
            for j in (i + 1)..n {
                let s = models::cosine_sparse(index.doc_tfidf(i), index.doc_tfidf(j));
                sim[i * n + j] = s;
                sim[j * n + i] = s;
            }
        }
        DocSimilarity { n, sim }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.n + j]
    }
}

impl TermStats {
    pub fn build(index: &SearchIndex, sims: &DocSimilarity) -> Self {
        let ti = index.index();
        let total = ti.total_tokens() as f64;
        let v = ti.num_terms();
        let mut stats = TermStats {
            idf: Vec::with_capacity(v),
            ictf: Vec::with_capacity(v),
            entropy: Vec::with_capacity(v),
            var: Vec::with_capacity(v),
            scq: Vec::with_capacity(v),
            coherence: Vec::with_capacity(v),
        };
        for t in 0..v as TermId {
            let idf = ti.idf(t);
            let cf = ti.collection_freq(t) as f64;
            let postings = ti.postings(t);
            let entropy = -postings
                .iter()
                .map(|&(_, tf)| {
                    let p = f64::from(tf) / cf;
                    p * p.ln()
                })
                .sum::<f64>();
            let weights: Vec<f64> = postings.iter().map(|&(_, tf)| f64::from(tf) * idf).collect();
            let coherence = if postings.len() < 2 {
                None
            } else {
                let mut acc = 0.0;
                let mut pairs = 0usize;
                for (a, &(i, _)) in postings.iter().enumerate() {
                    for &(j, _) in &postings[a + 1..] {
                        acc += sims.get(i as usize, j as usize);
                        pairs += 1;
                    }
                }
                Some(acc / pairs as f64)
            };
            stats.idf.push(idf);
            stats.ictf.push((total / cf).ln());
            stats.entropy.push(entropy);
            stats.var.push(population_variance(&weights));
            stats.scq.push((1.0 + cf.ln()) * idf);
            stats.coherence.push(coherence);
        }
        stats
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub(crate) fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn avg_max_dev(xs: &[f64]) -> [f64; 3] {
    [mean(xs), max(xs), population_variance(xs).sqrt()]
}

fn avg_max_sum(xs: &[f64]) -> [f64; 3] {
    [mean(xs), max(xs), xs.iter().sum()]
}

fn co_occurrence(a: &[(u32, u32)], b: &[(u32, u32)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// The 21 metrics in [`NAMES`] order. Statistics aggregate over the
/// distinct query terms present in the index; a query with none gets all
/// zeros.
pub fn pre_retrieval_qq(bag: &TermBag, index: &SearchIndex, stats: &TermStats) -> [f64; 21] {
    let ti = index.index();
    let present: Vec<(TermId, u32)> = bag
        .counts
        .iter()
        .copied()
        .filter(|&(t, _)| ti.doc_freq(t) > 0)
        .collect();
    if present.is_empty() {
        return [0.0; 21];
    }
    let n = ti.num_docs() as f64;
    let pick = |v: &Vec<f64>| -> Vec<f64> { present.iter().map(|&(t, _)| v[t as usize]).collect() };

    let idf = avg_max_dev(&pick(&stats.idf));
    let ictf = avg_max_dev(&pick(&stats.ictf));
    let entropy = avg_max_dev(&pick(&stats.entropy));
    let var = avg_max_sum(&pick(&stats.var));
    let scq = avg_max_sum(&pick(&stats.scq));

    let qlen: f64 = present.iter().map(|&(_, c)| f64::from(c)).sum();
    let scs: f64 = present
        .iter()
        .map(|&(t, c)| {
            let pq = f64::from(c) / qlen;
            pq * (pq / ti.collection_prob(t)).log2()
        })
        .sum();

    let mut matched = BTreeSet::new();
    for &(t, _) in &present {
        matched.extend(ti.postings(t).iter().map(|&(d, _)| d));
    }
    let qs = -(matched.len() as f64 / n).ln();

    let mut pmis = Vec::new();
    for (a, &(t1, _)) in present.iter().enumerate() {
        for &(t2, _) in &present[a + 1..] {
            let joint = co_occurrence(ti.postings(t1), ti.postings(t2));
            if joint > 0 {
                let p12 = joint as f64 / n;
                let p1 = f64::from(ti.doc_freq(t1)) / n;
                let p2 = f64::from(ti.doc_freq(t2)) / n;
                pmis.push((p12 / (p1 * p2)).ln());
            }
        }
    }
    let (pmi_avg, pmi_max) = if pmis.is_empty() {
        (0.0, 0.0)
    } else {
        (mean(&pmis), max(&pmis))
    };

    let coherences: Vec<f64> = present
        .iter()
        .filter_map(|&(t, _)| stats.coherence[t as usize])
        .collect();

    [
        idf[0],
        idf[1],
        idf[2],
        ictf[0],
        ictf[1],
        ictf[2],
        entropy[0],
        entropy[1],
        entropy[2],
        var[0],
        var[1],
        var[2],
        scq[0],
        scq[1],
        scq[2],
        scs,
        qs,
        pmi_avg,
        pmi_max,
        mean(&coherences),
        f64::from(bag.length),
    ]
}
