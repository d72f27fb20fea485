use std::collections::{BTreeMap, HashMap};

use crate::corpus::Artifact;

pub type TermId = u32;

/// Sparse term counts of one text against an index vocabulary.
///
/// `length` counts every token of the text, including tokens whose term is
/// not in the vocabulary, so `length >= counts.sum()`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermBag {
    pub counts: Vec<(TermId, u32)>,
    pub length: u32,
}

impl TermBag {
    pub fn from_counts(counts: BTreeMap<TermId, u32>, oov_tokens: u32) -> Self {
        let length = counts.values().sum::<u32>() + oov_tokens;
        TermBag {
            counts: counts.into_iter().filter(|&(_, c)| c > 0).collect(),
            length,
        }
    }

    pub fn tf(&self, term: TermId) -> u32 {
        self.counts
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    pub fn in_vocab_length(&self) -> u32 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    pub fn oov_length(&self) -> u32 {
        self.length - self.in_vocab_length()
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.counts.iter().map(|&(t, _)| t)
    }

    /// Removes every occurrence of `term`.
    pub fn without_term(&self, term: TermId) -> TermBag {
        let removed = self.tf(term);
        TermBag {
            counts: self.counts.iter().copied().filter(|&(t, _)| t != term).collect(),
            length: self.length - removed,
        }
    }
}

/// Term statistics of one corpus side.
#[derive(Debug, Clone)]
pub struct TermIndex {
    terms: Vec<String>,
    lookup: HashMap<String, TermId>,
    doc_ids: Vec<String>,
    docs: Vec<TermBag>,
    doc_freq: Vec<u32>,
    collection_freq: Vec<u64>,
    /// Per term: `(doc, tf)` sorted by doc.
    postings: Vec<Vec<(u32, u32)>>,
    total_tokens: u64,
}

impl TermIndex {
    pub fn build(artifacts: &[Artifact]) -> Self {
        let docs: Vec<(&str, &[String])> = artifacts
            .iter()
            .map(|a| (a.id.as_str(), a.tokens.as_slice()))
            .collect();
        Self::from_token_lists(&docs)
    }

    pub fn from_token_lists(docs: &[(&str, &[String])]) -> Self {
        let mut terms: Vec<String> = docs
            .iter()
            .flat_map(|(_, toks)| toks.iter().cloned())
            .collect();
        terms.sort_unstable();
        terms.dedup();
        let lookup: HashMap<String, TermId> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();

        let mut doc_freq = vec![0u32; terms.len()];
        let mut collection_freq = vec![0u64; terms.len()];
        let mut postings = vec![Vec::new(); terms.len()];
        let mut bags = Vec::with_capacity(docs.len());
        let mut total_tokens = 0u64;
        for (d, (_, toks)) in docs.iter().enumerate() {
            let mut counts = BTreeMap::new();
            for t in toks.iter() {
                *counts.entry(lookup[t]).or_insert(0u32) += 1;
            }
            for (&t, &c) in &counts {
                doc_freq[t as usize] += 1;
                collection_freq[t as usize] += u64::from(c);
                postings[t as usize].push((d as u32, c));
            }
            total_tokens += toks.len() as u64;
            bags.push(TermBag::from_counts(counts, 0));
        }
        TermIndex {
            terms,
            lookup,
            doc_ids: docs.iter().map(|(id, _)| (*id).to_owned()).collect(),
            docs: bags,
            doc_freq,
            collection_freq,
            postings,
            total_tokens,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_position(&self, id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == id)
    }

    pub fn doc(&self, d: usize) -> &TermBag {
        &self.docs[d]
    }

    pub fn docs(&self) -> &[TermBag] {
        &self.docs
    }

    pub fn doc_length(&self, d: usize) -> u32 {
        self.docs[d].length
    }

    pub fn doc_freq(&self, t: TermId) -> u32 {
        self.doc_freq[t as usize]
    }

    pub fn collection_freq(&self, t: TermId) -> u64 {
        self.collection_freq[t as usize]
    }

    pub fn postings(&self, t: TermId) -> &[(u32, u32)] {
        &self.postings[t as usize]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.docs.len() as f64
        }
    }

    /// `ln(N / df_t)`; zero for terms the index has never seen.
    pub fn idf(&self, t: TermId) -> f64 {
        let df = self.doc_freq(t);
        if df == 0 {
            0.0
        } else {
            (self.num_docs() as f64 / f64::from(df)).ln()
        }
    }

    /// `p(w|C) = cf / total_tokens`.
    pub fn collection_prob(&self, t: TermId) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.collection_freq(t) as f64 / self.total_tokens as f64
        }
    }

    /// Maps arbitrary tokens onto this vocabulary; unknown tokens only
    /// count towards the bag length.
    pub fn bag(&self, tokens: &[String]) -> TermBag {
        let mut counts = BTreeMap::new();
        let mut oov = 0;
        for t in tokens {
            match self.lookup.get(t) {
                Some(&id) => *counts.entry(id).or_insert(0u32) += 1,
                None => oov += 1,
            }
        }
        TermBag::from_counts(counts, oov)
    }
}

/// Free-function form of [`TermIndex::build`].
pub fn build_index(artifacts: &[Artifact]) -> TermIndex {
    TermIndex::build(artifacts)
}
