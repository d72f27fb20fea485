//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! The chain is single-threaded and fully determined by its seed. Document
//! topic mixtures come from the last sample:
//! `theta_dk = (n_dk + alpha) / (L_d + K alpha)`. Texts outside the fitted
//! corpus are folded in by sampling their assignments against the frozen
//! topic-word counts.

use rand::Rng as _;

use super::index::{TermBag, TermId};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaParams {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub inference_iterations: usize,
}

impl LdaParams {
    pub fn with_topics(topics: usize) -> Self {
        LdaParams {
            topics,
            alpha: 50.0 / topics as f64,
            beta: 0.01,
            iterations: 1000,
            inference_iterations: 100,
        }
    }
}

impl Default for LdaParams {
    fn default() -> Self {
        Self::with_topics(250)
    }
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    params: LdaParams,
    vocab_size: usize,
    /// Word-major `V x K` word-topic counts.
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    theta: Vec<Vec<f64>>,
}

fn expand(bag: &TermBag) -> Vec<TermId> {
    bag.counts
        .iter()
        .flat_map(|&(t, c)| std::iter::repeat_n(t, c as usize))
        .collect()
}

fn draw(rng: &mut Rng, weights: &mut [f64]) -> usize {
    let mut total = 0.0;
    for w in weights.iter_mut() {
        total += *w;
        *w = total;
    }
    let u = rng.random::<f64>() * total;
    weights.partition_point(|&c| c <= u).min(weights.len() - 1)
}

impl TopicModel {
    pub fn fit(docs: &[TermBag], vocab_size: usize, params: LdaParams, seed: u64) -> Self {
        let k = params.topics.max(1);
        let v = vocab_size;
        let mut rng = seed::rng(seed);
        let tokens: Vec<Vec<TermId>> = docs.iter().map(expand).collect();
        let mut z: Vec<Vec<usize>> = Vec::with_capacity(tokens.len());
        let mut doc_topic = vec![vec![0u32; k]; tokens.len()];
        let mut word_topic = vec![0u32; v * k];
        let mut topic_totals = vec![0u32; k];

        for (d, words) in tokens.iter().enumerate() {
            let assign: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
            for (&w, &t) in words.iter().zip(&assign) {
                doc_topic[d][t] += 1;
                word_topic[w as usize * k + t] += 1;
                topic_totals[t] += 1;
            }
            z.push(assign);
        }

        let vbeta = v as f64 * params.beta;
        let mut weights = vec![0.0; k];
        for _ in 0..params.iterations {
            for (d, words) in tokens.iter().enumerate() {
                let nd = &mut doc_topic[d];
                for (i, &w) in words.iter().enumerate() {
                    let w = w as usize;
                    let old = z[d][i];
                    nd[old] -= 1;
                    word_topic[w * k + old] -= 1;
                    topic_totals[old] -= 1;
                    let row = &word_topic[w * k..(w + 1) * k];
                    for t in 0..k {
                        weights[t] = (f64::from(nd[t]) + params.alpha)
                            * (f64::from(row[t]) + params.beta)
                            / (f64::from(topic_totals[t]) + vbeta);
                    }
                    let new = draw(&mut rng, &mut weights);
                    z[d][i] = new;
                    nd[new] += 1;
                    word_topic[w * k + new] += 1;
                    topic_totals[new] += 1;
                }
            }
        }

        let theta = doc_topic
            .iter()
            .zip(&tokens)
            .map(|(nd, words)| Self::mixture(nd, words.len(), k, params.alpha))
            .collect();
        TopicModel {
            params,
            vocab_size,
            word_topic,
            topic_totals,
            theta,
        }
    }

    fn mixture(counts: &[u32], len: usize, k: usize, alpha: f64) -> Vec<f64> {
        let denom = len as f64 + k as f64 * alpha;
        counts
            .iter()
            .map(|&c| (f64::from(c) + alpha) / denom)
            .collect()
    }

    pub fn num_topics(&self) -> usize {
        self.params.topics.max(1)
    }

    pub fn theta(&self, d: usize) -> &[f64] {
        &self.theta[d]
    }

    /// Topic mixture of a new text, by Gibbs sampling its own assignments
    /// against the frozen topic-word counts. Terms outside the vocabulary
    /// are ignored; a text with none left gets the uniform mixture.
    pub fn infer(&self, bag: &TermBag, seed: u64) -> Vec<f64> {
        let k = self.num_topics();
        let v = self.vocab_size;
        let words: Vec<TermId> = expand(bag)
            .into_iter()
            .filter(|&w| (w as usize) < v)
            .collect();
        if words.is_empty() {
            return vec![1.0 / k as f64; k];
        }
        let vbeta = v as f64 * self.params.beta;
        let phi = |t: usize, w: usize| {
            (f64::from(self.word_topic[w * k + t]) + self.params.beta)
                / (f64::from(self.topic_totals[t]) + vbeta)
        };
        let mut rng = seed::rng(seed);
        let mut nd = vec![0u32; k];
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for &t in &z {
            nd[t] += 1;
        }
        let mut weights = vec![0.0; k];
        for _ in 0..self.params.inference_iterations {
            for (i, &w) in words.iter().enumerate() {
                nd[z[i]] -= 1;
                for (t, wt) in weights.iter_mut().enumerate() {
                    *wt = (f64::from(nd[t]) + self.params.alpha) * phi(t, w as usize);
                }
                z[i] = draw(&mut rng, &mut weights);
                nd[z[i]] += 1;
            }
        }
        Self::mixture(&nd, words.len(), k, self.params.alpha)
    }
}
