use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            features_per_split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of valid training rows that reached the leaf.
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn votes_valid(&self, x: &[f64]) -> bool {
        self.leaf_value(x) >= 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    mtry: usize,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    /// Best Gini split on one feature over `idx`, threshold at the midpoint
    /// between adjacent distinct values.
    fn best_on(&self, idx: &[usize], feature: usize, parent: f64) -> Option<Split> {
        let mut vals: Vec<(f64, bool)> = idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = vals.len();
        let total_pos = vals.iter().filter(|v| v.1).count();
        let mut left_pos = 0;
        let mut best: Option<Split> = None;
        for i in 0..n - 1 {
            if vals[i].1 {
                left_pos += 1;
            }
            if vals[i].0 == vals[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            let child = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / n as f64;
            let gain = parent - child;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = 0.5 * (vals[i].0 + vals[i + 1].0);
                if threshold >= vals[i + 1].0 {
                    threshold = vals[i].0;
                }
                best = Some(Split { feature, threshold, gain });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, rng: &mut seed::Rng) -> usize {
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(pos as f64 / idx.len() as f64));
        if pos == 0 || pos == idx.len() {
            return id;
        }
        let parent = gini(pos, idx.len());
        let p = self.rows[0].len();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        // keep drawing features past mtry until one gives a positive gain
        let mut best: Option<Split> = None;
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.mtry && best.as_ref().is_some_and(|b| b.gain > 0.0) {
                break;
            }
            if let Some(s) = self.best_on(&idx, f, parent) {
                if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best.filter(|b| b.gain > 0.0) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl Forest {
    pub fn fit(rows: &[Vec<f64>], labels: &[bool], params: &ForestParams, seed: u64) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mtry = params
            .features_per_split
            .unwrap_or_else(|| (p as f64).sqrt().floor() as usize)
            .clamp(1, p.max(1));
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                let mut b = Builder {
                    rows,
                    labels,
                    mtry,
                    nodes: Vec::new(),
                };
                if n == 0 {
                    b.nodes.push(Node::Leaf(0.0));
                } else if p == 0 {
                    let pos = labels.iter().filter(|&&l| l).count();
                    b.nodes.push(Node::Leaf(pos as f64 / n as f64));
                } else {
                    let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    b.grow(sample, &mut rng);
                }
                Tree { nodes: b.nodes }
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        self.trees.iter().filter(|t| t.votes_valid(x)).count() as f64 / self.trees.len() as f64
    }
}
