use serde::{Deserialize, Serialize};

use super::{prf, ConfusionMatrix, Prf};
use crate::corpus::TraceDataset;
use crate::ir::{DatasetIndexes, Model};

/// Every candidate pair scored by one model, pooled across source queries
/// into one descending list (ties by source id, then target id).
#[derive(Debug, Clone)]
pub struct PooledRanking {
    pub model: Model,
    /// Validity of each entry in list order.
    pub labels: Vec<bool>,
    pub total_valid: usize,
}

impl PooledRanking {
    pub fn build(dataset: &TraceDataset, indexes: &DatasetIndexes, model: Model) -> Self {
        let corpus = &indexes.target;
        let mut entries: Vec<(f64, &str, &str)> = Vec::with_capacity(dataset.num_candidates());
        for s in &dataset.sources {
            let q = corpus.prepare(&s.tokens, &s.id);
            for (t, score) in dataset.targets.iter().zip(corpus.scores(model, &q)) {
                entries.push((score, &s.id, &t.id));
            }
        }
        Self::from_scored(model, entries, |s, t| dataset.is_valid(s, t))
    }

    pub fn from_scored<'a>(
        model: Model,
        mut entries: Vec<(f64, &'a str, &'a str)>,
        is_valid: impl Fn(&str, &str) -> bool,
    ) -> Self {
        entries.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.cmp(b.2)));
        let labels: Vec<bool> = entries.iter().map(|(_, s, t)| is_valid(s, t)).collect();
        let total_valid = labels.iter().filter(|&&l| l).count();
        PooledRanking {
            model,
            labels,
            total_valid,
        }
    }

    /// Confusion matrix with the top `k` entries labelled valid; `k` is
    /// clamped to the list length.
    pub fn confusion_at(&self, k: usize) -> ConfusionMatrix {
        let k = k.min(self.labels.len());
        let tp = self.labels[..k].iter().filter(|&&l| l).count();
        ConfusionMatrix {
            tp,
            fp: k - tp,
            fn_: self.total_valid - tp,
            tn: self.labels.len() - k - (self.total_valid - tp),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub model: Model,
    pub k: usize,
    #[serde(flatten)]
    pub prf: Prf,
}

pub fn ir_baseline_at_k(ranking: &PooledRanking, k: usize) -> BaselineScore {
    BaselineScore {
        model: ranking.model,
        k,
        prf: prf(&ranking.confusion_at(k)),
    }
}

/// Highest F@K over the given rankings; the earliest ranking wins ties.
pub fn best_ir(rankings: &[PooledRanking], k: usize) -> Option<BaselineScore> {
    let mut best: Option<BaselineScore> = None;
    for r in rankings {
        let s = ir_baseline_at_k(r, k);
        if best.is_none_or(|b| s.prf.fscore > b.prf.fscore) {
            best = Some(s);
        }
    }
    best
}
