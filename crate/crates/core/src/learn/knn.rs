use serde::{Deserialize, Serialize};

use super::sq_dist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl Knn {
    pub fn fit(rows: &[Vec<f64>], labels: &[bool], k: usize) -> Self {
        Knn {
            k,
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        }
    }

    /// Indices of the k nearest training rows; equal distances keep row order.
    pub fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let k = self.k.min(self.rows.len());
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, r) in self.rows.iter().enumerate() {
            let d = sq_dist(r, x);
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, i));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let nn = self.neighbours(x);
        if nn.is_empty() {
            return 0.0;
        }
        nn.iter().filter(|&&i| self.labels[i]).count() as f64 / nn.len() as f64
    }
}
