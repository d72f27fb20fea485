//! Latent semantic analysis over the TF-IDF term-by-document matrix.

use nalgebra::DMatrix;

use super::models::{cosine_dense, SparseVec};
use crate::error::{Error, Result};

/// Rank-`k` document space: documents are rows of `V_k S_k`, and a new
/// TF-IDF vector `q` maps to `U_k^T q`, which is consistent because every
/// indexed column satisfies `U^T d_j = S v_j`.
#[derive(Debug, Clone)]
pub struct LsaSpace {
    k: usize,
    /// Term-major `num_terms x k`.
    term_basis: Vec<f64>,
    doc_vectors: Vec<Vec<f64>>,
}

impl LsaSpace {
    pub fn build(num_terms: usize, docs: &[SparseVec], requested_rank: usize) -> Result<Self> {
        if requested_rank < 1 {
            return Err(Error::Config("LSA rank must be at least 1".into()));
        }
        let n = docs.len();
        if n == 0 || num_terms == 0 {
            return Ok(LsaSpace {
                k: 0,
                term_basis: Vec::new(),
                doc_vectors: vec![Vec::new(); n],
            });
        }
        let mut a = DMatrix::<f64>::zeros(num_terms, n);
        for (j, doc) in docs.iter().enumerate() {
            for &(t, w) in doc {
                a[(t as usize, j)] = w;
            }
        }
        let svd = a.svd(true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested V^T");
        let sigma = svd.singular_values;

        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
        let smax = order.first().map_or(0.0, |&i| sigma[i]);
        let tol = smax * num_terms.max(n) as f64 * f64::EPSILON;
        let numeric_rank = order.iter().filter(|&&i| sigma[i] > tol).count();
        let k = requested_rank.min(numeric_rank);
        let kept = &order[..k];

        let mut term_basis = vec![0.0; num_terms * k];
        for t in 0..num_terms {
            for (c, &i) in kept.iter().enumerate() {
                term_basis[t * k + c] = u[(t, i)];
            }
        }
        let doc_vectors = (0..n)
            .map(|j| kept.iter().map(|&i| vt[(i, j)] * sigma[i]).collect())
            .collect();
        Ok(LsaSpace {
            k,
            term_basis,
            doc_vectors,
        })
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn doc_vector(&self, d: usize) -> &[f64] {
        &self.doc_vectors[d]
    }

    pub fn project(&self, query: &SparseVec) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for &(t, w) in query {
            let row = &self.term_basis[t as usize * self.k..(t as usize + 1) * self.k];
            for (o, &u) in out.iter_mut().zip(row) {
                *o += u * w;
            }
        }
        out
    }

    pub fn doc_similarity(&self, d1: usize, d2: usize) -> f64 {
        cosine_dense(&self.doc_vectors[d1], &self.doc_vectors[d2])
    }

    pub fn query_similarity(&self, projected: &[f64], d: usize) -> f64 {
        cosine_dense(projected, &self.doc_vectors[d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::models::cosine_sparse;

    fn dense_cos(a: &[f64], b: &[f64]) -> f64 {
        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        ab / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    #[test]
    fn full_rank_matches_plain_cosine() {
        let docs: Vec<SparseVec> = vec![
            vec![(0, 1.0), (1, 2.0)],
            vec![(1, 1.0), (2, 0.5), (3, 1.5)],
            vec![(0, 0.3), (3, 2.0)],
        ];
        let space = LsaSpace::build(4, &docs, 100).unwrap();
        assert_eq!(space.rank(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let got = space.doc_similarity(i, j);
                assert!((got - cosine_sparse(&docs[i], &docs[j])).abs() < 1e-6);
            }
            // Folding an indexed document back in reproduces its vector.
            let p = space.project(&docs[i]);
            assert!((space.query_similarity(&p, i) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_one_corpus_is_fully_similar() {
        // Oracle: every column is a multiple of (1, 2, 3), so the dense
        // cosine of any two columns is 1.
        let base = [1.0, 2.0, 3.0];
        let scales = [1.0, 0.5, 4.0];
        let docs: Vec<SparseVec> = scales
            .iter()
            .map(|s| base.iter().enumerate().map(|(t, b)| (t as u32, b * s)).collect())
            .collect();
        let cols: Vec<Vec<f64>> = scales.iter().map(|s| base.iter().map(|b| b * s).collect()).collect();
        let space = LsaSpace::build(3, &docs, 100).unwrap();
        assert_eq!(space.rank(), 1);
        for i in 0..3 {
            for j in 0..3 {
                assert!((dense_cos(&cols[i], &cols[j]) - 1.0).abs() < 1e-12);
                assert!((space.doc_similarity(i, j) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_rank_is_config_error() {
        assert!(matches!(LsaSpace::build(1, &[vec![(0, 1.0)]], 0), Err(Error::Config(_))));
    }

    #[test]
    fn truncation_keeps_top_singular_directions() {
        let docs: Vec<SparseVec> = vec![
            vec![(0, 3.0)],
            vec![(1, 1.0)],
            vec![(0, 2.9), (1, 0.1)],
        ];
        let space = LsaSpace::build(2, &docs, 1).unwrap();
        assert_eq!(space.rank(), 1);
        assert!(space.doc_similarity(0, 2) > 0.999);
        let s = space.doc_similarity(0, 1);
        assert!((-1.0..=1.0).contains(&s));
    }
}
