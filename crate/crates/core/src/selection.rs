//! Filter feature selection: a CFS subset search and four rankers.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub const BINS: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Consecutive non-improving expansions before the CFS search gives up.
pub const CFS_PATIENCE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    None,
    Cfs,
    Correlation,
    InfoGain,
    GainRatio,
    Symmetrical,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 6] = [
        SelectionMethod::None,
        SelectionMethod::Cfs,
        SelectionMethod::Correlation,
        SelectionMethod::GainRatio,
        SelectionMethod::InfoGain,
        SelectionMethod::Symmetrical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMethod::None => "none",
            SelectionMethod::Cfs => "cfs",
            SelectionMethod::Correlation => "correlation",
            SelectionMethod::InfoGain => "info_gain",
            SelectionMethod::GainRatio => "gain_ratio",
            SelectionMethod::Symmetrical => "symmetrical",
        }
    }

    pub fn is_ranker(self) -> bool {
        !matches!(self, SelectionMethod::None | SelectionMethod::Cfs)
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SelectionMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown selection method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub threshold: f64,
    /// One score per input column, in input order (SU with the class for cfs,
    /// 1.0 for none).
    pub scores: Vec<(String, f64)>,
    pub kept_columns: Vec<String>,
}

impl SelectionResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("selection result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Decode(format!("selection result: {e}")))
    }
}

/// Equal-frequency binning: a value's bin is `floor(p * BINS / n)` where `p`
/// is the first position of that value in sorted order, so ties share the
/// lower bin.
pub fn discretize(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|v| {
            let p = sorted.partition_point(|x| x.total_cmp(v).is_lt());
            p * BINS / n
        })
        .collect()
}

fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I, n: usize) -> f64 {
    let n = n as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy in bits of a discrete sequence.
pub fn entropy(xs: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &x in xs {
        *counts.entry(x).or_default() += 1;
    }
    entropy_of_counts(counts.into_values(), xs.len())
}

/// `H(X, Y)` in bits.
pub fn joint_entropy(xs: &[usize], ys: &[usize]) -> f64 {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for (&x, &y) in xs.iter().zip(ys) {
        *counts.entry((x, y)).or_default() += 1;
    }
    entropy_of_counts(counts.into_values(), xs.len())
}

/// `I(X; Y) = H(X) + H(Y) - H(X, Y)`, clamped at 0 against rounding.
pub fn mutual_information(xs: &[usize], ys: &[usize]) -> f64 {
    (entropy(xs) + entropy(ys) - joint_entropy(xs, ys)).max(0.0)
}

pub fn symmetrical_uncertainty(xs: &[usize], ys: &[usize]) -> f64 {
    let denom = entropy(xs) + entropy(ys);
    if denom <= 0.0 {
        0.0
    } else {
        (2.0 * mutual_information(xs, ys) / denom).clamp(0.0, 1.0)
    }
}

pub fn abs_pearson(xs: &[f64], labels: &[bool]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let ys: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).abs().min(1.0)
    }
}

fn label_codes(labels: &[bool]) -> Vec<usize> {
    labels.iter().map(|&l| usize::from(l)).collect()
}

/// Ranker score of one column; entropy-based methods bin the column first.
pub fn feature_score(method: SelectionMethod, column: &[f64], labels: &[bool]) -> Result<f64> {
    if method == SelectionMethod::Correlation {
        return Ok(abs_pearson(column, labels));
    }
    let x = discretize(column);
    let y = label_codes(labels);
    Ok(match method {
        SelectionMethod::InfoGain => mutual_information(&x, &y),
        SelectionMethod::GainRatio => {
            let hx = entropy(&x);
            if hx <= 0.0 {
                0.0
            } else {
                (mutual_information(&x, &y) / hx).clamp(0.0, 1.0)
            }
        }
        SelectionMethod::Symmetrical => symmetrical_uncertainty(&x, &y),
        other => return Err(Error::Config(format!("{other} is not a ranker"))),
    })
}

/// CFS merit of a subset from its summed feature-class and pairwise
/// feature-feature correlations.
pub fn merit(k: usize, sum_cf: f64, sum_ff: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    let rcf = sum_cf / k;
    let rff = if k > 1.0 { sum_ff / (k * (k - 1.0) / 2.0) } else { 0.0 };
    let denom = (k + k * (k - 1.0) * rff).sqrt();
    if denom <= 0.0 {
        0.0
    } else {
        k * rcf / denom
    }
}

/// SU correlations between binned columns and with the class, pairwise
/// values computed on demand.
pub struct CfsCorrelations {
    binned: Vec<Vec<usize>>,
    pub class: Vec<f64>,
    pair: HashMap<(usize, usize), f64>,
}

impl CfsCorrelations {
    pub fn new(columns: &[Vec<f64>], labels: &[bool]) -> Self {
        let binned: Vec<Vec<usize>> = columns.par_iter().map(|c| discretize(c)).collect();
        let y = label_codes(labels);
        let class = binned.par_iter().map(|x| symmetrical_uncertainty(x, &y)).collect();
        CfsCorrelations {
            binned,
            class,
            pair: HashMap::new(),
        }
    }

    pub fn feature_pair(&mut self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.pair.get(&key) {
            return v;
        }
        let v = symmetrical_uncertainty(&self.binned[key.0], &self.binned[key.1]);
        self.pair.insert(key, v);
        v
    }

    pub fn subset_merit(&mut self, subset: &[usize]) -> f64 {
        let sum_cf = subset.iter().map(|&f| self.class[f]).sum();
        let mut sum_ff = 0.0;
        for (i, &a) in subset.iter().enumerate() {
            for &b in &subset[i + 1..] {
                sum_ff += self.feature_pair(a, b);
            }
        }
        merit(subset.len(), sum_cf, sum_ff)
    }
}

#[derive(Debug, Clone)]
struct Node {
    subset: Vec<usize>,
    sum_cf: f64,
    sum_ff: f64,
    merit: f64,
}

/// Best-first forward search over subsets, stopping after
/// [`CFS_PATIENCE`] consecutive expansions that fail to beat the best
/// merit so far. Returns column indices in the order they were added.
pub fn cfs_search(corr: &mut CfsCorrelations) -> Vec<usize> {
    let p = corr.class.len();
    let mut open = vec![Node {
        subset: Vec::new(),
        sum_cf: 0.0,
        sum_ff: 0.0,
        merit: 0.0,
    }];
    let mut visited: BTreeSet<Vec<usize>> = BTreeSet::new();
    visited.insert(Vec::new());
    let mut best = open[0].clone();
    let mut stale = 0;
    while stale < CFS_PATIENCE {
        // highest merit first; among equals the earliest inserted
        let Some(pos) = open
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.merit.total_cmp(&b.1.merit).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let node = open.remove(pos);
        let mut improved = false;
        for f in 0..p {
            if node.subset.contains(&f) {
                continue;
            }
            let mut key = node.subset.clone();
            key.push(f);
            key.sort_unstable();
            if !visited.insert(key) {
                continue;
            }
            let sum_ff = node.sum_ff + node.subset.iter().map(|&g| corr.feature_pair(f, g)).sum::<f64>();
            let sum_cf = node.sum_cf + corr.class[f];
            let mut subset = node.subset.clone();
            subset.push(f);
            let child = Node {
                merit: merit(subset.len(), sum_cf, sum_ff),
                subset,
                sum_cf,
                sum_ff,
            };
            if child.merit > best.merit + 1e-12 {
                best = child.clone();
                improved = true;
            }
            open.push(child);
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
        }
    }
    best.subset
}

/// Runs `method` on the matrix's columns against its labels.
pub fn select(matrix: &FeatureMatrix, method: SelectionMethod, threshold: f64) -> Result<SelectionResult> {
    let labels = matrix.labels();
    let columns: Vec<Vec<f64>> = (0..matrix.num_cols()).map(|j| matrix.column(j)).collect();
    let named = |scores: &[f64]| -> Vec<(String, f64)> {
        matrix.columns.iter().cloned().zip(scores.iter().copied()).collect()
    };
    let result = match method {
        SelectionMethod::None => SelectionResult {
            method,
            threshold,
            scores: named(&vec![1.0; columns.len()]),
            kept_columns: matrix.columns.clone(),
        },
        SelectionMethod::Cfs => {
            let mut corr = CfsCorrelations::new(&columns, &labels);
            let kept = cfs_search(&mut corr);
            SelectionResult {
                method,
                threshold,
                scores: named(&corr.class),
                kept_columns: kept.into_iter().map(|j| matrix.columns[j].clone()).collect(),
            }
        }
        _ => {
            let scores = columns
                .par_iter()
                .map(|c| feature_score(method, c, &labels))
                .collect::<Result<Vec<f64>>>()?;
            let mut order: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] > threshold).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            SelectionResult {
                method,
                threshold,
                scores: named(&scores),
                kept_columns: order.into_iter().map(|j| matrix.columns[j].clone()).collect(),
            }
        }
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CandidateLink;

    fn matrix(cols: &[Vec<f64>], labels: &[bool]) -> FeatureMatrix {
        let n = labels.len();
        let links = (0..n)
            .map(|i| CandidateLink {
                source_id: format!("s{i}"),
                target_id: "t".into(),
                label: labels[i],
            })
            .collect();
        let values = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let names = (0..cols.len()).map(|j| format!("f{j}")).collect();
        FeatureMatrix::new(names, links, values).unwrap()
    }

    #[test]
    fn discretize_uniform_and_constant() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let bins = discretize(&v);
        for b in 0..BINS {
            assert_eq!(bins.iter().filter(|&&x| x == b).count(), 10);
        }
        assert!(discretize(&[3.0; 7]).iter().all(|&b| b == 0));
    }

    #[test]
    fn discretize_matches_sort_and_slice() {
        let mut v: Vec<f64> = (1..=20).map(f64::from).collect();
        v.reverse();
        let bins = discretize(&v);
        // slice the sorted list into ten consecutive pairs
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, chunk) in sorted.chunks(2).enumerate() {
            for x in chunk {
                let pos = v.iter().position(|y| y == x).unwrap();
                assert_eq!(bins[pos], i);
            }
        }
    }

    #[test]
    fn ties_share_lower_bin() {
        let bins = discretize(&[1.0, 1.0, 1.0, 2.0]);
        assert_eq!(bins, vec![0, 0, 0, 7]);
    }

    #[test]
    fn identical_feature_scores_one() {
        let labels = [false, true, false, true, true, false];
        let col: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        assert!((feature_score(SelectionMethod::InfoGain, &col, &labels).unwrap() - 1.0).abs() < 1e-12);
        assert!((feature_score(SelectionMethod::Symmetrical, &col, &labels).unwrap() - 1.0).abs() < 1e-12);
        assert!((feature_score(SelectionMethod::GainRatio, &col, &labels).unwrap() - 1.0).abs() < 1e-12);
        assert!((feature_score(SelectionMethod::Correlation, &col, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_feature_has_no_gain() {
        let labels = [false, false, true, true];
        let col = [0.0, 1.0, 0.0, 1.0];
        assert!(feature_score(SelectionMethod::InfoGain, &col, &labels).unwrap().abs() < 1e-12);
        assert_eq!(feature_score(SelectionMethod::Correlation, &col, &labels).unwrap(), 0.0);
    }

    /// `H(Y) - sum_x P(x) H(Y|x)` from a hand-built contingency table.
    #[test]
    fn info_gain_matches_conditional_entropy() {
        let x = [0usize, 0, 0, 1, 1, 2, 2, 2];
        let y = [0usize, 0, 1, 1, 1, 0, 1, 1];
        let h = |ps: &[f64]| -> f64 { ps.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum() };
        let hy = h(&[3.0 / 8.0, 5.0 / 8.0]);
        let hy_x = 3.0 / 8.0 * h(&[2.0 / 3.0, 1.0 / 3.0]) + 2.0 / 8.0 * h(&[0.0, 1.0]) + 3.0 / 8.0 * h(&[1.0 / 3.0, 2.0 / 3.0]);
        assert!((mutual_information(&x, &y) - (hy - hy_x)).abs() < 1e-12);
        let hx = h(&[3.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0]);
        assert!((symmetrical_uncertainty(&x, &y) - 2.0 * (hy - hy_x) / (hx + hy)).abs() < 1e-12);
    }

    #[test]
    fn entropy_scores_ignore_monotone_rescaling() {
        let labels = [true, false, true, true, false, false, true, false, false, true, false, false];
        let col: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64 * 0.3).collect();
        let scaled: Vec<f64> = col.iter().map(|v| (v * 2.0 + 1.0).exp()).collect();
        for m in [SelectionMethod::InfoGain, SelectionMethod::GainRatio, SelectionMethod::Symmetrical] {
            let a = feature_score(m, &col, &labels).unwrap();
            let b = feature_score(m, &scaled, &labels).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn merit_single_feature_is_class_correlation() {
        assert_eq!(merit(1, 0.37, 0.0), 0.37);
    }

    #[test]
    fn cfs_drops_redundant_copy() {
        let labels = [false, true, false, true, true, false, true, false];
        let good: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let noise = vec![0.1, 0.5, 0.9, 0.2, 0.3, 0.4, 0.8, 0.7];
        let m = matrix(&[good.clone(), good, noise], &labels);
        let r = select(&m, SelectionMethod::Cfs, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.kept_columns.len(), 1);
        assert!(r.kept_columns[0] == "f0" || r.kept_columns[0] == "f1");
    }

    #[test]
    fn cfs_matches_exhaustive_search() {
        let labels: Vec<bool> = (0..40).map(|i| (i * 37 % 11) < 5).collect();
        let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let cols: Vec<Vec<f64>> = vec![
            (0..40).map(|i| y[i] * 2.0 + (i % 3) as f64 * 0.4).collect(),
            (0..40).map(|i| (i * 13 % 17) as f64).collect(),
            (0..40).map(|i| y[i] + (i % 5) as f64 * 0.3).collect(),
            (0..40).map(|i| y[i] * 2.0 + (i % 3) as f64 * 0.41).collect(),
            (0..40).map(|i| ((i * 7 % 9) as f64) + y[i] * 3.0).collect(),
        ];
        let mut corr = CfsCorrelations::new(&cols, &labels);
        let chosen = cfs_search(&mut corr);
        let found = corr.subset_merit(&chosen);
        let mut best = 0.0f64;
        for mask in 1u32..32 {
            let subset: Vec<usize> = (0..5).filter(|j| mask & (1 << j) != 0).collect();
            best = best.max(corr.subset_merit(&subset));
        }
        assert!((found - best).abs() < 1e-12, "{found} vs {best}");
    }

    #[test]
    fn none_keeps_all_and_constant_keeps_none() {
        let labels = [true, false, true, false];
        let m = matrix(&[vec![0.5; 4], vec![0.2; 4]], &labels);
        assert_eq!(select(&m, SelectionMethod::None, DEFAULT_THRESHOLD).unwrap().kept_columns.len(), 2);
        for method in [SelectionMethod::Correlation, SelectionMethod::InfoGain, SelectionMethod::GainRatio, SelectionMethod::Symmetrical] {
            assert!(select(&m, method, DEFAULT_THRESHOLD).unwrap().kept_columns.is_empty());
        }
    }

    #[test]
    fn ranker_orders_by_score() {
        let labels = [true, false, true, false, true, false];
        let strong = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let weak = vec![1.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        let m = matrix(&[weak, strong], &labels);
        let r = select(&m, SelectionMethod::Correlation, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.kept_columns, vec!["f1", "f0"]);
        let back = SelectionResult::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!("wrapper".parse::<SelectionMethod>().is_err());
    }
}
