//! Training-set rebalancing.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebalanceMethod {
    None,
    Smote,
    Undersampling,
    FiftyFifty,
}

impl RebalanceMethod {
    pub const ALL: [RebalanceMethod; 4] = [
        RebalanceMethod::None,
        RebalanceMethod::Smote,
        RebalanceMethod::Undersampling,
        RebalanceMethod::FiftyFifty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RebalanceMethod::None => "none",
            RebalanceMethod::Smote => "smote",
            RebalanceMethod::Undersampling => "undersampling",
            RebalanceMethod::FiftyFifty => "fifty_fifty",
        }
    }
}

impl fmt::Display for RebalanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RebalanceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "5050" {
            return Ok(RebalanceMethod::FiftyFifty);
        }
        RebalanceMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown rebalance method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebalanceConfig {
    pub method: RebalanceMethod,
    pub smote_k: usize,
    pub seed: u64,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        RebalanceConfig {
            method: RebalanceMethod::Smote,
            smote_k: 5,
            seed: 0,
        }
    }
}

/// Which side of a split a set of rows belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Index into the input rows.
    Original(usize),
    /// Interpolated between two input minority rows.
    Synthetic { base: usize, neighbour: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rebalanced {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub origin: Vec<Origin>,
}

impl Rebalanced {
    fn identity(rows: &[Vec<f64>], labels: &[bool]) -> Self {
        Rebalanced {
            rows: rows.to_vec(),
            labels: labels.to_vec(),
            origin: (0..rows.len()).map(Origin::Original).collect(),
        }
    }

    pub fn count(&self, label: bool) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// The label with fewer rows (positive on a tie) and both counts.
pub fn minority_class(labels: &[bool]) -> (bool, usize, usize) {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos <= neg {
        (true, pos, neg)
    } else {
        (false, neg, pos)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Indices (into `members`) of the `k` nearest other members of each member,
/// distance ties broken by position.
fn nearest_neighbours(rows: &[Vec<f64>], members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &b)| (sq_dist(&rows[a], &rows[b]), j))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Adds synthetic minority rows until the minority reaches `target`.
pub fn smote(rows: &[Vec<f64>], labels: &[bool], target: usize, k: usize, seed: u64) -> Result<Rebalanced> {
    let (minority, min_count, _) = minority_class(labels);
    let mut out = Rebalanced::identity(rows, labels);
    if target <= min_count {
        return Ok(out);
    }
    if min_count < 2 {
        return Err(Error::Data(format!("SMOTE needs at least 2 minority rows, found {min_count}")));
    }
    if k == 0 {
        return Err(Error::Config("smote_k must be at least 1".into()));
    }
    let k = k.min(min_count - 1);
    let members: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == minority).collect();
    let nn = nearest_neighbours(rows, &members, k);
    let mut rng = seed::rng(seed);
    for s in 0..(target - min_count) {
        let i = s % members.len();
        let j = nn[i][rng.random_range(0..nn[i].len())];
        let u: f64 = rng.random();
        let (x, y) = (&rows[members[i]], &rows[members[j]]);
        out.rows.push(x.iter().zip(y).map(|(a, b)| a + u * (b - a)).collect());
        out.labels.push(minority);
        out.origin.push(Origin::Synthetic {
            base: members[i],
            neighbour: members[j],
        });
    }
    Ok(out)
}

/// Keeps a uniform sample of `keep` majority rows; everything else stays
/// in input order.
fn undersample_to(input: Rebalanced, majority: bool, keep: usize, seed: u64) -> Rebalanced {
    let maj_pos: Vec<usize> = (0..input.labels.len()).filter(|&i| input.labels[i] == majority).collect();
    if keep >= maj_pos.len() {
        return input;
    }
    let mut rng = seed::rng(seed);
    let mut kept = vec![false; input.labels.len()];
    for i in sample(&mut rng, maj_pos.len(), keep) {
        kept[maj_pos[i]] = true;
    }
    let mut out = Rebalanced {
        rows: Vec::new(),
        labels: Vec::new(),
        origin: Vec::new(),
    };
    for (i, ((row, label), origin)) in input.rows.into_iter().zip(input.labels).zip(input.origin).enumerate() {
        if label != majority || kept[i] {
            out.rows.push(row);
            out.labels.push(label);
            out.origin.push(origin);
        }
    }
    out
}

/// Random majority undersampling down to the minority count.
pub fn undersample(rows: &[Vec<f64>], labels: &[bool], seed: u64) -> Rebalanced {
    let (minority, min_count, _) = minority_class(labels);
    undersample_to(Rebalanced::identity(rows, labels), !minority, min_count, seed)
}

/// Half the SMOTE boost (rounded up), then undersampling to match.
pub fn fifty_fifty(rows: &[Vec<f64>], labels: &[bool], k: usize, seed: u64) -> Result<Rebalanced> {
    let (minority, min_count, maj_count) = minority_class(labels);
    let target = min_count + (maj_count - min_count).div_ceil(2);
    let boosted = smote(rows, labels, target, k, seed::derive(seed, &[1]))?;
    Ok(undersample_to(boosted, !minority, target, seed::derive(seed, &[2])))
}

/// Applies the configured rebalancer to training rows.
pub fn rebalance(rows: &[Vec<f64>], labels: &[bool], partition: Partition, config: &RebalanceConfig) -> Result<Rebalanced> {
    if partition != Partition::Train {
        return Err(Error::Invariant("rebalancing applied to an evaluation partition".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Invariant(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    match config.method {
        RebalanceMethod::None => Ok(Rebalanced::identity(rows, labels)),
        RebalanceMethod::Smote => {
            let (_, _, maj) = minority_class(labels);
            smote(rows, labels, maj, config.smote_k, config.seed)
        }
        RebalanceMethod::Undersampling => Ok(undersample(rows, labels, config.seed)),
        RebalanceMethod::FiftyFifty => fifty_fifty(rows, labels, config.smote_k, config.seed),
    }
}

/// CSV of the synthetic rows only, for debugging.
pub fn synthetic_rows_csv(r: &Rebalanced, columns: &[String]) -> String {
    let mut out = format!("base,neighbour,{}\n", columns.join(","));
    for (row, origin) in r.rows.iter().zip(&r.origin) {
        if let Origin::Synthetic { base, neighbour } = origin {
            let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("{base},{neighbour},{}\n", vals.join(",")));
        }
    }
    out
}
