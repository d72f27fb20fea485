use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stratified_folds, ConfusionMatrix, Prf};
use crate::balance::{rebalance, Origin, Partition, RebalanceConfig, RebalanceMethod};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learn::{train, Algorithm, Hyperparams};
use crate::seed;
use crate::selection::{select, SelectionMethod, DEFAULT_THRESHOLD};

/// Where feature selection is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    /// On each training partition.
    Fold,
    /// Once on the whole dataset before splitting.
    Dataset,
}

impl fmt::Display for SelectionScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionScope::Fold => "fold",
            SelectionScope::Dataset => "dataset",
        })
    }
}

impl FromStr for SelectionScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fold" => Ok(SelectionScope::Fold),
            "dataset" => Ok(SelectionScope::Dataset),
            _ => Err(Error::Config(format!("unknown selection scope '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub selection: SelectionMethod,
    pub threshold: f64,
    pub scope: SelectionScope,
    pub rebalance: RebalanceMethod,
    pub smote_k: usize,
    pub classifier: Algorithm,
    pub hyper: Hyperparams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            selection: SelectionMethod::Correlation,
            threshold: DEFAULT_THRESHOLD,
            scope: SelectionScope::Fold,
            rebalance: RebalanceMethod::Smote,
            smote_k: 5,
            classifier: Algorithm::RandomForest,
            hyper: Hyperparams::default(),
        }
    }
}

impl PipelineConfig {
    /// `selection+rebalance+classifier`.
    pub fn label(&self) -> String {
        format!("{}+{}+{}", self.selection, self.rebalance, self.classifier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub trials: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            trials: 50,
            folds: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub selected_columns: usize,
    pub training_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub confusion: ConfusionMatrix,
    pub predicted_positive: usize,
    #[serde(flatten)]
    pub prf: Prf,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRun {
    pub dataset: String,
    pub label: String,
    pub pipeline: PipelineConfig,
    pub cv: CvConfig,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub fscore: Vec<f64>,
    pub mean: Prf,
    pub mean_predicted_positive: f64,
    pub trials: Vec<TrialResult>,
}

impl CvRun {
    /// Cut-point for the IR comparison: the mean predicted-positive count,
    /// rounded.
    pub fn cut_point(&self) -> usize {
        self.mean_predicted_positive.round() as usize
    }
}

fn subset(matrix: &FeatureMatrix, rows: &[usize]) -> Result<FeatureMatrix> {
    FeatureMatrix::new(
        matrix.columns.clone(),
        rows.iter().map(|&i| matrix.links[i].clone()).collect(),
        rows.iter().map(|&i| matrix.values[i].clone()).collect(),
    )
}

fn column_positions(matrix: &FeatureMatrix, kept: &[String]) -> Result<Vec<usize>> {
    kept.iter()
        .map(|c| {
            matrix
                .column_index(c)
                .ok_or_else(|| Error::Invariant(format!("selected column '{c}' not in matrix")))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    matrix: &FeatureMatrix,
    labels: &[bool],
    test: &[usize],
    fold: usize,
    trial_seed: u64,
    pipeline: &PipelineConfig,
    dataset_selection: Option<&Vec<String>>,
) -> Result<(FoldResult, Vec<bool>)> {
    let test_set: HashSet<usize> = test.iter().copied().collect();
    let train_idx: Vec<usize> = (0..labels.len()).filter(|i| !test_set.contains(i)).collect();
    let kept = match dataset_selection {
        Some(k) => k.clone(),
        None => select(&subset(matrix, &train_idx)?, pipeline.selection, pipeline.threshold)?.kept_columns,
    };
    let cols = column_positions(matrix, &kept)?;
    let project = |i: usize| -> Vec<f64> { cols.iter().map(|&j| matrix.values[i][j]).collect() };
    let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| project(i)).collect();
    let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();

    let rb_cfg = RebalanceConfig {
        method: pipeline.rebalance,
        smote_k: pipeline.smote_k,
        seed: seed::derive(trial_seed, &[fold as u64, 1]),
    };
    let balanced = rebalance(&train_rows, &train_labels, Partition::Train, &rb_cfg)?;
    for o in &balanced.origin {
        let sources = match *o {
            Origin::Original(i) => vec![i],
            Origin::Synthetic { base, neighbour } => vec![base, neighbour],
        };
        if sources.iter().any(|&l| test_set.contains(&train_idx[l])) {
            return Err(Error::Invariant(format!("evaluation row leaked into fold {fold} training data")));
        }
    }

    let model = train(
        pipeline.classifier,
        &kept,
        &balanced.rows,
        &balanced.labels,
        &pipeline.hyper,
        seed::derive(trial_seed, &[fold as u64, 2]),
    )?;
    let predicted: Vec<bool> = test.iter().map(|&i| model.predict(&kept, &project(i)).map(|p| p.label)).collect::<Result<_>>()?;
    let actual: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
    Ok((
        FoldResult {
            fold,
            confusion: ConfusionMatrix::from_predictions(&predicted, &actual),
            selected_columns: kept.len(),
            training_rows: balanced.rows.len(),
        },
        predicted,
    ))
}

/// Repeated stratified k-fold cross-validation of one pipeline. Trial `t`
/// draws fresh folds from `seed ^ t`.
pub fn run_cv(dataset: &str, matrix: &FeatureMatrix, pipeline: &PipelineConfig, cv: &CvConfig) -> Result<CvRun> {
    if cv.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let labels = matrix.labels();
    let dataset_selection = match pipeline.scope {
        SelectionScope::Dataset => Some(select(matrix, pipeline.selection, pipeline.threshold)?.kept_columns),
        SelectionScope::Fold => None,
    };
    let plans: Vec<(usize, u64, Vec<Vec<usize>>)> = (0..cv.trials)
        .map(|t| {
            let trial_seed = cv.seed ^ t as u64;
            stratified_folds(&labels, cv.folds, seed::derive(trial_seed, &[0xf01d])).map(|f| (t, trial_seed, f))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64, usize, &Vec<usize>)> = plans
        .iter()
        .flat_map(|(t, s, folds)| folds.iter().enumerate().map(move |(k, f)| (*t, *s, k, f)))
        .collect();
    let fold_results: Vec<FoldResult> = jobs
        .par_iter()
        .map(|&(_, s, k, test)| run_fold(matrix, &labels, test, k, s, pipeline, dataset_selection.as_ref()).map(|r| r.0))
        .collect::<Result<_>>()?;

    let mut trials = Vec::with_capacity(cv.trials);
    for (t, chunk) in fold_results.chunks(cv.folds).enumerate() {
        let mut cm = ConfusionMatrix::default();
        for f in chunk {
            cm.add(&f.confusion);
        }
        if cm.total() != labels.len() {
            return Err(Error::Invariant(format!(
                "trial {t} evaluated {} links of {}",
                cm.total(),
                labels.len()
            )));
        }
        trials.push(TrialResult {
            trial: t,
            confusion: cm,
            predicted_positive: cm.predicted_positive(),
            prf: cm.prf(),
            folds: chunk.to_vec(),
        });
    }
    let n = trials.len() as f64;
    let precision: Vec<f64> = trials.iter().map(|t| t.prf.precision).collect();
    let recall: Vec<f64> = trials.iter().map(|t| t.prf.recall).collect();
    let fscore: Vec<f64> = trials.iter().map(|t| t.prf.fscore).collect();
    Ok(CvRun {
        dataset: dataset.to_owned(),
        label: pipeline.label(),
        pipeline: *pipeline,
        cv: *cv,
        mean: Prf {
            precision: precision.iter().sum::<f64>() / n,
            recall: recall.iter().sum::<f64>() / n,
            fscore: fscore.iter().sum::<f64>() / n,
        },
        precision,
        recall,
        fscore,
        mean_predicted_positive: trials.iter().map(|t| t.predicted_positive as f64).sum::<f64>() / n,
        trials,
    })
}
