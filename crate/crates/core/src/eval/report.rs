use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::baseline::BaselineScore;
use super::cv::CvRun;
use super::stats::{self, Magnitude};
use super::Prf;
use crate::balance::RebalanceMethod;
use crate::error::{Error, Result};
use crate::learn::Algorithm;
use crate::selection::SelectionMethod;

/// Significance level for the normality check and the comparison stars.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub trail_mean: f64,
    pub ir_value: f64,
    pub normality_p: f64,
    /// `t` or `signed_rank`.
    pub test: String,
    pub p: f64,
    pub p_holm: f64,
    pub effect_size: f64,
    /// Adjusted p below [`ALPHA`] with a large effect in TRAIL's favour.
    pub star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    pub label: String,
    pub trail: Prf,
    pub best_ir: BaselineScore,
    pub metrics: Vec<MetricComparison>,
}

impl Comparison {
    pub fn trail_wins(&self) -> bool {
        self.trail.fscore > self.best_ir.prf.fscore
    }
}

/// Compares a cross-validation run with the best IR baseline: per metric,
/// Shapiro-Wilk picks a one-sample t test or a signed-rank test against the
/// baseline value; p-values are Holm-adjusted across the three metrics.
pub fn compare(run: &CvRun, best_ir: &BaselineScore) -> Result<Comparison> {
    if run.fscore.len() < 3 {
        return Err(Error::Config(format!(
            "comparison needs at least 3 trials, run has {}",
            run.fscore.len()
        )));
    }
    let series = [
        ("precision", &run.precision, best_ir.prf.precision),
        ("recall", &run.recall, best_ir.prf.recall),
        ("fscore", &run.fscore, best_ir.prf.fscore),
    ];
    let mut metrics = Vec::new();
    for (name, sample, value) in series {
        let sw = stats::shapiro_wilk(sample)?;
        let normal = !sw.degenerate && sw.p >= ALPHA;
        let (test, p) = if normal {
            ("t", stats::one_sample_t(sample, value)?.p)
        } else {
            ("signed_rank", stats::wilcoxon_signed_rank(sample, value)?.p)
        };
        metrics.push(MetricComparison {
            metric: name.to_owned(),
            trail_mean: stats::mean(sample),
            ir_value: value,
            normality_p: sw.p,
            test: test.to_owned(),
            p,
            p_holm: p,
            effect_size: stats::effect_size_vs_point(sample, value)?,
            star: false,
        });
    }
    let adjusted = stats::holm_bonferroni(&metrics.iter().map(|m| m.p).collect::<Vec<_>>())?;
    for (m, p) in metrics.iter_mut().zip(adjusted) {
        m.p_holm = p;
        m.star = p < ALPHA && m.effect_size >= stats::LARGE_EFFECT;
    }
    Ok(Comparison {
        dataset: run.dataset.clone(),
        label: run.label.clone(),
        trail: run.mean,
        best_ir: *best_ir,
        metrics,
    })
}

/// One configuration of a grid measured against the best configuration of
/// the same dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedConfig {
    pub label: String,
    pub mean_fscore: f64,
    pub p_vs_best: f64,
    pub p_holm: f64,
    pub cliffs_delta: f64,
    pub magnitude: Magnitude,
}

/// Orders runs of one dataset by mean F and tests every other run against
/// the best with Mann-Whitney U (Holm-adjusted) and Cliff's delta.
pub fn rank_configs(runs: &[CvRun]) -> Result<Vec<RankedConfig>> {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| runs[b].mean.fscore.total_cmp(&runs[a].mean.fscore).then(a.cmp(&b)));
    let Some(&best) = order.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut raw = Vec::new();
    for &i in &order {
        let (p, delta) = if i == best {
            (1.0, 0.0)
        } else {
            (
                stats::mann_whitney_u(&runs[best].fscore, &runs[i].fscore)?.p,
                stats::cliffs_delta(&runs[best].fscore, &runs[i].fscore)?,
            )
        };
        raw.push(p);
        out.push(RankedConfig {
            label: runs[i].label.clone(),
            mean_fscore: runs[i].mean.fscore,
            p_vs_best: p,
            p_holm: p,
            cliffs_delta: delta,
            magnitude: stats::delta_magnitude(delta),
        });
    }
    // the best row is not a test; adjust the others only
    let adjusted = stats::holm_bonferroni(&raw[1..])?;
    for (r, p) in out[1..].iter_mut().zip(adjusted) {
        r.p_holm = p;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub runs: Vec<CvRun>,
    pub baselines: Vec<BaselineScore>,
    pub comparisons: Vec<Comparison>,
    pub rankings: BTreeMap<String, Vec<RankedConfig>>,
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

impl EvalReport {
    pub fn new(config_hash: impl Into<String>) -> Self {
        EvalReport {
            config_hash: config_hash.into(),
            runs: Vec::new(),
            baselines: Vec::new(),
            comparisons: Vec::new(),
            rankings: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Decode(format!("report: {e}")))
    }

    /// `dataset,config,trial,precision,recall,fscore`, preceded by a
    /// `#config_hash` line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("#config_hash={}\ndataset,config,trial,precision,recall,fscore\n", self.config_hash);
        for run in &self.runs {
            for t in &run.trials {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.9},{:.9},{:.9}",
                    run.dataset, run.label, t.trial, t.prf.precision, t.prf.recall, t.prf.fscore
                );
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("<!-- config_hash={} -->\n\n", self.config_hash);
        if !self.runs.is_empty() {
            out.push_str("## Cross-validation\n\n| dataset | configuration | trials | P (%) | R (%) | F (%) | N |\n|---|---|---|---|---|---|---|\n");
            for r in &self.runs {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {:.1} |",
                    r.dataset,
                    r.label,
                    r.trials.len(),
                    pct(r.mean.precision),
                    pct(r.mean.recall),
                    pct(r.mean.fscore),
                    r.mean_predicted_positive
                );
            }
            out.push('\n');
        }
        if !self.comparisons.is_empty() {
            out.push_str("## TRAIL vs best IR\n\n| dataset | P (%) | R (%) | F (%) | best IR | K | P@K (%) | R@K (%) | F@K (%) |\n|---|---|---|---|---|---|---|---|---|\n");
            for c in &self.comparisons {
                let star = |m: &str| {
                    if c.metrics.iter().any(|x| x.metric == m && x.star) {
                        "*"
                    } else {
                        ""
                    }
                };
                let _ = writeln!(
                    out,
                    "| {} | {}{} | {}{} | {}{} | {} | {} | {} | {} | {} |",
                    c.dataset,
                    pct(c.trail.precision),
                    star("precision"),
                    pct(c.trail.recall),
                    star("recall"),
                    pct(c.trail.fscore),
                    star("fscore"),
                    c.best_ir.model,
                    c.best_ir.k,
                    pct(c.best_ir.prf.precision),
                    pct(c.best_ir.prf.recall),
                    pct(c.best_ir.prf.fscore),
                );
            }
            out.push_str("\n`*` Holm-adjusted p < 0.01 with effect size >= 0.8.\n\n");
        }
        if !self.baselines.is_empty() {
            out.push_str("## IR baselines\n\n| model | K | P@K (%) | R@K (%) | F@K (%) |\n|---|---|---|---|---|\n");
            for b in &self.baselines {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    b.model,
                    b.k,
                    pct(b.prf.precision),
                    pct(b.prf.recall),
                    pct(b.prf.fscore)
                );
            }
            out.push('\n');
        }
        for (dataset, ranks) in &self.rankings {
            let _ = write!(
                out,
                "## Configurations on {dataset}\n\n| configuration | F (%) | p vs best (Holm) | Cliff's delta |\n|---|---|---|---|\n"
            );
            for r in ranks {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.4} | {:.3} ({:?}) |",
                    r.label,
                    pct(r.mean_fscore),
                    r.p_holm,
                    r.cliffs_delta,
                    r.magnitude
                );
            }
            out.push('\n');
        }
        out
    }
}

/// Mean F (%) per rebalancer x selection row and classifier column,
/// macro-averaged over datasets; missing cells print as `-`.
pub fn grid_markdown(runs: &[CvRun]) -> String {
    let mut cells: BTreeMap<(RebalanceMethod, SelectionMethod, Algorithm), Vec<f64>> = BTreeMap::new();
    for r in runs {
        cells
            .entry((r.pipeline.rebalance, r.pipeline.selection, r.pipeline.classifier))
            .or_default()
            .push(r.mean.fscore);
    }
    let mut out = String::from("| rebalancing | selection |");
    for a in Algorithm::ALL {
        let _ = write!(out, " {a} |");
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(Algorithm::ALL.len()));
    out.push('\n');
    for rb in RebalanceMethod::ALL {
        for sel in SelectionMethod::ALL {
            if !Algorithm::ALL.iter().any(|&a| cells.contains_key(&(rb, sel, a))) {
                continue;
            }
            let _ = write!(out, "| {rb} | {sel} |");
            for a in Algorithm::ALL {
                match cells.get(&(rb, sel, a)) {
                    Some(v) => {
                        let _ = write!(out, " {} |", pct(v.iter().sum::<f64>() / v.len() as f64));
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    out
}
