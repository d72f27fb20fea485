use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use super::stats::*;
use super::*;
use crate::corpus::CandidateLink;
use crate::features::FeatureMatrix;
use crate::ir::Model;
use crate::learn::Algorithm;
use crate::selection::SelectionMethod;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn prf_examples() {
    let p = prf(&ConfusionMatrix { tp: 2, fp: 1, tn: 0, fn_: 2 });
    assert!(close(p.precision, 2.0 / 3.0, 1e-12) && close(p.recall, 0.5, 1e-12));
    assert!(close(p.fscore, 4.0 / 7.0, 1e-12));
    let perfect = prf(&ConfusionMatrix { tp: 3, fp: 0, tn: 5, fn_: 0 });
    assert_eq!((perfect.precision, perfect.recall, perfect.fscore), (1.0, 1.0, 1.0));
    let none = prf(&ConfusionMatrix { tp: 0, fp: 0, tn: 5, fn_: 4 });
    assert_eq!((none.precision, none.recall, none.fscore), (0.0, 0.0, 0.0));
}

#[test]
fn folds_partition_and_balance() {
    let labels: Vec<bool> = (0..600).map(|i| i % 23 == 0 && i < 598).collect();
    let folds = stratified_folds(&labels, 10, 4).unwrap();
    let mut seen = vec![0; labels.len()];
    for f in &folds {
        let pos = f.iter().filter(|&&i| labels[i]).count();
        assert!(pos == 2 || pos == 3, "{pos}");
        assert!(f.len() == 60);
        for &i in f {
            seen[i] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1));

    let small: Vec<bool> = (0..10).map(|i| i < 5).collect();
    for f in stratified_folds(&small, 5, 0).unwrap() {
        assert_eq!(f.len(), 2);
        assert_eq!(f.iter().filter(|&&i| small[i]).count(), 1);
    }
    assert!(stratified_folds(&small[3..], 5, 0).is_err());
}

/// Exact p from scratch: every split of the pooled values, U by pair
/// counting with half credit for ties.
fn mwu_bruteforce(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let u_of = |x: &[f64], y: &[f64]| -> f64 {
        let mut u = 0.0;
        for xi in x {
            for yj in y {
                if xi > yj {
                    u += 1.0;
                } else if xi == yj {
                    u += 0.5;
                }
            }
        }
        u
    };
    let mu = (a.len() * b.len()) as f64 / 2.0;
    let obs = (u_of(a, b) - mu).abs();
    let (mut hit, mut total) = (0, 0);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let x: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
        let y: Vec<f64> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
        total += 1;
        if (u_of(&x, &y) - mu).abs() >= obs - 1e-9 {
            hit += 1;
        }
    }
    f64::from(hit) / f64::from(total)
}

#[test]
fn mann_whitney_exact_cases() {
    let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
    assert_eq!(r.u, 0.0);
    assert!(r.exact && close(r.p, 0.1, 1e-12));
    assert!(mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().p >= 0.99);

    let cases: [(&[f64], &[f64]); 3] = [
        (&[1.0, 2.0, 2.0, 3.0, 5.0], &[2.0, 3.0, 4.0, 4.0, 6.0, 7.0]),
        (&[0.3, 0.1, 0.9, 0.5], &[0.2, 0.8, 0.7, 0.6, 0.4, 0.05, 0.95]),
        (&[1.0, 1.0, 1.0], &[1.0, 2.0]),
    ];
    for (a, b) in cases {
        let ab = mann_whitney_u(a, b).unwrap();
        let ba = mann_whitney_u(b, a).unwrap();
        assert!(close(ab.p, mwu_bruteforce(a, b), 1e-12));
        assert!(close(ab.p, ba.p, 1e-12));
    }
}

#[test]
fn mann_whitney_normal_approximation() {
    // scipy.stats.mannwhitneyu(range(12), [x + 5.5 for x in range(12)], method="asymptotic")
    let a: Vec<f64> = (0..12).map(f64::from).collect();
    let b: Vec<f64> = a.iter().map(|x| x + 5.5).collect();
    let r = mann_whitney_u(&a, &b).unwrap();
    assert!(!r.exact);
    assert_eq!(r.u, 21.0);
    assert!(close(r.p, 0.003549838634913565, 1e-9));
}

#[test]
fn cliffs_delta_by_enumeration() {
    assert_eq!(cliffs_delta(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), -0.5);
    assert_eq!(cliffs_delta(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
    assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!(cliffs_delta(&[], &[1.0]).is_err());
    assert_eq!(delta_magnitude(0.1), Magnitude::Negligible);
    assert_eq!(delta_magnitude(-0.2), Magnitude::Small);
    assert_eq!(delta_magnitude(0.4), Magnitude::Medium);
    assert_eq!(delta_magnitude(0.474), Magnitude::Large);
}

/// Reference values from scipy.stats.shapiro.
#[test]
fn shapiro_wilk_matches_reference() {
    let cases: [(&[f64], f64, f64); 5] = [
        (&[0.61, 0.58, 0.66, 0.71, 0.59, 0.62, 0.64, 0.7, 0.55, 0.63], 0.9707199733373493, 0.8974392335238082),
        (
            &[1.2, 3.4, 2.2, 5.1, 4.4, 3.3, 2.9, 4.0, 3.8, 1.1, 2.5, 3.0, 6.2, 2.7, 3.9],
            0.9758767414833779,
            0.9335568836292232,
        ),
        (&[1.0, 2.0, 4.0], 0.9642857142857142, 0.6368868450289689),
        (&[0.1, 0.5, 0.2, 0.9, 0.3], 0.9124006561391406, 0.48215053005116),
        (
            &[
                0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 100.1, 100.11, 100.12, 100.13, 100.14, 100.15, 100.16,
                100.17, 100.18, 100.19,
            ],
            0.6416462219613703,
            8.208957280444817e-06,
        ),
    ];
    for (x, w, p) in cases {
        let r = shapiro_wilk(x).unwrap();
        assert!(close(r.w, w, 1e-6), "W {} vs {w}", r.w);
        assert!(close(r.p, p, 1e-6 + 1e-4 * p), "p {} vs {p}", r.p);
    }
}

#[test]
fn shapiro_wilk_fixed_seed_samples() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(10.0, 2.0).unwrap();
    let draws: Vec<f64> = (0..50).map(|_| normal.sample(&mut rng)).collect();
    assert!(shapiro_wilk(&draws).unwrap().p > 0.01);

    let jitter = Normal::new(0.0, 0.5).unwrap();
    let bimodal: Vec<f64> = (0..50)
        .map(|i| if i < 25 { 0.0 } else { 100.0 } + jitter.sample(&mut rng))
        .collect();
    assert!(shapiro_wilk(&bimodal).unwrap().p < 0.01);

    assert!(shapiro_wilk(&[0.4; 10]).unwrap().degenerate);
    assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
}

fn t_pdf(x: f64, df: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt()
        * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
}

#[test]
fn t_test_against_numerical_integration() {
    assert_eq!(one_sample_t(&[1.0, 2.0, 3.0], 2.0).unwrap(), TTest { t: 0.0, p: 1.0 });

    let r = one_sample_t(&[1.0, 2.0, 3.0, 4.0], 0.0).unwrap();
    // Simpson's rule for the central mass on [0, |t|]
    let steps = 20_000;
    let h = r.t.abs() / f64::from(steps);
    let mut acc = t_pdf(0.0, 3.0) + t_pdf(r.t.abs(), 3.0);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * t_pdf(f64::from(i) * h, 3.0);
    }
    let central = acc * h / 3.0;
    assert!(close(r.p, 1.0 - 2.0 * central, 1e-9), "{} vs {}", r.p, 1.0 - 2.0 * central);

    assert!(one_sample_t(&[100.0, 100.0 + 1e-9, 100.0 - 1e-9], 0.0).unwrap().p < 1e-10);
    assert_eq!(one_sample_t(&[2.0, 2.0], 1.0).unwrap().p, 0.0);
    assert!(one_sample_t(&[2.0], 1.0).is_err());
}

/// Exact signed-rank p by trying every sign pattern.
fn signed_rank_bruteforce(sample: &[f64], value: f64) -> f64 {
    let d: Vec<f64> = sample.iter().map(|x| x - value).filter(|v| *v != 0.0).collect();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, _) = midranks(&abs);
    let n = d.len();
    let obs: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let (mut le, mut ge) = (0u32, 0u32);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= obs + 1e-9 {
            le += 1;
        }
        if w >= obs - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * f64::from(le.min(ge)) / f64::from(1u32 << n)).min(1.0)
}

#[test]
fn signed_rank_exact() {
    // scipy.stats.wilcoxon(x - 0.65) on the same values
    let x = [0.7, 0.72, 0.68, 0.75, 0.71, 0.69, 0.8, 0.66];
    assert!(close(wilcoxon_signed_rank(&x, 0.65).unwrap().p, 0.0078125, 1e-12));
    let tied = [1.0, 2.0, 2.0, 3.0, -1.0, 4.0, 4.0, -2.0, 0.0, 5.0];
    for v in [0.0, 1.5, 2.0] {
        let p = wilcoxon_signed_rank(&tied, v).unwrap().p;
        assert!(close(p, signed_rank_bruteforce(&tied, v), 1e-12));
    }
    assert_eq!(wilcoxon_signed_rank(&[3.0, 3.0], 3.0).unwrap().p, 1.0);
}

#[test]
fn holm_cases() {
    assert_eq!(holm_bonferroni(&[0.01, 0.04]).unwrap(), vec![0.02, 0.04]);
    assert_eq!(holm_bonferroni(&[0.3]).unwrap(), vec![0.3]);
    assert_eq!(holm_bonferroni(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0; 3]);
    let raw = [0.04, 0.001, 0.03, 0.5, 0.02];
    let adj = holm_bonferroni(&raw).unwrap();
    for i in 0..raw.len() {
        assert!(adj[i] >= raw[i]);
        for j in 0..raw.len() {
            if raw[i] < raw[j] {
                assert!(adj[i] <= adj[j]);
            }
        }
    }
    assert!(holm_bonferroni(&[1.2]).is_err());
}

#[test]
fn effect_size_cases() {
    assert!(close(effect_size_vs_point(&[0.7, 0.75, 0.8], 0.65).unwrap(), 2.0, 1e-12));
    assert_eq!(effect_size_vs_point(&[1.0, 2.0, 3.0], 2.0).unwrap(), 0.0);
    let a = effect_size_vs_point(&[1.0, 4.0, 6.0], 2.0).unwrap();
    let b = effect_size_vs_point(&[10.0, 40.0, 60.0], 20.0).unwrap();
    assert!(close(a, b, 1e-12));
    assert_eq!(effect_size_vs_point(&[1.0, 1.0], 0.0).unwrap(), f64::INFINITY);
}

fn toy_ranking(model: Model, scores: &[f64], valid: &[usize]) -> PooledRanking {
    let ids: Vec<String> = (0..scores.len()).map(|i| format!("t{i:02}")).collect();
    let entries = scores.iter().zip(&ids).map(|(s, id)| (*s, "s", id.as_str())).collect();
    PooledRanking::from_scored(model, entries, |_, t| valid.iter().any(|&v| ids[v] == t))
}

#[test]
fn baseline_cut_points() {
    let r = toy_ranking(Model::Vsm, &[0.9, 0.8, 0.7, 0.6, 0.5, 0.4], &[0, 1]);
    assert_eq!(ir_baseline_at_k(&r, 2).prf, Prf { precision: 1.0, recall: 1.0, fscore: 1.0 });
    let all = ir_baseline_at_k(&r, 100).prf;
    assert_eq!(all.recall, 1.0);
    assert!(close(all.precision, 2.0 / 6.0, 1e-12));
    let mut last = 0.0;
    for k in 1..=6 {
        let cm = r.confusion_at(k);
        let s = ir_baseline_at_k(&r, k).prf;
        assert!(s.recall >= last);
        last = s.recall;
        assert!(close(s.precision * k as f64, cm.tp as f64, 1e-12));
        assert_eq!(cm.total(), 6);
    }
}

#[test]
fn best_ir_matches_exhaustive_and_breaks_ties_by_order() {
    let scores = [
        [0.1, 0.9, 0.3, 0.4, 0.2],
        [0.9, 0.8, 0.1, 0.2, 0.3],
        [0.5, 0.5, 0.5, 0.5, 0.5],
    ];
    let rankings: Vec<PooledRanking> = Model::ALL
        .iter()
        .enumerate()
        .map(|(i, &m)| toy_ranking(m, &scores[i % 3], &[0, 1]))
        .collect();
    for k in 1..=5 {
        let best = best_ir(&rankings, k).unwrap();
        let fs: Vec<f64> = rankings.iter().map(|r| ir_baseline_at_k(r, k).prf.fscore).collect();
        let max = fs.iter().copied().fold(f64::MIN, f64::max);
        let first = fs.iter().position(|&f| f == max).unwrap();
        assert_eq!(best.model, Model::ALL[first]);
    }
    let same: Vec<PooledRanking> = Model::ALL.iter().map(|&m| toy_ranking(m, &scores[2], &[0])).collect();
    assert_eq!(best_ir(&same, 2).unwrap().model, Model::Vsm);
}

fn matrix(values: Vec<Vec<f64>>, labels: &[bool]) -> FeatureMatrix {
    let p = values[0].len();
    let links = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| CandidateLink {
            source_id: format!("s{i:03}"),
            target_id: "t".into(),
            label: l,
        })
        .collect();
    FeatureMatrix::new((0..p).map(|j| format!("f{j}")).collect(), links, values).unwrap()
}

fn labels_100() -> Vec<bool> {
    (0..100).map(|i| i >= 90).collect()
}

#[test]
fn perfect_feature_gives_perfect_scores() {
    let labels = labels_100();
    let values = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![if l { 1.0 } else { 0.0 }, (i % 7) as f64 / 7.0])
        .collect();
    let m = matrix(values, &labels);
    let pipeline = PipelineConfig {
        classifier: Algorithm::Knn5,
        ..PipelineConfig::default()
    };
    let run = run_cv("toy", &m, &pipeline, &CvConfig { trials: 3, folds: 5, seed: 1 }).unwrap();
    assert_eq!(run.fscore, vec![1.0; 3]);
    assert_eq!(run.mean_predicted_positive, 10.0);
    assert_eq!(run.cut_point(), 10);
}

#[test]
fn all_negative_classifier_scores_zero() {
    let labels = labels_100();
    let m = matrix(vec![vec![0.5, 0.5]; 100], &labels);
    let pipeline = PipelineConfig {
        selection: SelectionMethod::None,
        rebalance: crate::balance::RebalanceMethod::None,
        classifier: Algorithm::Knn5,
        ..PipelineConfig::default()
    };
    let run = run_cv("toy", &m, &pipeline, &CvConfig { trials: 2, folds: 10, seed: 1 }).unwrap();
    for t in &run.trials {
        assert_eq!(t.predicted_positive, 0);
        assert_eq!((t.prf.precision, t.prf.recall, t.prf.fscore), (0.0, 0.0, 0.0));
    }
}

fn noisy_matrix() -> FeatureMatrix {
    let labels = labels_100();
    let values = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let a = ((i * 37) % 17) as f64 / 17.0;
            let b = ((i * 11) % 13) as f64 / 13.0;
            vec![if l { 0.6 + 0.4 * a } else { 0.7 * a }, b, 0.3]
        })
        .collect();
    matrix(values, &labels)
}

#[test]
fn cv_is_deterministic_and_consistent() {
    let m = noisy_matrix();
    for scope in [SelectionScope::Fold, SelectionScope::Dataset] {
        let pipeline = PipelineConfig {
            scope,
            hyper: crate::learn::Hyperparams {
                forest: crate::learn::ForestParams { trees: 10, features_per_split: None },
                ..Default::default()
            },
            ..PipelineConfig::default()
        };
        let cv = CvConfig { trials: 2, folds: 10, seed: 5 };
        let a = run_cv("toy", &m, &pipeline, &cv).unwrap();
        let b = run_cv("toy", &m, &pipeline, &cv).unwrap();
        let mut ra = EvalReport::new("h");
        ra.runs.push(a.clone());
        let mut rb = EvalReport::new("h");
        rb.runs.push(b);
        assert_eq!(ra.to_json(), rb.to_json());
        assert_eq!(ra.to_csv(), rb.to_csv());
        assert_eq!(EvalReport::from_json(&ra.to_json()).unwrap(), ra);
        assert_eq!(a.fscore.len(), 2);
        for t in &a.trials {
            assert_eq!(t.confusion.total(), 100);
            let p = t.prf;
            let h = if p.precision + p.recall == 0.0 {
                0.0
            } else {
                2.0 * p.precision * p.recall / (p.precision + p.recall)
            };
            assert!(close(p.fscore, h, 1e-12));
            assert!(t.folds.iter().all(|f| f.selected_columns <= 3));
        }
    }
}

#[test]
fn comparison_flags_clear_wins() {
    let m = noisy_matrix();
    let mut run = run_cv(
        "toy",
        &m,
        &PipelineConfig {
            classifier: Algorithm::NaiveBayes,
            ..PipelineConfig::default()
        },
        &CvConfig { trials: 5, folds: 5, seed: 2 },
    )
    .unwrap();
    run.fscore = vec![0.90, 0.91, 0.92, 0.93, 0.94];
    run.mean.fscore = 0.92;
    let ir = BaselineScore {
        model: Model::Vsm,
        k: 10,
        prf: Prf { precision: 0.3, recall: 0.3, fscore: 0.3 },
    };
    let c = compare(&run, &ir).unwrap();
    assert!(c.trail_wins());
    let f = c.metrics.iter().find(|x| x.metric == "fscore").unwrap();
    assert_eq!(f.test, "t");
    assert!(f.p_holm < ALPHA && f.star);
    let mut report = EvalReport::new("h");
    report.comparisons.push(c);
    assert!(report.to_markdown().contains("| toy |"));
}

#[test]
fn ranking_and_grid_layout() {
    let m = noisy_matrix();
    let cv = CvConfig { trials: 3, folds: 5, seed: 3 };
    let runs: Vec<_> = [Algorithm::Knn5, Algorithm::NaiveBayes]
        .into_iter()
        .map(|classifier| {
            run_cv("toy", &m, &PipelineConfig { classifier, ..PipelineConfig::default() }, &cv).unwrap()
        })
        .collect();
    let ranked = rank_configs(&runs).unwrap();
    assert_eq!(ranked.len(), 2);
    assert!(ranked[0].mean_fscore >= ranked[1].mean_fscore);
    let table = grid_markdown(&runs);
    assert!(table.starts_with("| rebalancing | selection | knn5 |"));
    assert!(table.contains("| smote | correlation |"));
}
