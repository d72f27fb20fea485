use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use super::*;

fn schema(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

fn blobs(seed_value: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed_value);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..40 {
        let c = if i % 2 == 0 { 0.0 } else { 5.0 };
        rows.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng), noise.sample(&mut rng)]);
        labels.push(i % 2 == 1);
    }
    (rows, labels)
}

fn accuracy(m: &TrainedModel, rows: &[Vec<f64>], labels: &[bool]) -> f64 {
    let hits = rows
        .iter()
        .zip(labels)
        .filter(|(r, &l)| Prediction::from_p(m.p_valid(r)).label == l)
        .count();
    hits as f64 / rows.len() as f64
}

#[test]
fn separable_blobs_fit_perfectly() {
    let (rows, labels) = blobs(1);
    for a in Algorithm::ALL {
        let m = train(a, &schema(3), &rows, &labels, &Hyperparams::default(), 7).unwrap();
        assert_eq!(accuracy(&m, &rows, &labels), 1.0, "{a}");
        for r in &rows {
            let p = m.p_valid(r);
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

fn xor() -> (Vec<Vec<f64>>, Vec<bool>) {
    (
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        vec![false, true, true, false],
    )
}

#[test]
fn xor_is_not_linearly_separable() {
    let (rows, labels) = xor();
    // brute force over a grid of lines: none classifies all four points
    let grid: Vec<f64> = (-20..=20).map(|i| f64::from(i) / 4.0).collect();
    let mut best = 0;
    for &w1 in &grid {
        for &w2 in &grid {
            for &b in &grid {
                let hits = rows
                    .iter()
                    .zip(&labels)
                    .filter(|(r, &l)| (w1 * r[0] + w2 * r[1] + b > 0.0) == l)
                    .count();
                best = best.max(hits);
            }
        }
    }
    assert_eq!(best, 3);
    let m = train(Algorithm::Logistic, &schema(2), &rows, &labels, &Hyperparams::default(), 0).unwrap();
    assert!(accuracy(&m, &rows, &labels) <= 0.75);
    let rf = train(Algorithm::RandomForest, &schema(2), &rows, &labels, &Hyperparams::default(), 0).unwrap();
    assert_eq!(accuracy(&rf, &rows, &labels), 1.0);
}

#[test]
fn forest_is_deterministic_per_seed() {
    let (rows, labels) = blobs(2);
    let h = Hyperparams::default();
    let a = train(Algorithm::RandomForest, &schema(3), &rows, &labels, &h, 11).unwrap();
    let b = train(Algorithm::RandomForest, &schema(3), &rows, &labels, &h, 11).unwrap();
    assert_eq!(a, b);
    let probe = [vec![2.5, 2.5, 0.0], vec![1.0, 4.0, -1.0], vec![4.0, 1.0, 1.0]];
    for x in &probe {
        assert_eq!(a.p_valid(x), b.p_valid(x));
    }
}

fn constant_knn(k: usize, positives: usize) -> TrainedModel {
    let rows = vec![vec![0.0]; k];
    let labels = (0..k).map(|i| i < positives).collect();
    TrainedModel {
        format_version: FORMAT_VERSION,
        algorithm: Algorithm::Knn5,
        schema: schema(1),
        seed: 0,
        params: Params::Knn(Knn { k, rows, labels }),
    }
}

#[test]
fn knn_all_valid_neighbours() {
    let m = constant_knn(5, 5);
    let p = m.predict(&schema(1), &[0.3]).unwrap();
    assert_eq!((p.label, p.p_valid), (true, 1.0));
}

#[test]
fn vote_is_member_mean() {
    let members = vec![
        constant_knn(10, 9),
        constant_knn(10, 9),
        constant_knn(10, 9),
        constant_knn(10, 2),
        constant_knn(10, 2),
    ];
    let vote = TrainedModel {
        format_version: FORMAT_VERSION,
        algorithm: Algorithm::Vote,
        schema: schema(1),
        seed: 0,
        params: Params::Vote { members },
    };
    let p = vote.predict(&schema(1), &[0.0]).unwrap();
    assert!((p.p_valid - 0.62).abs() < 1e-12);
    assert!(p.label);

    let (rows, labels) = blobs(3);
    let v = train(Algorithm::Vote, &schema(3), &rows, &labels, &Hyperparams::default(), 5).unwrap();
    let Params::Vote { members } = &v.params else { unreachable!() };
    for x in &rows {
        let mean = members.iter().map(|m| m.p_valid(x)).sum::<f64>() / 5.0;
        assert!((v.p_valid(x) - mean).abs() < 1e-12);
    }
}

#[test]
fn zero_weight_logistic_is_half() {
    let m = Logistic {
        center: vec![0.0; 2],
        scale: vec![1.0; 2],
        weights: vec![0.0; 2],
        bias: 0.0,
        iterations: 0,
    };
    assert_eq!(m.predict(&[3.0, -8.0]), 0.5);
}

/// Two points one unit apart with gamma 1: the dual optimum is
/// `alpha = 1/(1 - e^-1)` when C allows it, putting both on the margin.
#[test]
fn svm_two_point_margin() {
    let rows = vec![vec![0.0], vec![1.0]];
    let labels = vec![false, true];
    let params = SvmParams {
        c: 10.0,
        gamma: Some(1.0),
        ..SvmParams::default()
    };
    let m = Svm::fit(&rows, &labels, &params).unwrap();
    assert!((m.decision(&[1.0]) - 1.0).abs() < 1e-3);
    assert!((m.decision(&[0.0]) + 1.0).abs() < 1e-3);
    let alpha = 1.0 / (1.0 - (-1.0f64).exp());
    assert!((m.coef[1] - alpha).abs() < 1e-3);

    // with C = 1 the multipliers clip at the bound
    let clipped = Svm::fit(&rows, &labels, &SvmParams { c: 1.0, ..params }).unwrap();
    let k = (-1.0f64).exp();
    assert!((clipped.decision(&[1.0]) - (1.0 - k)).abs() < 1e-9);
}

#[test]
fn round_trip_preserves_predictions() {
    let (rows, labels) = blobs(4);
    for a in Algorithm::ALL {
        let m = train(a, &schema(3), &rows, &labels, &Hyperparams::default(), 3).unwrap();
        let back = TrainedModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m, "{a}");
        for x in &rows {
            assert_eq!(back.p_valid(x).to_bits(), m.p_valid(x).to_bits());
        }
    }
    let m = train(Algorithm::Logistic, &schema(3), &rows, &labels, &Hyperparams::default(), 3).unwrap();
    let back = TrainedModel::from_bytes(&m.to_bytes()).unwrap();
    let (Params::Logistic(a), Params::Logistic(b)) = (&m.params, &back.params) else { unreachable!() };
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn corrupt_or_foreign_payloads_fail() {
    let (rows, labels) = blobs(5);
    let m = train(Algorithm::NaiveBayes, &schema(3), &rows, &labels, &Hyperparams::default(), 3).unwrap();
    let bytes = m.to_bytes();
    assert!(matches!(TrainedModel::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::Decode(_))));
    let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    v["format_version"] = serde_json::json!(99);
    assert!(matches!(
        TrainedModel::from_bytes(&serde_json::to_vec(&v).unwrap()),
        Err(Error::Decode(_))
    ));
}

#[test]
fn schema_mismatch_is_rejected() {
    let (rows, labels) = blobs(6);
    let m = train(Algorithm::Knn5, &schema(3), &rows, &labels, &Hyperparams::default(), 0).unwrap();
    let other: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
    assert!(m.predict(&other, &[0.0, 0.0, 0.0]).is_err());
    assert!(m.predict(&schema(3), &[0.0, 0.0]).is_err());
}

#[test]
fn single_class_training() {
    let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
    let labels = vec![false; 3];
    let h = Hyperparams::default();
    assert!(train(Algorithm::Logistic, &schema(1), &rows, &labels, &h, 0).is_err());
    assert!(train(Algorithm::Svm, &schema(1), &rows, &labels, &h, 0).is_err());
    for a in [Algorithm::Knn5, Algorithm::NaiveBayes, Algorithm::RandomForest] {
        let m = train(a, &schema(1), &rows, &labels, &h, 0).unwrap();
        assert_eq!(m.p_valid(&[1.5]), 0.0, "{a}");
    }
}

#[test]
fn knn_and_nb_ignore_row_order() {
    let (rows, labels) = blobs(7);
    let mut perm: Vec<usize> = (0..rows.len()).collect();
    perm.reverse();
    perm.swap(0, 7);
    let prow: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
    let plab: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
    let probe = [vec![2.4, 2.6, 0.1], vec![0.5, 4.5, 0.0], vec![3.0, 2.0, -0.3]];
    for a in [Algorithm::Knn5, Algorithm::NaiveBayes] {
        let m1 = train(a, &schema(3), &rows, &labels, &Hyperparams::default(), 0).unwrap();
        let m2 = train(a, &schema(3), &prow, &plab, &Hyperparams::default(), 0).unwrap();
        for x in &probe {
            assert!((m1.p_valid(x) - m2.p_valid(x)).abs() < 1e-12, "{a}");
        }
    }
}

#[test]
fn constant_zero_column_changes_nothing() {
    let (rows, labels) = blobs(8);
    let padded: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.push(0.0);
            r
        })
        .collect();
    let probe = [vec![2.4, 2.6, 0.1], vec![0.5, 4.5, 0.0], vec![3.0, 2.0, -0.3]];
    for a in [Algorithm::NaiveBayes, Algorithm::Logistic] {
        let m1 = train(a, &schema(3), &rows, &labels, &Hyperparams::default(), 0).unwrap();
        let m2 = train(a, &schema(4), &padded, &labels, &Hyperparams::default(), 0).unwrap();
        for x in &probe {
            let mut xp = x.clone();
            xp.push(0.0);
            assert!((m1.p_valid(x) - m2.p_valid(&xp)).abs() < 1e-9, "{a}");
        }
    }
}

#[test]
fn lbfgs_minimizes_a_quadratic() {
    // f(x) = (x0 - 3)^2 + 10 (x1 + 1)^2
    let f = |x: &[f64]| {
        (
            (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2),
            vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)],
        )
    };
    let (x, _) = lbfgs(f, vec![0.0, 0.0], 1e-10, 200);
    assert!((x[0] - 3.0).abs() < 1e-8 && (x[1] + 1.0).abs() < 1e-8);
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
    }
    assert!("mlp".parse::<Algorithm>().is_err());
}
