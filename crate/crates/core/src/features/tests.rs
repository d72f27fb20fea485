use std::collections::{BTreeMap, HashSet};

use super::*;
use crate::corpus::Language;
use crate::ir::{small_config, test_artifacts};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn small_features() -> FeatureConfig {
    FeatureConfig {
        models: small_config(),
        depth: 3,
        perturb_repeats: 3,
        ..FeatureConfig::default()
    }
}

fn toy_dataset() -> TraceDataset {
    let sources = test_artifacts(&["login user password", "report export pdf", "user profile edit"], Side::Source);
    let targets = test_artifacts(
        &["login password check user", "pdf export writer", "profile edit form user", "cache clear"],
        Side::Target,
    );
    TraceDataset::new(
        "toy",
        Language::English,
        sources,
        targets,
        [("d0", "d0"), ("d1", "d1"), ("d2", "d2")].map(|(a, b)| (a.to_owned(), b.to_owned())),
    )
    .unwrap()
}

#[test]
fn family_counts_and_unique_names() {
    let all = feature_names(true);
    assert_eq!(all.len(), 131);
    assert_eq!(all.iter().collect::<HashSet<_>>().len(), 131);
    assert_eq!(feature_names(false).len(), 61);
    assert_eq!(all[0], "ir.vsm.fwd");
    assert_eq!(all[1], "ir.vsm.rev");
    assert_eq!(all[14], "qq.pre.idf_avg.fwd");
    assert_eq!(all[56], "qq.post.subquery_overlap.vsm.fwd");
    assert_eq!(all[130], "doc.overlap");
}

#[test]
fn normalized_rank_endpoints() {
    assert_eq!(normalized_rank(1, 1), 1.0);
    assert_eq!(normalized_rank(1, 5), 1.0);
    assert_eq!(normalized_rank(5, 5), 0.0);
    assert!((normalized_rank(2, 5) - 0.75).abs() < 1e-15);
}

#[test]
fn doc_stats_by_hand() {
    let s = Artifact::from_tokens("s", Side::Source, toks("a b b c"));
    let t = Artifact::from_tokens("t", Side::Target, toks("b c d d d"));
    // union {a,b,c,d}, intersection {b,c}
    assert_eq!(doc_stats(&s, &t), [3.0, 3.0, 4.0, 5.0, 0.5]);
    let e = Artifact::from_tokens("e", Side::Target, vec![]);
    let e2 = Artifact::from_tokens("e2", Side::Source, vec![]);
    assert_eq!(doc_stats(&e2, &e)[4], 0.0);
}

/// Independent recomputation of a few pre-retrieval metrics straight from
/// the raw token lists.
#[test]
fn pre_retrieval_matches_brute_force() {
    let docs = ["apple banana apple", "banana cherry", "cherry cherry date", "apple date fig"];
    let arts = test_artifacts(&docs, Side::Target);
    let idx = SearchIndex::build(&arts, Side::Target, &small_config()).unwrap();
    let sims = DocSimilarity::build(&idx);
    let stats = TermStats::build(&idx, &sims);
    let q = idx.prepare(&toks("apple cherry cherry zzz"), "q");
    let got = pre::pre_retrieval_qq(&q.bag, &idx, &stats);

    let lists: Vec<Vec<&str>> = docs.iter().map(|d| d.split_whitespace().collect()).collect();
    let n = lists.len() as f64;
    let total: usize = lists.iter().map(Vec::len).sum();
    let df = |t: &str| lists.iter().filter(|d| d.contains(&t)).count() as f64;
    let cf = |t: &str| lists.iter().flatten().filter(|w| **w == t).count() as f64;
    let terms = ["apple", "cherry"];
    let idfs: Vec<f64> = terms.iter().map(|t| (n / df(t)).ln()).collect();
    let ictfs: Vec<f64> = terms.iter().map(|t| (total as f64 / cf(t)).ln()).collect();
    let at = |name: &str| got[pre::NAMES.iter().position(|n| *n == name).unwrap()];

    assert!((at("idf_avg") - (idfs[0] + idfs[1]) / 2.0).abs() < 1e-12);
    assert!((at("idf_max") - idfs[0].max(idfs[1])).abs() < 1e-12);
    assert!((at("idf_dev") - (idfs[0] - idfs[1]).abs() / 2.0).abs() < 1e-12);
    assert!((at("ictf_avg") - (ictfs[0] + ictfs[1]) / 2.0).abs() < 1e-12);
    // apple in d0,d3; cherry in d1,d2 -> all four docs match
    assert!(at("qs").abs() < 1e-12);
    // apple and cherry never co-occur
    assert_eq!(at("pmi_avg"), 0.0);
    assert_eq!(at("ql"), 4.0);

    // simplified clarity over the in-vocabulary query terms: apple 1/3, cherry 2/3
    let scs = (1.0 / 3.0) * ((1.0 / 3.0) / (cf("apple") / total as f64)).log2()
        + (2.0 / 3.0) * ((2.0 / 3.0) / (cf("cherry") / total as f64)).log2();
    assert!((at("scs") - scs).abs() < 1e-12);

    // entropy of apple over its postings: tf 2 and 1 of cf 3
    let ent_apple = -(2.0 / 3.0 * (2.0f64 / 3.0).ln() + 1.0 / 3.0 * (1.0f64 / 3.0).ln());
    let ent_cherry = -(1.0 / 3.0 * (1.0f64 / 3.0).ln() + 2.0 / 3.0 * (2.0f64 / 3.0).ln());
    assert!((at("entropy_avg") - (ent_apple + ent_cherry) / 2.0).abs() < 1e-12);
}

#[test]
fn query_without_indexed_terms_is_all_zero() {
    let arts = test_artifacts(&["a b", "c d"], Side::Target);
    let idx = SearchIndex::build(&arts, Side::Target, &small_config()).unwrap();
    let sims = DocSimilarity::build(&idx);
    let stats = TermStats::build(&idx, &sims);
    let q = idx.prepare(&toks("x y"), "q");
    assert_eq!(pre::pre_retrieval_qq(&q.bag, &idx, &stats), [0.0; 21]);
}

#[test]
fn pmi_by_hand() {
    let docs = ["a b", "a b", "a c", "d"];
    let arts = test_artifacts(&docs, Side::Target);
    let idx = SearchIndex::build(&arts, Side::Target, &small_config()).unwrap();
    let sims = DocSimilarity::build(&idx);
    let stats = TermStats::build(&idx, &sims);
    let q = idx.prepare(&toks("a b"), "q");
    let got = pre::pre_retrieval_qq(&q.bag, &idx, &stats);
    let p = |name: &str| got[pre::NAMES.iter().position(|n| *n == name).unwrap()];
    // P(a,b)=2/4, P(a)=3/4, P(b)=2/4
    let pmi = (0.5f64 / (0.75 * 0.5)).ln();
    assert!((p("pmi_avg") - pmi).abs() < 1e-12);
    assert!((p("pmi_max") - pmi).abs() < 1e-12);
    // 3 of 4 docs contain a or b
    assert!((p("qs") + (0.75f64).ln()).abs() < 1e-12);
}

/// Subquery overlap recomputed by re-tokenising each leave-one-out query.
#[test]
fn subquery_overlap_matches_enumeration() {
    let docs = ["alpha beta", "alpha gamma", "beta delta", "gamma delta", "alpha beta alpha"];
    let arts = test_artifacts(&docs, Side::Target);
    let idx = SearchIndex::build(&arts, Side::Target, &small_config()).unwrap();
    let depth = 2;
    for model in Model::POST_RETRIEVAL {
        let q = idx.prepare(&toks("alpha beta"), "q");
        let ranked = idx.rank(model, &q);
        let (overlap, frc) = post::subquery_metrics(&idx, model, &q, &ranked, depth);

        let full: HashSet<String> = ranked.iter().take(depth).map(|r| r.doc_id.clone()).collect();
        let mut exp_overlap = 0.0;
        let mut exp_changed = 0.0;
        for sub in ["beta", "alpha"] {
            let sq = idx.prepare(&toks(sub), "sub");
            let sr = idx.rank(model, &sq);
            exp_overlap += sr.iter().take(depth).filter(|r| full.contains(&r.doc_id)).count() as f64 / depth as f64;
            if sr[0].doc_id != ranked[0].doc_id {
                exp_changed += 1.0;
            }
        }
        assert!((overlap - exp_overlap / 2.0).abs() < 1e-12, "{model}");
        assert!((frc - exp_changed / 2.0).abs() < 1e-12, "{model}");
    }
}

#[test]
fn single_term_query_has_full_overlap() {
    let arts = test_artifacts(&["a b", "b c", "c d"], Side::Target);
    let idx = SearchIndex::build(&arts, Side::Target, &small_config()).unwrap();
    let q = idx.prepare(&toks("a a zzz"), "q");
    let ranked = idx.rank(Model::Vsm, &q);
    assert_eq!(post::subquery_metrics(&idx, Model::Vsm, &q, &ranked, 2), (1.0, 0.0));
}

#[test]
fn perturb_removes_rounded_fraction() {
    let mut counts = BTreeMap::new();
    counts.insert(0u32, 7u32);
    counts.insert(1u32, 8u32);
    let bag = crate::ir::TermBag::from_counts(counts, 0);
    let mut rng = seed::rng(3);
    let p = post::perturb(&bag, 0.1, &mut rng);
    assert_eq!(p.length, 13);
    assert!(p.tf(0) <= 7 && p.tf(1) <= 8);
}

#[test]
fn featurize_bounds_and_rank_consistency() {
    let ds = toy_dataset();
    let cfg = small_features();
    let indexes = DatasetIndexes::build(&ds, &cfg.models).unwrap();
    let raw = featurize_raw(&ds, &indexes, &cfg).unwrap();
    assert_eq!(raw.num_rows(), 12);
    assert_eq!(raw.num_cols(), 131);

    // rank features agree with direct rankings
    let rows = row_lookup(&raw);
    for model in Model::ALL {
        for s in &ds.sources {
            for r in indexes.rank(model, s, Side::Target).unwrap() {
                let row = rows[&(s.id.clone(), r.doc_id.clone())];
                let col = raw.column_index(&format!("ir.{}.fwd", model.name())).unwrap();
                assert_eq!(raw.values[row][col], normalized_rank(r.rank, ds.targets.len()));
            }
        }
        for t in &ds.targets {
            for r in indexes.rank(model, t, Side::Source).unwrap() {
                let row = rows[&(r.doc_id.clone(), t.id.clone())];
                let col = raw.column_index(&format!("ir.{}.rev", model.name())).unwrap();
                assert_eq!(raw.values[row][col], normalized_rank(r.rank, ds.sources.len()));
            }
        }
    }

    let (m, norm) = featurize(&ds, &cfg).unwrap();
    check_layout(&m, true).unwrap();
    assert_eq!(m.labels().iter().filter(|l| **l).count(), 3);

    // a second pass with the same bounds changes nothing but constant columns
    let mut again = m.clone();
    Normalization::fit(&m).apply(&mut again);
    for (a, b) in m.values.iter().flatten().zip(again.values.iter().flatten()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(norm.columns.len(), 131);
}

#[test]
fn featurize_is_deterministic() {
    let ds = toy_dataset();
    let cfg = small_features();
    let (a, _) = featurize(&ds, &cfg).unwrap();
    let (b, _) = featurize(&ds, &cfg).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn one_by_one_dataset_ranks_are_one() {
    let ds = TraceDataset::new(
        "one",
        Language::English,
        test_artifacts(&["a b"], Side::Source),
        test_artifacts(&["b c"], Side::Target),
        [("d0".to_owned(), "d0".to_owned())],
    )
    .unwrap();
    let cfg = FeatureConfig { post_retrieval: false, ..small_features() };
    let indexes = DatasetIndexes::build(&ds, &cfg.models).unwrap();
    let raw = featurize_raw(&ds, &indexes, &cfg).unwrap();
    assert_eq!(raw.num_cols(), 61);
    assert!(raw.values[0][..IR_FEATURES].iter().all(|v| *v == 1.0));
}
