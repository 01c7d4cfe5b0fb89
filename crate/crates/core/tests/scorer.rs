mod common;

use common::{brute_counts, brute_metrics, function, random_report, random_truth, report_of, truth_of};
use groundtruth::score::{boundary_ok, Metrics};
use groundtruth::{
    corpus_aggregate, match_boundaries, match_starts, BoundaryRule, Exact, MatchPolicy, ScoreError, StartRule,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const RULES: [BoundaryRule; 5] = [
    BoundaryRule::Ignore,
    BoundaryRule::StrictTrimmed,
    BoundaryRule::StrictRaw,
    BoundaryRule::PaddingTolerant,
    BoundaryRule::LegacyLenient,
];

fn policies() -> Vec<MatchPolicy> {
    let mut out = Vec::new();
    for start_rule in [StartRule::AnyEntry, StartRule::PrimaryEntryOnly] {
        for boundary_rule in RULES {
            out.push(MatchPolicy { start_rule, boundary_rule, reject_incomplete_truth: true });
        }
    }
    out
}

#[test]
fn matcher_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let truth = random_truth(&mut rng, 10);
        let report = random_report(&mut rng, &truth, 10);
        for policy in policies() {
            let got = match_boundaries::<f64>(&truth, &report, &policy).unwrap();
            assert_eq!(got.counts, brute_counts(&truth, &report, &policy, policy.boundary_rule), "{policy:?}\n{truth:?}\n{report:?}");
            let starts = match_starts::<f64>(&truth, &report, &policy).unwrap();
            assert_eq!(starts.counts, brute_counts(&truth, &report, &policy, BoundaryRule::Ignore));
            let (p, r, f1) = brute_metrics(&got.counts);
            assert!((got.metrics.precision - p).abs() <= 1e-12);
            assert!((got.metrics.recall - r).abs() <= 1e-12);
            assert!((got.metrics.f1 - f1).abs() <= 1e-12);
            let exact = match_boundaries::<Exact>(&truth, &report, &policy).unwrap();
            assert!((exact.metrics.f1.to_f64().unwrap() - f1).abs() <= 1e-12);
            assert_eq!(got.tp() + got.fn_(), truth.functions.len() as u64);
            assert_eq!(got.tp() + got.fp(), report.predicted_functions.len() as u64);
        }
    }
}

#[test]
fn listing_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let truth = random_truth(&mut rng, 10);
        let mut report = random_report(&mut rng, &truth, 10);
        let a = match_boundaries::<f64>(&truth, &report, &MatchPolicy::default()).unwrap();
        report.predicted_functions.reverse();
        let b = match_boundaries::<f64>(&truth, &report, &MatchPolicy::default()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn size_four_of_thirteen_passes_only_legacy() {
    let truth = truth_of(vec![function("add", 0x1000, &[], 0x100d, 0x1010)]);
    let report = report_of(vec![(0x1000, 4)]);
    let tp = |rule| {
        let policy = MatchPolicy { boundary_rule: rule, ..MatchPolicy::default() };
        match_boundaries::<f64>(&truth, &report, &policy).unwrap().tp()
    };
    assert_eq!(tp(BoundaryRule::LegacyLenient), 1);
    assert_eq!(tp(BoundaryRule::StrictTrimmed), 0);
    assert_eq!(tp(BoundaryRule::PaddingTolerant), 0);
    assert_eq!(tp(BoundaryRule::StrictRaw), 0);
    let legacy = match_boundaries::<f64>(&truth, &report, &MatchPolicy::legacy()).unwrap();
    assert_eq!(legacy.warnings, ["LEGACY_LENIENT_POLICY"]);
    assert!(match_boundaries::<f64>(&truth, &report, &MatchPolicy::strict()).unwrap().warnings.is_empty());
}

#[test]
fn refusals() {
    let mut truth = truth_of(vec![function("f", 0x1000, &[], 0x1004, 0x1004)]);
    let mut report = report_of(vec![(0x1000, 4)]);
    truth.complete = false;
    assert_eq!(match_starts::<f64>(&truth, &report, &MatchPolicy::default()), Err(ScoreError::IncompleteTruthRejected));
    let lenient = MatchPolicy { reject_incomplete_truth: false, ..MatchPolicy::default() };
    assert_eq!(match_starts::<f64>(&truth, &report, &lenient).unwrap().tp(), 1);
    report.predicted_functions[0].size = None;
    assert_eq!(match_boundaries::<f64>(&truth, &report, &lenient), Err(ScoreError::MissingSizes(1)));
    assert_eq!(match_starts::<f64>(&truth, &report, &lenient).unwrap().tp(), 1);
    report.binary_digest.0[0] ^= 1;
    assert!(matches!(match_starts::<f64>(&truth, &report, &lenient), Err(ScoreError::DigestMismatch { .. })));
    assert_eq!(corpus_aggregate::<f64>(&[], &[]), Err(ScoreError::EmptyCorpus));
}

#[test]
fn empty_truth_and_report_is_perfect() {
    let r = match_boundaries::<f64>(&truth_of(vec![]), &report_of(vec![]), &MatchPolicy::default()).unwrap();
    assert_eq!((r.metrics.precision, r.metrics.recall, r.metrics.f1), (1.0, 1.0, 1.0));
    assert_eq!(r.notes.len(), 1);
}

#[test]
fn corpus_fractions_use_strict_below() {
    let truth = truth_of((0..25).map(|i| function(&format!("f{i}"), 0x1000 + i * 16, &[], 0x1000 + i * 16 + 8, 0x1000 + i * 16 + 16)).collect());
    let perfect: Vec<(u64, u64)> = truth.functions.iter().map(|f| (f.start, 8)).collect();
    // One miss out of 25 gives f1 = 48/49, above 0.96; one miss out of 12 is below.
    let miss = |n: usize| report_of(perfect[..n].iter().copied().skip(1).collect());
    let sub = |n: usize| truth_of(truth.functions[..n].to_vec());
    let results = vec![
        match_boundaries::<Exact>(&sub(25), &report_of(perfect.clone()), &MatchPolicy::default()).unwrap(),
        match_boundaries::<Exact>(&sub(25), &miss(25), &MatchPolicy::default()).unwrap(),
        match_boundaries::<Exact>(&sub(12), &miss(12), &MatchPolicy::default()).unwrap(),
        match_boundaries::<Exact>(&sub(1), &report_of(vec![]), &MatchPolicy::default()).unwrap(),
    ];
    let s = corpus_aggregate(&results, &[0.96, 0.0]).unwrap();
    assert_eq!(s.fraction_perfect, Exact::new(1, 4));
    assert_eq!(s.fraction_below, vec![(0.96, Exact::new(2, 4)), (0.0, Exact::new(0, 4))]);
    assert_eq!((s.pooled.tp, s.pooled.fp, s.pooled.fn_), (25 + 24 + 11, 0, 3));
    assert_eq!(s.micro, Metrics::from_counts(60, 0, 3));
    let f1s = [Exact::from_integer(1), Exact::new(48, 49), Exact::new(22, 23), Exact::from_integer(0)];
    assert_eq!(s.macro_.f1, f1s.iter().sum::<Exact>() / Exact::from_integer(4));
}

proptest! {
    #[test]
    fn rule_lattice(t in 0u64..64, pad in 0u64..16, s in 0u64..96) {
        let r = t + pad;
        let ok = |rule| u8::from(boundary_ok(rule, t, r, s));
        prop_assert!(ok(BoundaryRule::LegacyLenient) >= ok(BoundaryRule::PaddingTolerant));
        prop_assert!(ok(BoundaryRule::PaddingTolerant) >= ok(BoundaryRule::StrictTrimmed));
        prop_assert!(ok(BoundaryRule::PaddingTolerant) >= ok(BoundaryRule::StrictRaw));
        prop_assert!(ok(BoundaryRule::Ignore) >= ok(BoundaryRule::LegacyLenient));
    }
}
