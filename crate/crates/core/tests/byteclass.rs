mod common;

use common::{check_byte_classes, check_tiling};
use groundtruth::byteclass::{classify_bytes, coverage_stats, ByteClass, ByteClassMap, ByteRun, Confidence};
use groundtruth::forge::{emit, generate_corpus, preset, QuirkMix, PRESETS};
use groundtruth::{extract_ground_truth, parse_image, score_byte_classes, Exact, NormalizeConfig, ScoreError};

#[test]
fn fixtures_tile_and_match_per_byte_classes() {
    let names = PRESETS.iter().map(|n| preset(n).unwrap());
    let generated = generate_corpus(42, 100, &QuirkMix::all(0.3)).into_iter().map(|(s, _)| s);
    for spec in names.chain(generated) {
        let img = parse_image(&emit(&spec).unwrap()).unwrap();
        let doc = extract_ground_truth(&img, &NormalizeConfig::default());
        if let Err(e) = check_byte_classes(&img, &doc) {
            panic!("{}: {e}", spec.name);
        }
        let stats = coverage_stats::<Exact>(&doc.byte_classes);
        assert!(doc.byte_classes.total_bytes() == 0 || stats.sum() == Exact::from_integer(1));
    }
}

#[test]
fn overlapping_functions_are_rejected() {
    let img = parse_image(&emit(&preset("listing2").unwrap()).unwrap()).unwrap();
    let mut doc = extract_ground_truth(&img, &NormalizeConfig::default());
    doc.functions[1].start = doc.functions[0].end_exclusive_raw - 1;
    assert!(classify_bytes(&img, &doc.functions).is_err());
}

#[test]
fn tiling_check_catches_gaps() {
    let img = parse_image(&emit(&preset("listing1").unwrap()).unwrap()).unwrap();
    let mut doc = extract_ground_truth(&img, &NormalizeConfig::default());
    check_tiling(&img, &doc.byte_classes).unwrap();
    doc.byte_classes.runs.pop();
    assert!(check_tiling(&img, &doc.byte_classes).is_err());
}

fn run(start: u64, length: u64, class: ByteClass) -> ByteRun {
    ByteRun { start, length, class, confidence: Confidence::Certain }
}

#[test]
fn byte_scores_count_each_byte_once() {
    let truth = ByteClassMap { runs: vec![run(0, 10, ByteClass::Code), run(10, 4, ByteClass::Padding), run(14, 6, ByteClass::GapUnknown), run(20, 5, ByteClass::Data)] };
    let predicted = ByteClassMap { runs: vec![run(0, 12, ByteClass::Code), run(12, 13, ByteClass::Data)] };
    let s = score_byte_classes::<Exact>(&truth, &predicted).unwrap();
    let counts = |c| {
        let x = s[&c].counts;
        (x.tp, x.fp, x.fn_)
    };
    assert_eq!(counts(ByteClass::Code), (10, 2, 0));
    assert_eq!(counts(ByteClass::Padding), (0, 0, 4));
    assert_eq!(counts(ByteClass::Data), (5, 2, 0));
    let short = ByteClassMap { runs: vec![run(0, 24, ByteClass::Code)] };
    assert!(matches!(score_byte_classes::<f64>(&truth, &short), Err(ScoreError::DomainMismatch(_))));
}
