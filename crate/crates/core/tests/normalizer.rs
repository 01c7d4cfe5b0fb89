mod common;

use common::check_invariants;
use groundtruth::forge::{emit, generate_corpus, preset, QuirkMix, PRESETS};
use groundtruth::normalize::specialization_groups;
use groundtruth::{
    build_ground_truth, extract_debug_functions, extract_ground_truth, parse_image, DiagCode, Flag, NormalizeConfig,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_corpus_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (spec, expected) in generate_corpus(42, 100, &QuirkMix::all(0.3)) {
        let img = parse_image(&emit(&spec).unwrap()).unwrap();
        let (records, _) = extract_debug_functions(&img);
        let doc = build_ground_truth(&img, &records, &NormalizeConfig::default());
        if let Some(m) = expected.mismatch(&doc) {
            panic!("{m}");
        }
        check_invariants(&img, &doc).unwrap_or_else(|e| panic!("{}: {e}", spec.name));
        let mut symbols = img.symbols.clone();
        symbols.shuffle(&mut rng);
        let again = build_ground_truth(&img.with_symbols(symbols), &records, &NormalizeConfig::default());
        assert_eq!(again.functions, doc.functions, "{}", spec.name);
        assert_eq!(again.byte_classes, doc.byte_classes);
        assert_eq!(again.complete, doc.complete);
    }
}

#[test]
fn unmerged_twins_keep_both_symbols() {
    let img = parse_image(&emit(&preset("listing1").unwrap()).unwrap()).unwrap();
    let config = NormalizeConfig { merge_multi_entry: false, ..NormalizeConfig::default() };
    let doc = extract_ground_truth(&img, &config);
    let got: Vec<_> = doc.functions.iter().map(|f| (f.canonical_name.as_str(), f.start, f.trimmed_size())).collect();
    assert_eq!(got, [("fix_syms", 0x080b41c0, 8), ("fix_syms.", 0x080b41c8, 21)]);
    assert_eq!(doc.count(DiagCode::MultiEntryMerged), 0);
    check_invariants(&img, &doc).unwrap();
}

#[test]
fn presets_hold_invariants() {
    for name in PRESETS {
        let img = parse_image(&emit(&preset(name).unwrap()).unwrap()).unwrap();
        let doc = extract_ground_truth(&img, &NormalizeConfig::default());
        check_invariants(&img, &doc).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn clone_groups() {
    let img = parse_image(&emit(&preset("listing2").unwrap()).unwrap()).unwrap();
    let doc = extract_ground_truth(&img, &NormalizeConfig::default());
    let groups = specialization_groups(&doc.functions);
    assert_eq!(groups["integer_constant"], [0x08056380, 0x08056520, 0x08056840, 0x08056b60, 0x080570a0]);
    assert_eq!(groups["operand"], [0x08055750, 0x08058fa0]);
    assert_eq!(groups["expr"], [0x080573d0, 0x0805a7d0]);
    let plain = doc.functions.iter().find(|f| f.canonical_name == "operand").unwrap();
    assert!(!plain.has(Flag::Specialized));
    let clone = doc.functions.iter().find(|f| f.canonical_name == "operand..0").unwrap();
    assert!(clone.has(Flag::Specialized));
}
