//! Brute-force oracles and invariant checks shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use groundtruth::byteclass::{ByteClass, ByteClassMap};
use groundtruth::normalize::BinaryInfo;
use groundtruth::score::{Confusion, PredictedFunction};
use groundtruth::{
    BinaryImage, BoundaryRule, ContentDigest, GroundTruthDocument, GroundTruthFunction, Machine, MatchPolicy,
    StartRule, ToolReport, WordSize,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const DIGEST: ContentDigest = ContentDigest([7; 32]);

/// Multi-byte nops the fixtures use, plus single-byte fillers.
const NOPS: &[&[u8]] = &[
    &[0x90],
    &[0xcc],
    &[0x00],
    &[0x0f, 0x1f, 0x00],
    &[0x0f, 0x1f, 0x40, 0x00],
    &[0x0f, 0x1f, 0x44, 0x00, 0x00],
    &[0x66, 0x0f, 0x1f, 0x44, 0x00, 0x00],
    &[0x0f, 0x1f, 0x80, 0, 0, 0, 0],
    &[0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
    &[0x66, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
    &[0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
    &[0x66, 0x66, 0x2e, 0x0f, 0x1f, 0x84, 0, 0, 0, 0, 0],
];

/// Whether `bytes` splits into a sequence of [`NOPS`] entries (x86 only).
pub fn is_padding(machine: Machine, bytes: &[u8]) -> bool {
    if bytes.is_empty() {
        return true;
    }
    if !machine.is_x86() {
        return false;
    }
    let mut ok = vec![false; bytes.len() + 1];
    ok[0] = true;
    for i in 0..bytes.len() {
        if ok[i] {
            for nop in NOPS {
                if bytes[i..].starts_with(nop) {
                    ok[i + nop.len()] = true;
                }
            }
        }
    }
    ok[bytes.len()]
}

pub fn function(name: &str, start: u64, entries: &[u64], trimmed: u64, raw: u64) -> GroundTruthFunction {
    let mut entry_points = vec![start];
    entry_points.extend_from_slice(entries);
    GroundTruthFunction {
        canonical_name: name.into(),
        entry_points,
        start,
        end_exclusive_raw: raw,
        end_exclusive_trimmed: trimmed,
        aliases: Vec::new(),
        specialization_group: None,
        flags: BTreeSet::new(),
        provenance: BTreeSet::new(),
        source: None,
    }
}

pub fn truth_of(functions: Vec<GroundTruthFunction>) -> GroundTruthDocument {
    GroundTruthDocument {
        binary: BinaryInfo { path: "synthetic".into(), digest: DIGEST, word_size: WordSize::Bits64, machine: Machine::X86_64 },
        functions,
        byte_classes: ByteClassMap::default(),
        diagnostics: Vec::new(),
        complete: true,
    }
}

pub fn report_of(predicted: Vec<(u64, u64)>) -> ToolReport {
    ToolReport {
        tool_name: "random".into(),
        tool_version: None,
        binary_digest: DIGEST,
        predicted_functions: predicted.into_iter().map(|(start, size)| PredictedFunction { start, size: Some(size) }).collect(),
        predicted_byte_classes: None,
    }
}

/// Up to `max` non-overlapping functions, some with secondary entries.
pub fn random_truth<R: Rng>(rng: &mut R, max: usize) -> GroundTruthDocument {
    let mut cursor = 0x1000u64;
    let mut functions = Vec::new();
    for i in 0..rng.gen_range(0..=max) {
        cursor += rng.gen_range(0..8);
        let start = cursor;
        let trimmed = start + rng.gen_range(1..32);
        let raw = trimmed + rng.gen_range(0..8);
        let mut extra: Vec<u64> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(start + 1..=trimmed)).filter(|&e| e < trimmed).collect();
        extra.sort_unstable();
        extra.dedup();
        functions.push(function(&format!("f{i}"), start, &extra, trimmed, raw));
        cursor = raw;
    }
    truth_of(functions)
}

/// Up to `max` predictions: hits on starts and secondary entries, duplicates,
/// strays, and sizes around the trimmed and padded sizes.
pub fn random_report<R: Rng>(rng: &mut R, truth: &GroundTruthDocument, max: usize) -> ToolReport {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for _ in 0..rng.gen_range(0..=max) {
        let pick = truth.functions.choose(rng);
        let start = match (rng.gen_range(0..4), pick) {
            (0 | 1, Some(f)) => f.start,
            (2, Some(f)) => *f.entry_points.choose(rng).unwrap(),
            (3, _) if !out.is_empty() => out.choose(rng).unwrap().0,
            _ => rng.gen_range(0x1000..0x1200),
        };
        let (t, r) = truth
            .functions
            .iter()
            .find(|f| f.entry_points.contains(&start))
            .map_or((8, 8), |f| (f.end_exclusive_trimmed - start, f.end_exclusive_raw - start));
        let size = match rng.gen_range(0..5) {
            0 => t,
            1 => r,
            2 => rng.gen_range(t..=r),
            3 => t.saturating_sub(1),
            _ => rng.gen_range(0..=r + 4),
        };
        out.push((start, size));
    }
    report_of(out)
}

fn size_accepted(rule: BoundaryRule, t: u64, r: u64, s: u64) -> bool {
    let accepted: Vec<u64> = match rule {
        BoundaryRule::Ignore => return true,
        BoundaryRule::StrictTrimmed => vec![t],
        BoundaryRule::StrictRaw => vec![r],
        BoundaryRule::PaddingTolerant => (t..=r).collect(),
        BoundaryRule::LegacyLenient => (0..=r).collect(),
    };
    accepted.contains(&s)
}

/// Per function: the smallest prediction landing on one of its accepted
/// starts is its match; every other prediction is a false positive.
pub fn brute_counts(truth: &GroundTruthDocument, report: &ToolReport, policy: &MatchPolicy, rule: BoundaryRule) -> Confusion {
    let preds: Vec<(u64, u64)> =
        report.predicted_functions.iter().map(|p| (p.start, p.size.unwrap_or(0))).collect();
    let mut claimed = vec![false; preds.len()];
    let mut c = Confusion::default();
    for f in &truth.functions {
        let starts: Vec<u64> = match policy.start_rule {
            StartRule::AnyEntry => f.entry_points.clone(),
            StartRule::PrimaryEntryOnly => vec![f.start],
        };
        let hits: Vec<usize> = (0..preds.len()).filter(|&i| starts.contains(&preds[i].0)).collect();
        for &i in &hits {
            claimed[i] = true;
        }
        let Some(&best) = hits.iter().min_by_key(|&&i| preds[i]) else {
            c.fn_ += 1;
            continue;
        };
        let (start, size) = preds[best];
        let t = f.end_exclusive_trimmed - start;
        let r = f.end_exclusive_raw - start;
        if size_accepted(rule, t, r, size) {
            c.tp += 1;
        } else {
            c.fp += 1;
            c.fn_ += 1;
        }
        c.fp += hits.len() as u64 - 1;
    }
    c.fp += claimed.iter().filter(|&&x| !x).count() as u64;
    c
}

/// `(precision, recall, f1)` straight from the definitions.
pub fn brute_metrics(c: &Confusion) -> (f64, f64, f64) {
    let (tp, fp, fn_) = (c.tp as f64, c.fp as f64, c.fn_ as f64);
    let p = if tp + fp == 0.0 { 1.0 } else { tp / (tp + fp) };
    let r = if tp + fn_ == 0.0 { 1.0 } else { tp / (tp + fn_) };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Class of every allocated byte, decided one byte at a time.
pub fn brute_byte_classes(image: &BinaryImage, functions: &[GroundTruthFunction]) -> BTreeMap<u64, ByteClass> {
    let mut out = BTreeMap::new();
    for sec in image.sections.iter().filter(|s| s.allocated && s.size > 0) {
        let owner = |a: u64| functions.iter().find(|f| f.start <= a && a < f.end_exclusive_raw);
        for a in sec.vaddr..sec.end() {
            let class = if !sec.executable {
                ByteClass::Data
            } else if let Some(f) = owner(a) {
                if a < f.end_exclusive_trimmed {
                    ByteClass::Code
                } else {
                    ByteClass::Padding
                }
            } else {
                let mut lo = a;
                while lo > sec.vaddr && owner(lo - 1).is_none() {
                    lo -= 1;
                }
                let mut hi = a + 1;
                while hi < sec.end() && owner(hi).is_none() {
                    hi += 1;
                }
                match image.bytes_at(lo, hi - lo) {
                    Some(b) if is_padding(image.machine, b) => ByteClass::Padding,
                    _ => ByteClass::GapUnknown,
                }
            };
            out.insert(a, class);
        }
    }
    out
}

/// Runs are sorted, disjoint and cover exactly the allocated bytes.
pub fn check_tiling(image: &BinaryImage, map: &ByteClassMap) -> Result<(), String> {
    let allocated: u64 = image.sections.iter().filter(|s| s.allocated).map(|s| s.size).sum();
    if map.total_bytes() != allocated {
        return Err(format!("map covers {} bytes, allocated {allocated}", map.total_bytes()));
    }
    for w in map.runs.windows(2) {
        if w[0].end() > w[1].start {
            return Err(format!("runs overlap at {:#x}", w[1].start));
        }
    }
    for r in &map.runs {
        let inside = image
            .sections
            .iter()
            .any(|s| s.allocated && r.start >= s.vaddr && r.end() <= s.end());
        if !inside || r.length == 0 {
            return Err(format!("run {:#x}+{} is empty or outside allocated sections", r.start, r.length));
        }
    }
    Ok(())
}

pub fn check_byte_classes(image: &BinaryImage, doc: &GroundTruthDocument) -> Result<(), String> {
    check_tiling(image, &doc.byte_classes)?;
    for (a, want) in brute_byte_classes(image, &doc.functions) {
        let got = doc.byte_classes.class_at(a).map(|(c, _)| c);
        if got != Some(want) {
            return Err(format!("byte {a:#x}: {got:?}, expected {want:?}"));
        }
    }
    Ok(())
}

/// Non-overlap, conservation of symbol names and trimming safety.
pub fn check_invariants(image: &BinaryImage, doc: &GroundTruthDocument) -> Result<(), String> {
    let fs = &doc.functions;
    for f in fs {
        if !(f.start <= f.end_exclusive_trimmed && f.end_exclusive_trimmed <= f.end_exclusive_raw) {
            return Err(format!("{}: bounds out of order", f.canonical_name));
        }
        if f.entry_points.first() != Some(&f.start) || f.entry_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("{}: entries {:x?}", f.canonical_name, f.entry_points));
        }
        if f.entry_points.iter().any(|&e| e >= f.end_exclusive_trimmed.max(f.start + 1)) {
            return Err(format!("{}: an entry point lies in trimmed padding", f.canonical_name));
        }
        if f.end_exclusive_trimmed < f.end_exclusive_raw {
            let pad = image
                .bytes_at(f.end_exclusive_trimmed, f.end_exclusive_raw - f.end_exclusive_trimmed)
                .ok_or_else(|| format!("{}: trimmed bytes unreadable", f.canonical_name))?;
            if !is_padding(image.machine, pad) {
                return Err(format!("{}: trimmed bytes {pad:02x?} are not padding", f.canonical_name));
            }
        }
    }
    for w in fs.windows(2) {
        if w[0].end_exclusive_raw > w[1].start {
            return Err(format!("{} overlaps {}", w[0].canonical_name, w[1].canonical_name));
        }
    }

    let names: BTreeMap<&str, &GroundTruthFunction> = fs
        .iter()
        .flat_map(|f| std::iter::once(f.canonical_name.as_str()).chain(f.aliases.iter().map(String::as_str)).map(move |n| (n, f)))
        .collect();
    for s in &image.symbols {
        if s.kind != groundtruth::SymbolKind::Function || !image.section_of(s.value).is_some_and(|sec| sec.executable) {
            continue;
        }
        let Some(f) = names.get(s.name.as_str()) else {
            return Err(format!("symbol {} is not in the document", s.name));
        };
        if !f.entry_points.contains(&s.value) {
            return Err(format!("symbol {} at {:#x} is not an entry of {}", s.name, s.value, f.canonical_name));
        }
    }
    Ok(())
}
