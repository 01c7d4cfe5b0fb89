//! Plain-text renderings for `--format table`.

use std::fmt::Write;

use groundtruth::schema::{CorpusFile, ScoreFile};
use groundtruth::score::{Confusion, Metrics};
use groundtruth::{GroundTruthDocument, Score};

use crate::diff::DocumentDiff;

pub fn banner(warning: &str) -> String {
    format!(
        "!! {warning}: boundaries scored leniently; any predicted size up to the padded size counts as correct. \
         Results are not comparable with strict scoring."
    )
}

pub fn functions(doc: &GroundTruthDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "binary   {}", doc.binary.path);
    let _ = writeln!(s, "digest   {}", doc.binary.digest);
    let _ = writeln!(s, "complete {}", doc.complete);
    let _ = writeln!(s, "{:<18} {:<18} {:<18} {:<32} flags", "start", "end_trimmed", "end_raw", "name");
    for f in &doc.functions {
        let flags: Vec<String> = f.flags.iter().map(|fl| format!("{fl:?}")).collect();
        let mut name = f.canonical_name.clone();
        if f.entry_points.len() > 1 {
            let extra: Vec<String> = f.entry_points[1..].iter().map(|e| format!("{e:#x}")).collect();
            name = format!("{name} (+{})", extra.join(","));
        }
        let _ = writeln!(
            s,
            "{:<18} {:<18} {:<18} {:<32} {}",
            format!("{:#x}", f.start),
            format!("{:#x}", f.end_exclusive_trimmed),
            format!("{:#x}", f.end_exclusive_raw),
            name,
            flags.join(",")
        );
    }
    for d in &doc.diagnostics {
        let _ = writeln!(s, "{d}");
    }
    s
}

fn row(s: &mut String, label: &str, c: &Confusion, m: &Metrics<f64>) {
    let _ = writeln!(
        s,
        "{label:<24} {:>6} {:>6} {:>6} {:>9.3} {:>7.3} {:>6.3}",
        c.tp, c.fp, c.fn_, m.precision, m.recall, m.f1
    );
}

fn header(s: &mut String) {
    let _ = writeln!(s, "{:<24} {:>6} {:>6} {:>6} {:>9} {:>7} {:>6}", "measure", "tp", "fp", "fn", "precision", "recall", "f1");
}

fn mismatches(s: &mut String, r: &Score) {
    if r.mismatches.is_empty() {
        return;
    }
    let _ = writeln!(s, "{:<16} {:<18} detail", "kind", "address");
    for m in &r.mismatches {
        let kind = serde_json::to_value(m.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(s, "{kind:<16} {:<18} {}", format!("{:#x}", m.address), m.detail);
    }
}

pub fn score(file: &ScoreFile) -> String {
    let mut s = String::new();
    let p = &file.boundaries.policy;
    let _ = writeln!(s, "tool     {}", file.tool.name);
    let _ = writeln!(s, "policy   start={:?} boundary={:?}", p.start_rule, p.boundary_rule);
    header(&mut s);
    row(&mut s, "starts", &file.starts.counts, &file.starts.metrics);
    row(&mut s, "boundaries", &file.boundaries.counts, &file.boundaries.metrics);
    if let Some(classes) = &file.byte_classes {
        for (class, score) in classes {
            row(&mut s, &format!("bytes:{class:?}").to_lowercase(), &score.counts, &score.metrics);
        }
    }
    for n in &file.boundaries.notes {
        let _ = writeln!(s, "note: {n}");
    }
    mismatches(&mut s, &file.boundaries);
    s
}

pub fn corpus(file: &CorpusFile) -> String {
    let mut s = String::new();
    let sum = &file.summary;
    header(&mut s);
    for b in &file.binaries {
        match &b.result {
            Some(r) => row(&mut s, &b.file, &r.counts, &r.metrics),
            None => {
                let _ = writeln!(s, "{:<24} failed: {}", b.file, b.error.as_deref().unwrap_or(""));
            }
        }
    }
    row(&mut s, "micro", &sum.pooled, &sum.micro);
    let _ = writeln!(
        s,
        "{:<24} {:>6} {:>6} {:>6} {:>9.3} {:>7.3} {:>6.3}",
        "macro", "", "", "", sum.macro_.precision, sum.macro_.recall, sum.macro_.f1
    );
    let _ = writeln!(s, "binaries {}  failed {}  perfect {:.4}", sum.binaries, file.failed, sum.fraction_perfect);
    for (th, frac) in &sum.fraction_below {
        let _ = writeln!(s, "below f1 {th}: {frac:.4}");
    }
    s
}

pub fn diff(d: &DocumentDiff) -> String {
    if d.is_empty() {
        return "identical\n".into();
    }
    let mut s = String::new();
    for f in &d.added {
        let _ = writeln!(s, "+ {:#x} {}", f.start, f.name);
    }
    for f in &d.removed {
        let _ = writeln!(s, "- {:#x} {}", f.start, f.name);
    }
    for c in &d.changed {
        for fc in &c.fields {
            let _ = writeln!(s, "~ {:#x} {} {}: {} -> {}", c.start, c.name, fc.field, fc.a, fc.b);
        }
    }
    for fc in &d.document {
        let _ = writeln!(s, "~ document {} changed", fc.field);
    }
    s
}
