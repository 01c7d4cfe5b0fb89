use std::collections::BTreeMap;

use serde::Serialize;

use super::{Confusion, Metrics, ScoreError};
use crate::byteclass::{ByteClass, ByteClassMap};
use crate::model::Addr;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassScore<S> {
    #[serde(flatten)]
    pub counts: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics<S>,
}

/// Per-byte confusion counts for code, padding and data. Bytes whose truth
/// class is `gap_unknown` are not scored.
pub fn score_byte_classes<S: Scalar>(
    truth: &ByteClassMap,
    predicted: &ByteClassMap,
) -> Result<BTreeMap<ByteClass, ClassScore<S>>, ScoreError> {
    let (a, b) = (covered(truth), covered(predicted));
    if a != b {
        return Err(ScoreError::DomainMismatch(format!(
            "truth covers {} bytes in {} ranges, prediction {} bytes in {} ranges",
            a.iter().map(|(s, e)| e - s).sum::<u64>(),
            a.len(),
            b.iter().map(|(s, e)| e - s).sum::<u64>(),
            b.len()
        )));
    }

    let scored = [ByteClass::Code, ByteClass::Padding, ByteClass::Data];
    let mut counts: BTreeMap<ByteClass, Confusion> = scored.iter().map(|&c| (c, Confusion::default())).collect();
    let (mut i, mut j) = (0, 0);
    let (t, p) = (&truth.runs, &predicted.runs);
    while i < t.len() && j < p.len() {
        let start = t[i].start.max(p[j].start);
        let end = t[i].end().min(p[j].end());
        if start < end && t[i].class != ByteClass::GapUnknown {
            let n = end - start;
            let (tc, pc) = (t[i].class, p[j].class);
            if tc == pc {
                counts.get_mut(&tc).expect("scored class").tp += n;
            } else {
                counts.get_mut(&tc).expect("scored class").fn_ += n;
                if let Some(c) = counts.get_mut(&pc) {
                    c.fp += n;
                }
            }
        }
        if t[i].end() <= p[j].end() {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(c, counts)| (c, ClassScore { counts, metrics: counts.metrics() }))
        .collect())
}

/// Covered address set as merged, sorted half-open intervals.
fn covered(map: &ByteClassMap) -> Vec<(Addr, Addr)> {
    let mut spans: Vec<(Addr, Addr)> = map.runs.iter().filter(|r| r.length > 0).map(|r| (r.start, r.end())).collect();
    spans.sort_unstable();
    let mut out: Vec<(Addr, Addr)> = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::byteclass::{ByteRun, Confidence};

    fn map(runs: &[(Addr, u64, ByteClass)]) -> ByteClassMap {
        ByteClassMap {
            runs: runs.iter().map(|&(start, length, class)| ByteRun { start, length, class, confidence: Confidence::Certain }).collect(),
        }
    }

    #[test]
    fn unknown_truth_bytes_are_skipped() {
        let truth = map(&[(0, 4, ByteClass::GapUnknown), (4, 4, ByteClass::Code)]);
        let pred = map(&[(0, 8, ByteClass::Padding)]);
        let s = score_byte_classes::<f64>(&truth, &pred).unwrap();
        assert_eq!(s[&ByteClass::Code].counts, Confusion { tp: 0, fp: 0, fn_: 4 });
        assert_eq!(s[&ByteClass::Padding].counts, Confusion { tp: 0, fp: 4, fn_: 0 });
        assert!(!s.contains_key(&ByteClass::GapUnknown));
    }

    #[test]
    fn split_runs_cover_the_same_domain() {
        let truth = map(&[(0, 8, ByteClass::Code)]);
        let pred = map(&[(0, 3, ByteClass::Code), (3, 5, ByteClass::Code)]);
        assert_eq!(score_byte_classes::<f64>(&truth, &pred).unwrap()[&ByteClass::Code].counts.tp, 8);
        let shifted = map(&[(1, 8, ByteClass::Code)]);
        assert!(score_byte_classes::<f64>(&truth, &shifted).is_err());
    }
}
