//! Instruction-vs-data classification of every allocated byte.
//!
//! Section executability decides code vs data. Inside executable sections,
//! function bodies are code, trimmed tails are padding, and bytes no
//! function claims are padding only when they decompose into padding
//! tokens; anything else there is reported as unknown.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Addr, BinaryImage};
use crate::normalize::{GroundTruthFunction, PaddingAlphabet};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ByteClass {
    Code,
    Padding,
    Data,
    GapUnknown,
}

impl ByteClass {
    pub const ALL: [ByteClass; 4] = [ByteClass::Code, ByteClass::Padding, ByteClass::Data, ByteClass::GapUnknown];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Certain,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ByteRun {
    #[serde(with = "crate::serde_hex::addr")]
    pub start: Addr,
    pub length: u64,
    pub class: ByteClass,
    pub confidence: Confidence,
}

impl ByteRun {
    pub fn end(&self) -> Addr {
        self.start + self.length
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ByteClassMap {
    pub runs: Vec<ByteRun>,
}

impl ByteClassMap {
    pub fn total_bytes(&self) -> u64 {
        self.runs.iter().map(|r| r.length).sum()
    }

    /// Class of the byte at `addr`, if the map covers it.
    pub fn class_at(&self, addr: Addr) -> Option<(ByteClass, Confidence)> {
        let i = self.runs.partition_point(|r| r.end() <= addr);
        self.runs
            .get(i)
            .filter(|r| r.start <= addr)
            .map(|r| (r.class, r.confidence))
    }

    /// Appends a run, merging it into the previous one when contiguous and
    /// of the same kind. Zero-length runs are dropped.
    pub fn push(&mut self, run: ByteRun) {
        if run.length == 0 {
            return;
        }
        if let Some(last) = self.runs.last_mut() {
            if last.end() == run.start && last.class == run.class && last.confidence == run.confidence {
                last.length += run.length;
                return;
            }
        }
        self.runs.push(run);
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("functions {first} and {second} overlap")]
pub struct OverlapError {
    pub first: String,
    pub second: String,
}

/// Classifies with the machine's default padding alphabet.
pub fn classify_bytes(image: &BinaryImage, functions: &[GroundTruthFunction]) -> Result<ByteClassMap, OverlapError> {
    classify_bytes_with(image, functions, &PaddingAlphabet::for_machine(image.machine))
}

pub fn classify_bytes_with(
    image: &BinaryImage,
    functions: &[GroundTruthFunction],
    alphabet: &PaddingAlphabet,
) -> Result<ByteClassMap, OverlapError> {
    let mut funcs: Vec<&GroundTruthFunction> = functions.iter().collect();
    funcs.sort_by_key(|f| (f.start, f.end_exclusive_raw));
    for w in funcs.windows(2) {
        if w[1].start < w[0].end_exclusive_raw {
            return Err(OverlapError { first: w[0].canonical_name.clone(), second: w[1].canonical_name.clone() });
        }
    }

    let mut sections: Vec<_> = image.sections.iter().filter(|s| s.allocated && s.size > 0).collect();
    sections.sort_by_key(|s| s.vaddr);

    let mut map = ByteClassMap::default();
    let run = |start: Addr, end: Addr, class, confidence| ByteRun { start, length: end.saturating_sub(start), class, confidence };
    for sec in sections {
        if !sec.executable {
            map.push(run(sec.vaddr, sec.end(), ByteClass::Data, Confidence::Certain));
            continue;
        }
        let gap = |map: &mut ByteClassMap, from: Addr, to: Addr| {
            if from >= to {
                return;
            }
            let padding = image
                .bytes_at(from, to - from)
                .is_some_and(|b| alphabet.is_all_padding(b));
            let class = if padding { ByteClass::Padding } else { ByteClass::GapUnknown };
            map.push(run(from, to, class, Confidence::Heuristic));
        };
        let mut cursor = sec.vaddr;
        let first = funcs.partition_point(|f| f.end_exclusive_raw <= sec.vaddr);
        for f in funcs[first..].iter().take_while(|f| f.start < sec.end()) {
            let start = f.start.max(sec.vaddr);
            let trimmed = f.end_exclusive_trimmed.clamp(start, sec.end());
            let raw = f.end_exclusive_raw.clamp(trimmed, sec.end());
            gap(&mut map, cursor, start);
            map.push(run(start, trimmed, ByteClass::Code, Confidence::Certain));
            map.push(run(trimmed, raw, ByteClass::Padding, Confidence::Certain));
            cursor = cursor.max(raw);
        }
        gap(&mut map, cursor, sec.end());
    }
    Ok(map)
}

/// Share of allocated bytes in each class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageStats<S> {
    pub code: S,
    pub padding: S,
    pub data: S,
    pub gap_unknown: S,
}

impl<S: Scalar> CoverageStats<S> {
    pub fn get(&self, class: ByteClass) -> S {
        match class {
            ByteClass::Code => self.code,
            ByteClass::Padding => self.padding,
            ByteClass::Data => self.data,
            ByteClass::GapUnknown => self.gap_unknown,
        }
    }

    pub fn sum(&self) -> S {
        self.code + self.padding + self.data + self.gap_unknown
    }
}

/// Per-class fractions of the map's bytes; all zero for an empty map.
pub fn coverage_stats<S: Scalar>(map: &ByteClassMap) -> CoverageStats<S> {
    let total = map.total_bytes();
    let count = |c: ByteClass| map.runs.iter().filter(|r| r.class == c).map(|r| r.length).sum::<u64>();
    let frac = |c| S::ratio_or(count(c), total, S::zero());
    CoverageStats {
        code: frac(ByteClass::Code),
        padding: frac(ByteClass::Padding),
        data: frac(ByteClass::Data),
        gap_unknown: frac(ByteClass::GapUnknown),
    }
}
