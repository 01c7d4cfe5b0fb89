//! Scoring tool predictions against ground truth.

mod bytes;
mod corpus;
mod functions;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::byteclass::ByteClassMap;
use crate::model::{Addr, ContentDigest};
use crate::scalar::Scalar;

pub use bytes::{score_byte_classes, ClassScore};
pub use corpus::{corpus_aggregate, CorpusSummary, DEFAULT_THRESHOLD};
pub use functions::{boundary_ok, match_boundaries, match_starts};

pub const LEGACY_LENIENT_WARNING: &str = "LEGACY_LENIENT_POLICY";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredictedFunction {
    pub start: Addr,
    pub size: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToolReport {
    pub tool_name: String,
    pub tool_version: Option<String>,
    pub binary_digest: ContentDigest,
    pub predicted_functions: Vec<PredictedFunction>,
    pub predicted_byte_classes: Option<ByteClassMap>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    PrimaryEntryOnly,
    #[default]
    AnyEntry,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRule {
    Ignore,
    StrictTrimmed,
    StrictRaw,
    #[default]
    PaddingTolerant,
    /// Accepts any size up to the padded size, so short lengths pass.
    LegacyLenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchPolicy {
    pub start_rule: StartRule,
    pub boundary_rule: BoundaryRule,
    pub reject_incomplete_truth: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy { start_rule: StartRule::AnyEntry, boundary_rule: BoundaryRule::PaddingTolerant, reject_incomplete_truth: true }
    }
}

impl MatchPolicy {
    pub fn strict() -> Self {
        MatchPolicy { start_rule: StartRule::PrimaryEntryOnly, boundary_rule: BoundaryRule::StrictTrimmed, ..Self::default() }
    }

    pub fn legacy() -> Self {
        MatchPolicy { boundary_rule: BoundaryRule::LegacyLenient, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    SpuriousStart,
    MissedStart,
    WrongBoundary,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    #[serde(with = "crate::serde_hex::addr")]
    pub address: Addr,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn metrics<S: Scalar>(&self) -> Metrics<S> {
        Metrics::from_counts(self.tp, self.fp, self.fn_)
    }

    pub fn is_perfect(&self) -> bool {
        self.fp == 0 && self.fn_ == 0
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;
    fn add(self, o: Confusion) -> Confusion {
        Confusion { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
}

impl<S: Scalar> Metrics<S> {
    /// Precision and recall are 1 on an empty denominator; F1 is 0 when
    /// both are 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = S::ratio_or(tp, tp + fp, S::one());
        let recall = S::ratio_or(tp, tp + fn_, S::one());
        let sum = precision + recall;
        let f1 = if sum == S::zero() {
            S::zero()
        } else {
            (S::one() + S::one()) * precision * recall / sum
        };
        Metrics { precision, recall, f1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreResult<S> {
    #[serde(flatten)]
    pub counts: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics<S>,
    pub mismatches: Vec<Mismatch>,
    pub policy: MatchPolicy,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl<S: Scalar> ScoreResult<S> {
    pub fn tp(&self) -> u64 {
        self.counts.tp
    }

    pub fn fp(&self) -> u64 {
        self.counts.fp
    }

    pub fn fn_(&self) -> u64 {
        self.counts.fn_
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoreError {
    #[error("report digest {report} does not match ground truth digest {truth}")]
    DigestMismatch { truth: String, report: String },
    #[error("ground truth is incomplete and the policy rejects incomplete truth")]
    IncompleteTruthRejected,
    #[error("{0} predicted function(s) lack a size, required by the boundary rule")]
    MissingSizes(usize),
    #[error("byte-class maps cover different addresses: {0}")]
    DomainMismatch(String),
    #[error("no results to aggregate")]
    EmptyCorpus,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    #[test]
    fn metric_edge_cases() {
        assert_eq!(Metrics::<f64>::from_counts(0, 0, 0), Metrics { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(Metrics::<f64>::from_counts(0, 3, 0), Metrics { precision: 0.0, recall: 1.0, f1: 0.0 });
        assert_eq!(Metrics::<f64>::from_counts(0, 0, 2), Metrics { precision: 1.0, recall: 0.0, f1: 0.0 });
        assert_eq!(Metrics::<f64>::from_counts(0, 1, 1).f1, 0.0);
        let m = Metrics::<Exact>::from_counts(3, 1, 2);
        assert_eq!((m.precision, m.recall, m.f1), (Exact::new(3, 4), Exact::new(3, 5), Exact::new(2, 3)));
    }

    #[test]
    fn confusion_serializes_fn_key() {
        let c = Confusion { tp: 1, fp: 2, fn_: 3 };
        assert_eq!(serde_json::to_string(&c).unwrap(), r#"{"tp":1,"fp":2,"fn":3}"#);
        assert!(!c.is_perfect());
        assert_eq!(c + c, Confusion { tp: 2, fp: 4, fn_: 6 });
    }
}
