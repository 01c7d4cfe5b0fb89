use serde::Serialize;

use super::{Confusion, Metrics, ScoreError, ScoreResult};
use crate::scalar::Scalar;

pub const DEFAULT_THRESHOLD: f64 = 0.96;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusSummary<S> {
    pub binaries: usize,
    pub pooled: Confusion,
    /// Metrics over pooled counts.
    pub micro: Metrics<S>,
    /// Mean of per-binary metrics.
    #[serde(rename = "macro")]
    pub macro_: Metrics<S>,
    pub fraction_perfect: S,
    /// `(threshold, share of binaries with f1 strictly below it)`.
    pub fraction_below: Vec<(f64, S)>,
}

pub fn corpus_aggregate<S: Scalar>(
    results: &[ScoreResult<S>],
    thresholds: &[f64],
) -> Result<CorpusSummary<S>, ScoreError> {
    if results.is_empty() {
        return Err(ScoreError::EmptyCorpus);
    }
    let n = results.len() as u64;
    let pooled = results.iter().fold(Confusion::default(), |acc, r| acc + r.counts);
    let mean = |get: fn(&Metrics<S>) -> S| {
        results.iter().fold(S::zero(), |acc, r| acc + get(&r.metrics)) / S::from_count(n)
    };
    let macro_ = Metrics { precision: mean(|m| m.precision), recall: mean(|m| m.recall), f1: mean(|m| m.f1) };
    let perfect = results.iter().filter(|r| r.counts.is_perfect()).count() as u64;
    let fraction_below = thresholds
        .iter()
        .map(|&th| {
            let below = results.iter().filter(|r| r.metrics.f1.to_f64() < th).count() as u64;
            (th, S::ratio_or(below, n, S::zero()))
        })
        .collect();
    Ok(CorpusSummary {
        binaries: results.len(),
        pooled,
        micro: pooled.metrics(),
        macro_,
        fraction_perfect: S::ratio_or(perfect, n, S::zero()),
        fraction_below,
    })
}
