use std::collections::HashMap;

use super::{
    BoundaryRule, Confusion, MatchPolicy, Mismatch, MismatchKind, ScoreError, ScoreResult, StartRule,
    ToolReport, LEGACY_LENIENT_WARNING,
};
use crate::model::Addr;
use crate::normalize::GroundTruthDocument;
use crate::scalar::Scalar;

/// Whether predicted size `s` is acceptable given trimmed size `t` and
/// padded size `r`.
pub fn boundary_ok(rule: BoundaryRule, t: u64, r: u64, s: u64) -> bool {
    match rule {
        BoundaryRule::Ignore => true,
        BoundaryRule::StrictTrimmed => s == t,
        BoundaryRule::StrictRaw => s == r,
        BoundaryRule::PaddingTolerant => t <= s && s <= r,
        BoundaryRule::LegacyLenient => s <= r,
    }
}

/// Start matching only; the policy's boundary rule is not applied.
pub fn match_starts<S: Scalar>(
    truth: &GroundTruthDocument,
    report: &ToolReport,
    policy: &MatchPolicy,
) -> Result<ScoreResult<S>, ScoreError> {
    score_with(truth, report, policy, BoundaryRule::Ignore)
}

/// Start matching plus the policy's boundary rule.
pub fn match_boundaries<S: Scalar>(
    truth: &GroundTruthDocument,
    report: &ToolReport,
    policy: &MatchPolicy,
) -> Result<ScoreResult<S>, ScoreError> {
    score_with(truth, report, policy, policy.boundary_rule)
}

fn score_with<S: Scalar>(
    truth: &GroundTruthDocument,
    report: &ToolReport,
    policy: &MatchPolicy,
    rule: BoundaryRule,
) -> Result<ScoreResult<S>, ScoreError> {
    if truth.binary.digest != report.binary_digest {
        return Err(ScoreError::DigestMismatch {
            truth: truth.binary.digest.to_hex(),
            report: report.binary_digest.to_hex(),
        });
    }
    if policy.reject_incomplete_truth && !truth.complete {
        return Err(ScoreError::IncompleteTruthRejected);
    }
    if rule != BoundaryRule::Ignore {
        let missing = report.predicted_functions.iter().filter(|p| p.size.is_none()).count();
        if missing > 0 {
            return Err(ScoreError::MissingSizes(missing));
        }
    }

    // Truth functions never overlap, so each address names at most one of them.
    let mut owner: HashMap<Addr, usize> = HashMap::new();
    for (i, f) in truth.functions.iter().enumerate() {
        match policy.start_rule {
            StartRule::AnyEntry => {
                for &e in &f.entry_points {
                    owner.insert(e, i);
                }
            }
            StartRule::PrimaryEntryOnly => {
                owner.insert(f.start, i);
            }
        }
    }

    let mut predictions = report.predicted_functions.clone();
    predictions.sort();
    let mut consumed = vec![false; truth.functions.len()];
    let mut counts = Confusion::default();
    let mut mismatches = Vec::new();
    for p in &predictions {
        let Some(&i) = owner.get(&p.start).filter(|&&i| !consumed[i]) else {
            counts.fp += 1;
            mismatches.push(Mismatch {
                kind: MismatchKind::SpuriousStart,
                address: p.start,
                detail: "no ground-truth function starts here".into(),
            });
            continue;
        };
        consumed[i] = true;
        let f = &truth.functions[i];
        let t = f.end_exclusive_trimmed.saturating_sub(p.start);
        let r = f.end_exclusive_raw.saturating_sub(p.start);
        let s = p.size.unwrap_or(0);
        if boundary_ok(rule, t, r, s) {
            counts.tp += 1;
        } else {
            counts.fp += 1;
            counts.fn_ += 1;
            mismatches.push(Mismatch {
                kind: MismatchKind::WrongBoundary,
                address: p.start,
                detail: format!("{}: predicted size {s}, trimmed size {t}, padded size {r}", f.canonical_name),
            });
        }
    }
    for (f, _) in truth.functions.iter().zip(&consumed).filter(|(_, &c)| !c) {
        counts.fn_ += 1;
        mismatches.push(Mismatch {
            kind: MismatchKind::MissedStart,
            address: f.start,
            detail: format!("{} not predicted", f.canonical_name),
        });
    }
    mismatches.sort();

    let mut warnings = Vec::new();
    if policy.boundary_rule == BoundaryRule::LegacyLenient {
        warnings.push(LEGACY_LENIENT_WARNING.to_string());
    }
    let mut notes = Vec::new();
    if truth.functions.is_empty() && predictions.is_empty() {
        notes.push("no functions in truth or report; scored as perfect agreement".to_string());
    }
    Ok(ScoreResult { counts, metrics: counts.metrics(), mismatches, policy: *policy, warnings, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_rules() {
        // Trimmed 13, padded 16.
        let accepted = |rule| (0..20).filter(|&s| boundary_ok(rule, 13, 16, s)).collect::<Vec<u64>>();
        assert_eq!(accepted(BoundaryRule::StrictTrimmed), [13]);
        assert_eq!(accepted(BoundaryRule::StrictRaw), [16]);
        assert_eq!(accepted(BoundaryRule::PaddingTolerant), [13, 14, 15, 16]);
        assert_eq!(accepted(BoundaryRule::LegacyLenient), (0..=16).collect::<Vec<_>>());
        assert_eq!(accepted(BoundaryRule::Ignore).len(), 20);
    }
}
