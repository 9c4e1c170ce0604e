//! Reject-option threshold fitting under coverage and risk constraints.
//!
//! Coverage and risk are step functions of the threshold that change only
//! at observed confidence values, so the candidate set — midpoints between
//! adjacent sorted unique confidences plus a below-min and an above-max
//! sentinel — is exhaustive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax_class, PredictionSet};

/// One validation example: argmax confidence and whether the prediction
/// was correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredOutcome {
    pub confidence: f64,
    pub correct: bool,
}

/// The constraint a policy was fitted under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Constraint {
    CoverageAtLeast(f64),
    RiskAtMost(f64),
}

/// Fitted accept/reject threshold. Accept rule: confidence ≥ threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionPolicy {
    pub threshold: f64,
    /// Proportion of fitting examples accepted.
    pub achieved_coverage: f64,
    /// Error rate of accepted fitting examples (0 when none accepted).
    pub achieved_risk: f64,
    pub constraint: Constraint,
    /// False only when a risk constraint admits no non-empty accept set.
    pub feasible: bool,
}

impl RejectionPolicy {
    pub fn accepts(&self, confidence: f64) -> bool {
        confidence >= self.threshold
    }
}

/// Extracts (argmax confidence, correctness) pairs from a labeled
/// probability prediction set.
pub fn scored_outcomes(preds: &PredictionSet) -> Result<Vec<ScoredOutcome>> {
    let labels = preds
        .labels()
        .ok_or_else(|| Error::invalid("rejection fitting requires ground-truth labels"))?;
    let probs = preds.to_probabilities()?;
    probs
        .rows()
        .iter()
        .zip(labels)
        .map(|(row, &label)| {
            let pred = argmax_class(row)?;
            Ok(ScoredOutcome {
                confidence: row[pred],
                correct: pred == label,
            })
        })
        .collect()
}

/// Coverage and risk of applying `threshold` to an outcome set.
pub fn evaluate_threshold(outcomes: &[ScoredOutcome], threshold: f64) -> Result<(f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::invalid("cannot evaluate a threshold on an empty outcome set"));
    }
    let mut accepted = 0usize;
    let mut wrong = 0usize;
    for o in outcomes {
        if o.confidence >= threshold {
            accepted += 1;
            if !o.correct {
                wrong += 1;
            }
        }
    }
    let coverage = accepted as f64 / outcomes.len() as f64;
    let risk = if accepted == 0 {
        0.0
    } else {
        wrong as f64 / accepted as f64
    };
    Ok((coverage, risk))
}

/// Exhaustive candidate thresholds: a sentinel below the minimum
/// confidence, midpoints between adjacent unique confidences, and a
/// sentinel above the maximum.
pub fn candidate_thresholds(outcomes: &[ScoredOutcome]) -> Vec<f64> {
    let mut confidences: Vec<f64> = outcomes.iter().map(|o| o.confidence).collect();
    confidences.sort_by(|a, b| a.partial_cmp(b).unwrap());
    confidences.dedup();
    let mut candidates = Vec::with_capacity(confidences.len() + 1);
    candidates.push(confidences[0] - 1.0);
    for pair in confidences.windows(2) {
        candidates.push(0.5 * (pair[0] + pair[1]));
    }
    candidates.push(confidences[confidences.len() - 1] + 1.0);
    candidates
}

fn validate_outcomes(outcomes: &[ScoredOutcome]) -> Result<()> {
    if outcomes.is_empty() {
        return Err(Error::invalid("cannot fit a policy on an empty outcome set"));
    }
    for o in outcomes {
        if !o.confidence.is_finite() || !(0.0..=1.0).contains(&o.confidence) {
            return Err(Error::invalid(format!(
                "confidence {} outside [0, 1]",
                o.confidence
            )));
        }
    }
    Ok(())
}

/// Minimizes risk among thresholds whose coverage is at least
/// `min_coverage`; ties go to higher coverage, then lower threshold.
/// Always feasible: the below-min sentinel accepts everything.
pub fn fit_coverage_constrained(
    outcomes: &[ScoredOutcome],
    min_coverage: f64,
) -> Result<RejectionPolicy> {
    validate_outcomes(outcomes)?;
    if !(min_coverage > 0.0 && min_coverage <= 1.0) {
        return Err(Error::invalid(format!(
            "min_coverage must be in (0, 1], got {min_coverage}"
        )));
    }
    let mut best: Option<(f64, f64, f64)> = None; // (threshold, coverage, risk)
    for threshold in candidate_thresholds(outcomes) {
        let (coverage, risk) = evaluate_threshold(outcomes, threshold)?;
        if coverage < min_coverage {
            continue;
        }
        let better = match best {
            None => true,
            Some((bt, bc, br)) => {
                risk < br
                    || (risk == br && coverage > bc)
                    || (risk == br && coverage == bc && threshold < bt)
            }
        };
        if better {
            best = Some((threshold, coverage, risk));
        }
    }
    let (threshold, achieved_coverage, achieved_risk) = best.expect("accept-all is always feasible");
    Ok(RejectionPolicy {
        threshold,
        achieved_coverage,
        achieved_risk,
        constraint: Constraint::CoverageAtLeast(min_coverage),
        feasible: true,
    })
}

/// Maximizes coverage among thresholds whose risk is at most `max_risk`;
/// ties go to lower risk, then lower threshold. When only the empty
/// accept set satisfies the constraint, returns it with `feasible` unset.
pub fn fit_risk_constrained(outcomes: &[ScoredOutcome], max_risk: f64) -> Result<RejectionPolicy> {
    validate_outcomes(outcomes)?;
    if !(0.0..1.0).contains(&max_risk) {
        return Err(Error::invalid(format!(
            "max_risk must be in [0, 1), got {max_risk}"
        )));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for threshold in candidate_thresholds(outcomes) {
        let (coverage, risk) = evaluate_threshold(outcomes, threshold)?;
        if risk > max_risk {
            continue;
        }
        let better = match best {
            None => true,
            Some((bt, bc, br)) => {
                coverage > bc
                    || (coverage == bc && risk < br)
                    || (coverage == bc && risk == br && threshold < bt)
            }
        };
        if better {
            best = Some((threshold, coverage, risk));
        }
    }
    let (threshold, achieved_coverage, achieved_risk) =
        best.expect("the above-max sentinel always satisfies any risk bound");
    Ok(RejectionPolicy {
        threshold,
        achieved_coverage,
        achieved_risk,
        constraint: Constraint::RiskAtMost(max_risk),
        feasible: achieved_coverage > 0.0,
    })
}
