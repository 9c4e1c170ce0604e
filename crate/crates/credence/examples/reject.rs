//! Fit accept/reject thresholds on validation outcomes under both
//! constraint styles, then apply one to fresh predictions.

use credence::rejection::{
    evaluate_threshold, fit_coverage_constrained, fit_risk_constrained, ScoredOutcome,
};

fn main() -> credence::Result<()> {
    // Validation outcomes: (argmax confidence, was the prediction right).
    // Errors cluster at low confidence, as with a reasonably calibrated
    // model.
    let outcomes: Vec<ScoredOutcome> = (0..200)
        .map(|i| {
            let confidence = 0.3 + 0.7 * (i as f64 / 199.0);
            ScoredOutcome {
                confidence,
                correct: i % 10 >= (10.0 * (1.0 - confidence)) as usize,
            }
        })
        .collect();

    let coverage_policy = fit_coverage_constrained(&outcomes, 0.8)?;
    println!(
        "coverage >= 0.80: threshold {:.3}, coverage {:.3}, risk {:.3}",
        coverage_policy.threshold, coverage_policy.achieved_coverage, coverage_policy.achieved_risk
    );

    let risk_policy = fit_risk_constrained(&outcomes, 0.05)?;
    println!(
        "risk <= 0.05:     threshold {:.3}, coverage {:.3}, risk {:.3} (feasible: {})",
        risk_policy.threshold,
        risk_policy.achieved_coverage,
        risk_policy.achieved_risk,
        risk_policy.feasible
    );

    // Apply the risk-constrained threshold to a fresh batch.
    let fresh: Vec<ScoredOutcome> = (0..50)
        .map(|i| ScoredOutcome {
            confidence: 0.4 + 0.6 * ((i * 7 % 50) as f64 / 49.0),
            correct: i % 3 != 0,
        })
        .collect();
    let (coverage, risk) = evaluate_threshold(&fresh, risk_policy.threshold)?;
    let accepted = fresh.iter().filter(|o| risk_policy.accepts(o.confidence)).count();
    println!(
        "fresh batch: accepted {accepted}/{}, coverage {coverage:.3}, risk {risk:.3}",
        fresh.len()
    );
    Ok(())
}
