//! Measure calibration of a labeled logit dump and fix it with
//! temperature scaling: reliability bins, ECE before/after, and the
//! fitted temperature.

use credence::calibration::{
    apply_temperature, ece, fit_temperature, reliability_bins, BinningConfig, GridSpec, Objective,
};
use credence::model::{PredictionSet, ScoreKind};

/// Synthetic overconfident model: logits are correct 80% of the time but
/// their margins are twice as large as they should be (so fitting should
/// recover a temperature near 2).
fn overconfident_dump() -> credence::Result<PredictionSet> {
    let calibrated_gap = 4.0f64.ln(); // P(argmax) = 0.8 at temperature 1
    let rows = vec![vec![2.0 * calibrated_gap, 0.0]; 500];
    let labels = (0..500).map(|i| usize::from(i % 5 == 4)).collect();
    PredictionSet::new(rows, ScoreKind::Logits, Some(labels), None, 2)
}

fn main() -> credence::Result<()> {
    let preds = overconfident_dump()?;
    let cfg = BinningConfig::equal_width(10)?;

    println!("reliability bins (before):");
    for bin in reliability_bins(&preds, &cfg)? {
        if bin.count == 0 {
            continue;
        }
        println!(
            "  [{:.2}, {:.2}) n={:<4} avg conf {:.3}  precision {:.3}",
            bin.lo, bin.hi, bin.count, bin.avg_confidence, bin.precision
        );
    }
    println!("ECE before: {:.4}", ece(&preds, &cfg)?);

    let model = fit_temperature(&preds, Objective::Nll, &GridSpec::default(), &cfg)?;
    println!("fitted temperature: {:.3}", model.global_t);

    let rescaled = apply_temperature(&preds, &model)?;
    println!("ECE after:  {:.4}", ece(&rescaled, &cfg)?);
    Ok(())
}
