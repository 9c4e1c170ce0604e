//! Compare two models over paired evaluation runs: per-model mean ± 3σ
//! summaries plus a one-sided paired t-test with separate statistical
//! and practical significance verdicts.

use credence::stats::{paired_t_test, summarize_runs};

fn main() -> credence::Result<()> {
    // Accuracy (%) from five paired evaluation runs of each model.
    let candidate = [85.2, 84.9, 85.6, 85.1, 85.4];
    let baseline = [84.1, 84.3, 83.8, 84.5, 84.0];

    for (name, runs) in [("candidate", &candidate), ("baseline", &baseline)] {
        let s = summarize_runs(runs)?;
        println!(
            "{name:>9}: mean {:.2}, std {:.3}, 3-sigma range [{:.2}, {:.2}]",
            s.mean, s.std, s.three_sigma_range.0, s.three_sigma_range.1
        );
    }

    // H1: candidate > baseline. A difference under 0.5 points is treated
    // as practically meaningless even if statistically significant.
    let result = paired_t_test(&candidate, &baseline, 0.05, 0.5)?;
    println!(
        "paired t-test: t = {:.4} (df {}), p = {:.5}",
        result.t_statistic, result.degrees_freedom, result.p_value
    );
    println!(
        "statistically significant: {}, practically significant: {}",
        result.statistically_significant, result.practically_significant
    );
    Ok(())
}
