//! Multi-run summarization and paired significance testing.
//!
//! A single training run does not capture seed-induced variance, so model
//! scores are summarized as mean ± 3σ over paired runs and compared with
//! a one-sided paired t-test. A comparison is flagged as practically
//! significant only when it is statistically significant *and* the mean
//! difference clears a user-supplied magnitude threshold.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Mean, sample standard deviation, and 3σ range of one model's runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator).
    pub std: f64,
    pub three_sigma_range: (f64, f64),
    pub n_runs: usize,
}

/// Outcome of a one-sided paired t-test (H1: A > B).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub mean_diff: f64,
    pub t_statistic: f64,
    pub degrees_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub statistically_significant: bool,
    pub practically_significant: bool,
    pub practical_threshold: f64,
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Summarizes a list of per-run metric values. Requires n ≥ 2.
pub fn summarize_runs(values: &[f64]) -> Result<RunSummary> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 runs for a summary, got {}",
            values.len()
        )));
    }
    let (mean, std) = mean_and_sample_std(values);
    Ok(RunSummary {
        mean,
        std,
        three_sigma_range: (mean - 3.0 * std, mean + 3.0 * std),
        n_runs: values.len(),
    })
}

/// Upper-tail probability P(T ≥ t) of Student's t with `df` degrees of
/// freedom, via the regularized incomplete beta identity.
pub fn student_t_upper_tail(t: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::invalid("degrees of freedom must be at least 1"));
    }
    if !t.is_finite() {
        return Err(Error::invalid("t statistic must be finite"));
    }
    let nu = df as f64;
    // P(|T| >= |t|) = I_x(nu/2, 1/2) with x = nu / (nu + t^2)
    let x = nu / (nu + t * t);
    let two_sided = beta_reg(nu / 2.0, 0.5, x);
    let tail = 0.5 * two_sided;
    Ok(if t >= 0.0 { tail } else { 1.0 - tail })
}

/// One-sided paired t-test of `a` against `b` (H1: mean(a−b) > 0).
///
/// Zero-variance differences use a fixed convention: p = 0 if the mean
/// difference is positive, 0.5 if zero, 1 if negative.
pub fn paired_t_test(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    practical_threshold: f64,
) -> Result<ComparisonResult> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "paired samples have different lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 paired runs, got {}",
            a.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must be in [0,1], got {alpha}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let (mean_diff, std_diff) = mean_and_sample_std(&diffs);
    let df = n - 1;
    let (t_statistic, p_value) = if std_diff == 0.0 {
        if mean_diff > 0.0 {
            (f64::INFINITY, 0.0)
        } else if mean_diff < 0.0 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        }
    } else {
        let t = mean_diff / (std_diff / (n as f64).sqrt());
        (t, student_t_upper_tail(t, df)?)
    };
    let statistically_significant = p_value < alpha;
    Ok(ComparisonResult {
        mean_diff,
        t_statistic,
        degrees_freedom: df,
        p_value,
        alpha,
        statistically_significant,
        practically_significant: statistically_significant && mean_diff >= practical_threshold,
        practical_threshold,
    })
}
