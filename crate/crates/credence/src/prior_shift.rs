//! Prior-shift adaptation.
//!
//! Given a posterior produced under known training priors, the
//! class-conditional likelihoods satisfy a homogeneous linear system
//! whose matrix is built from the posterior and the priors. The
//! likelihood vector is the nullspace direction of that matrix
//! (equivalently the eigenvalue-1 eigenvector of the matrix plus
//! identity), recovered up to scale. Re-applying Bayes' rule with new
//! priors then yields the shifted posterior; the unknown scale cancels
//! in the normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionSet, ScoreKind};

/// Smoothing constant added to zero posterior entries when opted in.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Residual bound for a recovered likelihood vector.
const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Strictly positive class priors, normalized to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorVector {
    values: Vec<f64>,
}

impl PriorVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("need at least 2 priors"));
        }
        if values.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::invalid("priors must be finite and strictly positive"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("priors sum to {sum}, expected 1")));
        }
        Ok(PriorVector {
            values: values.into_iter().map(|v| v / sum).collect(),
        })
    }

    /// Uniform priors over `n` classes.
    pub fn uniform(n: usize) -> Result<Self> {
        PriorVector::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The homogeneous system M·l = 0 built from one posterior and the
/// training priors: M[i][j] = δ_ij·π_j − q_i·π_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    matrix: Vec<Vec<f64>>,
    posterior: Vec<f64>,
}

impl ShiftSystem {
    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// M·v for a candidate likelihood vector.
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
            .collect()
    }

    pub fn max_residual(&self, v: &[f64]) -> f64 {
        self.residual(v).iter().fold(0.0, |acc, r| acc.max(r.abs()))
    }
}

fn check_posterior(posterior: &[f64], n: usize) -> Result<()> {
    if posterior.len() != n {
        return Err(Error::invalid(format!(
            "posterior has {} entries, priors have {n}",
            posterior.len()
        )));
    }
    if posterior.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::invalid("posterior entries must be finite and non-negative"));
    }
    let sum: f64 = posterior.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("posterior sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Builds the homogeneous system for one posterior under the training
/// priors.
pub fn build_shift_system(posterior: &[f64], train_priors: &PriorVector) -> Result<ShiftSystem> {
    let n = train_priors.len();
    check_posterior(posterior, n)?;
    let pi = train_priors.values();
    let matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let diag = if i == j { pi[j] } else { 0.0 };
                    diag - posterior[i] * pi[j]
                })
                .collect()
        })
        .collect();
    Ok(ShiftSystem {
        matrix,
        posterior: posterior.to_vec(),
    })
}

/// Likelihoods recovered up to scale; the scale gauge is fixed by
/// normalizing to sum 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodVector {
    values: Vec<f64>,
}

impl LikelihoodVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Solves A·x = b by LU decomposition with partial pivoting.
fn lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut lu: Vec<Vec<f64>> = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (piv, max) = (col..n)
            .map(|r| (r, lu[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if max == 0.0 {
            return Err(Error::Numerical("singular matrix in linear solve".into()));
        }
        lu.swap(col, piv);
        perm.swap(col, piv);
        for r in col + 1..n {
            let factor = lu[r][col] / lu[col][col];
            lu[r][col] = factor;
            for c in col + 1..n {
                lu[r][c] -= factor * lu[col][c];
            }
        }
    }
    let mut x: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for r in 1..n {
        for c in 0..r {
            x[r] -= lu[r][c] * x[c];
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            x[r] -= lu[r][c] * x[c];
        }
        x[r] /= lu[r][r];
    }
    Ok(x)
}

/// Nullspace direction of a rank-(N−1) matrix by Gaussian elimination
/// with partial pivoting; the pivot-free column's variable is the free
/// parameter.
fn elimination_nullspace(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    let scale = matrix
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("zero system matrix".into()));
    }
    let tol = 1e-10 * scale;

    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut row = 0;
    for col in 0..n {
        let (piv, max) = (row..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap_or((row, 0.0));
        if max <= tol {
            continue; // free column
        }
        a.swap(row, piv);
        for r in row + 1..n {
            let factor = a[r][col] / a[row][col];
            for c in col..n {
                a[r][c] -= factor * a[row][c];
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == n {
            break;
        }
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    if free_cols.len() != 1 {
        return Err(Error::Degenerate(format!(
            "system has a {}-dimensional nullspace, expected 1",
            free_cols.len()
        )));
    }
    let mut x = vec![0.0; n];
    x[free_cols[0]] = 1.0;
    for &(r, col) in pivots.iter().rev() {
        let mut acc = 0.0;
        for c in col + 1..n {
            acc += a[r][c] * x[c];
        }
        x[col] = -acc / a[r][col];
    }
    Ok(x)
}

/// Inverse iteration on A = M + I targeting the eigenvalue-1 eigenvector,
/// used when elimination fails to produce a clean direction.
fn inverse_iteration(system: &ShiftSystem) -> Result<Vec<f64>> {
    let n = system.dim();
    // (A - (1 + eps) I) = M - eps I
    let eps = 1e-9;
    let shifted: Vec<Vec<f64>> = system
        .matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| if i == j { v - eps } else { v })
                .collect()
        })
        .collect();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..200 {
        let mut y = lu_solve(&shifted, &x)?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numerical("inverse iteration diverged".into()));
        }
        for v in &mut y {
            *v /= norm;
        }
        let delta: f64 = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs().min((a + b).abs()))
            .fold(0.0, f64::max);
        x = y;
        if delta < 1e-14 {
            break;
        }
    }
    Ok(x)
}

fn normalize_positive(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let sum: f64 = v.iter().sum();
    if sum == 0.0 {
        return Err(Error::Numerical("nullspace direction has zero sum".into()));
    }
    for x in &mut v {
        *x /= sum;
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::Numerical(
            "nullspace direction is not sign-consistent".into(),
        ));
    }
    Ok(v)
}

/// Recovers the normalized likelihood vector from the shift system.
/// Fails with a degenerate-system error when the posterior contains
/// zeros (apply epsilon smoothing upstream to proceed).
pub fn recover_likelihoods(system: &ShiftSystem) -> Result<LikelihoodVector> {
    if system.posterior.iter().any(|&q| q == 0.0) {
        return Err(Error::Degenerate(
            "posterior contains zero entries; enable epsilon smoothing".into(),
        ));
    }
    let direction = elimination_nullspace(system.matrix())
        .and_then(normalize_positive)
        .or_else(|_| inverse_iteration(system).and_then(normalize_positive))?;
    let residual = system.max_residual(&direction);
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::Numerical(format!(
            "likelihood residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok(LikelihoodVector { values: direction })
}

/// Re-estimates one posterior under new priors: recover likelihoods
/// under the training priors, then re-apply Bayes' rule.
pub fn adapt_posterior(
    posterior: &[f64],
    train_priors: &PriorVector,
    new_priors: &PriorVector,
) -> Result<Vec<f64>> {
    if train_priors.len() != new_priors.len() {
        return Err(Error::invalid(format!(
            "prior vectors have different lengths ({} vs {})",
            train_priors.len(),
            new_priors.len()
        )));
    }
    let system = build_shift_system(posterior, train_priors)?;
    let likelihoods = recover_likelihoods(&system)?;
    let unnormalized: Vec<f64> = likelihoods
        .values()
        .iter()
        .zip(new_priors.values())
        .map(|(l, p)| l * p)
        .collect();
    let sum: f64 = unnormalized.iter().sum();
    Ok(unnormalized.into_iter().map(|v| v / sum).collect())
}

/// Adds ε to every entry and renormalizes; lifts zero posteriors into
/// the strictly positive region.
pub fn smooth_posterior(posterior: &[f64], epsilon: f64) -> Vec<f64> {
    let sum: f64 = posterior.iter().map(|&p| p + epsilon).sum();
    posterior.iter().map(|&p| (p + epsilon) / sum).collect()
}

/// Row-wise posterior adaptation over a probability prediction set;
/// labels and ids are carried through unchanged. With `smoothing` set,
/// rows containing zeros are epsilon-smoothed first.
pub fn adapt_prediction_set(
    preds: &PredictionSet,
    train_priors: &PriorVector,
    new_priors: &PriorVector,
    smoothing: bool,
) -> Result<PredictionSet> {
    if preds.kind() != ScoreKind::Probabilities {
        return Err(Error::invalid("prior adaptation requires probability inputs"));
    }
    let mut rows = Vec::with_capacity(preds.len());
    for i in 0..preds.len() {
        let row = preds.row(i);
        let smoothed;
        let row = if smoothing && row.iter().any(|&p| p == 0.0) {
            smoothed = smooth_posterior(row, SMOOTHING_EPSILON);
            smoothed.as_slice()
        } else {
            row
        };
        let adapted = adapt_posterior(row, train_priors, new_priors).map_err(|e| match e {
            Error::Degenerate(msg) => {
                Error::Degenerate(format!("row {}: {msg}", preds.id_or_index(i)))
            }
            other => other,
        })?;
        rows.push(adapted);
    }
    preds.with_scores(rows, ScoreKind::Probabilities)
}
