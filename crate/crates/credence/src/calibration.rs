//! Calibration measurement and repair.
//!
//! Reliability bins quantize argmax-selected confidences and compare the
//! average confidence in each bin against the bin's precision. ECE is the
//! count-weighted average of the per-bin absolute gaps. Total calibration
//! error applies the same construction to *all* N·C score entries,
//! comparing each bin's average entry value to the fraction of entries
//! belonging to the ground-truth class.
//!
//! Temperature scaling divides logits by a positive constant before the
//! softmax; the scale is fitted by deterministic grid search, globally or
//! per argmax-predicted class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax_class, softmax, PredictionSet, ScoreKind};

/// Equal-width partition of [0,1] into `num_bins` bins. A value v falls
/// in bin m iff edges[m] ≤ v < edges[m+1]; v = 1 goes to the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    pub num_bins: usize,
    pub edges: Vec<f64>,
}

/// Default bin count for reliability diagrams.
pub const DEFAULT_NUM_BINS: usize = 15;

impl BinningConfig {
    pub fn equal_width(num_bins: usize) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::invalid("need at least one bin"));
        }
        let edges = (0..=num_bins).map(|i| i as f64 / num_bins as f64).collect();
        Ok(BinningConfig { num_bins, edges })
    }

    /// Bin index for a confidence value in [0,1].
    pub fn bin_of(&self, value: f64) -> usize {
        if value >= 1.0 {
            return self.num_bins - 1;
        }
        // Equal-width edges admit direct indexing; clamp for safety at 0.
        let idx = (value.max(0.0) * self.num_bins as f64) as usize;
        idx.min(self.num_bins - 1)
    }
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig::equal_width(DEFAULT_NUM_BINS).unwrap()
    }
}

/// One reliability-diagram bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean of member confidence values; 0 for empty bins.
    pub avg_confidence: f64,
    /// Fraction of members whose prediction is correct (or, for total
    /// calibration, whose entry corresponds to the ground-truth class).
    pub precision: f64,
}

/// Reliability bins plus the summary error values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<ReliabilityBin>,
    pub ece: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tce: Option<f64>,
    pub n_examples: usize,
}

fn require_labels(preds: &PredictionSet) -> Result<&[usize]> {
    preds
        .labels()
        .ok_or_else(|| Error::invalid("calibration requires ground-truth labels"))
}

/// Bins argmax-selected confidences and computes per-bin average
/// confidence and precision. Logit inputs are converted with plain
/// softmax first.
pub fn reliability_bins(preds: &PredictionSet, cfg: &BinningConfig) -> Result<Vec<ReliabilityBin>> {
    require_labels(preds)?;
    let probs = preds.to_probabilities()?;
    let labels = probs.labels().unwrap();

    let mut counts = vec![0usize; cfg.num_bins];
    let mut conf_sums = vec![0.0f64; cfg.num_bins];
    let mut correct = vec![0usize; cfg.num_bins];
    for (row, &label) in probs.rows().iter().zip(labels) {
        let pred = argmax_class(row)?;
        let confidence = row[pred];
        let m = cfg.bin_of(confidence);
        counts[m] += 1;
        conf_sums[m] += confidence;
        if pred == label {
            correct[m] += 1;
        }
    }
    Ok((0..cfg.num_bins)
        .map(|m| ReliabilityBin {
            lo: cfg.edges[m],
            hi: cfg.edges[m + 1],
            count: counts[m],
            avg_confidence: if counts[m] > 0 {
                conf_sums[m] / counts[m] as f64
            } else {
                0.0
            },
            precision: if counts[m] > 0 {
                correct[m] as f64 / counts[m] as f64
            } else {
                0.0
            },
        })
        .collect())
}

/// Count-weighted average gap between per-bin average confidence and
/// precision. Empty bins contribute zero weight; an empty set yields 0.
pub fn ece(preds: &PredictionSet, cfg: &BinningConfig) -> Result<f64> {
    let bins = reliability_bins(preds, cfg)?;
    Ok(ece_from_bins(&bins, preds.len()))
}

/// Recomputes ECE from emitted bins (also usable for total-calibration
/// bins with the appropriate total weight).
pub fn ece_from_bins(bins: &[ReliabilityBin], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for bin in bins {
        if bin.count > 0 {
            acc += (bin.count as f64 / total as f64) * (bin.avg_confidence - bin.precision).abs();
        }
    }
    acc
}

/// Bins every one of the N·C score entries; per bin, `precision` is the
/// fraction of entries whose class equals the ground-truth label.
pub fn total_calibration_bins(
    preds: &PredictionSet,
    cfg: &BinningConfig,
) -> Result<Vec<ReliabilityBin>> {
    require_labels(preds)?;
    let probs = preds.to_probabilities()?;
    let labels = probs.labels().unwrap();

    let mut counts = vec![0usize; cfg.num_bins];
    let mut value_sums = vec![0.0f64; cfg.num_bins];
    let mut truth = vec![0usize; cfg.num_bins];
    for (row, &label) in probs.rows().iter().zip(labels) {
        for (class, &value) in row.iter().enumerate() {
            let m = cfg.bin_of(value);
            counts[m] += 1;
            value_sums[m] += value;
            if class == label {
                truth[m] += 1;
            }
        }
    }
    Ok((0..cfg.num_bins)
        .map(|m| ReliabilityBin {
            lo: cfg.edges[m],
            hi: cfg.edges[m + 1],
            count: counts[m],
            avg_confidence: if counts[m] > 0 {
                value_sums[m] / counts[m] as f64
            } else {
                0.0
            },
            precision: if counts[m] > 0 {
                truth[m] as f64 / counts[m] as f64
            } else {
                0.0
            },
        })
        .collect())
}

/// ECE-style error over all N·C score entries (weight N·C in total).
pub fn total_calibration_error(preds: &PredictionSet, cfg: &BinningConfig) -> Result<f64> {
    let bins = total_calibration_bins(preds, cfg)?;
    Ok(ece_from_bins(&bins, preds.len() * preds.num_classes()))
}

/// Full calibration report; TCE is computed when `include_tce` is set.
pub fn calibration_report(
    preds: &PredictionSet,
    cfg: &BinningConfig,
    include_tce: bool,
) -> Result<CalibrationReport> {
    let bins = reliability_bins(preds, cfg)?;
    let ece = ece_from_bins(&bins, preds.len());
    let tce = if include_tce {
        Some(total_calibration_error(preds, cfg)?)
    } else {
        None
    };
    Ok(CalibrationReport {
        bins,
        ece,
        tce,
        n_examples: preds.len(),
    })
}

/// Fitting objective for temperature search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Nll,
    Ece,
}

/// Log-spaced temperature search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min > 0.0 && max > min) || points < 2 {
            return Err(Error::invalid("grid needs 0 < min < max and at least 2 points"));
        }
        Ok(GridSpec { min, max, points })
    }

    pub fn values(&self) -> Vec<f64> {
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..self.points)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.points - 1) as f64).exp())
            .collect()
    }

    /// Multiplicative spacing between adjacent grid points.
    pub fn step_ratio(&self) -> f64 {
        ((self.max / self.min).ln() / (self.points - 1) as f64).exp()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            min: 0.05,
            max: 20.0,
            points: 200,
        }
    }
}

/// Whether one temperature is shared or each argmax class has its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemperatureMode {
    Global,
    PerClass,
}

/// Fitted temperature(s); per-class entries are keyed by argmax class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub mode: TemperatureMode,
    pub global_t: f64,
    /// Length-C temperatures; equals `global_t` everywhere in global mode
    /// and for under-populated classes in per-class mode.
    pub per_class_t: Vec<f64>,
    pub objective: Objective,
}

impl TemperatureModel {
    pub fn global(t: f64, num_classes: usize, objective: Objective) -> Self {
        TemperatureModel {
            mode: TemperatureMode::Global,
            global_t: t,
            per_class_t: vec![t; num_classes],
            objective,
        }
    }
}

/// Default minimum per-class sample count before falling back to the
/// global temperature.
pub const DEFAULT_MIN_SAMPLES: usize = 25;

fn require_logits_with_labels(preds: &PredictionSet) -> Result<()> {
    if preds.kind() != ScoreKind::Logits {
        return Err(Error::invalid("temperature fitting requires logit inputs"));
    }
    require_labels(preds)?;
    if preds.is_empty() {
        return Err(Error::InsufficientData("no examples to fit on".into()));
    }
    Ok(())
}

fn objective_value(
    rows: &[&Vec<f64>],
    labels: &[usize],
    t: f64,
    objective: Objective,
    cfg: &BinningConfig,
) -> Result<f64> {
    match objective {
        Objective::Nll => {
            let mut total = 0.0;
            for (row, &label) in rows.iter().zip(labels) {
                let p = softmax(row, t)?;
                total -= p[label].max(1e-300).ln();
            }
            Ok(total / rows.len() as f64)
        }
        Objective::Ece => {
            let scaled: Vec<Vec<f64>> =
                rows.iter().map(|row| softmax(row, t)).collect::<Result<_>>()?;
            let set = PredictionSet::new(
                scaled,
                ScoreKind::Probabilities,
                Some(labels.to_vec()),
                None,
                rows[0].len(),
            )?;
            ece(&set, cfg)
        }
    }
}

fn grid_argmin(
    rows: &[&Vec<f64>],
    labels: &[usize],
    objective: Objective,
    grid: &GridSpec,
    cfg: &BinningConfig,
) -> Result<f64> {
    let mut best_t = f64::NAN;
    let mut best_obj = f64::INFINITY;
    for t in grid.values() {
        let obj = objective_value(rows, labels, t, objective, cfg)?;
        // Ties go to the temperature closest to 1.
        let better = obj < best_obj
            || (obj == best_obj && (t - 1.0).abs() < (best_t - 1.0).abs());
        if better {
            best_t = t;
            best_obj = obj;
        }
    }
    Ok(best_t)
}

/// Fits a single temperature by grid search over log-spaced candidates.
/// Ties are broken toward T = 1; decisions are unchanged by construction.
pub fn fit_temperature(
    preds: &PredictionSet,
    objective: Objective,
    grid: &GridSpec,
    cfg: &BinningConfig,
) -> Result<TemperatureModel> {
    require_logits_with_labels(preds)?;
    let rows: Vec<&Vec<f64>> = preds.rows().iter().collect();
    let labels = preds.labels().unwrap();
    let t = grid_argmin(&rows, labels, objective, grid, cfg)?;
    Ok(TemperatureModel::global(t, preds.num_classes(), objective))
}

/// Fits one temperature per argmax-predicted class; partitions smaller
/// than `min_samples` fall back to the global fit.
pub fn fit_per_class_temperatures(
    preds: &PredictionSet,
    objective: Objective,
    grid: &GridSpec,
    cfg: &BinningConfig,
    min_samples: usize,
) -> Result<TemperatureModel> {
    require_logits_with_labels(preds)?;
    let labels = preds.labels().unwrap();
    let global = fit_temperature(preds, objective, grid, cfg)?;

    let c = preds.num_classes();
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, row) in preds.rows().iter().enumerate() {
        partitions[argmax_class(row)?].push(i);
    }
    let mut per_class_t = vec![global.global_t; c];
    for (class, part) in partitions.iter().enumerate() {
        if part.len() >= min_samples.max(1) {
            let rows: Vec<&Vec<f64>> = part.iter().map(|&i| &preds.rows()[i]).collect();
            let part_labels: Vec<usize> = part.iter().map(|&i| labels[i]).collect();
            per_class_t[class] = grid_argmin(&rows, &part_labels, objective, grid, cfg)?;
        }
    }
    Ok(TemperatureModel {
        mode: TemperatureMode::PerClass,
        global_t: global.global_t,
        per_class_t,
        objective,
    })
}

/// Applies a fitted temperature model to logits, yielding probabilities.
/// Per-class mode selects the temperature by each row's argmax class;
/// the argmax of every row is unchanged.
pub fn apply_temperature(preds: &PredictionSet, model: &TemperatureModel) -> Result<PredictionSet> {
    if preds.kind() != ScoreKind::Logits {
        return Err(Error::invalid("temperature applies to logit inputs"));
    }
    if model.mode == TemperatureMode::PerClass && model.per_class_t.len() != preds.num_classes() {
        return Err(Error::invalid(format!(
            "temperature model has {} classes, predictions have {}",
            model.per_class_t.len(),
            preds.num_classes()
        )));
    }
    let mut rows = Vec::with_capacity(preds.len());
    for row in preds.rows() {
        let t = match model.mode {
            TemperatureMode::Global => model.global_t,
            TemperatureMode::PerClass => model.per_class_t[argmax_class(row)?],
        };
        rows.push(softmax(row, t)?);
    }
    preds.with_scores(rows, ScoreKind::Probabilities)
}
