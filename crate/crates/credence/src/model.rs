//! Core data types and the softmax/argmax primitives shared by every
//! other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability-row sums on ingest; rows within this drift
/// of 1.0 are renormalized.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// Ordered catalog of class names, mapping names to score-column indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCatalog {
    names: Vec<String>,
}

impl ClassCatalog {
    /// Builds a catalog from an ordered name list. Names must be unique,
    /// non-empty, and at least two.
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::invalid(format!(
                "class catalog needs at least 2 classes, got {}",
                names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::invalid("class catalog contains an empty name"));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate class name '{name}'")));
            }
        }
        Ok(ClassCatalog { names })
    }

    /// Catalog with generated names `class_0 .. class_{c-1}`.
    pub fn numbered(c: usize) -> Result<Self> {
        ClassCatalog::new((0..c).map(|i| format!("class_{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Whether a score matrix holds raw logits or normalized probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Logits,
    Probabilities,
}

/// An N×C matrix of per-example class scores with optional ground-truth
/// labels and example ids. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    scores: Vec<Vec<f64>>,
    kind: ScoreKind,
    labels: Option<Vec<usize>>,
    ids: Option<Vec<String>>,
    num_classes: usize,
}

impl PredictionSet {
    /// Validates and constructs a prediction set. Probability rows may
    /// drift from sum 1 by up to [`PROB_SUM_TOLERANCE`] and are
    /// renormalized.
    pub fn new(
        scores: Vec<Vec<f64>>,
        kind: ScoreKind,
        labels: Option<Vec<usize>>,
        ids: Option<Vec<String>>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let n = scores.len();
        let mut scores = scores;
        for (i, row) in scores.iter_mut().enumerate() {
            if row.len() != num_classes {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {num_classes}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains a non-finite score")));
            }
            if kind == ScoreKind::Probabilities {
                if row.iter().any(|&v| v < 0.0) {
                    return Err(Error::invalid(format!("row {i} contains a negative probability")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "row {i} sums to {sum}, outside tolerance of 1"
                    )));
                }
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::invalid(format!(
                    "label count {} does not match row count {n}",
                    labels.len()
                )));
            }
            for (i, &label) in labels.iter().enumerate() {
                if label >= num_classes {
                    return Err(Error::invalid(format!(
                        "row {i} label {label} out of range [0, {num_classes})"
                    )));
                }
            }
        }
        if let Some(ids) = &ids {
            if ids.len() != n {
                return Err(Error::invalid(format!(
                    "id count {} does not match row count {n}",
                    ids.len()
                )));
            }
        }
        Ok(PredictionSet {
            scores,
            kind,
            labels,
            ids,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    /// The id of row `i`, falling back to the row index.
    pub fn id_or_index(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => i.to_string(),
        }
    }

    /// Converts logits to probabilities with plain softmax (T = 1);
    /// probability inputs are returned unchanged.
    pub fn to_probabilities(&self) -> Result<PredictionSet> {
        match self.kind {
            ScoreKind::Probabilities => Ok(self.clone()),
            ScoreKind::Logits => {
                let rows = self
                    .scores
                    .iter()
                    .map(|row| softmax(row, 1.0))
                    .collect::<Result<Vec<_>>>()?;
                PredictionSet::new(
                    rows,
                    ScoreKind::Probabilities,
                    self.labels.clone(),
                    self.ids.clone(),
                    self.num_classes,
                )
            }
        }
    }

    /// Replaces the score matrix, keeping labels/ids.
    pub fn with_scores(&self, scores: Vec<Vec<f64>>, kind: ScoreKind) -> Result<PredictionSet> {
        PredictionSet::new(
            scores,
            kind,
            self.labels.clone(),
            self.ids.clone(),
            self.num_classes,
        )
    }
}

/// Temperature-scaled softmax with max-subtraction for overflow safety.
/// `temperature` = 1 is plain softmax.
pub fn softmax(logit_row: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if logit_row.is_empty() {
        return Err(Error::invalid("softmax of an empty row"));
    }
    if logit_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("softmax input contains a non-finite logit"));
    }
    let max = logit_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logit_row
        .iter()
        .map(|&v| ((v - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Index of the row maximum; ties broken by lowest index.
pub fn argmax_class(prob_row: &[f64]) -> Result<usize> {
    if prob_row.is_empty() {
        return Err(Error::invalid("argmax of an empty row"));
    }
    if prob_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("argmax input contains a non-finite value"));
    }
    let mut best = 0;
    for (i, &v) in prob_row.iter().enumerate().skip(1) {
        if v > prob_row[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Paired per-seed metric values for K models across R runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunScoreTable {
    model_names: Vec<String>,
    scores: Vec<Vec<f64>>, // R rows, K columns
}

impl RunScoreTable {
    pub fn new(model_names: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if model_names.is_empty() {
            return Err(Error::invalid("run table has no model columns"));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &model_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate model name '{name}'")));
            }
        }
        for (i, row) in scores.iter().enumerate() {
            if row.len() != model_names.len() {
                return Err(Error::invalid(format!(
                    "run {i} has {} values, expected {}",
                    row.len(),
                    model_names.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("run {i} contains a non-finite value")));
            }
        }
        Ok(RunScoreTable {
            model_names,
            scores,
        })
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn num_runs(&self) -> usize {
        self.scores.len()
    }

    /// Per-run values for one model column.
    pub fn column(&self, model: &str) -> Result<Vec<f64>> {
        let idx = self
            .model_names
            .iter()
            .position(|n| n == model)
            .ok_or_else(|| Error::invalid(format!("unknown model '{model}'")))?;
        Ok(self.scores.iter().map(|row| row[idx]).collect())
    }
}
