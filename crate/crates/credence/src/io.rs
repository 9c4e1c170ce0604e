//! Ingestion and serialization of prediction dumps, run-score tables,
//! and prior files.
//!
//! Predictions CSV: header `id,label,logit_0,...,logit_{C-1}` (or
//! `prob_*` columns); the `label` column is optional. Predictions JSONL:
//! a header line `{"kind":"logits"}` followed by one object per example
//! with keys `id`, optional `label`, and `scores`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PredictionSet, RunScoreTable, ScoreKind};
use crate::prior_shift::PriorVector;

/// On-disk format of a prediction dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Csv,
    Jsonl,
}

impl DumpFormat {
    /// Guesses the format from the file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> DumpFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => DumpFormat::Jsonl,
            _ => DumpFormat::Csv,
        }
    }
}

/// Loads and validates a prediction dump. Row order is preserved.
pub fn load_predictions(path: &Path, format: DumpFormat) -> Result<PredictionSet> {
    match format {
        DumpFormat::Csv => load_predictions_csv(path),
        DumpFormat::Jsonl => load_predictions_jsonl(path),
    }
}

fn parse_score(field: &str, line: usize, col: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::ingestion(line, format!("cannot parse '{field}' in column {col}")))?;
    if !v.is_finite() {
        return Err(Error::ingestion(
            line,
            format!("non-finite score '{field}' in column {col}"),
        ));
    }
    Ok(v)
}

fn load_predictions_csv(path: &Path) -> Result<PredictionSet> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();

    let mut id_col = None;
    let mut label_col = None;
    let mut score_cols: Vec<(usize, usize)> = Vec::new(); // (column, class index)
    let mut kind = None;
    for (i, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == "id" {
            id_col = Some(i);
        } else if name == "label" {
            label_col = Some(i);
        } else if let Some(rest) = name.strip_prefix("logit_") {
            let class: usize = rest
                .parse()
                .map_err(|_| Error::ingestion(1, format!("bad score column '{name}'")))?;
            if kind == Some(ScoreKind::Probabilities) {
                return Err(Error::ingestion(1, "mixed logit_* and prob_* columns"));
            }
            kind = Some(ScoreKind::Logits);
            score_cols.push((i, class));
        } else if let Some(rest) = name.strip_prefix("prob_") {
            let class: usize = rest
                .parse()
                .map_err(|_| Error::ingestion(1, format!("bad score column '{name}'")))?;
            if kind == Some(ScoreKind::Logits) {
                return Err(Error::ingestion(1, "mixed logit_* and prob_* columns"));
            }
            kind = Some(ScoreKind::Probabilities);
            score_cols.push((i, class));
        } else {
            return Err(Error::ingestion(1, format!("unrecognized column '{name}'")));
        }
    }
    let kind = kind.ok_or_else(|| Error::ingestion(1, "no logit_* or prob_* columns"))?;
    let num_classes = score_cols.len();
    let mut classes_seen: Vec<bool> = vec![false; num_classes];
    for &(_, class) in &score_cols {
        if class >= num_classes || classes_seen[class] {
            return Err(Error::ingestion(
                1,
                format!("score columns must cover 0..{num_classes} exactly once"),
            ));
        }
        classes_seen[class] = true;
    }
    score_cols.sort_by_key(|&(_, class)| class);

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::ingestion(
                line,
                format!("expected {} fields, got {}", header.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(num_classes);
        for &(col, class) in &score_cols {
            row.push(parse_score(&record[col], line, &format!("#{class}"))?);
        }
        scores.push(row);
        if let Some(col) = label_col {
            let label: usize = record[col].trim().parse().map_err(|_| {
                Error::ingestion(line, format!("cannot parse label '{}'", &record[col]))
            })?;
            if label >= num_classes {
                return Err(Error::ingestion(
                    line,
                    format!("label {label} out of range [0, {num_classes})"),
                ));
            }
            labels.push(label);
        }
        if let Some(col) = id_col {
            ids.push(record[col].to_string());
        }
    }
    PredictionSet::new(
        scores,
        kind,
        label_col.map(|_| labels),
        id_col.map(|_| ids),
        num_classes,
    )
    .map_err(|e| match e {
        Error::Invalid(msg) => Error::ingestion(0, msg),
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    kind: ScoreKind,
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    scores: Vec<f64>,
}

fn load_predictions_jsonl(path: &Path) -> Result<PredictionSet> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::ingestion(1, "empty file, expected a kind header line"))??;
    let header: JsonlHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::ingestion(1, format!("bad kind header: {e}")))?;

    let mut scores = Vec::new();
    let mut labels: Vec<Option<usize>> = Vec::new();
    let mut ids = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line)
            .map_err(|e| Error::ingestion(lineno, format!("bad row: {e}")))?;
        if row.scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::ingestion(lineno, "non-finite score"));
        }
        scores.push(row.scores);
        labels.push(row.label);
        ids.push(row.id);
    }
    // Labels must be present on every row or absent everywhere.
    let labels = if labels.iter().all(Option::is_some) && !labels.is_empty() {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else if labels.iter().any(Option::is_some) && !labels.iter().all(Option::is_some) {
        return Err(Error::ingestion(0, "labels present on some rows but not all"));
    } else {
        None
    };
    let num_classes = scores.first().map(Vec::len).unwrap_or(2);
    PredictionSet::new(scores, header.kind, labels, Some(ids), num_classes).map_err(|e| match e {
        Error::Invalid(msg) => Error::ingestion(0, msg),
        other => other,
    })
}

/// Writes a prediction dump as CSV with `logit_*` or `prob_*` columns
/// per the set's kind.
pub fn save_predictions_csv(preds: &PredictionSet, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let prefix = match preds.kind() {
        ScoreKind::Logits => "logit",
        ScoreKind::Probabilities => "prob",
    };
    let mut header = vec!["id".to_string()];
    if preds.labels().is_some() {
        header.push("label".to_string());
    }
    for c in 0..preds.num_classes() {
        header.push(format!("{prefix}_{c}"));
    }
    writer.write_record(&header)?;
    for i in 0..preds.len() {
        let mut record = vec![preds.id_or_index(i)];
        if let Some(labels) = preds.labels() {
            record.push(labels[i].to_string());
        }
        for v in preds.row(i) {
            record.push(v.to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a prediction dump as JSONL with a leading kind header line.
pub fn save_predictions_jsonl(preds: &PredictionSet, path: &Path) -> Result<()> {
    let mut file = File::create(path)?;
    writeln!(
        file,
        "{}",
        serde_json::to_string(&JsonlHeader { kind: preds.kind() })?
    )?;
    for i in 0..preds.len() {
        let row = JsonlRow {
            id: preds.id_or_index(i),
            label: preds.labels().map(|l| l[i]),
            scores: preds.row(i).to_vec(),
        };
        writeln!(file, "{}", serde_json::to_string(&row)?)?;
    }
    Ok(())
}

/// Loads a run-score table: header row of model names, one paired run
/// per subsequent row.
pub fn load_run_table(path: &Path) -> Result<RunScoreTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let model_names: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut scores = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let mut row = Vec::with_capacity(model_names.len());
        for (j, field) in record.iter().enumerate() {
            row.push(parse_score(field, line, &model_names.get(j).cloned().unwrap_or_default())?);
        }
        scores.push(row);
    }
    RunScoreTable::new(model_names, scores)
}

/// Loads a `class,prior` CSV, ordering priors by the given class names.
/// Every class must appear exactly once.
pub fn load_priors_csv(path: &Path, class_names: &[String]) -> Result<PriorVector> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() != 2 || header[0].trim() != "class" || header[1].trim() != "prior" {
        return Err(Error::ingestion(1, "expected header 'class,prior'"));
    }
    let mut values = vec![None; class_names.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let class = record[0].trim();
        // Accept either a catalog name or a bare class index.
        let idx = class_names
            .iter()
            .position(|n| n == class)
            .or_else(|| class.parse::<usize>().ok().filter(|&i| i < class_names.len()))
            .ok_or_else(|| Error::ingestion(line, format!("unknown class '{class}'")))?;
        if values[idx].is_some() {
            return Err(Error::ingestion(line, format!("duplicate class '{class}'")));
        }
        values[idx] = Some(parse_score(&record[1], line, "prior")?);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::ingestion(0, format!("missing prior for class '{}'", class_names[i]))))
        .collect::<Result<Vec<f64>>>()?;
    PriorVector::new(values)
}
