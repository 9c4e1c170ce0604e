//! Batch command-line front end.
//!
//! Subcommands: `compare`, `calibrate`, `reject`, `generalize`,
//! `adapt-priors`, and `apply` (the full pipeline: temperature →
//! prior adaptation → rejection → generalization). Exit codes: 0 on
//! success, 1 on validation errors, 2 on an infeasible rejection
//! constraint or a degenerate prior-shift system, 64 on usage errors.
//! All outputs are deterministic for identical inputs.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibration::{
    apply_temperature, calibration_report, fit_per_class_temperatures, fit_temperature,
    total_calibration_error, BinningConfig, GridSpec, Objective, TemperatureModel,
    DEFAULT_MIN_SAMPLES, DEFAULT_NUM_BINS,
};
use crate::error::{Error, Result};
use crate::hierarchy::{load_hierarchy, subset_generalize, PathStep};
use crate::io::{
    load_predictions, load_priors_csv, load_run_table, save_predictions_csv,
    save_predictions_jsonl, DumpFormat,
};
use crate::model::{argmax_class, ClassCatalog, PredictionSet, ScoreKind};
use crate::policy::{GeneralizationPolicy, PolicyBundle, PriorsPolicy};
use crate::prior_shift::adapt_prediction_set;
use crate::rejection::{fit_coverage_constrained, fit_risk_constrained, scored_outcomes};
use crate::stats::{paired_t_test, summarize_runs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "credence",
    version,
    about = "Confidence tooling for classifier prediction dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Nll,
    Ece,
}

impl From<ObjectiveArg> for Objective {
    fn from(value: ObjectiveArg) -> Objective {
        match value {
            ObjectiveArg::Nll => Objective::Nll,
            ObjectiveArg::Ece => Objective::Ece,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Prediction dump (CSV or JSONL)
    predictions: PathBuf,
    /// Input format; inferred from the extension when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl InputArgs {
    fn load(&self) -> Result<PredictionSet> {
        let format = match self.format {
            Some(FormatArg::Csv) => DumpFormat::Csv,
            Some(FormatArg::Jsonl) => DumpFormat::Jsonl,
            None => DumpFormat::from_path(&self.predictions),
        };
        load_predictions(&self.predictions, format)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Summarize paired multi-run scores and test one model against another
    Compare {
        /// Run-score table: header of model names, one paired run per row
        table: PathBuf,
        /// Model column treated as the candidate (H1: a > b)
        #[arg(long)]
        a: String,
        /// Model column treated as the baseline
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Minimum mean difference considered practically meaningful
        #[arg(long, default_value_t = 1.0)]
        practical_threshold: f64,
    },
    /// Measure calibration and fit a temperature model on labeled logits
    Calibrate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_NUM_BINS)]
        bins: usize,
        #[arg(long, value_enum, default_value = "nll")]
        objective: ObjectiveArg,
        /// Fit one temperature per argmax-predicted class
        #[arg(long)]
        per_class: bool,
        /// Minimum per-class examples before falling back to the global fit
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        /// Policy file to create or update with the fitted temperature
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the pre-calibration reliability bins as CSV
        #[arg(long)]
        bins_csv: Option<PathBuf>,
    },
    /// Fit an accept/reject threshold, or apply one to partition a dump
    Reject {
        #[command(flatten)]
        input: InputArgs,
        /// Minimize risk subject to accepting at least this fraction
        #[arg(long, conflicts_with = "max_risk")]
        min_coverage: Option<f64>,
        /// Maximize coverage subject to at most this accepted error rate
        #[arg(long)]
        max_risk: Option<f64>,
        /// Policy file to create or update with the fitted threshold
        #[arg(long)]
        out: Option<PathBuf>,
        /// Apply the rejection threshold from this policy instead of fitting
        #[arg(long, conflicts_with_all = ["min_coverage", "max_risk", "out"])]
        apply_policy: Option<PathBuf>,
        /// Output file for accepted examples (apply mode)
        #[arg(long, requires = "apply_policy")]
        accepted_out: Option<PathBuf>,
        /// Output file for rejected examples (apply mode)
        #[arg(long, requires = "apply_policy")]
        rejected_out: Option<PathBuf>,
    },
    /// Soften per-example predictions upward through a class hierarchy
    Generalize {
        #[command(flatten)]
        input: InputArgs,
        /// Hierarchy JSON (required unless --subset)
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        #[arg(long)]
        threshold: f64,
        /// Hierarchy-free mode: grow a descending-confidence class subset
        #[arg(long)]
        subset: bool,
        /// Warn when the input's total calibration error exceeds this
        #[arg(long, default_value_t = 0.1)]
        tce_warn_level: f64,
        /// Output JSONL file; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Policy file to create or update with the hierarchy + threshold
        #[arg(long, requires = "hierarchy")]
        policy_out: Option<PathBuf>,
    },
    /// Re-estimate posteriors under new class priors
    AdaptPriors {
        #[command(flatten)]
        input: InputArgs,
        /// CSV of training priors (`class,prior`)
        #[arg(long)]
        train_priors: PathBuf,
        /// CSV of deployment priors (`class,prior`)
        #[arg(long)]
        new_priors: PathBuf,
        /// Output prediction file (format from extension)
        #[arg(long)]
        out: PathBuf,
        /// Epsilon-smooth rows containing zero probabilities
        #[arg(long)]
        smooth: bool,
        /// Policy file to create or update with the prior pair
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Run the full pipeline from a policy bundle
    Apply {
        #[command(flatten)]
        input: InputArgs,
        /// Policy bundle produced by the fitting subcommands
        #[arg(long)]
        policy: PathBuf,
        /// Hierarchy JSON; overrides the bundle's generalization settings
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        /// Generalization threshold; overrides the bundle's setting
        #[arg(long)]
        threshold: Option<f64>,
        /// Epsilon-smooth rows containing zero probabilities
        #[arg(long)]
        smooth: bool,
        /// Output JSONL file; standard output when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses and executes one invocation, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Degenerate(_) => EXIT_INFEASIBLE,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn out_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct CompareOutput {
    model_a: String,
    model_b: String,
    summary_a: crate::stats::RunSummary,
    summary_b: crate::stats::RunSummary,
    comparison: crate::stats::ComparisonResult,
}

#[derive(Serialize)]
struct CalibrateOutput {
    temperature: TemperatureModel,
    before: crate::calibration::CalibrationReport,
    after: crate::calibration::CalibrationReport,
}

#[derive(Serialize)]
struct RejectApplyOutput {
    threshold: f64,
    accepted: usize,
    rejected: usize,
}

#[derive(Serialize)]
struct AdaptOutput {
    rows: usize,
    output: String,
}

#[derive(Serialize)]
struct GeneralizeLine<'a> {
    id: String,
    chosen: &'a str,
    confidence: f64,
    path: &'a [PathStep],
}

#[derive(Serialize)]
struct SubsetLine<'a> {
    id: String,
    members: &'a [crate::hierarchy::SubsetMember],
    total_confidence: f64,
}

#[derive(Serialize)]
struct DecisionLine<'a> {
    id: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    class_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<&'a str>,
    confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a [PathStep]>,
}

fn load_or_new_bundle(path: &Path) -> Result<PolicyBundle> {
    if path.exists() {
        PolicyBundle::load(path)
    } else {
        Ok(PolicyBundle::default())
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Compare {
            table,
            a,
            b,
            alpha,
            practical_threshold,
        } => {
            let runs = load_run_table(&table)?;
            let col_a = runs.column(&a)?;
            let col_b = runs.column(&b)?;
            let output = CompareOutput {
                summary_a: summarize_runs(&col_a)?,
                summary_b: summarize_runs(&col_b)?,
                comparison: paired_t_test(&col_a, &col_b, alpha, practical_threshold)?,
                model_a: a,
                model_b: b,
            };
            print_json(&output)?;
            Ok(EXIT_OK)
        }

        Command::Calibrate {
            input,
            bins,
            objective,
            per_class,
            min_samples,
            out,
            bins_csv,
        } => {
            let preds = input.load()?;
            let cfg = BinningConfig::equal_width(bins)?;
            let objective = Objective::from(objective);
            let grid = GridSpec::default();
            let before = calibration_report(&preds, &cfg, true)?;
            let model = if per_class {
                fit_per_class_temperatures(&preds, objective, &grid, &cfg, min_samples)?
            } else {
                fit_temperature(&preds, objective, &grid, &cfg)?
            };
            let after_preds = apply_temperature(&preds, &model)?;
            let after = calibration_report(&after_preds, &cfg, true)?;
            if let Some(path) = &bins_csv {
                let mut writer = csv::Writer::from_path(path)?;
                writer.write_record(["bin_lo", "bin_hi", "count", "avg_confidence", "precision"])?;
                for bin in &before.bins {
                    writer.write_record([
                        bin.lo.to_string(),
                        bin.hi.to_string(),
                        bin.count.to_string(),
                        bin.avg_confidence.to_string(),
                        bin.precision.to_string(),
                    ])?;
                }
                writer.flush()?;
            }
            if let Some(path) = &out {
                let mut bundle = load_or_new_bundle(path)?;
                bundle.temperature = Some(model.clone());
                bundle.record_provenance("calibration", &input.predictions)?;
                bundle.save(path)?;
            }
            print_json(&CalibrateOutput {
                temperature: model,
                before,
                after,
            })?;
            Ok(EXIT_OK)
        }

        Command::Reject {
            input,
            min_coverage,
            max_risk,
            out,
            apply_policy,
            accepted_out,
            rejected_out,
        } => {
            let preds = input.load()?;
            if let Some(policy_path) = apply_policy {
                let bundle = PolicyBundle::load(&policy_path)?;
                let policy = bundle
                    .rejection
                    .ok_or_else(|| Error::invalid("policy bundle has no rejection threshold"))?;
                let probs = preds.to_probabilities()?;
                let mut accepted_rows = Vec::new();
                let mut rejected_rows = Vec::new();
                for i in 0..probs.len() {
                    let row = probs.row(i);
                    let confidence = row[argmax_class(row)?];
                    if policy.accepts(confidence) {
                        accepted_rows.push(i);
                    } else {
                        rejected_rows.push(i);
                    }
                }
                if let Some(path) = &accepted_out {
                    save_partition(&probs, &accepted_rows, path)?;
                }
                if let Some(path) = &rejected_out {
                    save_partition(&probs, &rejected_rows, path)?;
                }
                print_json(&RejectApplyOutput {
                    threshold: policy.threshold,
                    accepted: accepted_rows.len(),
                    rejected: rejected_rows.len(),
                })?;
                return Ok(EXIT_OK);
            }

            let outcomes = scored_outcomes(&preds)?;
            let policy = match (min_coverage, max_risk) {
                (Some(c), None) => fit_coverage_constrained(&outcomes, c)?,
                (None, Some(r)) => fit_risk_constrained(&outcomes, r)?,
                _ => {
                    return Err(Error::invalid(
                        "exactly one of --min-coverage or --max-risk is required",
                    ))
                }
            };
            if let Some(path) = &out {
                let mut bundle = load_or_new_bundle(path)?;
                bundle.rejection = Some(policy.clone());
                bundle.record_provenance("rejection", &input.predictions)?;
                bundle.save(path)?;
            }
            let feasible = policy.feasible;
            print_json(&policy)?;
            Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }

        Command::Generalize {
            input,
            hierarchy,
            threshold,
            subset,
            tce_warn_level,
            out,
            policy_out,
        } => {
            let preds = input.load()?;
            if let (Some(path), Some(hierarchy)) = (&policy_out, &hierarchy) {
                let mut bundle = load_or_new_bundle(path)?;
                bundle.generalization = Some(GeneralizationPolicy {
                    hierarchy: hierarchy.display().to_string(),
                    threshold,
                });
                bundle.record_provenance("generalization", hierarchy)?;
                bundle.save(path)?;
            }
            let probs = preds.to_probabilities()?;
            if probs.labels().is_some() {
                let cfg = BinningConfig::default();
                let tce = total_calibration_error(&probs, &cfg)?;
                if tce > tce_warn_level {
                    eprintln!(
                        "warning: total calibration error {tce:.4} exceeds {tce_warn_level}; \
                         aggregated masses may be unreliable"
                    );
                }
            }
            let mut writer = out_writer(&out)?;
            if subset {
                for i in 0..probs.len() {
                    let result = subset_generalize(probs.row(i), threshold)?;
                    let line = SubsetLine {
                        id: probs.id_or_index(i),
                        members: &result.members,
                        total_confidence: result.total_confidence,
                    };
                    writeln!(writer, "{}", serde_json::to_string(&line)?)?;
                }
            } else {
                let path = hierarchy
                    .ok_or_else(|| Error::invalid("--hierarchy is required unless --subset"))?;
                let h = load_hierarchy(&path)?;
                h.validate_against(&ClassCatalog::numbered(probs.num_classes())?)?;
                for i in 0..probs.len() {
                    let result = h.generalize(probs.row(i), threshold)?;
                    let line = GeneralizeLine {
                        id: probs.id_or_index(i),
                        chosen: &result.chosen_step().name,
                        confidence: result.chosen_step().confidence,
                        path: &result.path,
                    };
                    writeln!(writer, "{}", serde_json::to_string(&line)?)?;
                }
            }
            Ok(EXIT_OK)
        }

        Command::AdaptPriors {
            input,
            train_priors,
            new_priors,
            out,
            smooth,
            policy_out,
        } => {
            let preds = input.load()?.to_probabilities()?;
            let catalog = ClassCatalog::numbered(preds.num_classes())?;
            let train = load_priors_csv(&train_priors, catalog.names())?;
            let new = load_priors_csv(&new_priors, catalog.names())?;
            if let Some(path) = &policy_out {
                let mut bundle = load_or_new_bundle(path)?;
                bundle.priors = Some(PriorsPolicy {
                    train: train.clone(),
                    new: new.clone(),
                });
                bundle.record_provenance("priors", &new_priors)?;
                bundle.save(path)?;
            }
            let adapted = adapt_prediction_set(&preds, &train, &new, smooth)?;
            match DumpFormat::from_path(&out) {
                DumpFormat::Csv => save_predictions_csv(&adapted, &out)?,
                DumpFormat::Jsonl => save_predictions_jsonl(&adapted, &out)?,
            }
            print_json(&AdaptOutput {
                rows: adapted.len(),
                output: out.display().to_string(),
            })?;
            Ok(EXIT_OK)
        }

        Command::Apply {
            input,
            policy,
            hierarchy,
            threshold,
            smooth,
            out,
        } => {
            let bundle = PolicyBundle::load(&policy)?;
            let preds = input.load()?;

            // Stage 1: temperature.
            let probs = match (&bundle.temperature, preds.kind()) {
                (Some(model), ScoreKind::Logits) => apply_temperature(&preds, model)?,
                _ => preds.to_probabilities()?,
            };
            // Stage 2: prior adaptation.
            let probs = match &bundle.priors {
                Some(PriorsPolicy { train, new }) => {
                    adapt_prediction_set(&probs, train, new, smooth)?
                }
                None => probs,
            };
            // Stages 3-4: rejection, then generalization of rejected rows.
            let gen_config = match (&hierarchy, threshold, &bundle.generalization) {
                (Some(path), t, stored) => Some(GeneralizationPolicy {
                    hierarchy: path.display().to_string(),
                    threshold: t
                        .or(stored.as_ref().map(|g| g.threshold))
                        .unwrap_or(0.9),
                }),
                (None, Some(t), Some(stored)) => Some(GeneralizationPolicy {
                    hierarchy: stored.hierarchy.clone(),
                    threshold: t,
                }),
                (None, None, stored) => stored.clone(),
                (None, Some(_), None) => {
                    return Err(Error::invalid(
                        "--threshold given without a hierarchy (flag or policy)",
                    ))
                }
            };
            let loaded_hierarchy = match &gen_config {
                Some(cfg) => {
                    let h = load_hierarchy(Path::new(&cfg.hierarchy))?;
                    h.validate_against(&ClassCatalog::numbered(probs.num_classes())?)?;
                    Some(h)
                }
                None => None,
            };

            let mut writer = out_writer(&out)?;
            for i in 0..probs.len() {
                let row = probs.row(i);
                let pred = argmax_class(row)?;
                let confidence = row[pred];
                let accepted = bundle
                    .rejection
                    .as_ref()
                    .map(|p| p.accepts(confidence))
                    .unwrap_or(true);
                let line = if accepted {
                    DecisionLine {
                        id: probs.id_or_index(i),
                        status: "accepted",
                        class_index: Some(pred),
                        node: None,
                        confidence,
                        path: None,
                    }
                } else if let (Some(h), Some(cfg)) = (&loaded_hierarchy, &gen_config) {
                    let result = h.generalize(row, cfg.threshold)?;
                    let step = result.chosen_step();
                    writeln!(
                        writer,
                        "{}",
                        serde_json::to_string(&DecisionLine {
                            id: probs.id_or_index(i),
                            status: "generalized",
                            class_index: None,
                            node: Some(&step.name),
                            confidence: step.confidence,
                            path: Some(&result.path),
                        })?
                    )?;
                    continue;
                } else {
                    DecisionLine {
                        id: probs.id_or_index(i),
                        status: "rejected",
                        class_index: Some(pred),
                        node: None,
                        confidence,
                        path: None,
                    }
                };
                writeln!(writer, "{}", serde_json::to_string(&line)?)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn save_partition(probs: &PredictionSet, rows: &[usize], path: &Path) -> Result<()> {
    let scores: Vec<Vec<f64>> = rows.iter().map(|&i| probs.row(i).to_vec()).collect();
    let labels = probs
        .labels()
        .map(|labels| rows.iter().map(|&i| labels[i]).collect());
    let ids = Some(rows.iter().map(|&i| probs.id_or_index(i)).collect());
    let subset = PredictionSet::new(
        scores,
        ScoreKind::Probabilities,
        labels,
        ids,
        probs.num_classes(),
    )?;
    match DumpFormat::from_path(path) {
        DumpFormat::Csv => save_predictions_csv(&subset, path),
        DumpFormat::Jsonl => save_predictions_jsonl(&subset, path),
    }
}
