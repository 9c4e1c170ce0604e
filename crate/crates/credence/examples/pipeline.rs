//! The full decision pipeline, end to end: fit a temperature and a
//! rejection threshold on labeled validation logits, then push an
//! unlabeled batch through temperature scaling, prior adaptation, the
//! accept/reject gate, and hierarchical generalization of the rejects.

use credence::calibration::{
    apply_temperature, fit_temperature, BinningConfig, GridSpec, Objective,
};
use credence::hierarchy::Hierarchy;
use credence::model::{argmax_class, PredictionSet, ScoreKind};
use credence::prior_shift::{adapt_prediction_set, PriorVector};
use credence::rejection::{fit_coverage_constrained, scored_outcomes};

const TREE: &str = r#"{
  "name": "root",
  "children": [
    {"name": "feline", "children": [
      {"name": "cat", "class_index": 0},
      {"name": "lynx", "class_index": 1}
    ]},
    {"name": "canine", "children": [
      {"name": "dog", "class_index": 2},
      {"name": "wolf", "class_index": 3}
    ]}
  ]
}"#;

fn synthetic(n: usize, labeled: bool) -> credence::Result<PredictionSet> {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 4;
        let gap = 0.4 + (i % 6) as f64 * 0.7;
        let mut logits = vec![0.0; 4];
        logits[class] = gap;
        // Runner-up mass goes to the sibling class, so an uncertain
        // prediction can still resolve one level up the hierarchy.
        logits[class ^ 1] = gap * 0.6;
        rows.push(logits);
        labels.push(if i % 6 == 0 { class ^ 1 } else { class });
    }
    PredictionSet::new(
        rows,
        ScoreKind::Logits,
        labeled.then_some(labels),
        None,
        4,
    )
}

fn main() -> credence::Result<()> {
    // --- Fitting phase, on labeled validation data -----------------------
    let val = synthetic(240, true)?;
    let cfg = BinningConfig::default();
    let temperature = fit_temperature(&val, Objective::Nll, &GridSpec::default(), &cfg)?;
    println!("fitted temperature: {:.3}", temperature.global_t);

    let scaled_val = apply_temperature(&val, &temperature)?;
    let rejection = fit_coverage_constrained(&scored_outcomes(&scaled_val)?, 0.75)?;
    println!(
        "rejection threshold {:.3} (coverage {:.3}, risk {:.3})",
        rejection.threshold, rejection.achieved_coverage, rejection.achieved_risk
    );

    // --- Decision phase, on an unlabeled batch ---------------------------
    let hierarchy = Hierarchy::from_json_str(TREE)?;
    let train_priors = PriorVector::uniform(4)?;
    let deploy_priors = PriorVector::new(vec![0.4, 0.1, 0.4, 0.1])?;

    let batch = synthetic(12, false)?;
    let batch = apply_temperature(&batch, &temperature)?;
    let batch = adapt_prediction_set(&batch, &train_priors, &deploy_priors, false)?;

    for i in 0..batch.len() {
        let row = batch.row(i);
        let pred = argmax_class(row)?;
        let confidence = row[pred];
        if rejection.accepts(confidence) {
            println!("example {i:>2}: accept class {pred} at {confidence:.3}");
        } else {
            let result = hierarchy.generalize(row, rejection.threshold)?;
            let step = result.chosen_step();
            println!(
                "example {i:>2}: generalize to '{}' at {:.3} (leaf was {confidence:.3})",
                step.name, step.confidence
            );
        }
    }
    Ok(())
}
