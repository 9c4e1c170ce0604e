//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line when its checks hold. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use credence::calibration::{
    apply_temperature, ece, fit_temperature, BinningConfig, GridSpec, Objective, TemperatureModel,
};
use credence::hierarchy::{subset_generalize, Hierarchy};
use credence::model::{argmax_class, softmax, PredictionSet, ScoreKind};
use credence::prior_shift::{
    adapt_posterior, build_shift_system, recover_likelihoods, PriorVector,
};
use credence::rejection::{
    evaluate_threshold, fit_coverage_constrained, fit_risk_constrained, ScoredOutcome,
};
use credence::stats::{paired_t_test, student_t_upper_tail, summarize_runs};

fn pass(n: u32, what: &str) {
    println!("[PASS] criterion {n}: {what}");
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(floor..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1: ECE oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_ece_oracle() {
    // 4-example hand case: argmax confidences (.9 T, .8 F, .7 T, .4 F),
    // two bins -> ECE = (3/4)|0.8 - 2/3| + (1/4)|0.4 - 0| = 0.2.
    let hand = PredictionSet::new(
        vec![
            vec![0.9, 0.05, 0.05],
            vec![0.8, 0.1, 0.1],
            vec![0.7, 0.15, 0.15],
            vec![0.4, 0.3, 0.3],
        ],
        ScoreKind::Probabilities,
        Some(vec![0, 1, 0, 1]),
        None,
        3,
    )
    .unwrap();
    let cfg = BinningConfig::equal_width(2).unwrap();
    let value = ece(&hand, &cfg).unwrap();
    assert!((value - 0.2).abs() <= 1e-12, "ECE {value} != 0.2");

    // Perfectly calibrated synthetic set: per-bin correctness rate equals
    // per-bin confidence exactly.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for &(confidence, correct_of_20) in
        &[(0.55, 11), (0.65, 13), (0.75, 15), (0.85, 17), (0.95, 19)]
    {
        for i in 0..20 {
            rows.push(vec![confidence, 1.0 - confidence]);
            labels.push(usize::from(i >= correct_of_20));
        }
    }
    let calibrated =
        PredictionSet::new(rows, ScoreKind::Probabilities, Some(labels), None, 2).unwrap();
    let cfg = BinningConfig::equal_width(10).unwrap();
    let value = ece(&calibrated, &cfg).unwrap();
    assert!(value <= 1e-12, "calibrated-set ECE {value} not ~0");

    pass(1, "ECE oracle (hand case 0.2 exact; calibrated synthetic set 0)");
}

// ---------------------------------------------------------------------------
// Criterion 2: temperature properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_temperature_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let c = rng.gen_range(2..=10);
        let row: Vec<f64> = (0..c).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let t = rng.gen_range(0.02..30.0);
        let base = argmax_class(&row).unwrap();
        let scaled = softmax(&row, t).unwrap();
        assert_eq!(argmax_class(&scaled).unwrap(), base, "argmax changed at T={t}");
    }

    // Fit on logits scaled by k recovers T within one grid step of k.
    let grid = GridSpec::default();
    let cfg = BinningConfig::default();
    for &k in &[0.5, 1.0, 3.0] {
        let gap = k * 4.0f64.ln();
        let rows = vec![vec![gap, 0.0]; 100];
        let labels = (0..100).map(|i| usize::from(i >= 80)).collect();
        let preds = PredictionSet::new(rows, ScoreKind::Logits, Some(labels), None, 2).unwrap();
        let model = fit_temperature(&preds, Objective::Nll, &grid, &cfg).unwrap();
        let ratio = (model.global_t / k).max(k / model.global_t);
        assert!(
            ratio <= grid.step_ratio() * (1.0 + 1e-12),
            "fitted {} for scale {k}",
            model.global_t
        );
    }

    // T = 1 reproduces plain softmax bit-exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect();
    let preds = PredictionSet::new(rows.clone(), ScoreKind::Logits, None, None, 4).unwrap();
    let unit = TemperatureModel::global(1.0, 4, Objective::Nll);
    let out = apply_temperature(&preds, &unit).unwrap();
    let plain = preds.to_probabilities().unwrap();
    for i in 0..rows.len() {
        assert_eq!(out.row(i), plain.row(i), "row {i} not bit-identical");
    }

    pass(2, "temperature (argmax preserved x10000; scale recovery; T=1 exact)");
}

// ---------------------------------------------------------------------------
// Criterion 3: rejection oracle
// ---------------------------------------------------------------------------

/// Independent oracle: sort outcomes by descending confidence, group
/// ties, and enumerate every achievable accept set via prefix counts.
fn oracle_levels(outcomes: &[ScoredOutcome]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&ScoredOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap());
    let total = outcomes.len();
    let mut levels = vec![(0.0, 0.0)]; // accept-none
    let mut accepted = 0usize;
    let mut wrong = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let conf = sorted[i].confidence;
        while i < sorted.len() && sorted[i].confidence == conf {
            accepted += 1;
            if !sorted[i].correct {
                wrong += 1;
            }
            i += 1;
        }
        levels.push((accepted as f64 / total as f64, wrong as f64 / accepted as f64));
    }
    levels
}

fn oracle_coverage_constrained(outcomes: &[ScoredOutcome], min_coverage: f64) -> (f64, f64) {
    oracle_levels(outcomes)
        .into_iter()
        .filter(|&(cov, _)| cov >= min_coverage)
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.partial_cmp(&a.0).unwrap()))
        .unwrap()
}

fn oracle_risk_constrained(outcomes: &[ScoredOutcome], max_risk: f64) -> (f64, f64) {
    oracle_levels(outcomes)
        .into_iter()
        .filter(|&(_, risk)| risk <= max_risk)
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
}

#[test]
fn criterion_3_rejection_oracle() {
    // Worked 4-outcome examples.
    let worked: Vec<ScoredOutcome> = [(0.9, true), (0.8, false), (0.6, true), (0.4, false)]
        .iter()
        .map(|&(confidence, correct)| ScoredOutcome { confidence, correct })
        .collect();
    let policy = fit_coverage_constrained(&worked, 0.5).unwrap();
    assert_eq!(policy.achieved_coverage, 0.75);
    assert_eq!(policy.achieved_risk, 1.0 / 3.0);
    let policy = fit_risk_constrained(&worked, 0.0).unwrap();
    assert_eq!(policy.achieved_coverage, 0.25);
    assert_eq!(policy.achieved_risk, 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1_000 {
        let n = rng.gen_range(1..=1_000);
        let outcomes: Vec<ScoredOutcome> = (0..n)
            .map(|_| {
                let confidence = if rng.gen_bool(0.5) {
                    rng.gen_range(0..=20) as f64 / 20.0
                } else {
                    rng.gen_range(0.0..=1.0)
                };
                ScoredOutcome {
                    confidence,
                    correct: rng.gen_bool(0.05 + 0.9 * confidence),
                }
            })
            .collect();

        let min_coverage = rng.gen_range(0.01..=1.0);
        let fitted = fit_coverage_constrained(&outcomes, min_coverage).unwrap();
        let expected = oracle_coverage_constrained(&outcomes, min_coverage);
        assert_eq!(
            (fitted.achieved_coverage, fitted.achieved_risk),
            expected,
            "coverage-constrained mismatch, trial {trial}"
        );
        let (cov, risk) = evaluate_threshold(&outcomes, fitted.threshold).unwrap();
        assert_eq!((cov, risk), (fitted.achieved_coverage, fitted.achieved_risk));

        let max_risk = rng.gen_range(0.0..1.0);
        let fitted = fit_risk_constrained(&outcomes, max_risk).unwrap();
        let expected = oracle_risk_constrained(&outcomes, max_risk);
        assert_eq!(
            (fitted.achieved_coverage, fitted.achieved_risk),
            expected,
            "risk-constrained mismatch, trial {trial}"
        );
    }

    pass(3, "rejection (brute-force agreement on 1000 sets; worked examples)");
}

// ---------------------------------------------------------------------------
// Criterion 4: the vehicle generalization example
// ---------------------------------------------------------------------------

const VEHICLE_TREE: &str = r#"{
  "name": "vehicle",
  "children": [
    {"name": "car", "children": [
      {"name": "sedan", "children": [
        {"name": "toyota_sedan", "class_index": 0},
        {"name": "honda_sedan", "class_index": 1},
        {"name": "lexus_sedan", "class_index": 2}
      ]},
      {"name": "coupe", "children": [
        {"name": "toyota_coupe", "class_index": 3}
      ]},
      {"name": "hatchback", "class_index": 4}
    ]},
    {"name": "truck", "class_index": 5}
  ]
}"#;

#[test]
fn criterion_4_vehicle_example() {
    let h = Hierarchy::from_json_str(VEHICLE_TREE).unwrap();
    let probs = [0.61, 0.20, 0.03, 0.09, 0.05, 0.02];
    let result = h.generalize(&probs, 0.90).unwrap();
    let path: Vec<(&str, f64)> = result
        .path
        .iter()
        .map(|s| (s.name.as_str(), s.confidence))
        .collect();
    assert_eq!(path.len(), 3);
    assert_eq!(path[0].0, "toyota_sedan");
    assert!((path[0].1 - 0.61).abs() <= 1e-12);
    assert_eq!(path[1].0, "sedan");
    assert!((path[1].1 - 0.84).abs() <= 1e-12);
    assert_eq!(path[2].0, "car");
    assert!((path[2].1 - 0.98).abs() <= 1e-12);
    assert_eq!(result.chosen_step().name, "car");

    let subset_probs = [0.61, 0.23, 0.02, 0.09, 0.03, 0.02];
    let subset = subset_generalize(&subset_probs, 0.90).unwrap();
    let classes: Vec<usize> = subset.members.iter().map(|m| m.class_index).collect();
    assert_eq!(classes, [0, 1, 3]);
    assert!((subset.total_confidence - 0.93).abs() <= 1e-12);

    pass(4, "vehicle walk 0.61 -> 0.84 -> 0.98 = car; subset {0.61,0.23,0.09} = 0.93");
}

// ---------------------------------------------------------------------------
// Criterion 5: generalization properties on random instances
// ---------------------------------------------------------------------------

fn random_hierarchy(rng: &mut ChaCha8Rng, num_classes: usize) -> Hierarchy {
    // Leaves first, then repeatedly merge random root groups under new
    // parents until one root remains.
    let mut parents: Vec<Option<usize>> = vec![None; num_classes];
    let mut roots: Vec<usize> = (0..num_classes).collect();
    while roots.len() > 1 {
        let k = rng.gen_range(2..=roots.len().min(4));
        let parent = parents.len();
        parents.push(None);
        for _ in 0..k {
            let pick = rng.gen_range(0..roots.len());
            let child = roots.swap_remove(pick);
            parents[child] = Some(parent);
        }
        roots.push(parent);
    }
    let nodes: Vec<serde_json::Value> = parents
        .iter()
        .enumerate()
        .map(|(id, parent)| {
            let mut node = serde_json::json!({
                "id": id,
                "name": format!("n{id}"),
                "parent": parent,
            });
            if id < num_classes {
                node["class_index"] = serde_json::json!(id);
            }
            node
        })
        .collect();
    let json = serde_json::json!({ "nodes": nodes }).to_string();
    Hierarchy::from_json_str(&json).unwrap()
}

#[test]
fn criterion_5_generalization_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10_000 {
        let c = rng.gen_range(2..=12);
        let h = random_hierarchy(&mut rng, c);
        let probs = random_simplex(&mut rng, c, 1e-4);
        let threshold = rng.gen_range(0.01..=1.0);

        // Root mass is total probability.
        let root_mass = h.node_mass(h.root(), &probs).unwrap();
        assert!((root_mass - 1.0).abs() <= 1e-9, "root mass {root_mass}");

        let result = h.generalize(&probs, threshold).unwrap();
        // Path monotone non-decreasing.
        for pair in result.path.windows(2) {
            assert!(
                pair[1].confidence >= pair[0].confidence - 1e-12,
                "non-monotone path, trial {trial}"
            );
        }
        // Chosen node meets the threshold (or is the root); deeper nodes
        // do not.
        let chosen = result.chosen_step();
        assert!(
            chosen.confidence + 1e-12 >= threshold || chosen.node == h.root(),
            "chosen below threshold, trial {trial}"
        );
        for step in &result.path[..result.chosen] {
            assert!(step.confidence + 1e-12 < threshold || (threshold - step.confidence).abs() < 1e-9);
        }
        // Correct-path preservation: when the argmax leaf is the ground
        // truth, every path node is an ancestor-or-self of it.
        let truth = argmax_class(&probs).unwrap();
        let truth_leaf = h.leaf_for_class(truth).unwrap();
        for step in &result.path {
            assert!(
                h.is_ancestor_or_self(step.node, truth_leaf),
                "path leaves the correct branch, trial {trial}"
            );
        }

        // Subset greedy prefix is the minimal descending-order prefix:
        // brute-force enumeration of prefix sums.
        let subset = subset_generalize(&probs, threshold).unwrap();
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
        let mut best_len = c;
        let mut running = 0.0;
        for (len, &class) in order.iter().enumerate() {
            running += probs[class];
            if running + 1e-12 >= threshold {
                best_len = len + 1;
                break;
            }
        }
        assert_eq!(subset.members.len(), best_len, "non-minimal subset, trial {trial}");
        let expected: Vec<usize> = order[..best_len].to_vec();
        let got: Vec<usize> = subset.members.iter().map(|m| m.class_index).collect();
        assert_eq!(got, expected, "subset membership mismatch, trial {trial}");
    }

    pass(5, "generalization properties on 10000 random hierarchies");
}

// ---------------------------------------------------------------------------
// Criterion 6: prior-shift oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_prior_shift_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10_000 {
        let n = rng.gen_range(2..=50);
        let q = random_simplex(&mut rng, n, 0.01);
        let pi = PriorVector::new(random_simplex(&mut rng, n, 0.01)).unwrap();
        let system = build_shift_system(&q, &pi).unwrap();
        let recovered = recover_likelihoods(&system).unwrap();
        // Closed form: v_i ∝ q_i / π_i.
        let raw: Vec<f64> = q.iter().zip(pi.values()).map(|(a, b)| a / b).collect();
        let sum: f64 = raw.iter().sum();
        for (got, expect) in recovered.values().iter().zip(raw.iter().map(|v| v / sum)) {
            assert!(
                (got - expect).abs() <= 1e-9,
                "likelihood mismatch trial {trial}: {got} vs {expect}"
            );
        }
        assert!(system.max_residual(recovered.values()) <= 1e-9);
    }

    // Worked 2-class example.
    let train = PriorVector::new(vec![0.5, 0.5]).unwrap();
    let new = PriorVector::new(vec![0.25, 0.75]).unwrap();
    let out = adapt_posterior(&[0.8, 0.2], &train, &new).unwrap();
    assert!((out[0] - 4.0 / 7.0).abs() <= 1e-9);
    assert!((out[1] - 3.0 / 7.0).abs() <= 1e-9);

    // Round-trip inversion and identity shift.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..1_000 {
        let n = rng.gen_range(2..=20);
        let q = random_simplex(&mut rng, n, 0.01);
        let train = PriorVector::new(random_simplex(&mut rng, n, 0.01)).unwrap();
        let new = PriorVector::new(random_simplex(&mut rng, n, 0.01)).unwrap();
        let there = adapt_posterior(&q, &train, &new).unwrap();
        let back = adapt_posterior(&there, &new, &train).unwrap();
        for (a, b) in back.iter().zip(&q) {
            assert!((a - b).abs() <= 1e-9, "round trip failed");
        }
        let same = adapt_posterior(&q, &train, &train).unwrap();
        for (a, b) in same.iter().zip(&q) {
            assert!((a - b).abs() <= 1e-9, "identity shift not a no-op");
        }
    }

    pass(6, "prior shift (closed-form match x10000; 4/7-3/7; round trip; identity)");
}

// ---------------------------------------------------------------------------
// Criterion 7: t-test reference values
// ---------------------------------------------------------------------------

/// Quadrature oracle: upper tail by composite Simpson integration of the
/// t density, normalized via log-gamma.
fn quadrature_upper_tail(t: f64, df: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let nu = df as f64;
    let coef =
        (ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp() / (nu * std::f64::consts::PI).sqrt();
    let density = |u: f64| coef * (1.0 + u * u / nu).powf(-(nu + 1.0) / 2.0);
    let upper = t.abs();
    let steps = 20_000usize;
    let h = upper / steps as f64;
    let mut integral = density(0.0) + density(upper);
    for i in 1..steps {
        let u = i as f64 * h;
        integral += density(u) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    integral *= h / 3.0;
    let tail = 0.5 - integral;
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

#[test]
fn criterion_7_t_test_reference() {
    // d = (2, 4, 6): t = 3.4641, df 2, p = 0.0371.
    let r = paired_t_test(&[2.0, 4.0, 6.0], &[0.0, 0.0, 0.0], 0.05, 1.0).unwrap();
    assert!((r.t_statistic - 3.4641).abs() <= 1e-4);
    assert_eq!(r.degrees_freedom, 2);
    assert!((r.p_value - 0.0371).abs() <= 1e-4);

    // p(t = 0) = 0.5 for all df.
    for df in 1..=200 {
        assert!((student_t_upper_tail(0.0, df).unwrap() - 0.5).abs() <= 1e-12);
    }

    // Tail values match the quadrature oracle within 1e-6 on a grid.
    for &df in &[1usize, 2, 3, 5, 10, 30, 100, 200] {
        let mut t = -5.0;
        while t <= 5.0 {
            let got = student_t_upper_tail(t, df).unwrap();
            let expect = quadrature_upper_tail(t, df);
            assert!(
                (got - expect).abs() <= 1e-6,
                "tail mismatch at t={t}, df={df}: {got} vs {expect}"
            );
            t += 0.5;
        }
    }

    // mu = 85, sigma = 1 -> 82..88 range.
    let s = summarize_runs(&[84.0, 85.0, 86.0]).unwrap();
    assert!((s.three_sigma_range.0 - 82.0).abs() <= 1e-12);
    assert!((s.three_sigma_range.1 - 88.0).abs() <= 1e-12);

    pass(7, "t-test (reference t/p; symmetry; quadrature oracle; 3-sigma range)");
}

// ---------------------------------------------------------------------------
// Criterion 8: CLI determinism
// ---------------------------------------------------------------------------

struct CmdResult {
    stdout: Vec<u8>,
    stderr: Vec<u8>,
    code: i32,
}

fn run_cli(args: &[&str], dir: &Path) -> CmdResult {
    let output = Command::new(env!("CARGO_BIN_EXE_credence"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn credence");
    CmdResult {
        stdout: output.stdout,
        stderr: output.stderr,
        code: output.status.code().unwrap_or(-1),
    }
}

fn write_fixtures(dir: &Path) {
    // Paired run scores.
    let mut runs = String::from("model1,model2\n");
    for i in 0..10 {
        let a = 85.0 + (i % 5) as f64 * 0.3;
        let b = 84.0 + (i % 4) as f64 * 0.35;
        runs.push_str(&format!("{a},{b}\n"));
    }
    std::fs::write(dir.join("runs.csv"), runs).unwrap();

    // 6-class labeled logits for fitting.
    let mut val = String::from("id,label,logit_0,logit_1,logit_2,logit_3,logit_4,logit_5\n");
    for i in 0..120 {
        let class = i % 6;
        let gap = 0.5 + (i % 7) as f64 * 0.5;
        // Errors concentrate at low confidence so both constraint kinds
        // are satisfiable on this fixture.
        let wrong = i % 7 == 0 || (i % 7 == 1 && i % 3 == 0);
        let label = if wrong { (class + 1) % 6 } else { class };
        let mut logits = vec![0.0f64; 6];
        logits[class] = gap;
        let fields: Vec<String> = logits.iter().map(|v| v.to_string()).collect();
        val.push_str(&format!("v{i},{label},{}\n", fields.join(",")));
    }
    std::fs::write(dir.join("val.csv"), val).unwrap();

    // Unlabeled 6-class logits for the pipeline.
    let mut test = String::from("id,logit_0,logit_1,logit_2,logit_3,logit_4,logit_5\n");
    for i in 0..40 {
        let class = (i * 5) % 6;
        let gap = 0.25 + (i % 9) as f64 * 0.4;
        let mut logits = vec![0.0f64; 6];
        logits[class] = gap;
        logits[(class + 2) % 6] = gap * 0.5;
        let fields: Vec<String> = logits.iter().map(|v| v.to_string()).collect();
        test.push_str(&format!("t{i},{}\n", fields.join(",")));
    }
    std::fs::write(dir.join("test.csv"), test).unwrap();

    // Probability dump including the vehicle distribution.
    let mut probs = String::from("id,prob_0,prob_1,prob_2,prob_3,prob_4,prob_5\n");
    probs.push_str("p0,0.61,0.20,0.03,0.09,0.05,0.02\n");
    probs.push_str("p1,0.10,0.15,0.25,0.20,0.18,0.12\n");
    probs.push_str("p2,0.96,0.01,0.01,0.005,0.005,0.01\n");
    std::fs::write(dir.join("probs.csv"), probs).unwrap();

    std::fs::write(dir.join("veh.json"), VEHICLE_TREE).unwrap();

    std::fs::write(
        dir.join("train_priors.csv"),
        "class,prior\n0,0.3\n1,0.2\n2,0.1\n3,0.15\n4,0.15\n5,0.1\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("new_priors.csv"),
        "class,prior\n0,0.1\n1,0.1\n2,0.3\n3,0.2\n4,0.2\n5,0.1\n",
    )
    .unwrap();
}

#[test]
fn criterion_8_cli_determinism() {
    // Two independent directories with identical fixtures; every command
    // is run once in each with identical arguments, and stdout plus every
    // emitted file must be byte-identical across the pair.
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let dirs = [tmp_a.path(), tmp_b.path()];
    for dir in dirs {
        write_fixtures(dir);
    }

    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            vec!["compare", "runs.csv", "--a", "model1", "--b", "model2", "--alpha", "0.05"],
            vec![],
        ),
        (
            vec![
                "calibrate", "val.csv", "--bins", "10", "--out", "policy.json",
                "--bins-csv", "bins.csv",
            ],
            vec!["policy.json", "bins.csv"],
        ),
        (
            vec!["reject", "val.csv", "--max-risk", "0.2", "--out", "policy.json"],
            vec!["policy.json"],
        ),
        (
            vec![
                "generalize", "probs.csv", "--hierarchy", "veh.json", "--threshold", "0.9",
                "--out", "gen.jsonl", "--policy-out", "policy.json",
            ],
            vec!["gen.jsonl", "policy.json"],
        ),
        (
            vec!["generalize", "probs.csv", "--subset", "--threshold", "0.9"],
            vec![],
        ),
        (
            vec![
                "adapt-priors", "probs.csv", "--train-priors", "train_priors.csv",
                "--new-priors", "new_priors.csv", "--out", "adapted.csv",
                "--policy-out", "policy.json",
            ],
            vec!["adapted.csv", "policy.json"],
        ),
        // Runs last: consumes the policy bundle the commands above built.
        (
            vec!["apply", "test.csv", "--policy", "policy.json", "--out", "decisions.jsonl"],
            vec!["decisions.jsonl"],
        ),
    ];

    for (args, files) in &cases {
        let mut outputs = Vec::new();
        for dir in dirs {
            let result = run_cli(args, dir);
            assert_eq!(
                result.code,
                0,
                "{args:?} failed: {}",
                String::from_utf8_lossy(&result.stderr)
            );
            let file_bytes: Vec<Vec<u8>> = files
                .iter()
                .map(|f| std::fs::read(dir.join(f)).unwrap())
                .collect();
            outputs.push((result.stdout, file_bytes));
        }
        assert_eq!(outputs[0].0, outputs[1].0, "stdout differs for {args:?}");
        assert_eq!(outputs[0].1, outputs[1].1, "files differ for {args:?}");
    }

    pass(8, "CLI determinism (byte-identical outputs across repeated runs)");
}
