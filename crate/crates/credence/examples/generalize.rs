//! Soften an under-confident prediction by walking up a class hierarchy
//! until enough probability mass accumulates, and the hierarchy-free
//! alternative: a descending-confidence class subset.

use credence::hierarchy::{subset_generalize, Hierarchy};

const TREE: &str = r#"{
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

fn main() -> credence::Result<()> {
    let hierarchy = Hierarchy::from_json_str(TREE)?;
    let probs = [0.61, 0.20, 0.03, 0.09, 0.05, 0.02];
    let threshold = 0.90;

    let result = hierarchy.generalize(&probs, threshold)?;
    println!("upward walk (threshold {threshold}):");
    for (i, step) in result.path.iter().enumerate() {
        let marker = if i == result.chosen { "  <- chosen" } else { "" };
        println!("  {:<14} mass {:.2}{marker}", step.name, step.confidence);
    }

    let subset = subset_generalize(&probs, threshold)?;
    let members: Vec<String> = subset
        .members
        .iter()
        .map(|m| format!("class {} ({:.2})", m.class_index, m.confidence))
        .collect();
    println!(
        "subset alternative: {{{}}} with total mass {:.2}",
        members.join(", "),
        subset.total_confidence
    );
    Ok(())
}
