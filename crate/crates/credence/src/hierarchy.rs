//! Bottom-up generalization of under-confident predictions.
//!
//! A rooted class hierarchy maps leaves one-to-one onto classifier class
//! indices; all probability mass lives at the leaves. The mass of any
//! node is the sum over its leaf descendants, so walking parent links
//! from the argmax leaf yields a monotone non-decreasing confidence path.
//! The walk stops at the first node meeting the threshold; reaching the
//! root is the "unknown" outcome. Subset generalization covers the
//! hierarchy-free case: the shortest descending-confidence prefix of
//! terminal classes whose mass meets the threshold.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax_class, ClassCatalog};

/// Slack for greedy-prefix and mass-threshold comparisons, absorbing
/// left-to-right summation noise.
const SUM_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Node {
    name: String,
    parent: Option<usize>,
    children: Vec<usize>,
    class_index: Option<usize>,
}

/// A validated rooted tree whose leaves biject onto class indices [0, C).
#[derive(Debug, Clone)]
pub struct Hierarchy {
    nodes: Vec<Node>,
    root: usize,
    /// class index -> leaf node id
    class_leaf: Vec<usize>,
    /// node id -> class indices of leaf descendants (self for leaves)
    leaf_classes: Vec<Vec<usize>>,
}

/// Nested JSON form: internal nodes carry `children`, leaves carry
/// `class_index`.
#[derive(Deserialize)]
#[serde(untagged)]
enum NestedNode {
    Internal { name: String, children: Vec<NestedNode> },
    Leaf { name: String, class_index: usize },
}

/// Flat JSON form: explicit id/parent records, useful for generated
/// hierarchies.
#[derive(Deserialize)]
struct FlatFile {
    nodes: Vec<FlatNode>,
}

#[derive(Deserialize)]
struct FlatNode {
    id: usize,
    name: String,
    parent: Option<usize>,
    #[serde(default)]
    class_index: Option<usize>,
}

impl Hierarchy {
    /// Parses either the nested `{"name", "children"}` tree or the flat
    /// `{"nodes": [...]}` node list.
    pub fn from_json_str(json: &str) -> Result<Hierarchy> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        if value.get("nodes").is_some() {
            let file: FlatFile = serde_json::from_value(value)?;
            Hierarchy::from_flat(file)
        } else {
            let nested: NestedNode = serde_json::from_value(value)?;
            Hierarchy::from_nested(nested)
        }
    }

    fn from_nested(root: NestedNode) -> Result<Hierarchy> {
        let mut nodes = Vec::new();
        fn add(nodes: &mut Vec<Node>, nested: NestedNode, parent: Option<usize>) -> Result<usize> {
            let id = nodes.len();
            match nested {
                NestedNode::Leaf { name, class_index } => {
                    nodes.push(Node {
                        name,
                        parent,
                        children: Vec::new(),
                        class_index: Some(class_index),
                    });
                    Ok(id)
                }
                NestedNode::Internal { name, children } => {
                    if children.is_empty() {
                        return Err(Error::Hierarchy(format!(
                            "internal node '{name}' has no children and no class_index"
                        )));
                    }
                    nodes.push(Node {
                        name,
                        parent,
                        children: Vec::new(),
                        class_index: None,
                    });
                    for child in children {
                        let child_id = add(nodes, child, Some(id))?;
                        nodes[id].children.push(child_id);
                    }
                    Ok(id)
                }
            }
        }
        add(&mut nodes, root, None)?;
        Hierarchy::finish(nodes, 0)
    }

    fn from_flat(file: FlatFile) -> Result<Hierarchy> {
        let n = file.nodes.len();
        if n == 0 {
            return Err(Error::Hierarchy("empty node list".into()));
        }
        let mut nodes: Vec<Option<Node>> = (0..n).map(|_| None).collect();
        for flat in file.nodes {
            if flat.id >= n {
                return Err(Error::Hierarchy(format!(
                    "node id {} out of range (ids must be 0..{n})",
                    flat.id
                )));
            }
            if nodes[flat.id].is_some() {
                return Err(Error::Hierarchy(format!(
                    "node {} listed more than once (two parents?)",
                    flat.id
                )));
            }
            nodes[flat.id] = Some(Node {
                name: flat.name,
                parent: flat.parent,
                children: Vec::new(),
                class_index: flat.class_index,
            });
        }
        let mut nodes: Vec<Node> = nodes.into_iter().map(Option::unwrap).collect();
        let mut root = None;
        for id in 0..n {
            match nodes[id].parent {
                None => {
                    if let Some(existing) = root {
                        return Err(Error::Hierarchy(format!(
                            "multiple roots: nodes {existing} and {id}"
                        )));
                    }
                    root = Some(id);
                }
                Some(p) => {
                    if p >= n {
                        return Err(Error::Hierarchy(format!(
                            "node {id} has unknown parent {p}"
                        )));
                    }
                    nodes[p].children.push(id);
                }
            }
        }
        let root = root.ok_or_else(|| Error::Hierarchy("no root node".into()))?;
        Hierarchy::finish(nodes, root)
    }

    /// Shared structural validation: connectivity, acyclicity, and the
    /// leaf-class bijection.
    fn finish(nodes: Vec<Node>, root: usize) -> Result<Hierarchy> {
        let n = nodes.len();
        // Walk down from the root; anything unvisited is on a cycle or
        // disconnected.
        let mut visited = vec![false; n];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if visited[id] {
                return Err(Error::Hierarchy(format!("cycle detected at node {id}")));
            }
            visited[id] = true;
            stack.extend(&nodes[id].children);
        }
        if let Some(missing) = visited.iter().position(|v| !v) {
            return Err(Error::Hierarchy(format!(
                "node {missing} is not reachable from the root (cycle or orphan)"
            )));
        }

        let leaves: Vec<usize> = (0..n).filter(|&id| nodes[id].children.is_empty()).collect();
        let num_classes = leaves.len();
        let mut class_leaf = vec![usize::MAX; num_classes];
        for &id in &leaves {
            let class = nodes[id].class_index.ok_or_else(|| {
                Error::Hierarchy(format!("leaf '{}' has no class_index", nodes[id].name))
            })?;
            if class >= num_classes {
                return Err(Error::Hierarchy(format!(
                    "class {class} out of range for {num_classes} leaves"
                )));
            }
            if class_leaf[class] != usize::MAX {
                return Err(Error::Hierarchy(format!("class {class} mapped by two leaves")));
            }
            class_leaf[class] = id;
        }
        if let Some(class) = class_leaf.iter().position(|&id| id == usize::MAX) {
            return Err(Error::Hierarchy(format!("class {class} unmapped")));
        }
        for id in 0..n {
            if !nodes[id].children.is_empty() && nodes[id].class_index.is_some() {
                return Err(Error::Hierarchy(format!(
                    "internal node '{}' carries a class_index",
                    nodes[id].name
                )));
            }
        }

        // Leaf-descendant class lists, children before parents.
        let mut leaf_classes: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(&nodes[id].children);
        }
        for &id in order.iter().rev() {
            if nodes[id].children.is_empty() {
                leaf_classes[id].push(nodes[id].class_index.unwrap());
            } else {
                let mut acc = Vec::new();
                for &child in &nodes[id].children {
                    acc.extend_from_slice(&leaf_classes[child]);
                }
                acc.sort_unstable();
                leaf_classes[id] = acc;
            }
        }

        Ok(Hierarchy {
            nodes,
            root,
            class_leaf,
            leaf_classes,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_leaf.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn name(&self, node: usize) -> Option<&str> {
        self.nodes.get(node).map(|n| n.name.as_str())
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.nodes.get(node).and_then(|n| n.parent)
    }

    pub fn children(&self, node: usize) -> Option<&[usize]> {
        self.nodes.get(node).map(|n| n.children.as_slice())
    }

    pub fn leaf_for_class(&self, class: usize) -> Option<usize> {
        self.class_leaf.get(class).copied()
    }

    /// Checks the leaf set against a class catalog (one leaf per class).
    pub fn validate_against(&self, catalog: &ClassCatalog) -> Result<()> {
        if self.num_classes() != catalog.len() {
            return Err(Error::Hierarchy(format!(
                "hierarchy has {} leaf classes, catalog has {}",
                self.num_classes(),
                catalog.len()
            )));
        }
        Ok(())
    }

    /// Is `ancestor` on the path from `node` to the root (inclusive)?
    pub fn is_ancestor_or_self(&self, ancestor: usize, node: usize) -> bool {
        let mut current = Some(node);
        while let Some(id) = current {
            if id == ancestor {
                return true;
            }
            current = self.nodes[id].parent;
        }
        false
    }

    /// Probability mass of a node: the sum of its leaf descendants'
    /// probabilities (a leaf returns its own entry).
    pub fn node_mass(&self, node: usize, probs: &[f64]) -> Result<f64> {
        if node >= self.nodes.len() {
            return Err(Error::invalid(format!("unknown node id {node}")));
        }
        self.check_probs(probs)?;
        Ok(self.leaf_classes[node].iter().map(|&c| probs[c]).sum())
    }

    fn check_probs(&self, probs: &[f64]) -> Result<()> {
        if probs.len() != self.num_classes() {
            return Err(Error::invalid(format!(
                "probability vector has {} entries, hierarchy has {} classes",
                probs.len(),
                self.num_classes()
            )));
        }
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "probability vector sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Walks upward from the argmax leaf to the first node whose mass
    /// meets the threshold; reaching the root returns the root.
    pub fn generalize(&self, probs: &[f64], threshold: f64) -> Result<GeneralizationResult> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "threshold must be in (0, 1], got {threshold}"
            )));
        }
        self.check_probs(probs)?;
        let start = self.class_leaf[argmax_class(probs)?];
        let mut path = Vec::new();
        let mut current = start;
        loop {
            let mass = self.node_mass(current, probs)?;
            path.push(PathStep {
                node: current,
                name: self.nodes[current].name.clone(),
                confidence: mass,
            });
            if mass + SUM_EPSILON >= threshold || current == self.root {
                break;
            }
            current = self.nodes[current].parent.expect("non-root node has a parent");
        }
        Ok(GeneralizationResult {
            chosen: path.len() - 1,
            path,
            threshold,
        })
    }
}

/// Loads and validates a hierarchy file (nested or flat JSON).
pub fn load_hierarchy(path: &Path) -> Result<Hierarchy> {
    Hierarchy::from_json_str(&std::fs::read_to_string(path)?)
}

/// One step of the upward generalization walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub node: usize,
    pub name: String,
    pub confidence: f64,
}

/// Upward path from the terminal argmax class to the chosen node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationResult {
    pub path: Vec<PathStep>,
    /// Index into `path` of the first node meeting the threshold (the
    /// last entry; the root when nothing else qualifies).
    pub chosen: usize,
    pub threshold: f64,
}

impl GeneralizationResult {
    pub fn chosen_step(&self) -> &PathStep {
        &self.path[self.chosen]
    }
}

/// One member of a subset generalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetMember {
    pub class_index: usize,
    pub confidence: f64,
}

/// Minimal descending-confidence prefix of terminal classes meeting the
/// threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub members: Vec<SubsetMember>,
    pub total_confidence: f64,
    pub threshold: f64,
}

/// Greedily adds terminal classes in descending confidence order (ties
/// by lower class index) until their sum first reaches the threshold.
pub fn subset_generalize(probs: &[f64], threshold: f64) -> Result<SubsetResult> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "threshold must be in (0, 1], got {threshold}"
        )));
    }
    if probs.is_empty() {
        return Err(Error::invalid("empty probability vector"));
    }
    if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "probability vector sums to {sum}, expected 1"
        )));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut members = Vec::new();
    let mut total = 0.0;
    for class_index in order {
        members.push(SubsetMember {
            class_index,
            confidence: probs[class_index],
        });
        total += probs[class_index];
        if total + SUM_EPSILON >= threshold {
            break;
        }
    }
    Ok(SubsetResult {
        members,
        total_confidence: total,
        threshold,
    })
}
