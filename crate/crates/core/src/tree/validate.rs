use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ArticulationTree, GrowthGrammar};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoRoot,
    MultipleRoots(Vec<usize>),
    ParentOutOfRange(usize),
    CycleDetected(usize),
    Unreachable(usize),
    DuplicateId(usize),
    TooManyNodes(usize),
    LengthMismatch,
    DepthExceeded { node: usize, depth: usize },
    UnknownLabel { node: usize, label: String },
    RootLabelMismatch(String),
    MissingRequestedChild { node: usize, label: String, expected: u32, found: u32 },
    CountOutOfRange { node: usize, label: String, found: u32, min: u32, max: u32 },
    UnexpectedChild { node: usize, label: String },
    DummyWithMesh(usize),
    InvalidBbox(usize),
    RootHasJoint,
    MissingEdgeSlot(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRequestedChild { node, label, expected, found } => write!(
                f,
                "MissingRequestedChild(\"{label}\") at node {node}: expected {expected}, found {found}"
            ),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every structural and grammar violation of `tree`. Dummy links are
/// transparent (their children count as children of the nearest real
/// ancestor) and a plinth root counts as wrapping the grammar root.
pub fn validate_tree(tree: &ArticulationTree, grammar: &GrowthGrammar) -> ValidationReport {
    let mut out = Vec::new();
    let n = tree.nodes.len();
    if tree.parent.len() != n || tree.edge_joint.len() != n {
        out.push(Violation::LengthMismatch);
        return ValidationReport { violations: out };
    }
    if n > grammar.max_nodes {
        out.push(Violation::TooManyNodes(n));
    }

    let roots: Vec<usize> = (0..n).filter(|&i| tree.parent[i].is_none()).collect();
    match roots.len() {
        0 => out.push(Violation::NoRoot),
        1 => {}
        _ => out.push(Violation::MultipleRoots(roots.clone())),
    }
    let mut structural_ok = roots.len() == 1;
    for i in 0..n {
        if let Some(p) = tree.parent[i] {
            if p >= n {
                out.push(Violation::ParentOutOfRange(i));
                structural_ok = false;
            }
        }
    }

    // Walk up from each node; revisiting a node on the current walk is a cycle.
    {
        let mut reported = BTreeSet::new();
        for start in 0..n {
            let mut seen = BTreeSet::new();
            let mut cur = start;
            while let Some(p) = tree.parent[cur].filter(|&p| p < n) {
                if !seen.insert(cur) || p == start {
                    let on_cycle = if p == start { start } else { cur };
                    if reported.insert(on_cycle) {
                        out.push(Violation::CycleDetected(on_cycle));
                    }
                    structural_ok = false;
                    break;
                }
                cur = p;
            }
        }
    }
    if let (true, Some(&root)) = (structural_ok, roots.first()) {
        let reach: BTreeSet<usize> = tree.subtree(root).into_iter().collect();
        for i in (0..n).filter(|i| !reach.contains(i)) {
            out.push(Violation::Unreachable(i));
            structural_ok = false;
        }
    }

    let mut ids = BTreeSet::new();
    for node in &tree.nodes {
        if !ids.insert(node.id) {
            out.push(Violation::DuplicateId(node.id));
        }
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.label.is_dummy() && node.mesh_ref.is_some() {
            out.push(Violation::DummyWithMesh(i));
        }
        if node.bbox.is_some_and(|b| !b.is_valid()) {
            out.push(Violation::InvalidBbox(i));
        }
        match (tree.parent[i], &tree.edge_joint[i]) {
            (None, Some(_)) => out.push(Violation::RootHasJoint),
            (Some(_), None) => out.push(Violation::MissingEdgeSlot(i)),
            _ => {}
        }
        let known = node.label.is_dummy()
            || node.label.is_plinth()
            || (node.label.category == grammar.category && grammar.rules.contains_key(&node.label.part));
        if !known {
            out.push(Violation::UnknownLabel {
                node: i,
                label: node.label.to_string(),
            });
        }
    }

    if !structural_ok {
        return ValidationReport { violations: out };
    }

    let kids = tree.children_lists();
    // Children with dummy links spliced out.
    let real_children = |node: usize| -> Vec<usize> {
        let mut res = Vec::new();
        let mut stack: Vec<usize> = kids[node].iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            if tree.nodes[c].label.is_dummy() {
                stack.extend(kids[c].iter().rev());
            } else {
                res.push(c);
            }
        }
        res
    };

    let mut grammar_root = roots[0];
    if tree.nodes[grammar_root].label.is_plinth() {
        let inner = real_children(grammar_root);
        if inner.len() == 1 {
            grammar_root = inner[0];
        } else {
            out.push(Violation::RootLabelMismatch(tree.nodes[grammar_root].label.to_string()));
            return ValidationReport { violations: out };
        }
    }
    let root_label = &tree.nodes[grammar_root].label;
    if root_label.part != grammar.root || root_label.category != grammar.category {
        out.push(Violation::RootLabelMismatch(root_label.to_string()));
    }

    let mut stack = vec![(grammar_root, 0usize)];
    while let Some((node, depth)) = stack.pop() {
        if depth > grammar.max_depth as usize {
            out.push(Violation::DepthExceeded { node, depth });
        }
        let children = real_children(node);
        let Some(rule) = grammar.rules.get(&tree.nodes[node].label.part) else {
            continue;
        };
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for &c in &children {
            *counts.entry(tree.nodes[c].label.part.as_str()).or_insert(0) += 1;
        }
        let mut mentioned = BTreeSet::new();
        for r in &rule.requested {
            mentioned.insert(r.label.as_str());
        }
        for p in &rule.plausible {
            mentioned.insert(p.label.as_str());
        }
        for label in &mentioned {
            let found = counts.get(label).copied().unwrap_or(0);
            let (mut req_min, mut req_max) = (0u32, 0u32);
            for r in rule.requested.iter().filter(|r| r.label == *label) {
                let (lo, hi) = r.count.bounds();
                req_min += lo;
                req_max += hi;
            }
            let branches: Vec<_> = rule.plausible.iter().filter(|p| p.label == *label).collect();
            let opt_max: u32 = branches.iter().map(|p| p.count.1).sum();
            if found < req_min {
                out.push(Violation::MissingRequestedChild {
                    node,
                    label: label.to_string(),
                    expected: req_min,
                    found,
                });
                continue;
            }
            let extra = found - req_min;
            let max = req_max + opt_max;
            // A single active branch must deliver at least its lower count.
            let below_branch_min = req_max == 0
                && extra > 0
                && branches.len() == 1
                && extra < branches[0].count.0;
            if found > max || below_branch_min {
                out.push(Violation::CountOutOfRange {
                    node,
                    label: label.to_string(),
                    found,
                    min: req_min,
                    max,
                });
            }
        }
        for (label, _) in counts.iter().filter(|(l, _)| !mentioned.contains(*l)) {
            out.push(Violation::UnexpectedChild {
                node,
                label: label.to_string(),
            });
        }
        for &c in children.iter().rev() {
            stack.push((c, depth + 1));
        }
    }
    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededStream;
    use crate::tree::{grow_tree, JointSlot, SemanticLabel};

    fn grammar() -> GrowthGrammar {
        GrowthGrammar::parse(
            "category: cabinet\nroot: body\nbody:\n  requested: [leg x4]\n  plausible: [drawer p=0.5 x[1..3]]\ndrawer:\nleg:\n",
        )
        .unwrap()
    }

    #[test]
    fn grown_trees_validate() {
        let g = grammar();
        for seed in 0..50 {
            let t = grow_tree(&g, &mut SeededStream::new(seed)).unwrap();
            let r = validate_tree(&t, &g);
            assert!(r.is_empty(), "{r}");
        }
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let g = grammar();
        let mut t = grow_tree(&g, &mut SeededStream::new(0)).unwrap();
        t.parent[2] = Some(2);
        let r = validate_tree(&t, &g);
        assert!(r.has(|v| matches!(v, Violation::CycleDetected(2))), "{r}");
    }

    #[test]
    fn missing_leg() {
        let g = grammar();
        let mut t = crate::tree::ArticulationTree::with_root("cabinet", SemanticLabel::new("cabinet", "body"));
        for _ in 0..3 {
            t.add_child(0, SemanticLabel::new("cabinet", "leg"), JointSlot::Unassigned);
        }
        let r = validate_tree(&t, &g);
        assert!(r.has(|v| matches!(v, Violation::MissingRequestedChild { label, .. } if label == "leg")));
        assert!(r.to_string().contains("MissingRequestedChild(\"leg\")"));
    }

    #[test]
    fn unknown_and_unexpected_labels() {
        let g = grammar();
        let mut t = grow_tree(&g, &mut SeededStream::new(0)).unwrap();
        t.add_child(0, SemanticLabel::new("cabinet", "wheel"), JointSlot::Unassigned);
        let r = validate_tree(&t, &g);
        assert!(r.has(|v| matches!(v, Violation::UnknownLabel { .. })));
        assert!(r.has(|v| matches!(v, Violation::UnexpectedChild { label, .. } if label == "wheel")));
    }
}
