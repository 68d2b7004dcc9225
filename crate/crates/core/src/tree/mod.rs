//! Articulation trees: labelled links joined by parent edges, grown from
//! category grammars, validated against them, and put in canonical order.

mod canonical;
mod grammar;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use crate::export::MaterialParams;
use crate::geometry::{Aabb, Mesh};
use crate::joints::{CompoundJointSpec, EdgeKind, JointSpec};
use crate::syntax::SyntaxError;

pub use canonical::{canonicalize, subtree_hashes};
pub use grammar::{grow_tree, CountSpec, GrowthGrammar, Plausible, Requested, Rule};
pub use validate::{validate_tree, ValidationReport, Violation};

pub const DEFAULT_MAX_NODES: usize = 256;
pub const DEFAULT_MAX_DEPTH: u32 = 8;

/// Part name of links that only exist to chain compound joints.
pub const DUMMY_PART: &str = "dummy";
/// Part name of the base link inserted by the ground-clearance repair.
pub const PLINTH_PART: &str = "plinth";

#[derive(Debug, thiserror::Error)]
pub enum TreeError {
    #[error("grammar diverges: {0}")]
    GrammarDiverges(String),
    #[error("label `{0}` is referenced but never declared")]
    LabelUnknown(String),
    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticLabel {
    pub category: String,
    pub part: String,
}

impl SemanticLabel {
    pub fn new(category: impl Into<String>, part: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            part: part.into(),
        }
    }

    pub fn dummy(category: impl Into<String>) -> Self {
        Self::new(category, DUMMY_PART)
    }

    pub fn is_dummy(&self) -> bool {
        self.part == DUMMY_PART
    }

    pub fn is_plinth(&self) -> bool {
        self.part == PLINTH_PART
    }

    /// Inverse of `Display`: `category/part`, or `dummy` (taking
    /// `default_category`). A bare name without `/` is a part of
    /// `default_category`.
    pub fn parse(s: &str, default_category: &str) -> Self {
        match s.split_once('/') {
            Some((c, p)) => Self::new(c, p),
            None => Self::new(default_category, s),
        }
    }
}

impl fmt::Display for SemanticLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dummy() {
            f.write_str(DUMMY_PART)
        } else {
            write!(f, "{}/{}", self.category, self.part)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkNode {
    pub id: usize,
    pub label: SemanticLabel,
    /// World-frame box at the rest configuration.
    pub bbox: Option<Aabb>,
    pub mesh_ref: Option<String>,
    pub material_ref: Option<String>,
}

impl LinkNode {
    pub fn new(id: usize, label: SemanticLabel) -> Self {
        Self {
            id,
            label,
            bbox: None,
            mesh_ref: None,
            material_ref: None,
        }
    }
}

/// What is known about the joint above a node.
#[derive(Clone, Debug, PartialEq)]
pub enum JointSlot {
    Unassigned,
    Kind(EdgeKind),
    Simple(JointSpec),
    Compound(CompoundJointSpec),
}

impl JointSlot {
    pub fn kind(&self) -> Option<EdgeKind> {
        match self {
            JointSlot::Unassigned => None,
            JointSlot::Kind(k) => Some(*k),
            JointSlot::Simple(j) => Some(EdgeKind::Simple(j.kind)),
            JointSlot::Compound(c) => Some(EdgeKind::Compound(c.kind)),
        }
    }

    /// Short tag used in structural hashes and strings.
    pub fn tag(&self) -> &'static str {
        self.kind().map_or("none", |k| k.name())
    }

    pub fn simple(&self) -> Option<&JointSpec> {
        match self {
            JointSlot::Simple(j) => Some(j),
            _ => None,
        }
    }
}

/// Rooted tree of links. `parent[i]` is `None` exactly for the root and
/// `edge_joint[i]` describes the joint from `parent[i]` to `i`.
/// Children of a node are ordered by index.
#[derive(Clone, Debug, PartialEq)]
pub struct ArticulationTree {
    pub category: String,
    pub nodes: Vec<LinkNode>,
    pub parent: Vec<Option<usize>>,
    pub edge_joint: Vec<Option<JointSlot>>,
    /// Meshes keyed by `LinkNode::mesh_ref`, in the owning link's frame once
    /// joints are synthesized (world frame before).
    pub meshes: BTreeMap<String, Mesh>,
    pub materials: BTreeMap<String, MaterialParams>,
}

impl ArticulationTree {
    pub fn with_root(category: impl Into<String>, label: SemanticLabel) -> Self {
        Self {
            category: category.into(),
            nodes: vec![LinkNode::new(0, label)],
            parent: vec![None],
            edge_joint: vec![None],
            meshes: BTreeMap::new(),
            materials: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_child(&mut self, parent: usize, label: SemanticLabel, slot: JointSlot) -> usize {
        let i = self.nodes.len();
        self.nodes.push(LinkNode::new(i, label));
        self.parent.push(Some(parent));
        self.edge_joint.push(Some(slot));
        i
    }

    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(Option::is_none)
    }

    /// Children of every node, each list in index order.
    pub fn children_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (i, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p < out.len() {
                    out[p].push(i);
                }
            }
        }
        out
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.parent[i] == Some(node)).collect()
    }

    /// Nodes in pre-order from the root.
    pub fn preorder(&self) -> Vec<usize> {
        let kids = self.children_lists();
        let mut out = Vec::with_capacity(self.len());
        let mut stack: Vec<usize> = self.root().into_iter().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(kids[n].iter().rev());
        }
        out
    }

    /// `node` and all its descendants.
    pub fn subtree(&self, node: usize) -> Vec<usize> {
        let kids = self.children_lists();
        let mut out = vec![node];
        let mut i = 0;
        while i < out.len() {
            out.extend(&kids[out[i]]);
            i += 1;
        }
        out
    }

    pub fn depth(&self, mut node: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[node] {
            node = p;
            d += 1;
            if d > self.len() {
                break;
            }
        }
        d
    }

    /// Closest ancestor that is not a dummy link.
    pub fn real_parent(&self, node: usize) -> Option<usize> {
        let mut p = self.parent[node]?;
        while self.nodes[p].label.is_dummy() {
            p = self.parent[p]?;
        }
        Some(p)
    }

    /// Links joined directly or only through dummy links.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.real_parent(a) == Some(b) || self.real_parent(b) == Some(a)
    }

    pub fn joint(&self, node: usize) -> Option<&JointSpec> {
        self.edge_joint[node].as_ref().and_then(JointSlot::simple)
    }

    pub fn mesh_of(&self, node: usize) -> Option<&Mesh> {
        self.nodes[node]
            .mesh_ref
            .as_ref()
            .and_then(|r| self.meshes.get(r))
    }

    /// Number of non-root links, i.e. joints once compounds are expanded.
    pub fn joint_count(&self) -> usize {
        self.len().saturating_sub(1)
    }

    /// Pre-order structural string: label, joint tag and children, with no
    /// geometry. Two trees have equal strings iff they are the same ordered
    /// labelled tree with the same joint kinds.
    pub fn structure_string(&self) -> String {
        let kids = self.children_lists();
        fn rec(t: &ArticulationTree, kids: &[Vec<usize>], n: usize, out: &mut String) {
            out.push_str(&t.nodes[n].label.to_string());
            if let Some(slot) = &t.edge_joint[n] {
                out.push('[');
                out.push_str(slot.tag());
                out.push(']');
            }
            if !kids[n].is_empty() {
                out.push('(');
                for (k, &c) in kids[n].iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    rec(t, kids, c, out);
                }
                out.push(')');
            }
        }
        let mut s = String::new();
        if let Some(r) = self.root() {
            rec(self, &kids, r, &mut s);
        }
        s
    }

    /// Renames every mesh reference to `<label>_<id>` with `/` replaced by
    /// `-`, so mesh keys follow the current node numbering.
    pub fn rename_refs(&mut self) {
        let mut meshes = BTreeMap::new();
        for n in &mut self.nodes {
            if let Some(old) = n.mesh_ref.take() {
                let stem = link_name(&n.label, n.id).replace('/', "-");
                if let Some(m) = self.meshes.remove(&old) {
                    meshes.insert(stem.clone(), m);
                }
                n.mesh_ref = Some(stem);
            }
        }
        self.meshes = meshes;
    }
}

/// URDF link name of a node: `category/part_<id>`, `dummy_<id>` for dummies.
pub fn link_name(label: &SemanticLabel, id: usize) -> String {
    format!("{label}_{id}")
}

/// Splits a link name into label and id. Names without a trailing `_<digits>`
/// keep id `None`.
pub fn split_link_name(name: &str, category: &str) -> (SemanticLabel, Option<usize>) {
    if let Some((stem, digits)) = name.rsplit_once('_') {
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(id) = digits.parse() {
                return (SemanticLabel::parse(stem, category), Some(id));
            }
        }
    }
    (SemanticLabel::parse(name, category), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joints::JointKind;

    fn chain() -> ArticulationTree {
        let mut t = ArticulationTree::with_root("lamp", SemanticLabel::new("lamp", "base"));
        let p = t.add_child(0, SemanticLabel::new("lamp", "pole"), JointSlot::Unassigned);
        let d = t.add_child(p, SemanticLabel::dummy("lamp"), JointSlot::Kind(EdgeKind::Simple(JointKind::Revolute)));
        t.add_child(d, SemanticLabel::new("lamp", "head"), JointSlot::Kind(EdgeKind::Simple(JointKind::Revolute)));
        t
    }

    #[test]
    fn label_display_round_trip() {
        let l = SemanticLabel::new("cabinet", "drawer");
        assert_eq!(l.to_string(), "cabinet/drawer");
        assert_eq!(SemanticLabel::parse("cabinet/drawer", "x"), l);
        assert_eq!(SemanticLabel::dummy("cabinet").to_string(), "dummy");
        let (lab, id) = split_link_name("dummy_7", "lamp");
        assert!(lab.is_dummy());
        assert_eq!(id, Some(7));
        assert_eq!(split_link_name("base", "lamp"), (SemanticLabel::new("lamp", "base"), None));
    }

    #[test]
    fn traversal_helpers() {
        let t = chain();
        assert_eq!(t.preorder(), vec![0, 1, 2, 3]);
        assert_eq!(t.subtree(1), vec![1, 2, 3]);
        assert_eq!(t.depth(3), 3);
        assert_eq!(t.real_parent(3), Some(1));
        assert!(t.adjacent(1, 3));
        assert!(!t.adjacent(0, 3));
        assert_eq!(
            t.structure_string(),
            "lamp/base(lamp/pole[none](dummy[revolute](lamp/head[revolute])))"
        );
    }
}
