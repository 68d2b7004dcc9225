//! Canonical sibling order.
//!
//! Children are sorted by `(label string, subtree node count, subtree hash)`
//! and nodes are renumbered in pre-order. The subtree hash is 64-bit FNV-1a
//! over the label string, a `0x1f` separator, the joint tag, then each child
//! hash (in canonical order) as 8 little-endian bytes, closed by `0x1e`.

use super::ArticulationTree;
use crate::rng::fnv1a64;

struct Keys {
    kids: Vec<Vec<usize>>,
    size: Vec<usize>,
    hash: Vec<u64>,
    label: Vec<String>,
}

fn sort_key(k: &Keys, n: usize) -> (&str, usize, u64) {
    (&k.label[n], k.size[n], k.hash[n])
}

fn compute(tree: &ArticulationTree) -> Keys {
    let n = tree.len();
    let mut k = Keys {
        kids: tree.children_lists(),
        size: vec![1; n],
        hash: vec![0; n],
        label: tree.nodes.iter().map(|x| x.label.to_string()).collect(),
    };
    let order = tree.preorder();
    for &node in order.iter().rev() {
        let mut kids = std::mem::take(&mut k.kids[node]);
        kids.sort_by(|&a, &b| sort_key(&k, a).cmp(&sort_key(&k, b)));
        let mut bytes = Vec::with_capacity(k.label[node].len() + 16 + 8 * kids.len());
        bytes.extend_from_slice(k.label[node].as_bytes());
        bytes.push(0x1f);
        bytes.extend_from_slice(tree.edge_joint[node].as_ref().map_or("root", |s| s.tag()).as_bytes());
        for &c in &kids {
            bytes.extend_from_slice(&k.hash[c].to_le_bytes());
            k.size[node] += k.size[c];
        }
        bytes.push(0x1e);
        k.hash[node] = fnv1a64(&bytes);
        k.kids[node] = kids;
    }
    k
}

/// Subtree hash of every node.
pub fn subtree_hashes(tree: &ArticulationTree) -> Vec<u64> {
    compute(tree).hash
}

/// Reorders siblings canonically and renumbers ids in pre-order. The sort is
/// stable, so siblings with equal keys (structurally identical subtrees) keep
/// their relative order.
pub fn canonicalize(tree: &ArticulationTree) -> ArticulationTree {
    let Some(root) = tree.root() else {
        return tree.clone();
    };
    let keys = compute(tree);
    let mut order = Vec::with_capacity(tree.len());
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        order.push(n);
        stack.extend(keys.kids[n].iter().rev());
    }
    let mut new_index = vec![usize::MAX; tree.len()];
    for (i, &old) in order.iter().enumerate() {
        new_index[old] = i;
    }
    let mut out = ArticulationTree {
        category: tree.category.clone(),
        nodes: Vec::with_capacity(order.len()),
        parent: Vec::with_capacity(order.len()),
        edge_joint: Vec::with_capacity(order.len()),
        meshes: tree.meshes.clone(),
        materials: tree.materials.clone(),
    };
    for (i, &old) in order.iter().enumerate() {
        let mut node = tree.nodes[old].clone();
        node.id = i;
        out.nodes.push(node);
        out.parent.push(tree.parent[old].map(|p| new_index[p]));
        out.edge_joint.push(tree.edge_joint[old].clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{JointSlot, SemanticLabel};

    fn label(p: &str) -> SemanticLabel {
        SemanticLabel::new("t", p)
    }

    #[test]
    fn sibling_permutations_agree() {
        let mut a = ArticulationTree::with_root("t", label("r"));
        let x = a.add_child(0, label("b"), JointSlot::Unassigned);
        a.add_child(x, label("c"), JointSlot::Unassigned);
        a.add_child(0, label("a"), JointSlot::Unassigned);
        a.add_child(0, label("b"), JointSlot::Unassigned);

        let mut b = ArticulationTree::with_root("t", label("r"));
        b.add_child(0, label("b"), JointSlot::Unassigned);
        b.add_child(0, label("a"), JointSlot::Unassigned);
        let y = b.add_child(0, label("b"), JointSlot::Unassigned);
        b.add_child(y, label("c"), JointSlot::Unassigned);

        let (ca, cb) = (canonicalize(&a), canonicalize(&b));
        assert_eq!(ca, cb);
        assert_eq!(ca.structure_string(), "t/r(t/a[none] t/b[none] t/b[none](t/c[none]))");
        assert_eq!(canonicalize(&ca), ca);
        assert_eq!(ca.parent, vec![None, Some(0), Some(0), Some(0), Some(3)]);
    }
}
