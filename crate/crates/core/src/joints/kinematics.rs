use std::collections::BTreeMap;

use nalgebra::Isometry3;

use super::{CompoundJointSpec, JointError, JointKind, JointSpec};
use crate::tree::{ArticulationTree, JointSlot, LinkNode, SemanticLabel};

/// Simple joints and intermediate dummy links a compound joint expands to.
/// `joints[i]` enters `dummies[i]`; the last joint enters the real child.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedChain {
    pub joints: Vec<JointSpec>,
    pub dummies: Vec<LinkNode>,
}

/// Chain for one compound joint. Dummy ids are placeholders (`usize::MAX`)
/// until spliced into a tree.
pub fn expand_compound(spec: &CompoundJointSpec, category: &str) -> ExpandedChain {
    let dummies = (1..spec.chain.len())
        .map(|_| LinkNode::new(usize::MAX, SemanticLabel::dummy(category)))
        .collect();
    ExpandedChain {
        joints: spec.chain.clone(),
        dummies,
    }
}

/// Replaces every compound edge by its simple-joint chain, appending the
/// dummy links at the end of the node list.
pub fn expand_compounds(tree: &ArticulationTree) -> ArticulationTree {
    let mut out = tree.clone();
    for child in 0..tree.len() {
        let Some(JointSlot::Compound(spec)) = &tree.edge_joint[child] else {
            continue;
        };
        let parent = tree.parent[child].expect("compound edge has a parent");
        let chain = expand_compound(spec, &tree.category);
        let mut above = parent;
        for (joint, mut dummy) in chain.joints.iter().zip(chain.dummies) {
            let idx = out.nodes.len();
            dummy.id = idx;
            out.nodes.push(dummy);
            out.parent.push(Some(above));
            out.edge_joint.push(Some(JointSlot::Simple(joint.clone())));
            above = idx;
        }
        out.parent[child] = Some(above);
        out.edge_joint[child] = Some(JointSlot::Simple(chain.joints.last().expect("non-empty chain").clone()));
    }
    out
}

/// World pose of every node: root at identity, child = parent ∘ origin ∘
/// motion(value). Joints missing from `config` sit at 0; every edge must be a
/// synthesized simple joint.
pub fn forward_kinematics(
    tree: &ArticulationTree,
    config: &BTreeMap<usize, f64>,
) -> Result<Vec<Isometry3<f64>>, JointError> {
    let mut poses = vec![Isometry3::identity(); tree.len()];
    for n in tree.preorder() {
        let Some(p) = tree.parent[n] else { continue };
        let joint = match tree.edge_joint[n].as_ref() {
            Some(JointSlot::Simple(j)) => j,
            Some(JointSlot::Compound(_)) => return Err(JointError::UnexpandedCompound(n)),
            _ => return Err(JointError::NotSynthesized(n)),
        };
        let value = config.get(&n).copied().unwrap_or(0.0);
        if joint.kind == JointKind::Fixed {
            poses[n] = poses[p] * joint.origin;
            continue;
        }
        if let Some((lo, hi)) = joint.limits {
            if value < lo - 1e-12 || value > hi + 1e-12 {
                return Err(JointError::ValueOutOfLimits {
                    node: n,
                    value,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        poses[n] = poses[p] * joint.origin * joint.motion(value);
    }
    Ok(poses)
}

/// Poses with every joint at its rest value.
pub fn rest_poses(tree: &ArticulationTree) -> Result<Vec<Isometry3<f64>>, JointError> {
    let config = (0..tree.len())
        .filter_map(|n| tree.joint(n).map(|j| (n, j.rest_value())))
        .collect();
    forward_kinematics(tree, &config)
}
