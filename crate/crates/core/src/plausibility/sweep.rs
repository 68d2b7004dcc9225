use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::Isometry3;
use rayon::prelude::*;
use serde::Serialize;

use super::{PlausibilityError, MAX_CORNER_JOINTS, SWEEP_TOLERANCE};
use crate::geometry::{compute_aabb, Aabb, Obb};
use crate::joints::{forward_kinematics, JointKind};
use crate::tree::{link_name, ArticulationTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    GroundPenetration,
    PartInterpenetration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepViolation {
    pub kind: ViolationKind,
    /// One node for ground contact, two for interpenetration.
    pub nodes: Vec<usize>,
    pub depth: f64,
    /// Joint values keyed by child node index.
    pub config: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub samples_per_joint: usize,
    pub configs_checked: usize,
    pub violations: Vec<SweepViolation>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// One line per violation: kind, links, depth and configuration.
    pub fn to_text(&self, tree: &ArticulationTree) -> String {
        let mut s = String::new();
        for v in &self.violations {
            let names: Vec<String> = v
                .nodes
                .iter()
                .map(|&n| link_name(&tree.nodes[n].label, tree.nodes[n].id))
                .collect();
            let cfg: Vec<String> = v.config.iter().map(|(k, x)| format!("{k}:{x}")).collect();
            let _ = writeln!(
                s,
                "{:?} links={} depth={:.6e} config=[{}]",
                v.kind,
                names.join(","),
                v.depth,
                cfg.join(",")
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn moving_joints(tree: &ArticulationTree) -> Vec<usize> {
    tree.preorder()
        .into_iter()
        .filter(|&n| tree.joint(n).is_some_and(|j| j.kind != JointKind::Fixed))
        .collect()
}

/// Configurations visited by the sweep: rest; each joint alone at
/// `samples_per_joint` equispaced values (continuous joints over `[0, 2π)`)
/// with the others at rest; and, when at most [`MAX_CORNER_JOINTS`] joints
/// move, every combination of travel extremes. Repeated configurations are
/// kept once, in first-seen order.
pub fn sweep_configs(tree: &ArticulationTree, samples_per_joint: usize) -> Vec<BTreeMap<usize, f64>> {
    let joints = moving_joints(tree);
    let rest: BTreeMap<usize, f64> = joints
        .iter()
        .map(|&n| (n, tree.joint(n).expect("moving joint").rest_value()))
        .collect();
    let mut out = vec![rest.clone()];
    let n = samples_per_joint.max(2);
    for &j in &joints {
        let spec = tree.joint(j).expect("moving joint");
        for s in 0..n {
            let value = match spec.limits {
                Some((lo, hi)) => lo + (hi - lo) * s as f64 / (n - 1) as f64,
                None => TAU * s as f64 / n as f64,
            };
            let mut c = rest.clone();
            c.insert(j, value);
            out.push(c);
        }
    }
    if !joints.is_empty() && joints.len() <= MAX_CORNER_JOINTS {
        for mask in 0..(1u32 << joints.len()) {
            let mut c = BTreeMap::new();
            for (bit, &j) in joints.iter().enumerate() {
                let (lo, hi) = tree.joint(j).expect("moving joint").extremes();
                c.insert(j, if mask >> bit & 1 == 1 { hi } else { lo });
            }
            out.push(c);
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|c| seen.insert(c.iter().map(|(&j, v)| (j, v.to_bits())).collect::<Vec<_>>()));
    out
}

pub(super) fn local_boxes(tree: &ArticulationTree) -> Vec<Option<Aabb>> {
    (0..tree.len())
        .map(|n| tree.mesh_of(n).and_then(|m| compute_aabb(m).ok()))
        .collect()
}

fn check_config(
    tree: &ArticulationTree,
    boxes: &[Option<Aabb>],
    poses: &[Isometry3<f64>],
    config: &BTreeMap<usize, f64>,
) -> Vec<SweepViolation> {
    let mut out = Vec::new();
    for n in 0..tree.len() {
        let Some(mesh) = tree.mesh_of(n) else { continue };
        let pose = &poses[n];
        let min_z = mesh
            .vertices
            .iter()
            .map(|v| (pose * nalgebra::Point3::from(*v)).z)
            .fold(f64::INFINITY, f64::min);
        if min_z < -SWEEP_TOLERANCE {
            out.push(SweepViolation {
                kind: ViolationKind::GroundPenetration,
                nodes: vec![n],
                depth: -min_z,
                config: config.clone(),
            });
        }
    }
    let obbs: Vec<Option<Obb>> = boxes
        .iter()
        .zip(poses)
        .map(|(b, p)| b.map(|b| Obb::from_aabb(&b, p)))
        .collect();
    for a in 0..tree.len() {
        let Some(oa) = &obbs[a] else { continue };
        for b in a + 1..tree.len() {
            let Some(ob) = &obbs[b] else { continue };
            if tree.adjacent(a, b) {
                continue;
            }
            let depth = oa.penetration(ob);
            if depth > SWEEP_TOLERANCE {
                out.push(SweepViolation {
                    kind: ViolationKind::PartInterpenetration,
                    nodes: vec![a, b],
                    depth,
                    config: config.clone(),
                });
            }
        }
    }
    out
}

/// Checks every sweep configuration for mesh vertices below the ground and
/// overlapping oriented link boxes of non-adjacent links.
pub fn motion_sweep_check(tree: &ArticulationTree, samples_per_joint: usize) -> Result<SweepReport, PlausibilityError> {
    let configs = sweep_configs(tree, samples_per_joint);
    let boxes = local_boxes(tree);
    let per_config: Vec<Vec<SweepViolation>> = configs
        .par_iter()
        .map(|c| -> Result<_, PlausibilityError> {
            let poses = forward_kinematics(tree, c)?;
            Ok(check_config(tree, &boxes, &poses, c))
        })
        .collect::<Result<_, _>>()?;
    Ok(SweepReport {
        samples_per_joint,
        configs_checked: configs.len(),
        violations: per_config.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_box;
    use crate::joints::JointSpec;
    use crate::tree::{JointSlot, SemanticLabel};
    use nalgebra::Vector3;

    fn single_box(z0: f64) -> ArticulationTree {
        let mut t = ArticulationTree::with_root("box", SemanticLabel::new("box", "body"));
        let b = Aabb::new(Vector3::new(-0.5, -0.5, z0), Vector3::new(0.5, 0.5, z0 + 1.0));
        t.meshes.insert("m".into(), build_box(&b, 0.0).unwrap());
        t.nodes[0].mesh_ref = Some("m".into());
        t
    }

    #[test]
    fn resting_box_passes() {
        let r = motion_sweep_check(&single_box(0.0), 16).unwrap();
        assert!(r.passed());
        assert_eq!(r.configs_checked, 1);
    }

    #[test]
    fn sunken_box_fails() {
        let r = motion_sweep_check(&single_box(-0.1), 16).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].kind, ViolationKind::GroundPenetration);
        assert!((r.violations[0].depth - 0.1).abs() < 1e-12);
        assert!(r.to_text(&single_box(-0.1)).starts_with("GroundPenetration links=box/body_0"));
    }

    #[test]
    fn config_counts() {
        let mut t = single_box(0.0);
        for k in 0..3 {
            let c = t.add_child(
                0,
                SemanticLabel::new("box", "lid"),
                JointSlot::Simple(JointSpec::at(
                    JointKind::Revolute,
                    Vector3::new(0.0, 0.0, 1.0 + k as f64),
                    Vector3::y(),
                    Some((0.0, 1.0)),
                )),
            );
            assert_eq!(c, k + 1);
        }
        // Rest, 15 new samples per joint, and the corners with two or more
        // joints at the upper limit.
        assert_eq!(sweep_configs(&t, 16).len(), 1 + 3 * 15 + 4);
    }
}
