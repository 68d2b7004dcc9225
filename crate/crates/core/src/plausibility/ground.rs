//! Ground-clearance repair.
//!
//! The lowest point a link reaches is found per sweep configuration, and for
//! every rotational joint above the link also exactly over that joint's whole
//! range: a vertex height under one rotation is `c + a cos θ + b sin θ`,
//! minimized in closed form on an interval.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};

use super::{sweep_configs, PlausibilityError, GroundFixPolicy, REPAIR_RESOLUTION, SWEEP_TOLERANCE};
use crate::geometry::{build_box, Aabb};
use crate::joints::{forward_kinematics, rest_poses, JointKind, JointSpec};
use crate::tree::{ArticulationTree, JointSlot, SemanticLabel, PLINTH_PART};

#[derive(Clone, Debug, PartialEq)]
pub enum GroundRepair {
    /// The sweep never went below the ground.
    Unchanged,
    BaseInserted { height: f64 },
    /// `(node, old limits, new limits)` per clamped joint.
    LimitsClamped(Vec<(usize, (f64, f64), (f64, f64))>),
}

/// Minimum of `c + a cos θ + b sin θ` over `[lo, hi]`.
fn min_trig(c: f64, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let f = |t: f64| c + a * t.cos() + b * t.sin();
    let mut m = f(lo).min(f(hi));
    let r = a.hypot(b);
    if r == 0.0 {
        return m;
    }
    if hi - lo >= TAU {
        return c - r;
    }
    // Minimum where (cos θ, sin θ) = -(a, b) / r.
    let star = b.atan2(a) + PI;
    let k = ((lo - star) / TAU).ceil();
    let t = star + k * TAU;
    if t <= hi {
        m = m.min(f(t));
    }
    m
}

fn joint_range(spec: &JointSpec) -> (f64, f64) {
    match spec.limits {
        Some(l) => l,
        None if spec.kind == JointKind::Continuous => (0.0, TAU),
        None => (0.0, 0.0),
    }
}

/// Lowest vertex height of `node` as joint `j` (an ancestor edge of `node`,
/// or `node` itself) moves over `[lo, hi]` with every other joint as in
/// `poses`/`config`.
fn min_z_under_joint(
    tree: &ArticulationTree,
    poses: &[Isometry3<f64>],
    config: &BTreeMap<usize, f64>,
    j: usize,
    node: usize,
    lo: f64,
    hi: f64,
) -> f64 {
    let spec = tree.joint(j).expect("moving joint");
    let parent = tree.parent[j].expect("joint has a parent");
    let a = poses[parent] * spec.origin;
    let theta0 = config.get(&j).copied().unwrap_or(0.0);
    let b = spec.motion(theta0).inverse() * a.inverse() * poses[node];
    let r = a.rotation.to_rotation_matrix().matrix().row(2).transpose();
    let tz = a.translation.vector.z;
    let k = spec.axis.normalize();
    let mesh = tree.mesh_of(node).expect("node has a mesh");
    let mut m = f64::INFINITY;
    for v in &mesh.vertices {
        let w = (b * Point3::from(*v)).coords;
        let z = match spec.kind {
            JointKind::Revolute | JointKind::Continuous => {
                let along = k * k.dot(&w);
                min_trig(tz + r.dot(&along), r.dot(&(w - along)), r.dot(&k.cross(&w)), lo, hi)
            }
            JointKind::Prismatic => {
                let z0 = tz + r.dot(&w);
                let slope = r.dot(&k);
                (z0 + slope * lo).min(z0 + slope * hi)
            }
            JointKind::Fixed => tz + r.dot(&w),
        };
        m = m.min(z);
    }
    m
}

fn min_vertex_z(tree: &ArticulationTree, poses: &[Isometry3<f64>], node: usize) -> f64 {
    tree.mesh_of(node).map_or(f64::INFINITY, |m| {
        m.vertices
            .iter()
            .map(|v| (poses[node] * Point3::from(*v)).z)
            .fold(f64::INFINITY, f64::min)
    })
}

fn moving_ancestors(tree: &ArticulationTree, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = Some(node);
    while let Some(n) = cur {
        if tree.joint(n).is_some_and(|j| j.kind != JointKind::Fixed) {
            out.push(n);
        }
        cur = tree.parent[n];
    }
    out
}

/// Lowest point any mesh vertex reaches over the sweep configurations,
/// refined exactly along each single joint.
pub fn lowest_point(tree: &ArticulationTree, samples_per_joint: usize) -> Result<f64, PlausibilityError> {
    let meshed: Vec<usize> = (0..tree.len()).filter(|&n| tree.mesh_of(n).is_some()).collect();
    let ancestors: Vec<Vec<usize>> = meshed.iter().map(|&n| moving_ancestors(tree, n)).collect();
    let mut lowest = f64::INFINITY;
    for config in sweep_configs(tree, samples_per_joint) {
        let poses = forward_kinematics(tree, &config)?;
        for (&n, anc) in meshed.iter().zip(&ancestors) {
            lowest = lowest.min(min_vertex_z(tree, &poses, n));
            for &j in anc {
                let (lo, hi) = joint_range(tree.joint(j).expect("moving joint"));
                lowest = lowest.min(min_z_under_joint(tree, &poses, &config, j, n, lo, hi));
            }
        }
    }
    Ok(lowest)
}

fn rest_config(tree: &ArticulationTree) -> BTreeMap<usize, f64> {
    (0..tree.len())
        .filter_map(|n| tree.joint(n).filter(|j| j.kind != JointKind::Fixed).map(|j| (n, j.rest_value())))
        .collect()
}

/// Lowest point of the subtree under joint `j` while `j` covers `[lo, hi]`
/// and every other joint rests.
fn subtree_min_over(tree: &ArticulationTree, j: usize, lo: f64, hi: f64) -> Result<f64, PlausibilityError> {
    let config = rest_config(tree);
    let poses = forward_kinematics(tree, &config)?;
    Ok(tree
        .subtree(j)
        .into_iter()
        .filter(|&n| tree.mesh_of(n).is_some())
        .map(|n| min_z_under_joint(tree, &poses, &config, j, n, lo, hi))
        .fold(f64::INFINITY, f64::min))
}

fn insert_base(tree: &ArticulationTree, height: f64) -> Result<ArticulationTree, PlausibilityError> {
    let root = tree.root().expect("tree has a root");
    let mut footprint: Option<Aabb> = None;
    for n in &tree.nodes {
        if let Some(b) = n.bbox {
            footprint = Some(footprint.map_or(b, |f| f.union(&b)));
        }
    }
    let foot = footprint.ok_or_else(|| PlausibilityError::Unfixable("object has no geometry".into()))?;
    let base_box = Aabb::new(
        Vector3::new(foot.min.x, foot.min.y, 0.0),
        Vector3::new(foot.max.x, foot.max.y, height),
    );

    let mut out = tree.clone();
    let lift = Vector3::new(0.0, 0.0, height);
    for n in &mut out.nodes {
        n.bbox = n.bbox.map(|b| b.translated(&lift));
    }
    let base = out.nodes.len();
    let mut node = crate::tree::LinkNode::new(base, SemanticLabel::new(tree.category.clone(), PLINTH_PART));
    node.bbox = Some(base_box);
    node.mesh_ref = Some(PLINTH_PART.to_string());
    node.material_ref = tree.nodes[root].material_ref.clone();
    out.meshes.insert(PLINTH_PART.to_string(), build_box(&base_box, 0.0)?);
    out.nodes.push(node);
    out.parent.push(None);
    out.edge_joint.push(None);
    out.parent[root] = Some(base);
    out.edge_joint[root] = Some(JointSlot::Simple(JointSpec::fixed(Isometry3::from_parts(
        Translation3::from(lift),
        UnitQuaternion::identity(),
    ))));
    Ok(out)
}

/// Largest `u` between `good` (known clear) and `bad` such that `clear(u)`,
/// to within [`REPAIR_RESOLUTION`].
fn bisect(mut good: f64, mut bad: f64, clear: impl Fn(f64) -> Result<bool, PlausibilityError>) -> Result<f64, PlausibilityError> {
    while (bad - good).abs() > REPAIR_RESOLUTION {
        let mid = 0.5 * (good + bad);
        if clear(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

fn clamp_limits(tree: &ArticulationTree, samples: usize) -> Result<(ArticulationTree, GroundRepair), PlausibilityError> {
    let rest = forward_kinematics(tree, &rest_config(tree))?;
    let rest_min = (0..tree.len())
        .map(|n| min_vertex_z(tree, &rest, n))
        .fold(f64::INFINITY, f64::min);
    if rest_min < -SWEEP_TOLERANCE {
        return Err(PlausibilityError::Unfixable(format!(
            "rest pose already reaches z = {rest_min:.6}"
        )));
    }
    let mut out = tree.clone();
    let mut changes = Vec::new();
    for j in tree.preorder() {
        let Some(spec) = out.joint(j).cloned() else { continue };
        let Some((lo, hi)) = spec.limits else { continue };
        let r = spec.rest_value();
        let clear = |a: f64, b: f64| -> Result<bool, PlausibilityError> {
            Ok(subtree_min_over(&out, j, a, b)? >= -SWEEP_TOLERANCE)
        };
        if clear(lo, hi)? {
            continue;
        }
        let new_hi = if clear(r, hi)? { hi } else { bisect(r, hi, |u| clear(r, u))? };
        let new_lo = if clear(lo, r)? { lo } else { bisect(r, lo, |u| clear(u, r))? };
        if new_lo >= new_hi {
            return Err(PlausibilityError::Unfixable(format!("joint of node {j} would lose all travel")));
        }
        if let Some(JointSlot::Simple(js)) = out.edge_joint[j].as_mut() {
            js.limits = Some((new_lo, new_hi));
        }
        changes.push((j, (lo, hi), (new_lo, new_hi)));
    }
    let lowest = lowest_point(&out, samples)?;
    if lowest < -SWEEP_TOLERANCE {
        return Err(PlausibilityError::Unfixable(format!(
            "joint combinations still reach z = {lowest:.6}"
        )));
    }
    let repair = if changes.is_empty() {
        GroundRepair::Unchanged
    } else {
        GroundRepair::LimitsClamped(changes)
    };
    Ok((out, repair))
}

/// Keeps every swept vertex at or above the ground, either by lifting the
/// object on a fixed base (height rounded up to 1e-4 m) or by shrinking the
/// limits of offending joints. Objects that never go below the ground are
/// returned unchanged.
pub fn ground_clearance_fix(
    tree: &ArticulationTree,
    policy: GroundFixPolicy,
    samples_per_joint: usize,
) -> Result<(ArticulationTree, GroundRepair), PlausibilityError> {
    let lowest = lowest_point(tree, samples_per_joint)?;
    if lowest >= -SWEEP_TOLERANCE {
        return Ok((tree.clone(), GroundRepair::Unchanged));
    }
    match policy {
        GroundFixPolicy::BaseInsert => {
            let height = (-lowest / REPAIR_RESOLUTION).ceil() * REPAIR_RESOLUTION;
            let out = insert_base(tree, height)?;
            debug_assert!(rest_poses(&out).is_ok());
            Ok((out, GroundRepair::BaseInserted { height }))
        }
        GroundFixPolicy::LimitClamp => clamp_limits(tree, samples_per_joint),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_minimum() {
        // cos over [0, 2π) bottoms out at π.
        assert!((min_trig(0.0, 1.0, 0.0, 0.0, 6.0) + 1.0).abs() < 1e-12);
        // Interval that excludes the stationary point.
        let m = min_trig(0.0, 1.0, 0.0, 0.0, 1.0);
        assert!((m - 1.0f64.cos()).abs() < 1e-12);
        // Negative intervals.
        let m = min_trig(0.0, 0.0, 1.0, -2.0, 0.0);
        assert!((m + 1.0).abs() < 1e-12);
    }
}
