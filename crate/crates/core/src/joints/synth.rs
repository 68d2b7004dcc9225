//! Joint synthesis from laid-out bounding boxes.

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};

use super::rules::Anchor;
use super::{
    AxisPolicy, CompoundJointSpec, CompoundKind, EdgeKind, JointError, JointKind, JointRule, JointRuleTable,
    JointSpec, LimitPolicy,
};
use crate::geometry::{Aabb, Obb};
use crate::plausibility::{GAP_SCALE, SWEEP_TOLERANCE};
use crate::rng::SeededStream;
use crate::tree::{ArticulationTree, JointSlot};

/// Angular resolution of the swing obstruction scan (radians).
pub const SWING_STEP: f64 = 0.01;
const LIMIT_RESOLUTION: f64 = 1e4;

/// Rounds a positive travel down to the 1e-4 grid.
pub fn round_limit(x: f64) -> f64 {
    (x * LIMIT_RESOLUTION).floor() / LIMIT_RESOLUTION
}

/// Uniform draw in `[cap/2, cap]` rounded down to the 1e-4 grid.
fn sample_travel(rng: &mut SeededStream, cap: f64, node: usize, what: &str) -> Result<f64, JointError> {
    let v = round_limit(rng.uniform(0.5 * cap, cap));
    if v <= 0.0 {
        return Err(JointError::InfeasibleLimits {
            node,
            reason: format!("{what}: available travel {cap:.3e} rounds to zero"),
        });
    }
    Ok(v)
}

fn anchor_point(b: &Aabb, anchor: Anchor) -> Vector3<f64> {
    let c = b.center();
    match anchor {
        Anchor::Top => Vector3::new(c.x, c.y, b.max.z),
        Anchor::Bottom => Vector3::new(c.x, c.y, b.min.z),
        Anchor::Front => Vector3::new(b.max.x, c.y, c.z),
        Anchor::Back => Vector3::new(b.min.x, c.y, c.z),
        Anchor::Center => c,
    }
}

/// World pose of `node` with every joint at its rest value, composed from
/// synthesized ancestors.
pub(super) fn rest_pose(tree: &ArticulationTree, node: usize) -> Result<Isometry3<f64>, JointError> {
    let mut chain = Vec::new();
    let mut cur = node;
    while let Some(p) = tree.parent[cur] {
        chain.push(cur);
        cur = p;
        if chain.len() > tree.len() {
            return Err(JointError::InvalidJoint("parent cycle".into()));
        }
    }
    let mut pose = Isometry3::identity();
    for &n in chain.iter().rev() {
        match tree.edge_joint[n].as_ref() {
            Some(JointSlot::Simple(j)) => pose = pose * j.origin * j.motion(j.rest_value()),
            Some(JointSlot::Compound(c)) => {
                for j in &c.chain {
                    pose = pose * j.origin * j.motion(j.rest_value());
                }
            }
            _ => return Err(JointError::NotSynthesized(n)),
        }
    }
    Ok(pose)
}

fn proxy_box(tree: &ArticulationTree, n: usize) -> Option<Aabb> {
    let b = tree.nodes[n].bbox?;
    let articulated = tree.edge_joint[n]
        .as_ref()
        .and_then(JointSlot::kind)
        .is_some_and(EdgeKind::is_articulated);
    Some(if articulated {
        Aabb::from_center_extent(b.center(), b.extent() * GAP_SCALE)
    } else {
        b
    })
}

/// Largest multiple of [`SWING_STEP`] (at most `cap`) the subtree of `node`
/// can rotate about the world axis through `pivot` before its boxes hit a
/// non-adjacent box. Boxes of articulated links are taken at their post-gap
/// size. Contacts already present at rest are ignored.
fn free_swing(tree: &ArticulationTree, node: usize, pivot: Vector3<f64>, axis: Vector3<f64>, cap: f64) -> f64 {
    let moving: Vec<usize> = tree.subtree(node);
    let in_moving = |n: usize| moving.contains(&n);
    let mut pairs = Vec::new();
    for &m in &moving {
        let Some(mb) = proxy_box(tree, m) else { continue };
        for o in (0..tree.len()).filter(|&o| !in_moving(o) && !tree.adjacent(m, o)) {
            let Some(ob) = proxy_box(tree, o) else { continue };
            let still = Obb::from_aabb(&ob, &Isometry3::identity());
            if Obb::from_aabb(&mb, &Isometry3::identity()).penetration(&still) > SWEEP_TOLERANCE {
                continue;
            }
            pairs.push((mb, still));
        }
    }
    let unit = Unit::new_normalize(axis);
    let steps = (cap / SWING_STEP + 1e-9).floor() as usize;
    for k in 1..=steps {
        let theta = k as f64 * SWING_STEP;
        let rot = UnitQuaternion::from_axis_angle(&unit, theta);
        let pose = Isometry3::from_parts(Translation3::from(pivot - rot * pivot), rot);
        if pairs
            .iter()
            .any(|(mb, still)| Obb::from_aabb(mb, &pose).penetration(still) > SWEEP_TOLERANCE)
        {
            return (k - 1) as f64 * SWING_STEP;
        }
    }
    if steps as f64 * SWING_STEP < cap {
        // The scan grid stops short of the cap; check the cap itself.
        let rot = UnitQuaternion::from_axis_angle(&unit, cap);
        let pose = Isometry3::from_parts(Translation3::from(pivot - rot * pivot), rot);
        if pairs
            .iter()
            .any(|(mb, still)| Obb::from_aabb(mb, &pose).penetration(still) > SWEEP_TOLERANCE)
        {
            return steps as f64 * SWING_STEP;
        }
    }
    cap
}

struct Frame {
    /// World position of the joint origin.
    point: Vector3<f64>,
    /// World axes, one per simple joint of the edge.
    axes: Vec<Vector3<f64>>,
}

fn frame_for(policy: AxisPolicy, child: &Aabb, parent: &Aabb) -> Frame {
    let c = child.center();
    let (lo, hi) = (child.min, child.max);
    let one = |point, axis| Frame { point, axes: vec![axis] };
    match policy {
        AxisPolicy::Anchor(a) => one(anchor_point(child, a), Vector3::x()),
        AxisPolicy::Slide(0) => one(Vector3::new(hi.x, c.y, c.z), Vector3::x()),
        AxisPolicy::Slide(1) => one(c, Vector3::y()),
        AxisPolicy::Slide(_) => one(Vector3::new(c.x, c.y, lo.z), Vector3::z()),
        AxisPolicy::HingeLeft => one(Vector3::new(hi.x, lo.y, c.z), -Vector3::z()),
        AxisPolicy::HingeRight => one(Vector3::new(hi.x, hi.y, c.z), Vector3::z()),
        AxisPolicy::HingeSide => {
            if c.y <= parent.center().y + 1e-9 {
                frame_for(AxisPolicy::HingeLeft, child, parent)
            } else {
                frame_for(AxisPolicy::HingeRight, child, parent)
            }
        }
        AxisPolicy::HingeBottom => one(Vector3::new(hi.x, c.y, lo.z), Vector3::y()),
        AxisPolicy::HingeTop => one(Vector3::new(hi.x, c.y, hi.z), -Vector3::y()),
        AxisPolicy::SpinX => one(Vector3::new(lo.x, c.y, c.z), Vector3::x()),
        AxisPolicy::SpinZ | AxisPolicy::CylZ => one(Vector3::new(c.x, c.y, lo.z), Vector3::z()),
        AxisPolicy::PlanarXy | AxisPolicy::GimbalXy => Frame {
            point: Vector3::new(c.x, c.y, lo.z),
            axes: vec![Vector3::x(), Vector3::y()],
        },
    }
}

/// Two-sided planar travel along `axis`: up to `cap` of the free space on
/// each side between the child and parent boxes.
fn planar_range(
    rng: &mut SeededStream,
    child: &Aabb,
    parent: &Aabb,
    axis: usize,
    cap: f64,
    node: usize,
) -> Result<(f64, f64), JointError> {
    let below = cap * (child.min[axis] - parent.min[axis]).max(0.0);
    let above = cap * (parent.max[axis] - child.max[axis]).max(0.0);
    let lo = round_limit(rng.uniform(0.5 * below, below));
    let hi = round_limit(rng.uniform(0.5 * above, above));
    if lo <= 0.0 && hi <= 0.0 {
        return Err(JointError::InfeasibleLimits {
            node,
            reason: format!("no free space along axis {axis}"),
        });
    }
    Ok((-lo, hi))
}

/// Derives origin, axis and limits of the joint above `node` from the child
/// and parent boxes. Ancestors must already be synthesized. Draws from `rng`
/// once per sampled limit, in chain order.
pub fn synthesize_joint(
    tree: &ArticulationTree,
    node: usize,
    rules: &JointRuleTable,
    rng: &mut SeededStream,
) -> Result<JointSlot, JointError> {
    let parent = tree.parent[node].ok_or(JointError::NotSynthesized(node))?;
    let rule: &JointRule = rules.get(&tree.nodes[parent].label.part, &tree.nodes[node].label.part)?;
    let child_box = tree.nodes[node].bbox.ok_or(JointError::MissingGeometry(node))?;
    let parent_box = tree.nodes[parent].bbox.ok_or(JointError::MissingGeometry(node))?;
    let parent_pose = rest_pose(tree, parent)?;
    let frame = frame_for(rule.axis, &child_box, &parent_box);

    let inv = parent_pose.inverse();
    let origin_pos = (inv * Point3::from(frame.point)).coords;
    let local_axes: Vec<Vector3<f64>> = frame.axes.iter().map(|a| (inv.rotation * a).normalize()).collect();
    let ext = child_box.extent();
    let cap = rule.cap;

    let simple = |kind, limits| JointSpec::at(kind, origin_pos, local_axes[0], limits);
    let slot = match rule.kind {
        EdgeKind::Simple(JointKind::Fixed) => JointSlot::Simple(JointSpec::at(
            JointKind::Fixed,
            origin_pos,
            Vector3::x(),
            None,
        )),
        EdgeKind::Simple(JointKind::Continuous) => JointSlot::Simple(simple(JointKind::Continuous, None)),
        EdgeKind::Simple(JointKind::Prismatic) => {
            let axis_idx = match rule.axis {
                AxisPolicy::Slide(i) => i,
                _ => 0,
            };
            let avail = match rule.limits {
                LimitPolicy::Telescope => cap * ext.z,
                _ => cap * ext[axis_idx],
            };
            let d = sample_travel(rng, avail, node, "slide")?;
            JointSlot::Simple(simple(JointKind::Prismatic, Some((0.0, d))))
        }
        EdgeKind::Simple(JointKind::Revolute) => match rule.limits {
            LimitPolicy::Tilt => {
                let a = sample_travel(rng, cap, node, "tilt")?;
                JointSlot::Simple(simple(JointKind::Revolute, Some((-a, a))))
            }
            _ => {
                let free = free_swing(tree, node, frame.point, frame.axes[0], cap);
                if free <= 0.0 {
                    return Err(JointError::InfeasibleLimits {
                        node,
                        reason: "obstructed immediately".into(),
                    });
                }
                let th = sample_travel(rng, free, node, "swing")?;
                JointSlot::Simple(simple(JointKind::Revolute, Some((0.0, th))))
            }
        },
        EdgeKind::Compound(kind) => {
            let axes = &local_axes;
            let (first, second) = match kind {
                CompoundKind::Cylindrical => {
                    let d = sample_travel(rng, cap * ext.z, node, "telescope")?;
                    (
                        JointSpec::at(JointKind::Continuous, origin_pos, axes[0], None),
                        JointSpec::at(JointKind::Prismatic, Vector3::zeros(), axes[0], Some((0.0, d))),
                    )
                }
                CompoundKind::Planar => {
                    let rx = planar_range(rng, &child_box, &parent_box, 0, cap, node)?;
                    let ry = planar_range(rng, &child_box, &parent_box, 1, cap, node)?;
                    (
                        JointSpec::at(JointKind::Prismatic, origin_pos, axes[0], Some(rx)),
                        JointSpec::at(JointKind::Prismatic, Vector3::zeros(), axes[1], Some(ry)),
                    )
                }
                CompoundKind::Gimbal => {
                    let a = sample_travel(rng, cap, node, "tilt")?;
                    let b = sample_travel(rng, cap, node, "tilt")?;
                    (
                        JointSpec::at(JointKind::Revolute, origin_pos, axes[0], Some((-a, a))),
                        JointSpec::at(JointKind::Revolute, Vector3::zeros(), axes[1], Some((-b, b))),
                    )
                }
            };
            let spec = CompoundJointSpec {
                kind,
                chain: vec![first, second],
            };
            spec.check()?;
            JointSlot::Compound(spec)
        }
    };
    if let JointSlot::Simple(j) = &slot {
        j.check()?;
    }
    Ok(slot)
}

/// Synthesizes every edge top-down (pre-order) from one stream.
pub fn synthesize_joints(
    tree: &ArticulationTree,
    rules: &JointRuleTable,
    rng: &mut SeededStream,
) -> Result<ArticulationTree, JointError> {
    let mut out = tree.clone();
    for n in tree.preorder() {
        if out.parent[n].is_some() {
            let slot = synthesize_joint(&out, n, rules, rng)?;
            out.edge_joint[n] = Some(slot);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::SemanticLabel;

    fn cabinet(door_y: (f64, f64)) -> (ArticulationTree, JointRuleTable) {
        let rules = JointRuleTable::parse(
            "edge body drawer kind=prismatic axis=slide_x limits=slide_depth\n\
             edge body leg kind=fixed axis=top\n\
             edge body door kind=revolute axis=hinge_side limits=swing\n",
        )
        .unwrap();
        let mut t = ArticulationTree::with_root("cabinet", SemanticLabel::new("cabinet", "body"));
        t.nodes[0].bbox = Some(Aabb::new(Vector3::new(-0.25, -0.4, 0.1), Vector3::new(0.25, 0.4, 1.0)));
        let d = t.add_child(0, SemanticLabel::new("cabinet", "drawer"), JointSlot::Unassigned);
        t.nodes[d].bbox = Some(Aabb::new(Vector3::new(-0.25, -0.38, 0.6), Vector3::new(0.25, 0.38, 0.95)));
        let l = t.add_child(0, SemanticLabel::new("cabinet", "leg"), JointSlot::Unassigned);
        t.nodes[l].bbox = Some(Aabb::new(Vector3::new(-0.25, -0.4, 0.0), Vector3::new(-0.2, -0.35, 0.1)));
        let door = t.add_child(0, SemanticLabel::new("cabinet", "door"), JointSlot::Unassigned);
        t.nodes[door].bbox = Some(Aabb::new(
            Vector3::new(0.23, door_y.0, 0.12),
            Vector3::new(0.25, door_y.1, 0.58),
        ));
        (t, rules)
    }

    #[test]
    fn drawer_leg_and_door() {
        let (t, rules) = cabinet((-0.4, 0.0));
        let out = synthesize_joints(&t, &rules, &mut SeededStream::new(3)).unwrap();

        let drawer = out.joint(1).unwrap();
        assert_eq!(drawer.kind, JointKind::Prismatic);
        assert_eq!(drawer.axis, Vector3::x());
        let (lo, hi) = drawer.limits.unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi <= 0.95 * 0.5);

        let leg = out.joint(2).unwrap();
        assert_eq!(leg.kind, JointKind::Fixed);
        assert!((leg.origin.translation.vector - Vector3::new(-0.225, -0.375, 0.1)).norm() < 1e-12);

        let door = out.joint(3).unwrap();
        assert_eq!(door.kind, JointKind::Revolute);
        assert_eq!(door.axis, -Vector3::z());
        let o = door.origin.translation.vector;
        assert!((o.x - 0.25).abs() < 1e-9 && (o.y + 0.4).abs() < 1e-9);
        let (lo, hi) = door.limits.unwrap();
        assert!(lo == 0.0 && hi > 0.0 && hi <= std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn right_side_door_hinges_right() {
        let (t, rules) = cabinet((0.05, 0.4));
        let out = synthesize_joints(&t, &rules, &mut SeededStream::new(3)).unwrap();
        let door = out.joint(3).unwrap();
        assert_eq!(door.axis, Vector3::z());
        assert!((door.origin.translation.vector.y - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_depth_drawer_is_infeasible() {
        let (mut t, rules) = cabinet((-0.4, 0.0));
        let b = t.nodes[1].bbox.unwrap();
        t.nodes[1].bbox = Some(Aabb::new(Vector3::new(0.25, b.min.y, b.min.z), b.max));
        let t = {
            let mut s = t.clone();
            s.edge_joint[1] = Some(JointSlot::Unassigned);
            s
        };
        assert!(matches!(
            synthesize_joint(&t, 1, &rules, &mut SeededStream::new(0)),
            Err(JointError::InfeasibleLimits { node: 1, .. })
        ));
    }

    #[test]
    fn swing_stops_at_obstacle() {
        // A post in front of the door's free edge limits the swing.
        let (mut t, rules) = cabinet((-0.4, 0.0));
        let rules = {
            let mut r = rules;
            r.rules.insert(
                ("body".into(), "post".into()),
                JointRule {
                    kind: EdgeKind::Simple(JointKind::Fixed),
                    axis: AxisPolicy::Anchor(Anchor::Bottom),
                    limits: LimitPolicy::None,
                    cap: 0.0,
                },
            );
            r
        };
        let p = t.add_child(0, SemanticLabel::new("cabinet", "post"), JointSlot::Unassigned);
        t.nodes[p].bbox = Some(Aabb::new(Vector3::new(0.35, -0.05, 0.0), Vector3::new(0.4, 0.0, 1.0)));
        let out = synthesize_joints(&t, &rules, &mut SeededStream::new(9)).unwrap();
        let (_, hi) = out.joint(3).unwrap().limits.unwrap();
        // Door of width 0.4 (0.392 after the gap) about (0.25, -0.4): its
        // free edge reaches x = 0.35 near asin(0.1 / 0.396) ≈ 0.255 rad.
        assert!(hi < 0.26, "{hi}");
    }
}
