//! Joints: kind catalog, per-category rule tables, synthesis of origin/axis/
//! limits from laid-out geometry, compound-joint expansion and forward
//! kinematics.

mod kinematics;
mod rules;
mod synth;

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};

use crate::syntax::SyntaxError;

pub use kinematics::{expand_compound, expand_compounds, forward_kinematics, rest_poses, ExpandedChain};
pub use rules::{assign_joint_kinds, Anchor, AxisPolicy, JointRule, JointRuleTable, LimitPolicy};
pub use synth::{round_limit, synthesize_joint, synthesize_joints, SWING_STEP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Continuous,
    Fixed,
}

impl JointKind {
    pub fn name(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Continuous => "continuous",
            JointKind::Fixed => "fixed",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "revolute" => JointKind::Revolute,
            "prismatic" => JointKind::Prismatic,
            "continuous" => JointKind::Continuous,
            "fixed" => JointKind::Fixed,
            _ => return None,
        })
    }

    pub fn has_limits(self) -> bool {
        matches!(self, JointKind::Revolute | JointKind::Prismatic)
    }

    pub fn is_rotational(self) -> bool {
        matches!(self, JointKind::Revolute | JointKind::Continuous)
    }
}

/// Multi-degree-of-freedom joints built from two simple joints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CompoundKind {
    /// Rotation about and translation along one axis (rotation first).
    Cylindrical,
    /// Translation along two orthogonal axes.
    Planar,
    /// Rotation about two orthogonal axes through one point.
    Gimbal,
}

impl CompoundKind {
    pub fn name(self) -> &'static str {
        match self {
            CompoundKind::Cylindrical => "cylindrical",
            CompoundKind::Planar => "planar",
            CompoundKind::Gimbal => "gimbal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Simple(JointKind),
    Compound(CompoundKind),
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Simple(k) => k.name(),
            EdgeKind::Compound(k) => k.name(),
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        if let Some(k) = JointKind::from_name(s) {
            return Some(EdgeKind::Simple(k));
        }
        Some(EdgeKind::Compound(match s {
            "cylindrical" => CompoundKind::Cylindrical,
            "planar" => CompoundKind::Planar,
            "gimbal" => CompoundKind::Gimbal,
            _ => return None,
        }))
    }

    pub fn is_articulated(self) -> bool {
        self != EdgeKind::Simple(JointKind::Fixed)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum JointError {
    #[error("no joint rule for edge {parent} -> {child}")]
    MissingRule { parent: String, child: String },
    #[error("empty motion range for node {node}: {reason}")]
    InfeasibleLimits { node: usize, reason: String },
    #[error("joint of node {node}: value {value} outside [{lower}, {upper}]")]
    ValueOutOfLimits { node: usize, value: f64, lower: f64, upper: f64 },
    #[error("node {0} has no synthesized joint")]
    NotSynthesized(usize),
    #[error("node {0} still carries a compound joint")]
    UnexpandedCompound(usize),
    #[error("node {0} (or its parent) has no bounding box")]
    MissingGeometry(usize),
    #[error("invalid joint: {0}")]
    InvalidJoint(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Simple joint. `origin` is the joint frame in the parent link frame; the
/// child link frame coincides with the joint frame at value 0.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    pub origin: Isometry3<f64>,
    pub axis: Vector3<f64>,
    /// Radians for revolute, meters for prismatic; `None` otherwise.
    pub limits: Option<(f64, f64)>,
}

impl JointSpec {
    pub fn fixed(origin: Isometry3<f64>) -> Self {
        Self {
            kind: JointKind::Fixed,
            origin,
            axis: Vector3::x(),
            limits: None,
        }
    }

    pub fn at(kind: JointKind, position: Vector3<f64>, axis: Vector3<f64>, limits: Option<(f64, f64)>) -> Self {
        Self {
            kind,
            origin: Isometry3::from_parts(Translation3::from(position), UnitQuaternion::identity()),
            axis,
            limits,
        }
    }

    /// Unit axis, limits present iff revolute/prismatic with `lower < upper`,
    /// unit rotation.
    pub fn check(&self) -> Result<(), JointError> {
        if self.kind != JointKind::Fixed && (self.axis.norm() - 1.0).abs() > 1e-9 {
            return Err(JointError::InvalidJoint(format!("axis {:?} is not unit length", self.axis)));
        }
        match (self.kind.has_limits(), self.limits) {
            (true, Some((lo, hi))) if lo < hi => {}
            (true, Some((lo, hi))) => {
                return Err(JointError::InvalidJoint(format!("limits [{lo}, {hi}] are not ordered")));
            }
            (true, None) => {
                return Err(JointError::InvalidJoint(format!("{} joint without limits", self.kind.name())));
            }
            (false, Some(_)) => {
                return Err(JointError::InvalidJoint(format!("{} joint with limits", self.kind.name())));
            }
            (false, None) => {}
        }
        if (self.origin.rotation.quaternion().norm() - 1.0).abs() > 1e-9 {
            return Err(JointError::InvalidJoint("origin rotation is not a unit quaternion".into()));
        }
        Ok(())
    }

    /// Motion of the child relative to the joint frame at `value`.
    pub fn motion(&self, value: f64) -> Isometry3<f64> {
        match self.kind {
            JointKind::Revolute | JointKind::Continuous => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Unit::new_normalize(self.axis), value),
            ),
            JointKind::Prismatic => Isometry3::from_parts(Translation3::from(self.axis * value), UnitQuaternion::identity()),
            JointKind::Fixed => Isometry3::identity(),
        }
    }

    /// Values a sweep visits at the ends of travel: the limits, or `{0, π}`
    /// for continuous joints, `{0}` for fixed ones.
    pub fn extremes(&self) -> (f64, f64) {
        match (self.kind, self.limits) {
            (_, Some(l)) => l,
            (JointKind::Continuous, None) => (0.0, std::f64::consts::PI),
            _ => (0.0, 0.0),
        }
    }

    /// Value at the rest configuration: 0 clamped into the limits.
    pub fn rest_value(&self) -> f64 {
        match self.limits {
            Some((lo, hi)) => 0.0f64.clamp(lo, hi),
            None => 0.0,
        }
    }
}

/// Compound joint as the ordered chain of simple joints it expands to. The
/// first joint carries the origin; later joints sit at identity origins on
/// the intermediate dummy links.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundJointSpec {
    pub kind: CompoundKind,
    pub chain: Vec<JointSpec>,
}

impl CompoundJointSpec {
    pub fn origin(&self) -> Isometry3<f64> {
        self.chain.first().map_or_else(Isometry3::identity, |j| j.origin)
    }

    pub fn check(&self) -> Result<(), JointError> {
        if self.chain.len() < 2 {
            return Err(JointError::InvalidJoint("compound chain needs at least 2 joints".into()));
        }
        for j in &self.chain {
            j.check()?;
        }
        if self.chain[1..].iter().any(|j| j.origin != Isometry3::identity()) {
            return Err(JointError::InvalidJoint("inner compound joints must have identity origins".into()));
        }
        let (a, b) = (&self.chain[0], &self.chain[1]);
        let ok = match self.kind {
            CompoundKind::Cylindrical => {
                a.kind.is_rotational() && b.kind == JointKind::Prismatic && (a.axis - b.axis).norm() < 1e-12
            }
            CompoundKind::Planar => {
                a.kind == JointKind::Prismatic && b.kind == JointKind::Prismatic && a.axis.dot(&b.axis).abs() < 1e-12
            }
            CompoundKind::Gimbal => {
                a.kind == JointKind::Revolute && b.kind == JointKind::Revolute && a.axis.dot(&b.axis).abs() < 1e-12
            }
        };
        if !ok {
            return Err(JointError::InvalidJoint(format!(
                "{} chain has incompatible joints",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Closed-form motion of the whole compound at `values` (one per chain joint).
    pub fn motion(&self, values: &[f64]) -> Isometry3<f64> {
        let (a, b) = (&self.chain[0], &self.chain[1]);
        let (u, v) = (values[0], values[1]);
        match self.kind {
            CompoundKind::Cylindrical => Isometry3::from_parts(
                Translation3::from(a.axis * v),
                UnitQuaternion::from_axis_angle(&Unit::new_normalize(a.axis), u),
            ),
            CompoundKind::Planar => {
                Isometry3::from_parts(Translation3::from(a.axis * u + b.axis * v), UnitQuaternion::identity())
            }
            CompoundKind::Gimbal => Isometry3::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&Unit::new_normalize(a.axis), u)
                    * UnitQuaternion::from_axis_angle(&Unit::new_normalize(b.axis), v),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_invariants() {
        let ok = JointSpec::at(JointKind::Prismatic, Vector3::zeros(), Vector3::x(), Some((0.0, 0.4)));
        assert!(ok.check().is_ok());
        let mut bad = ok.clone();
        bad.limits = Some((0.4, 0.4));
        assert!(bad.check().is_err());
        bad.limits = None;
        assert!(bad.check().is_err());
        let cont = JointSpec::at(JointKind::Continuous, Vector3::zeros(), Vector3::z(), Some((0.0, 1.0)));
        assert!(cont.check().is_err());
        let skew = JointSpec::at(JointKind::Revolute, Vector3::zeros(), Vector3::new(1.0, 1.0, 0.0), Some((0.0, 1.0)));
        assert!(skew.check().is_err());
    }

    #[test]
    fn prismatic_motion() {
        let j = JointSpec::at(JointKind::Prismatic, Vector3::zeros(), Vector3::z(), Some((0.0, 1.0)));
        let m = j.motion(0.3);
        assert!((m.translation.vector - Vector3::new(0.0, 0.0, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn kind_names_round_trip() {
        for name in ["revolute", "prismatic", "continuous", "fixed", "cylindrical", "planar", "gimbal"] {
            assert_eq!(EdgeKind::from_name(name).unwrap().name(), name);
        }
        assert!(EdgeKind::from_name("floating").is_none());
    }
}
