//! Joint rule tables.
//!
//! One line per edge type:
//!
//! ```text
//! edge body drawer kind=prismatic axis=slide_x limits=slide_depth
//! edge body door   kind=revolute  axis=hinge_side limits=swing cap=1.5708
//! ```
//!
//! Labels are part names of the table's category.

use std::collections::BTreeMap;

use super::{CompoundKind, EdgeKind, JointError, JointKind};
use crate::syntax::{self, SyntaxError};
use crate::tree::{ArticulationTree, JointSlot};

/// Face or point of the child box used as a fixed-joint origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Top,
    Bottom,
    Front,
    Back,
    Center,
}

/// Where the joint sits and which way it moves, relative to the child box.
/// The object's front faces +x and left is -y.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisPolicy {
    Anchor(Anchor),
    /// Translation along +x (origin at the child front-face centre), +y
    /// (centre) or +z (bottom centre).
    Slide(usize),
    /// Vertical hinge on the front-left edge, opening outward (axis -z).
    HingeLeft,
    /// Vertical hinge on the front-right edge, opening outward (axis +z).
    HingeRight,
    /// Left or right hinge, whichever side of the parent the child sits on
    /// (left on a tie).
    HingeSide,
    /// Horizontal hinge on the front-bottom edge, falling forward (axis +y).
    HingeBottom,
    /// Horizontal hinge on the front-top edge, lifting up (axis -y).
    HingeTop,
    /// Spin about +x through the back-face centre.
    SpinX,
    /// Spin about +z through the bottom centre.
    SpinZ,
    /// Cylindrical joint about +z through the bottom centre.
    CylZ,
    /// Planar joint along +x then +y through the bottom centre.
    PlanarXy,
    /// Gimbal about +x then +y through the bottom centre.
    GimbalXy,
}

impl AxisPolicy {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "top" => AxisPolicy::Anchor(Anchor::Top),
            "bottom" => AxisPolicy::Anchor(Anchor::Bottom),
            "front" => AxisPolicy::Anchor(Anchor::Front),
            "back" => AxisPolicy::Anchor(Anchor::Back),
            "center" => AxisPolicy::Anchor(Anchor::Center),
            "slide_x" => AxisPolicy::Slide(0),
            "slide_y" => AxisPolicy::Slide(1),
            "slide_z" => AxisPolicy::Slide(2),
            "hinge_left" => AxisPolicy::HingeLeft,
            "hinge_right" => AxisPolicy::HingeRight,
            "hinge_side" => AxisPolicy::HingeSide,
            "hinge_bottom" => AxisPolicy::HingeBottom,
            "hinge_top" => AxisPolicy::HingeTop,
            "spin_x" => AxisPolicy::SpinX,
            "spin_z" => AxisPolicy::SpinZ,
            "cyl_z" => AxisPolicy::CylZ,
            "planar_xy" => AxisPolicy::PlanarXy,
            "gimbal_xy" => AxisPolicy::GimbalXy,
            _ => return None,
        })
    }
}

/// How the motion range is derived from geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitPolicy {
    None,
    /// `[0, d]` with `d` up to `cap` (default 0.95) times the child extent
    /// along the slide axis.
    SlideDepth,
    /// `[0, θ]` with `θ` up to the first obstruction angle, at most `cap`
    /// (default π/2).
    Swing,
    /// `[-θ, θ]` with `θ` up to `cap` (default π/6).
    Tilt,
    /// `[0, d]` with `d` up to `cap` (default 0.3) times the child height.
    Telescope,
    /// Per axis `[-a, b]` with `a`, `b` up to `cap` (default 0.9) times the
    /// free space between the child and the parent box edges.
    PlanarExtent,
}

impl LimitPolicy {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "none" => LimitPolicy::None,
            "slide_depth" => LimitPolicy::SlideDepth,
            "swing" => LimitPolicy::Swing,
            "tilt" => LimitPolicy::Tilt,
            "telescope" => LimitPolicy::Telescope,
            "planar_extent" => LimitPolicy::PlanarExtent,
            _ => return None,
        })
    }

    pub fn default_cap(self) -> f64 {
        match self {
            LimitPolicy::None => 0.0,
            LimitPolicy::SlideDepth => 0.95,
            LimitPolicy::Swing => std::f64::consts::FRAC_PI_2,
            LimitPolicy::Tilt => std::f64::consts::FRAC_PI_6,
            LimitPolicy::Telescope => 0.3,
            LimitPolicy::PlanarExtent => 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointRule {
    pub kind: EdgeKind,
    pub axis: AxisPolicy,
    pub limits: LimitPolicy,
    pub cap: f64,
}

fn compatible(kind: EdgeKind, axis: AxisPolicy, limits: LimitPolicy) -> bool {
    use AxisPolicy as A;
    use LimitPolicy as L;
    let hinge = matches!(
        axis,
        A::HingeLeft | A::HingeRight | A::HingeSide | A::HingeBottom | A::HingeTop | A::SpinX | A::SpinZ
    );
    match kind {
        EdgeKind::Simple(JointKind::Fixed) => matches!(axis, A::Anchor(_)) && limits == L::None,
        EdgeKind::Simple(JointKind::Prismatic) => {
            matches!(axis, A::Slide(_)) && matches!(limits, L::SlideDepth | L::Telescope)
        }
        EdgeKind::Simple(JointKind::Revolute) => hinge && matches!(limits, L::Swing | L::Tilt),
        EdgeKind::Simple(JointKind::Continuous) => matches!(axis, A::SpinX | A::SpinZ) && limits == L::None,
        EdgeKind::Compound(CompoundKind::Cylindrical) => axis == A::CylZ && limits == L::Telescope,
        EdgeKind::Compound(CompoundKind::Planar) => axis == A::PlanarXy && limits == L::PlanarExtent,
        EdgeKind::Compound(CompoundKind::Gimbal) => axis == A::GimbalXy && limits == L::Tilt,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct JointRuleTable {
    pub rules: BTreeMap<(String, String), JointRule>,
}

impl JointRuleTable {
    pub fn parse(text: &str) -> Result<Self, JointError> {
        let mut rules = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let toks = syntax::tokens(syntax::strip_comment(raw));
            if toks.is_empty() {
                continue;
            }
            if toks[0] != "edge" || toks.len() < 3 {
                return Err(SyntaxError::new(line, format!("expected `edge <parent> <child> ...`, got `{}`", raw.trim())).into());
            }
            let (parent, child) = (toks[1].clone(), toks[2].clone());
            let (mut kind, mut axis, mut limits, mut cap) = (None, None, None, None);
            for t in &toks[3..] {
                let (k, v) = syntax::key_value(t)
                    .ok_or_else(|| SyntaxError::new(line, format!("expected key=value, got `{t}`")))?;
                let err = |what: &str| SyntaxError::new(line, format!("unknown {what} `{v}`"));
                match k {
                    "kind" => kind = Some(EdgeKind::from_name(v).ok_or_else(|| err("joint kind"))?),
                    "axis" => axis = Some(AxisPolicy::from_name(v).ok_or_else(|| err("axis policy"))?),
                    "limits" => limits = Some(LimitPolicy::from_name(v).ok_or_else(|| err("limit policy"))?),
                    "cap" => cap = Some(syntax::parse_f64(v, line)?),
                    _ => return Err(SyntaxError::new(line, format!("unknown key `{k}`")).into()),
                }
            }
            let kind = kind.ok_or_else(|| SyntaxError::new(line, "missing kind="))?;
            let axis = axis.ok_or_else(|| SyntaxError::new(line, "missing axis="))?;
            let limits = limits.unwrap_or(LimitPolicy::None);
            if !compatible(kind, axis, limits) {
                return Err(SyntaxError::new(
                    line,
                    format!("axis/limit policies do not fit a {} joint", kind.name()),
                )
                .into());
            }
            let cap = cap.unwrap_or_else(|| limits.default_cap());
            if limits != LimitPolicy::None && !(cap > 0.0) {
                return Err(SyntaxError::new(line, "cap must be positive").into());
            }
            let rule = JointRule { kind, axis, limits, cap };
            if rules.insert((parent.clone(), child.clone()), rule).is_some() {
                return Err(SyntaxError::new(line, format!("duplicate rule for {parent} -> {child}")).into());
            }
        }
        Ok(Self { rules })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, JointError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| JointError::InvalidJoint(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, parent: &str, child: &str) -> Result<&JointRule, JointError> {
        self.rules
            .get(&(parent.to_string(), child.to_string()))
            .ok_or_else(|| JointError::MissingRule {
                parent: parent.to_string(),
                child: child.to_string(),
            })
    }
}

/// Tags every edge with the kind its rule prescribes.
pub fn assign_joint_kinds(tree: &ArticulationTree, rules: &JointRuleTable) -> Result<ArticulationTree, JointError> {
    let mut out = tree.clone();
    for i in 0..tree.len() {
        let Some(p) = tree.parent[i] else { continue };
        let rule = rules.get(&tree.nodes[p].label.part, &tree.nodes[i].label.part)?;
        out.edge_joint[i] = Some(JointSlot::Kind(rule.kind));
    }
    Ok(out)
}
