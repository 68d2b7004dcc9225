//! Physical plausibility: clearance gaps on articulated parts, ground
//! clearance repair, and motion-sweep collision checks.

mod ground;
mod sweep;

use serde::Serialize;

use crate::geometry::{compute_aabb, GeometryError};
use crate::joints::{rest_poses, EdgeKind, JointError};
use crate::tree::{ArticulationTree, JointSlot};

pub use ground::{ground_clearance_fix, lowest_point, GroundRepair};
pub use sweep::{motion_sweep_check, sweep_configs, SweepReport, SweepViolation, ViolationKind};

/// Uniform scale applied to articulated child meshes.
pub const GAP_SCALE: f64 = 0.98;
/// Penetrations at or below this depth (meters) are not violations.
pub const SWEEP_TOLERANCE: f64 = 1e-6;
/// Resolution of base heights and clamped limits.
pub const REPAIR_RESOLUTION: f64 = 1e-4;
/// Joint-count limit for exhaustive corner configurations (2^6 = 64 configs).
pub const MAX_CORNER_JOINTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundFixPolicy {
    /// Insert a fixed base under the root, lifting the object.
    BaseInsert,
    /// Shrink offending joint limits; the rest pose is kept.
    LimitClamp,
}

impl GroundFixPolicy {
    pub fn name(self) -> &'static str {
        match self {
            GroundFixPolicy::BaseInsert => "base_insert",
            GroundFixPolicy::LimitClamp => "limit_clamp",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlausibilityError {
    #[error("cannot repair ground contact: {0}")]
    Unfixable(String),
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapOutcome {
    Applied,
    /// The edge above the node is fixed (or the node is the root).
    NotArticulated,
    NoMesh,
}

/// Shrinks the node's mesh by [`GAP_SCALE`] about the centre of its
/// link-frame bounding box, leaving the joint untouched, and refreshes the
/// node's world box.
pub fn insert_gap(tree: &ArticulationTree, node: usize) -> Result<(ArticulationTree, GapOutcome), PlausibilityError> {
    let articulated = tree.edge_joint[node]
        .as_ref()
        .and_then(JointSlot::kind)
        .is_some_and(EdgeKind::is_articulated);
    if !articulated {
        return Ok((tree.clone(), GapOutcome::NotArticulated));
    }
    let Some(key) = tree.nodes[node].mesh_ref.clone() else {
        return Ok((tree.clone(), GapOutcome::NoMesh));
    };
    let Some(mesh) = tree.meshes.get(&key) else {
        return Ok((tree.clone(), GapOutcome::NoMesh));
    };
    let center = compute_aabb(mesh)?.center();
    let shrunk = mesh.scaled_about(&center, GAP_SCALE);
    let local = compute_aabb(&shrunk)?;
    let mut out = tree.clone();
    out.meshes.insert(key, shrunk);
    let poses = rest_poses(&out)?;
    out.nodes[node].bbox = Some(local.transformed(&poses[node]));
    Ok((out, GapOutcome::Applied))
}

/// Applies [`insert_gap`] to every articulated node; returns the nodes changed.
pub fn insert_gaps(tree: &ArticulationTree) -> Result<(ArticulationTree, Vec<usize>), PlausibilityError> {
    let mut out = tree.clone();
    let mut applied = Vec::new();
    for n in 0..tree.len() {
        let (t, outcome) = insert_gap(&out, n)?;
        out = t;
        if outcome == GapOutcome::Applied {
            applied.push(n);
        }
    }
    Ok((out, applied))
}
