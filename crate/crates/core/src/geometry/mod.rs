//! Geometry: bounding boxes, triangle meshes, the parametric mesh kernel,
//! OBJ text I/O, oriented-box overlap, asset retrieval with support-point
//! alignment, and template-driven layout of part bounding boxes.

mod aabb;
pub mod align;
pub mod assets;
pub mod kernel;
pub mod layout;
mod mesh;
mod obb;
pub mod obj;

pub use aabb::Aabb;
pub use align::{align_support_points, axis_rotations, Alignment, Similarity};
pub use assets::{retrieve_part, AssetEntry, AssetError, AssetLibrary};
pub use kernel::{build_box, build_carcass, build_lathe, build_prism, fit_lathe, inscribed_cylinder_volume};
pub use layout::{assign_bounding_boxes, LayoutError, LayoutTemplate, Placement};
pub use mesh::{area_weighted_normals, compute_aabb, recompute_normals, Mesh};
pub use obb::Obb;
pub use obj::{obj_to_string, parse_obj};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("mesh has no vertices")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("edge {edge:?} has {incident} incident faces (expected 2)")]
    NonManifold { edge: (u32, u32), incident: usize },
    #[error("mesh surface is not orientable")]
    NonOrientable,
    #[error("box {0:?} has a non-positive extent")]
    DegenerateBox(Aabb),
    #[error("bevel {bevel} must be >= 0 and < {limit}")]
    InvalidBevel { bevel: f64, limit: f64 },
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
    #[error("OBJ line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("{sources} source points but {targets} target points")]
    PointCountMismatch { sources: usize, targets: usize },
    #[error("alignment needs at least one point pair")]
    EmptyPointSet,
}
