//! Bundle export: URDF, OBJ meshes, a shared material library and a manifest
//! with per-file checksums. All output is a pure function of the tree.

mod bundle;
mod material;
mod urdf;

pub use bundle::{
    mtl_string, sha256_hex, write_manifest, write_obj, write_urdf, Bundle, FileDigest, Manifest, SweepSummary,
    GENERATOR_VERSION,
};
pub use material::{parse_mtl, sample_material, MaterialParams, MaterialRange};
pub use urdf::{fmt_g17, parse_urdf, parse_urdf_str, rpy_from_rotation, rotation_from_rpy, urdf_string, ParsedUrdf};

use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExportError {
    #[error("material palette is empty")]
    EmptyPalette,
    #[error("node {0} still carries a compound joint; expand compounds before export")]
    UnexpandedCompound(usize),
    #[error("node {0} has no synthesized joint")]
    NotSynthesized(usize),
    #[error("node {node} references mesh `{mesh}` which is not in the tree")]
    MissingMesh { node: usize, mesh: String },
    #[error("cannot write {path}: {message}")]
    PathNotWritable { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("invalid URDF: {0}")]
    InvalidUrdf(String),
    #[error("URDF has no root link (every link is a joint child)")]
    NoRoot,
    #[error("URDF has several root links: {}", .0.join(", "))]
    MultipleRoots(Vec<String>),
    #[error("joint graph has a cycle through link `{0}`")]
    CycleDetected(String),
    #[error("link `{0}` is the child of more than one joint")]
    MultipleParents(String),
    #[error("joint `{joint}` references unknown link `{link}`")]
    UnknownLink { joint: String, link: String },
    #[error("joint `{joint}` has unsupported type `{kind}` (supported: revolute, prismatic, continuous, fixed)")]
    UnsupportedJointType { joint: String, kind: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
