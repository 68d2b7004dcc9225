//! Procedural generation of articulated objects: grammar-grown part trees,
//! template layout and meshes, joint synthesis, plausibility repair, URDF
//! bundle export and corpus metrics.

pub mod cli;
pub mod export;
pub mod geometry;
pub mod joints;
pub mod metrics;
pub mod pipeline;
pub mod plausibility;
pub mod rng;
pub mod syntax;
pub mod tree;
