//! End-to-end generation of one object and of seeded batches.
//!
//! Per object: grow, canonicalize, tag joint kinds, lay out boxes, build
//! meshes and materials, synthesize and expand joints, move meshes into link
//! frames, insert gaps, repair ground contact, canonicalize again and sweep.
//! Every stage draws from its own fork of the object stream, so adding draws
//! to one stage leaves the others untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::export::{sample_material, write_manifest, write_urdf, ExportError, Manifest, SweepSummary, GENERATOR_VERSION};
use crate::geometry::layout::build_part_meshes;
use crate::geometry::{assign_bounding_boxes, AssetError, AssetLibrary, LayoutError, LayoutTemplate};
use crate::joints::{assign_joint_kinds, expand_compounds, rest_poses, synthesize_joints, JointError, JointRuleTable};
use crate::plausibility::{ground_clearance_fix, insert_gaps, motion_sweep_check, GroundRepair, PlausibilityError, SweepReport};
use crate::rng::{object_seed, SeededStream};
use crate::tree::{canonicalize, grow_tree, ArticulationTree, GrowthGrammar, TreeError};

pub const DEFAULT_SAMPLES_PER_JOINT: usize = 16;

/// Directory holding the shipped grammars, layouts, joint rules and assets.
pub fn default_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown category `{category}` (available: {})", .available.join(", "))]
    UnknownCategory { category: String, available: Vec<String> },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    Plausibility(#[from] PlausibilityError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("cannot start worker pool: {0}")]
    Threads(String),
}

/// Everything needed to generate one category, loaded from
/// `<dir>/<category>.grammar`, `.layout`, `.joints` and `<dir>/assets/`.
#[derive(Clone, Debug)]
pub struct CategoryData {
    pub grammar: GrowthGrammar,
    pub layout: LayoutTemplate,
    pub rules: JointRuleTable,
    pub assets: AssetLibrary,
}

/// Categories with a grammar file in `dir`, sorted.
pub fn list_categories(dir: &Path) -> Vec<String> {
    let mut out: Vec<String> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "grammar"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    out.sort();
    out
}

impl CategoryData {
    pub fn load(dir: &Path, category: &str) -> Result<Self, PipelineError> {
        let path = |ext: &str| dir.join(format!("{category}.{ext}"));
        if !path("grammar").exists() {
            return Err(PipelineError::UnknownCategory {
                category: category.to_string(),
                available: list_categories(dir),
            });
        }
        let data = Self {
            grammar: GrowthGrammar::load(&path("grammar"))?,
            layout: LayoutTemplate::load(&path("layout"))?,
            rules: JointRuleTable::load(&path("joints"))?,
            assets: AssetLibrary::load(&dir.join("assets"))?,
        };
        Ok(data)
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedObject {
    pub category: String,
    pub index: u64,
    pub seed: u64,
    pub tree: ArticulationTree,
    pub repair: GroundRepair,
    pub gaps_applied: usize,
    pub sweep: SweepReport,
}

impl GeneratedObject {
    pub fn repair_summary(&self) -> String {
        match &self.repair {
            GroundRepair::Unchanged => "none".to_string(),
            GroundRepair::BaseInserted { height } => format!("base_inserted(height={height})"),
            GroundRepair::LimitsClamped(j) => format!("limits_clamped(joints={})", j.len()),
        }
    }

    /// One log line: index, seed, counts, repair and sweep result.
    pub fn log_line(&self) -> String {
        format!(
            "{}_{} seed={} nodes={} joints={} gaps={} repair={} sweep={} configs={} violations={}",
            self.category,
            self.index,
            self.seed,
            self.tree.len(),
            self.tree.joint_count(),
            self.gaps_applied,
            self.repair_summary(),
            if self.sweep.passed() { "pass" } else { "fail" },
            self.sweep.configs_checked,
            self.sweep.violations.len(),
        )
    }

    pub fn manifest(&self, master_seed: u64) -> Manifest {
        let mut joint_kinds = BTreeMap::new();
        for n in 0..self.tree.len() {
            if let Some(j) = self.tree.joint(n) {
                *joint_kinds.entry(j.kind.name().to_string()).or_insert(0) += 1;
            }
        }
        Manifest {
            category: self.category.clone(),
            master_seed,
            object_index: self.index,
            object_seed: self.seed,
            generator_version: GENERATOR_VERSION.to_string(),
            node_count: self.tree.len(),
            joint_count: self.tree.joint_count(),
            joint_kinds,
            ground_repair: self.repair_summary(),
            gaps_applied: self.gaps_applied,
            sweep: SweepSummary {
                samples_per_joint: self.sweep.samples_per_joint,
                configs_checked: self.sweep.configs_checked,
                violations: self.sweep.violations.len(),
            },
            materials: self.tree.materials.clone(),
            files: Vec::new(),
        }
    }
}

/// Replaces each world-frame mesh by its copy in the link frame at rest.
fn meshes_to_link_frames(tree: &ArticulationTree) -> Result<ArticulationTree, JointError> {
    let poses = rest_poses(tree)?;
    let mut out = tree.clone();
    for (n, node) in tree.nodes.iter().enumerate() {
        if let Some(key) = &node.mesh_ref {
            if let Some(mesh) = tree.meshes.get(key) {
                out.meshes.insert(key.clone(), mesh.transformed(&poses[n].inverse()));
            }
        }
    }
    Ok(out)
}

/// Grows, lays out, meshes and articulates a tree, stopping before the
/// plausibility stages. Meshes are in link frames and compounds expanded.
pub fn build_articulated(data: &CategoryData, rng: &SeededStream) -> Result<ArticulationTree, PipelineError> {
    let tree = grow_tree(&data.grammar, &mut rng.fork("grow"))?;
    let tree = assign_joint_kinds(&canonicalize(&tree), &data.rules)?;
    let placed = assign_bounding_boxes(&tree, &data.layout, &mut rng.fork("layout"))?;
    let mut tree = build_part_meshes(&placed.tree, &data.layout, &data.assets, &mut rng.fork("assets"))?;

    let used: BTreeSet<String> = tree.nodes.iter().filter_map(|n| n.material_ref.clone()).collect();
    let mut mat_rng = rng.fork("materials");
    for name in used {
        let range = data.layout.palette.get(&name).cloned().into_iter().collect::<Vec<_>>();
        tree.materials.insert(name, sample_material(&mut mat_rng, &range)?);
    }

    let tree = synthesize_joints(&tree, &data.rules, &mut rng.fork("joints"))?;
    Ok(meshes_to_link_frames(&expand_compounds(&tree))?)
}

/// Full pipeline for object `index` of a batch seeded with `master_seed`.
pub fn generate_object(
    data: &CategoryData,
    master_seed: u64,
    index: u64,
    samples_per_joint: usize,
) -> Result<GeneratedObject, PipelineError> {
    let rng = SeededStream::for_object(master_seed, index);
    let tree = build_articulated(data, &rng)?;
    let (tree, gaps) = insert_gaps(&tree)?;
    let (tree, repair) = ground_clearance_fix(&tree, data.grammar.ground_fix, samples_per_joint)?;
    let mut tree = canonicalize(&tree);
    tree.rename_refs();
    let sweep = motion_sweep_check(&tree, samples_per_joint)?;
    Ok(GeneratedObject {
        category: data.grammar.category.clone(),
        index,
        seed: object_seed(master_seed, index),
        tree,
        repair,
        gaps_applied: gaps.len(),
        sweep,
    })
}

/// Generates objects `0..count` in index order. `threads = Some(n)` runs on a
/// dedicated pool of `n` workers; `None` uses the global pool.
pub fn generate_batch(
    data: &CategoryData,
    master_seed: u64,
    count: u64,
    samples_per_joint: usize,
    threads: Option<usize>,
) -> Result<Vec<Result<GeneratedObject, PipelineError>>, PipelineError> {
    let run = || -> Vec<_> {
        (0..count)
            .into_par_iter()
            .map(|i| generate_object(data, master_seed, i, samples_per_joint))
            .collect()
    };
    match threads {
        None => Ok(run()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| PipelineError::Threads(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

/// Bundle directory of one object: `<out>/<category>_<index>`.
pub fn object_dir(out: &Path, category: &str, index: u64) -> PathBuf {
    out.join(format!("{category}_{index}"))
}

/// Writes the URDF bundle and manifest of `obj` under `out`.
pub fn write_object(obj: &GeneratedObject, master_seed: u64, out: &Path) -> Result<Manifest, PipelineError> {
    let dir = object_dir(out, &obj.category, obj.index);
    let bundle = write_urdf(&obj.tree, &dir)?;
    Ok(write_manifest(&bundle, obj.manifest(master_seed))?)
}

/// Generation settings shared by the command line and the timing harness.
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub category: String,
    pub count: u64,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub samples_per_joint: usize,
    pub threads: Option<usize>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            category: "cabinet".to_string(),
            count: 1,
            seed: 0,
            data_dir: default_data_dir(),
            samples_per_joint: DEFAULT_SAMPLES_PER_JOINT,
            threads: None,
        }
    }
}
