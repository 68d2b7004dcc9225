use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::urdf::{fmt_g17, mesh_file, urdf_string};
use super::{ExportError, MaterialParams};
use crate::geometry::{obj_to_string, Mesh};
use crate::tree::ArticulationTree;

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
const URDF_FILE: &str = "object.urdf";
pub(crate) const MTL_FILE: &str = "materials.mtl";
const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    let err = |e: std::io::Error| ExportError::PathNotWritable {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    fs::write(path, bytes).map_err(err)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Material library text. `Kd` is the base color, `Ks` the specular level
/// on every channel, `Pr` the roughness and `Ns = 1000 (1 - roughness)^2`.
pub fn mtl_string(materials: &BTreeMap<String, MaterialParams>) -> String {
    let mut s = String::new();
    for (name, m) in materials {
        let c = m.base_color;
        let _ = writeln!(s, "newmtl {name}");
        let _ = writeln!(s, "Kd {} {} {}", fmt_g17(c[0]), fmt_g17(c[1]), fmt_g17(c[2]));
        let k = fmt_g17(m.specular);
        let _ = writeln!(s, "Ks {k} {k} {k}");
        let _ = writeln!(s, "Ns {}", fmt_g17(1000.0 * (1.0 - m.roughness).powi(2)));
        let _ = writeln!(s, "Pr {}", fmt_g17(m.roughness));
        let _ = writeln!(s, "# noise {}", fmt_g17(m.noise_amplitude));
        let _ = writeln!(s, "d 1");
        let _ = writeln!(s, "illum 2");
    }
    s
}

/// Writes `mesh` as OBJ, referencing `material` from the bundle's material
/// library when given.
pub fn write_obj(mesh: &Mesh, material: Option<&str>, path: &Path) -> Result<PathBuf, ExportError> {
    mesh.validate()?;
    let text = obj_to_string(mesh, material.map(|_| MTL_FILE), material);
    write_file(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

/// Files of one exported object, relative to `dir`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub dir: PathBuf,
    pub urdf_path: String,
    pub mesh_paths: BTreeMap<usize, String>,
    pub material_path: Option<String>,
}

impl Bundle {
    pub fn files(&self) -> Vec<String> {
        let mut out = vec![self.urdf_path.clone()];
        out.extend(self.mesh_paths.values().cloned());
        out.extend(self.material_path.clone());
        out.sort();
        out.dedup();
        out
    }
}

/// Writes the URDF, one OBJ per meshed link and the material library into
/// `out_dir`.
pub fn write_urdf(tree: &ArticulationTree, out_dir: &Path) -> Result<Bundle, ExportError> {
    let urdf = urdf_string(tree)?;
    write_file(&out_dir.join(URDF_FILE), urdf.as_bytes())?;
    let mut mesh_paths = BTreeMap::new();
    for (n, node) in tree.nodes.iter().enumerate() {
        let (Some(rel), Some(key)) = (mesh_file(node), node.mesh_ref.as_ref()) else {
            continue;
        };
        let mesh = tree.meshes.get(key).ok_or_else(|| ExportError::MissingMesh {
            node: n,
            mesh: key.clone(),
        })?;
        let material = node.material_ref.as_deref().filter(|m| tree.materials.contains_key(*m));
        write_obj(mesh, material, &out_dir.join(&rel))?;
        mesh_paths.insert(n, rel);
    }
    let material_path = if tree.materials.is_empty() {
        None
    } else {
        let rel = format!("meshes/{MTL_FILE}");
        write_file(&out_dir.join(&rel), mtl_string(&tree.materials).as_bytes())?;
        Some(rel)
    };
    Ok(Bundle {
        dir: out_dir.to_path_buf(),
        urdf_path: URDF_FILE.to_string(),
        mesh_paths,
        material_path,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub samples_per_joint: usize,
    pub configs_checked: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub category: String,
    pub master_seed: u64,
    pub object_index: u64,
    pub object_seed: u64,
    pub generator_version: String,
    pub node_count: usize,
    pub joint_count: usize,
    pub joint_kinds: BTreeMap<String, usize>,
    pub ground_repair: String,
    pub gaps_applied: usize,
    pub sweep: SweepSummary,
    pub materials: BTreeMap<String, MaterialParams>,
    pub files: Vec<FileDigest>,
}

/// Fills in the checksum of every bundle file and writes `manifest.json`.
pub fn write_manifest(bundle: &Bundle, mut manifest: Manifest) -> Result<Manifest, ExportError> {
    manifest.files = bundle
        .files()
        .into_iter()
        .map(|rel| {
            let full = bundle.dir.join(&rel);
            let bytes = fs::read(&full).map_err(|e| ExportError::Unreadable {
                path: full.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(FileDigest {
                path: rel,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<_, ExportError>>()?;
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&bundle.dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}
