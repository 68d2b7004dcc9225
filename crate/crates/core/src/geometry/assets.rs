//! Local part library: OBJ meshes with `.meta` sidecars.
//!
//! ```text
//! label shared/handle
//! bbox_min -0.01 -0.06 -0.01
//! bbox_max 0.03 0.06 0.01
//! support mount_left 0 -0.05 0
//! support mount_right 0 0.05 0
//! ```
//!
//! The mesh is the `.obj` next to the sidecar with the same stem. Entries
//! labelled with category `shared` match any category.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use super::{parse_obj, Aabb, GeometryError, Mesh};
use crate::rng::SeededStream;
use crate::syntax::{self, SyntaxError};
use crate::tree::SemanticLabel;

pub const SHARED_CATEGORY: &str = "shared";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AssetError {
    #[error("no asset for label {0}")]
    NoAssetForLabel(String),
    #[error("{path}: {message}")]
    InvalidMeta { path: String, message: String },
    #[error("{path}: {source}")]
    Mesh { path: String, source: GeometryError },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssetEntry {
    pub id: String,
    pub label: SemanticLabel,
    pub mesh_path: PathBuf,
    pub canonical_bbox: Aabb,
    pub support_points: Vec<(String, Vector3<f64>)>,
    pub mesh: Mesh,
}

impl AssetEntry {
    pub fn matches(&self, label: &SemanticLabel) -> bool {
        self.label.part == label.part
            && (self.label.category == label.category || self.label.category == SHARED_CATEGORY)
    }

    /// Support points inside the box inflated by 1% of its largest extent;
    /// at least one point.
    pub fn check(&self) -> Result<(), String> {
        if self.support_points.is_empty() {
            return Err("asset has no support points".into());
        }
        let grown = self.canonical_bbox.inflate(0.01 * self.canonical_bbox.extent().max());
        for (name, p) in &self.support_points {
            if !grown.contains_point(p, 0.0) {
                return Err(format!("support point `{name}` lies outside the asset box"));
            }
        }
        Ok(())
    }
}

fn parse_meta(text: &str, path: &Path) -> Result<(SemanticLabel, Aabb, Vec<(String, Vector3<f64>)>), AssetError> {
    let bad = |e: SyntaxError| AssetError::InvalidMeta {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let (mut label, mut lo, mut hi) = (None, None, None);
    let mut supports = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let toks: Vec<&str> = syntax::strip_comment(raw).split_whitespace().collect();
        let Some((&key, rest)) = toks.split_first() else { continue };
        let vec3 = |v: &[&str]| -> Result<Vector3<f64>, SyntaxError> {
            let [x, y, z] = syntax::parse_floats::<3>(&v.join(" "), line)?;
            Ok(Vector3::new(x, y, z))
        };
        match key {
            "label" => {
                let [l] = rest else {
                    return Err(bad(SyntaxError::new(line, "label takes one value")));
                };
                label = Some(SemanticLabel::parse(l, SHARED_CATEGORY));
            }
            "bbox_min" => lo = Some(vec3(rest).map_err(bad)?),
            "bbox_max" => hi = Some(vec3(rest).map_err(bad)?),
            "support" => {
                let Some((name, coords)) = rest.split_first() else {
                    return Err(bad(SyntaxError::new(line, "support needs a name and 3 numbers")));
                };
                supports.push((name.to_string(), vec3(coords).map_err(bad)?));
            }
            other => return Err(bad(SyntaxError::new(line, format!("unknown key `{other}`")))),
        }
    }
    let missing = |k: &str| bad(SyntaxError::new(0, format!("missing `{k}`")));
    let label = label.ok_or_else(|| missing("label"))?;
    let (lo, hi) = (lo.ok_or_else(|| missing("bbox_min"))?, hi.ok_or_else(|| missing("bbox_max"))?);
    let bbox = Aabb::try_new(lo, hi).ok_or_else(|| bad(SyntaxError::new(0, "bbox_min exceeds bbox_max")))?;
    Ok((label, bbox, supports))
}

/// Read-only collection of assets, sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssetLibrary {
    pub entries: Vec<AssetEntry>,
}

impl AssetLibrary {
    /// Loads every `*.meta` in `dir` (not recursive). A missing directory
    /// gives an empty library.
    pub fn load(dir: &Path) -> Result<Self, AssetError> {
        let io = |p: &Path, e: std::io::Error| AssetError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        if !dir.exists() {
            return Ok(Self::default());
        }
        let mut metas: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "meta"))
            .collect();
        metas.sort();
        let mut entries = Vec::with_capacity(metas.len());
        for meta in metas {
            let text = std::fs::read_to_string(&meta).map_err(|e| io(&meta, e))?;
            let (label, canonical_bbox, support_points) = parse_meta(&text, &meta)?;
            let mesh_path = meta.with_extension("obj");
            let obj = std::fs::read_to_string(&mesh_path).map_err(|e| io(&mesh_path, e))?;
            let mesh = parse_obj(&obj).map_err(|source| AssetError::Mesh {
                path: mesh_path.display().to_string(),
                source,
            })?;
            let entry = AssetEntry {
                id: meta.file_stem().expect("meta file has a stem").to_string_lossy().into_owned(),
                label,
                mesh_path,
                canonical_bbox,
                support_points,
                mesh,
            };
            entry.check().map_err(|message| AssetError::InvalidMeta {
                path: meta.display().to_string(),
                message,
            })?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }
}

/// Uniformly chosen entry whose label matches. Consumes one draw when at
/// least one entry matches.
pub fn retrieve_part<'a>(
    library: &'a [AssetEntry],
    label: &SemanticLabel,
    rng: &mut SeededStream,
) -> Result<&'a AssetEntry, AssetError> {
    let matching: Vec<&AssetEntry> = library.iter().filter(|e| e.matches(label)).collect();
    if matching.is_empty() {
        return Err(AssetError::NoAssetForLabel(label.to_string()));
    }
    Ok(matching[rng.index(matching.len())])
}
