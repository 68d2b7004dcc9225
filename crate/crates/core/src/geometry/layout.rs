//! Template-driven bounding boxes and part meshes.
//!
//! A layout file holds the object envelope, a material palette and one slot
//! per part label:
//!
//! ```text
//! category: cabinet
//! size: depth=[0.45..0.6] width=[0.6..1.2] height=[0.8..1.2]
//! bevel: 0.004
//! lathe_segments: 48
//! palette wood color_lo=[0.45,0.3,0.15] color_hi=[0.6,0.42,0.25] roughness=[0.4..0.7] specular=[0.1..0.3] noise=[0..0.05]
//! slot body ref=object region=[0,0,0.12,1,1,1] shape=carcass(wall=0.018) material=wood
//! slot drawer region=[0.05,0.03,0.55,1,0.97,0.97] repeat=z min=0.08 material=wood
//! slot handle mount=+x region=[0,0.3,0.3,1,0.7,0.7] size_x=[0.02..0.03] shape=asset(part=handle) material=metal
//! ```
//!
//! Slot keys:
//! - `ref`: `parent` (default) or `object`; the box the fractions refer to.
//! - `region=[x0,y0,z0,x1,y1,z1]`: fractional sub-box of the reference.
//! - `mount=±x|±y|±z`: the region leaves the reference box through that face
//!   and extends outward by the largest size on that axis.
//! - `repeat=none|x|y|z|grid` splits the region into equal cells for siblings
//!   of the same label; `grid` lays `ceil(sqrt n)` columns along x. `min` is
//!   the smallest allowed cell length.
//! - `size_x|size_y|size_z=[lo..hi]`: one draw per sibling group, clamped to
//!   the cell; axes without a size fill the cell.
//! - `align_x|align_y|align_z=min|center|max|outer`: `outer` pushes the first
//!   half of the cells to `min` and the second half to `max`.
//! - `mirror=y` mirrors the y fractions when the parent sits right of its own
//!   parent's centre (door handles next to the free edge).
//! - `shape=box|carcass(wall=w)|cylinder(axis=z)|lathe(profile=r:z/..,axis=z)|prism(chamfer=c)|asset(part=name)`.
//! - `material`: palette entry name.
//!
//! Objects face +x, left is -y, and the envelope is centred on the z axis
//! with its bottom on the ground.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use super::{
    align_support_points, build_box, build_carcass, build_prism, compute_aabb, fit_lathe, retrieve_part, Aabb,
    AssetError, AssetLibrary, GeometryError, Mesh,
};
use crate::export::MaterialRange;
use crate::rng::SeededStream;
use crate::syntax::{self, SyntaxError};
use crate::tree::{ArticulationTree, SemanticLabel};

pub const DEFAULT_LATHE_SEGMENTS: u32 = 48;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LayoutError {
    #[error("label `{0}` has no slot in the layout template")]
    LabelNotInTemplate(String),
    #[error("{count} x `{label}` do not fit the repetition axis (capacity {capacity})")]
    SlotOverflow { label: String, count: usize, capacity: usize },
    #[error("node {0} has no bounding box")]
    MissingBox(usize),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Asset(#[from] AssetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRef {
    Parent,
    Object,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Repeat {
    None,
    Axis(usize),
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Align {
    Min,
    Center,
    Max,
    Outer,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box,
    /// Open-front shell with the given wall thickness.
    Carcass { wall: f64 },
    /// Surface of revolution about `axis` (0 = x, 2 = z) of a unit profile
    /// `(radius fraction, height fraction)`.
    Lathe { profile: Vec<[f64; 2]>, axis: usize },
    /// Octagonal slab: a z-extruded rectangle with corners cut by `chamfer`
    /// times the smaller horizontal extent.
    Prism { chamfer: f64 },
    /// Library part retrieved by part name.
    Asset { part: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotRule {
    pub label: String,
    pub reference: RegionRef,
    /// Fractions `[x0, y0, z0, x1, y1, z1]`.
    pub region: [f64; 6],
    pub repeat: Repeat,
    pub min_cell: f64,
    pub size: [Option<(f64, f64)>; 3],
    pub align: [Align; 3],
    /// Axis and direction (`true` for +) of the mounting face.
    pub mount: Option<(usize, bool)>,
    pub mirror_y: bool,
    pub shape: Shape,
    pub material: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutTemplate {
    pub category: String,
    /// Envelope depth (x), width (y) and height (z) ranges.
    pub size: [(f64, f64); 3],
    pub bevel: f64,
    pub lathe_segments: u32,
    pub palette: BTreeMap<String, MaterialRange>,
    pub slots: BTreeMap<String, SlotRule>,
}

/// Boxes assigned to a tree, plus the slot region each child was placed in.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub tree: ArticulationTree,
    pub regions: Vec<Option<Aabb>>,
}

fn axis_index(s: &str, line: usize) -> Result<usize, SyntaxError> {
    match s {
        "x" => Ok(0),
        "y" => Ok(1),
        "z" => Ok(2),
        _ => Err(SyntaxError::new(line, format!("unknown axis `{s}`"))),
    }
}

/// `name` or `name(k=v, k=v)`.
fn call(s: &str, line: usize) -> Result<(String, BTreeMap<String, String>), SyntaxError> {
    let Some((name, rest)) = s.split_once('(') else {
        return Ok((s.to_string(), BTreeMap::new()));
    };
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| SyntaxError::new(line, format!("unclosed `(` in `{s}`")))?;
    let mut args = BTreeMap::new();
    for item in syntax::split_top_level(inner, |c| c == ',') {
        let (k, v) = syntax::key_value(&item)
            .ok_or_else(|| SyntaxError::new(line, format!("expected key=value, got `{item}`")))?;
        args.insert(k.to_string(), v.to_string());
    }
    Ok((name.to_string(), args))
}

fn parse_shape(s: &str, line: usize) -> Result<Shape, SyntaxError> {
    let (name, mut args) = call(s, line)?;
    let mut take = |k: &str| args.remove(k);
    let axis = |v: Option<String>| -> Result<usize, SyntaxError> {
        match v.as_deref() {
            None => Ok(2),
            Some(a) => match axis_index(a, line)? {
                1 => Err(SyntaxError::new(line, "lathe axis must be x or z")),
                i => Ok(i),
            },
        }
    };
    let shape = match name.as_str() {
        "box" => Shape::Box,
        "carcass" => Shape::Carcass {
            wall: syntax::parse_f64(&take("wall").unwrap_or_else(|| "0.018".into()), line)?,
        },
        "cylinder" => Shape::Lathe {
            profile: vec![[1.0, 0.0], [1.0, 1.0]],
            axis: axis(take("axis"))?,
        },
        "lathe" => {
            let raw = take("profile").ok_or_else(|| SyntaxError::new(line, "lathe needs profile="))?;
            let mut profile = Vec::new();
            for pair in raw.split('/') {
                let (r, z) = pair
                    .split_once(':')
                    .ok_or_else(|| SyntaxError::new(line, format!("profile point `{pair}` is not r:z")))?;
                profile.push([syntax::parse_f64(r, line)?, syntax::parse_f64(z, line)?]);
            }
            Shape::Lathe {
                profile,
                axis: axis(take("axis"))?,
            }
        }
        "prism" => Shape::Prism {
            chamfer: syntax::parse_f64(&take("chamfer").unwrap_or_else(|| "0.1".into()), line)?,
        },
        "asset" => Shape::Asset {
            part: take("part").ok_or_else(|| SyntaxError::new(line, "asset needs part="))?,
        },
        other => return Err(SyntaxError::new(line, format!("unknown shape `{other}`"))),
    };
    if let Some(k) = args.keys().next() {
        return Err(SyntaxError::new(line, format!("unknown shape argument `{k}`")));
    }
    Ok(shape)
}

fn parse_align(s: &str, line: usize) -> Result<Align, SyntaxError> {
    Ok(match s {
        "min" => Align::Min,
        "center" => Align::Center,
        "max" => Align::Max,
        "outer" => Align::Outer,
        _ => return Err(SyntaxError::new(line, format!("unknown alignment `{s}`"))),
    })
}

fn parse_slot(toks: &[String], line: usize) -> Result<SlotRule, SyntaxError> {
    let label = toks
        .first()
        .filter(|l| syntax::is_identifier(l))
        .ok_or_else(|| SyntaxError::new(line, "slot needs a label"))?
        .clone();
    let mut slot = SlotRule {
        label,
        reference: RegionRef::Parent,
        region: [0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        repeat: Repeat::None,
        min_cell: 0.0,
        size: [None; 3],
        align: [Align::Center; 3],
        mount: None,
        mirror_y: false,
        shape: Shape::Box,
        material: String::new(),
    };
    for t in &toks[1..] {
        let (k, v) = syntax::key_value(t).ok_or_else(|| SyntaxError::new(line, format!("expected key=value, got `{t}`")))?;
        match k {
            "ref" => {
                slot.reference = match v {
                    "parent" => RegionRef::Parent,
                    "object" => RegionRef::Object,
                    _ => return Err(SyntaxError::new(line, format!("unknown ref `{v}`"))),
                }
            }
            "region" => slot.region = syntax::parse_floats::<6>(v, line)?,
            "repeat" => {
                slot.repeat = match v {
                    "none" => Repeat::None,
                    "grid" => Repeat::Grid,
                    a => Repeat::Axis(axis_index(a, line)?),
                }
            }
            "min" => slot.min_cell = syntax::parse_f64(v, line)?,
            "size_x" | "size_y" | "size_z" => {
                let (lo, hi) = syntax::parse_range(v, line)?;
                if lo <= 0.0 {
                    return Err(SyntaxError::new(line, format!("{k} must be positive")));
                }
                slot.size[axis_index(&k[5..], line)?] = Some((lo, hi));
            }
            "align_x" | "align_y" | "align_z" => slot.align[axis_index(&k[6..], line)?] = parse_align(v, line)?,
            "mount" => {
                let (sign, a) = v.split_at(1);
                let positive = match sign {
                    "+" => true,
                    "-" => false,
                    _ => return Err(SyntaxError::new(line, format!("mount needs a sign, got `{v}`"))),
                };
                slot.mount = Some((axis_index(a, line)?, positive));
            }
            "mirror" => {
                if v != "y" {
                    return Err(SyntaxError::new(line, "only mirror=y is supported"));
                }
                slot.mirror_y = true;
            }
            "shape" => slot.shape = parse_shape(v, line)?,
            "material" => slot.material = v.to_string(),
            _ => return Err(SyntaxError::new(line, format!("unknown slot key `{k}`"))),
        }
    }
    for a in 0..3 {
        let (lo, hi) = (slot.region[a], slot.region[a + 3]);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(SyntaxError::new(line, format!("region fractions on axis {a} must satisfy 0 <= lo <= hi <= 1")));
        }
    }
    if let Some((a, _)) = slot.mount {
        if slot.size[a].is_none() {
            return Err(SyntaxError::new(line, "mounted slots need a size on the mount axis"));
        }
    }
    if slot.material.is_empty() {
        return Err(SyntaxError::new(line, "slot needs material="));
    }
    Ok(slot)
}

fn unit_range(v: &str, line: usize) -> Result<(f64, f64), SyntaxError> {
    let r = syntax::parse_range(v, line)?;
    if r.0 < 0.0 || r.1 > 1.0 {
        return Err(SyntaxError::new(line, format!("`{v}` must lie in [0, 1]")));
    }
    Ok(r)
}

fn parse_palette(toks: &[String], line: usize) -> Result<MaterialRange, SyntaxError> {
    let name = toks
        .first()
        .filter(|l| syntax::is_identifier(l))
        .ok_or_else(|| SyntaxError::new(line, "palette entry needs a name"))?;
    let mut m = MaterialRange {
        name: name.clone(),
        color_lo: [0.5; 3],
        color_hi: [0.5; 3],
        roughness: (0.5, 0.5),
        specular: (0.5, 0.5),
        noise: (0.0, 0.0),
    };
    for t in &toks[1..] {
        let (k, v) = syntax::key_value(t).ok_or_else(|| SyntaxError::new(line, format!("expected key=value, got `{t}`")))?;
        match k {
            "color_lo" => m.color_lo = syntax::parse_floats::<3>(v, line)?,
            "color_hi" => m.color_hi = syntax::parse_floats::<3>(v, line)?,
            "roughness" => m.roughness = unit_range(v, line)?,
            "specular" => m.specular = unit_range(v, line)?,
            "noise" => m.noise = unit_range(v, line)?,
            _ => return Err(SyntaxError::new(line, format!("unknown palette key `{k}`"))),
        }
    }
    if !m.is_valid() {
        return Err(SyntaxError::new(line, format!("palette entry `{name}` has values outside [0, 1]")));
    }
    Ok(m)
}

impl LayoutTemplate {
    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let mut category = None;
        let mut size = None;
        let mut bevel = 0.0;
        let mut lathe_segments = DEFAULT_LATHE_SEGMENTS;
        let mut palette = BTreeMap::new();
        let mut slots = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let body = syntax::strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            if let Some((key, value)) = body.split_once(':').filter(|(k, _)| syntax::is_identifier(k.trim())) {
                let value = value.trim();
                match key.trim() {
                    "category" => category = Some(value.to_string()),
                    "bevel" => bevel = syntax::parse_f64(value, line)?,
                    "lathe_segments" => lathe_segments = syntax::parse_u32(value, line)?,
                    "size" => {
                        let mut dims = [None; 3];
                        for t in syntax::tokens(value) {
                            let (k, v) = syntax::key_value(&t)
                                .ok_or_else(|| SyntaxError::new(line, format!("expected key=value, got `{t}`")))?;
                            let i = match k {
                                "depth" => 0,
                                "width" => 1,
                                "height" => 2,
                                _ => return Err(SyntaxError::new(line, format!("unknown size key `{k}`")).into()),
                            };
                            let r = syntax::parse_range(v, line)?;
                            if r.0 <= 0.0 {
                                return Err(SyntaxError::new(line, "envelope sizes must be positive").into());
                            }
                            dims[i] = Some(r);
                        }
                        let [Some(d), Some(w), Some(h)] = dims else {
                            return Err(SyntaxError::new(line, "size needs depth, width and height").into());
                        };
                        size = Some([d, w, h]);
                    }
                    other => return Err(SyntaxError::new(line, format!("unknown key `{other}`")).into()),
                }
                continue;
            }
            let toks = syntax::tokens(body);
            match toks[0].as_str() {
                "palette" => {
                    let m = parse_palette(&toks[1..], line)?;
                    palette.insert(m.name.clone(), m);
                }
                "slot" => {
                    let s = parse_slot(&toks[1..], line)?;
                    if slots.contains_key(&s.label) {
                        return Err(SyntaxError::new(line, format!("duplicate slot `{}`", s.label)).into());
                    }
                    slots.insert(s.label.clone(), s);
                }
                other => return Err(SyntaxError::new(line, format!("unknown directive `{other}`")).into()),
            }
        }
        let category = category.ok_or_else(|| SyntaxError::new(0, "missing `category:`"))?;
        let size = size.ok_or_else(|| SyntaxError::new(0, "missing `size:`"))?;
        if lathe_segments < 3 {
            return Err(SyntaxError::new(0, "lathe_segments must be at least 3").into());
        }
        for s in slots.values() {
            if !palette.contains_key(&s.material) {
                return Err(SyntaxError::new(0, format!("slot `{}` uses unknown material `{}`", s.label, s.material)).into());
            }
        }
        Ok(Self {
            category,
            size,
            bevel,
            lathe_segments,
            palette,
            slots,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, LayoutError> {
        let text = std::fs::read_to_string(path).map_err(|e| LayoutError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn slot(&self, part: &str) -> Result<&SlotRule, LayoutError> {
        self.slots
            .get(part)
            .ok_or_else(|| LayoutError::LabelNotInTemplate(format!("{}/{part}", self.category)))
    }
}

fn slot_region(slot: &SlotRule, parent: &Aabb, envelope: &Aabb, mirror: bool) -> Aabb {
    let reference = match slot.reference {
        RegionRef::Parent => parent,
        RegionRef::Object => envelope,
    };
    let mut f = slot.region;
    if mirror {
        (f[1], f[4]) = (1.0 - f[4], 1.0 - f[1]);
    }
    let ext = reference.extent();
    let mut lo = Vector3::zeros();
    let mut hi = Vector3::zeros();
    for a in 0..3 {
        lo[a] = reference.min[a] + f[a] * ext[a];
        hi[a] = reference.min[a] + f[a + 3] * ext[a];
    }
    if let Some((a, positive)) = slot.mount {
        let reach = slot.size[a].expect("mount axis has a size").1;
        if positive {
            lo[a] = reference.max[a];
            hi[a] = lo[a] + reach;
        } else {
            hi[a] = reference.min[a];
            lo[a] = hi[a] - reach;
        }
    }
    Aabb::new(lo, hi)
}

/// Boundary `i` of `n` equal cells over `[lo, hi]`; shared by neighbours.
fn split(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / n as f64
    }
}

struct Cell {
    bounds: Aabb,
    index: [usize; 3],
    counts: [usize; 3],
}

fn cells(slot: &SlotRule, region: &Aabb, n: usize) -> Result<Vec<Cell>, LayoutError> {
    let mut counts = [1usize; 3];
    match slot.repeat {
        Repeat::None if n > 1 => {
            return Err(LayoutError::SlotOverflow {
                label: slot.label.clone(),
                count: n,
                capacity: 1,
            })
        }
        Repeat::None => {}
        Repeat::Axis(a) => counts[a] = n,
        Repeat::Grid => {
            let cols = (n as f64).sqrt().ceil() as usize;
            counts[0] = cols;
            counts[1] = n.div_ceil(cols);
        }
    }
    let ext = region.extent();
    for a in 0..3 {
        if counts[a] > 1 && ext[a] / (counts[a] as f64) < slot.min_cell {
            let capacity = if slot.min_cell > 0.0 {
                (ext[a] / slot.min_cell + 1e-9).floor() as usize
            } else {
                usize::MAX
            };
            return Err(LayoutError::SlotOverflow {
                label: slot.label.clone(),
                count: n,
                capacity: if slot.repeat == Repeat::Grid { capacity * capacity } else { capacity },
            });
        }
    }
    Ok((0..n)
        .map(|k| {
            let index = match slot.repeat {
                Repeat::Axis(a) => {
                    let mut i = [0; 3];
                    i[a] = k;
                    i
                }
                Repeat::Grid => [k % counts[0], k / counts[0], 0],
                Repeat::None => [0; 3],
            };
            let mut lo = Vector3::zeros();
            let mut hi = Vector3::zeros();
            for a in 0..3 {
                lo[a] = split(region.min[a], region.max[a], counts[a], index[a]);
                hi[a] = split(region.min[a], region.max[a], counts[a], index[a] + 1);
            }
            Cell {
                bounds: Aabb::new(lo, hi),
                index,
                counts,
            }
        })
        .collect())
}

fn place(slot: &SlotRule, cell: &Cell, sizes: &[Option<f64>; 3]) -> Aabb {
    let mut lo = cell.bounds.min;
    let mut hi = cell.bounds.max;
    for a in 0..3 {
        let (c0, c1) = (cell.bounds.min[a], cell.bounds.max[a]);
        let Some(s) = sizes[a].map(|s| s.min(c1 - c0)) else { continue };
        let mut align = slot.align[a];
        if let Some((m, positive)) = slot.mount {
            if m == a {
                align = if positive { Align::Min } else { Align::Max };
            }
        }
        if align == Align::Outer {
            let (i, n) = (cell.index[a], cell.counts[a]);
            align = match (2 * i + 1).cmp(&n) {
                std::cmp::Ordering::Less => Align::Min,
                std::cmp::Ordering::Equal => Align::Center,
                std::cmp::Ordering::Greater => Align::Max,
            };
        }
        (lo[a], hi[a]) = match align {
            Align::Min => (c0, c0 + s),
            Align::Max => (c1 - s, c1),
            Align::Center | Align::Outer => {
                let mid = 0.5 * (c0 + c1);
                (mid - 0.5 * s, mid + 0.5 * s)
            }
        };
    }
    Aabb::new(lo, hi)
}

/// Samples the envelope, then assigns every non-dummy node a world box
/// inside its slot region, top-down. Siblings with the same label share one
/// size draw and split the region along the slot's repetition axis. Draw
/// order: envelope depth, width, height, then per sibling group (root first,
/// then pre-order by parent, groups in order of first child) one draw per
/// sized axis x, y, z.
pub fn assign_bounding_boxes(
    tree: &ArticulationTree,
    template: &LayoutTemplate,
    rng: &mut SeededStream,
) -> Result<Placement, LayoutError> {
    let dims: Vec<f64> = template.size.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect();
    let envelope = Aabb::new(
        Vector3::new(-0.5 * dims[0], -0.5 * dims[1], 0.0),
        Vector3::new(0.5 * dims[0], 0.5 * dims[1], dims[2]),
    );
    let mut out = tree.clone();
    let mut regions = vec![None; tree.len()];
    let kids = tree.children_lists();
    let root = tree.root().ok_or(LayoutError::MissingBox(0))?;

    let mut place_group = |out: &mut ArticulationTree, parent: Option<usize>, members: &[usize]| -> Result<(), LayoutError> {
        let part = &out.nodes[members[0]].label.part;
        let slot = template.slot(part)?;
        let parent_box = match parent {
            Some(p) => out.nodes[p].bbox.ok_or(LayoutError::MissingBox(p))?,
            None => envelope,
        };
        let mirror = slot.mirror_y
            && parent.is_some_and(|p| {
                out.parent[p]
                    .and_then(|g| out.nodes[g].bbox)
                    .is_some_and(|g| parent_box.center().y > g.center().y + 1e-9)
            });
        let region = slot_region(slot, &parent_box, &envelope, mirror);
        let sizes: [Option<f64>; 3] = std::array::from_fn(|a| slot.size[a].map(|(lo, hi)| rng.uniform(lo, hi)));
        for (cell, &m) in cells(slot, &region, members.len())?.iter().zip(members) {
            out.nodes[m].bbox = Some(place(slot, cell, &sizes));
            regions[m] = Some(region);
        }
        Ok(())
    };

    place_group(&mut out, None, &[root])?;
    for p in tree.preorder() {
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        for &c in &kids[p] {
            let label = &tree.nodes[c].label;
            if label.is_dummy() {
                continue;
            }
            match groups.iter_mut().find(|(l, _)| *l == label.part) {
                Some((_, members)) => members.push(c),
                None => groups.push((label.part.clone(), vec![c])),
            }
        }
        for (_, members) in groups {
            place_group(&mut out, Some(p), &members)?;
        }
    }
    Ok(Placement { tree: out, regions })
}

fn lathe_along(profile: &[[f64; 2]], bbox: &Aabb, axis: usize, segments: u32) -> Result<Mesh, GeometryError> {
    if axis == 2 {
        return fit_lathe(profile, bbox, segments);
    }
    // Build about z in a box with x and z swapped, then turn z onto x.
    let e = bbox.extent();
    let local = Aabb::from_center_extent(Vector3::zeros(), Vector3::new(e.z, e.y, e.x));
    let z_to_x = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
    Ok(fit_lathe(profile, &local, segments)?.similarity(1.0, &z_to_x, &bbox.center()))
}

fn octagon_slab(bbox: &Aabb, chamfer: f64) -> Result<Mesh, GeometryError> {
    let e = bbox.extent();
    let c = (chamfer * e.x.min(e.y)).clamp(0.0, 0.49 * e.x.min(e.y));
    let (hx, hy) = (0.5 * e.x, 0.5 * e.y);
    let profile: Vec<[f64; 2]> = if c > 0.0 {
        vec![
            [-hx + c, -hy],
            [hx - c, -hy],
            [hx, -hy + c],
            [hx, hy - c],
            [hx - c, hy],
            [-hx + c, hy],
            [-hx, hy - c],
            [-hx, -hy + c],
        ]
    } else {
        vec![[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]]
    };
    let m = build_prism(&profile, &Vector3::z(), e.z)?;
    let center = bbox.center();
    Ok(m.translated(&Vector3::new(center.x, center.y, bbox.min.z)))
}

/// Scales a library part uniformly into `bbox`, flush with the mounting face
/// and centred on the other axes, by aligning its support points.
fn place_asset(mesh: &Mesh, canonical: &Aabb, supports: &[Vector3<f64>], bbox: &Aabb, mount: Option<(usize, bool)>) -> Result<Mesh, GeometryError> {
    let (ae, be) = (canonical.extent(), bbox.extent());
    let s = (0..3)
        .filter(|&a| ae[a] > 0.0)
        .map(|a| be[a] / ae[a])
        .fold(f64::INFINITY, f64::min);
    let mut anchor = Vector3::zeros();
    for a in 0..3 {
        let slack = be[a] - s * ae[a];
        let t = match mount {
            Some((m, true)) if m == a => 0.0,
            Some((m, false)) if m == a => 1.0,
            _ => 0.5,
        };
        anchor[a] = bbox.min[a] + t * slack;
    }
    let targets: Vec<Vector3<f64>> = supports.iter().map(|p| anchor + (p - canonical.min) * s).collect();
    Ok(align_support_points(mesh, supports, &targets)?.mesh)
}

/// Builds the world-frame mesh of every non-dummy node from its slot shape,
/// sets mesh and material references, and shrinks each box to its mesh.
/// Asset retrieval draws from `rng` in pre-order.
pub fn build_part_meshes(
    tree: &ArticulationTree,
    template: &LayoutTemplate,
    assets: &AssetLibrary,
    rng: &mut SeededStream,
) -> Result<ArticulationTree, LayoutError> {
    let mut out = tree.clone();
    for n in tree.preorder() {
        let node = &tree.nodes[n];
        if node.label.is_dummy() {
            continue;
        }
        let slot = template.slot(&node.label.part)?;
        let bbox = node.bbox.ok_or(LayoutError::MissingBox(n))?;
        let min_ext = bbox.extent().min();
        let mesh = match &slot.shape {
            Shape::Box => build_box(&bbox, template.bevel.min(0.2 * min_ext))?,
            Shape::Carcass { wall } => build_carcass(&bbox, wall.min(0.2 * min_ext), 0.0)?,
            Shape::Lathe { profile, axis } => lathe_along(profile, &bbox, *axis, template.lathe_segments)?,
            Shape::Prism { chamfer } => octagon_slab(&bbox, *chamfer)?,
            Shape::Asset { part } => {
                let label = SemanticLabel::new(tree.category.clone(), part.clone());
                let entry = retrieve_part(&assets.entries, &label, rng)?;
                let supports: Vec<Vector3<f64>> = entry.support_points.iter().map(|(_, p)| *p).collect();
                place_asset(&entry.mesh, &entry.canonical_bbox, &supports, &bbox, slot.mount)?
            }
        };
        let key = format!("{}_{n}", node.label.part);
        out.nodes[n].bbox = Some(compute_aabb(&mesh)?);
        out.nodes[n].mesh_ref = Some(key.clone());
        out.nodes[n].material_ref = Some(slot.material.clone());
        out.meshes.insert(key, mesh);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::JointSlot;

    const LAMP: &str = "category: lamp\n\
        size: depth=[0.4..0.4] width=[0.4..0.4] height=[1..1]\n\
        palette m color_lo=[0.1,0.1,0.1] color_hi=[0.2,0.2,0.2]\n\
        slot base ref=object region=[0,0,0,1,1,0.2] material=m\n\
        slot pole ref=object region=[0,0,0.2,1,1,0.8] material=m\n\
        slot head ref=object region=[0,0,0.8,1,1,1] material=m\n";

    fn chain() -> ArticulationTree {
        let mut t = ArticulationTree::with_root("lamp", SemanticLabel::new("lamp", "base"));
        let p = t.add_child(0, SemanticLabel::new("lamp", "pole"), JointSlot::Unassigned);
        t.add_child(p, SemanticLabel::new("lamp", "head"), JointSlot::Unassigned);
        t
    }

    #[test]
    fn lamp_column_partition() {
        let tpl = LayoutTemplate::parse(LAMP).unwrap();
        let p = assign_bounding_boxes(&chain(), &tpl, &mut SeededStream::new(1)).unwrap();
        let z: Vec<(f64, f64)> = p.tree.nodes.iter().map(|n| (n.bbox.unwrap().min.z, n.bbox.unwrap().max.z)).collect();
        let want = [(0.0, 0.2), (0.2, 0.8), (0.8, 1.0)];
        for (got, want) in z.iter().zip(want) {
            assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12, "{z:?}");
        }
    }

    fn cabinet(drawers: usize) -> (ArticulationTree, LayoutTemplate) {
        let tpl = LayoutTemplate::parse(
            "category: cabinet\n\
             size: depth=[0.5..0.5] width=[0.8..0.8] height=[1.2..1.2]\n\
             palette m\n\
             slot body ref=object material=m\n\
             slot drawer repeat=z min=0.2 material=m\n",
        )
        .unwrap();
        let mut t = ArticulationTree::with_root("cabinet", SemanticLabel::new("cabinet", "body"));
        for _ in 0..drawers {
            t.add_child(0, SemanticLabel::new("cabinet", "drawer"), JointSlot::Unassigned);
        }
        (t, tpl)
    }

    #[test]
    fn drawers_stack_without_overlap() {
        let (t, tpl) = cabinet(4);
        let p = assign_bounding_boxes(&t, &tpl, &mut SeededStream::new(0)).unwrap();
        let mut spans: Vec<(f64, f64)> = (1..5).map(|i| (p.tree.nodes[i].bbox.unwrap().min.z, p.tree.nodes[i].bbox.unwrap().max.z)).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in spans.windows(2) {
            assert!(w[0].1 <= w[1].0);
        }
        let total: f64 = spans.iter().map(|s| s.1 - s.0).sum();
        assert!(total <= 1.2 + 1e-12);
    }

    #[test]
    fn too_many_drawers_overflow() {
        let (t, tpl) = cabinet(10);
        assert_eq!(
            assign_bounding_boxes(&t, &tpl, &mut SeededStream::new(0)),
            Err(LayoutError::SlotOverflow {
                label: "drawer".into(),
                count: 10,
                capacity: 6
            })
        );
    }

    #[test]
    fn unknown_label() {
        let (mut t, tpl) = cabinet(1);
        t.add_child(0, SemanticLabel::new("cabinet", "leg"), JointSlot::Unassigned);
        assert!(matches!(
            assign_bounding_boxes(&t, &tpl, &mut SeededStream::new(0)),
            Err(LayoutError::LabelNotInTemplate(_))
        ));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(LayoutTemplate::parse("category: a\nsize: depth=1 width=1 height=1\nbogus\n").is_err());
        assert!(LayoutTemplate::parse("category: a\nsize: depth=1 width=1 height=1\npalette m\nslot b region=[0,0,0,2,1,1] material=m\n").is_err());
        assert!(LayoutTemplate::parse("category: a\nsize: depth=1 width=1 height=1\nslot b material=nope\n").is_err());
    }

    #[test]
    fn asset_lands_on_mount_face() {
        let canonical = Aabb::new(Vector3::new(0.0, -0.05, -0.01), Vector3::new(0.02, 0.05, 0.01));
        let mesh = build_box(&canonical, 0.0).unwrap();
        let supports = vec![Vector3::new(0.0, -0.04, 0.0), Vector3::new(0.0, 0.04, 0.0), Vector3::new(0.02, 0.0, 0.0)];
        let target = Aabb::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(1.04, 0.4, 0.1));
        let placed = place_asset(&mesh, &canonical, &supports, &target, Some((0, true))).unwrap();
        let b = compute_aabb(&placed).unwrap();
        assert!((b.min.x - 1.0).abs() < 1e-12);
        assert!((b.extent().y - 0.2).abs() < 1e-12);
        assert!(target.contains_box(&b, 1e-12));
    }
}
