//! URDF writing and parsing.
//!
//! Links are named `<category>/<part>_<id>` (`dummy_<id>` for dummy links)
//! and written in node order, which is pre-order for canonical trees. Joints
//! are named `joint_<child id>` and follow in the same order. Numbers use
//! [`fmt_g17`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};

use super::bundle::MTL_FILE;
use super::{parse_mtl, ExportError};
use crate::geometry::parse_obj;
use crate::joints::{JointKind, JointSpec};
use crate::tree::{link_name, split_link_name, ArticulationTree, JointSlot, LinkNode};

const DUMMY_MASS: f64 = 1e-6;
const DUMMY_INERTIA: f64 = 1e-9;
const LINK_MASS: f64 = 1.0;
const LINK_INERTIA: f64 = 0.01;
const EFFORT: f64 = 100.0;
const VELOCITY: f64 = 1.0;

/// Shortest-looking decimal with 17 significant digits, like C's `%.17g`:
/// fixed notation for exponents in `[-5, 17)`, scientific otherwise, trailing
/// zeros trimmed. Locale-independent and exact on parse-back.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn fmt3(v: &Vector3<f64>) -> String {
    format!("{} {} {}", fmt_g17(v.x), fmt_g17(v.y), fmt_g17(v.z))
}

/// Roll, pitch, yaw with `R = Rz(yaw) Ry(pitch) Rx(roll)`. At gimbal lock
/// (|pitch| = π/2) roll is set to 0 and yaw takes the whole degenerate angle.
pub fn rpy_from_rotation(r: &Matrix3<f64>) -> Vector3<f64> {
    let s = (-r[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = s.asin();
    if s.abs() < 1.0 - 1e-12 {
        Vector3::new(r[(2, 1)].atan2(r[(2, 2)]), pitch, r[(1, 0)].atan2(r[(0, 0)]))
    } else {
        Vector3::new(0.0, pitch, (-r[(0, 1)]).atan2(r[(1, 1)]))
    }
}

pub fn rotation_from_rpy(rpy: &Vector3<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z)
}

fn origin_element(pose: &Isometry3<f64>) -> String {
    let rpy = rpy_from_rotation(pose.rotation.to_rotation_matrix().matrix());
    // Print exact zeros for identity rotations.
    let rpy = rpy.map(|a| if a == 0.0 { 0.0 } else { a });
    format!(
        "<origin xyz=\"{}\" rpy=\"{}\"/>",
        fmt3(&pose.translation.vector),
        fmt3(&rpy)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Mesh path of a node inside a bundle.
pub(super) fn mesh_file(node: &LinkNode) -> Option<String> {
    node.mesh_ref.as_ref().map(|m| format!("meshes/{m}.obj"))
}

fn write_link(s: &mut String, tree: &ArticulationTree, n: usize) {
    let node = &tree.nodes[n];
    let name = xml_escape(&link_name(&node.label, node.id));
    let _ = writeln!(s, "  <link name=\"{name}\">");
    let (mass, inertia) = if node.label.is_dummy() {
        (DUMMY_MASS, DUMMY_INERTIA)
    } else {
        (LINK_MASS, LINK_INERTIA)
    };
    let i = fmt_g17(inertia);
    let _ = writeln!(s, "    <inertial>");
    let _ = writeln!(s, "      <origin xyz=\"0 0 0\" rpy=\"0 0 0\"/>");
    let _ = writeln!(s, "      <mass value=\"{}\"/>", fmt_g17(mass));
    let _ = writeln!(
        s,
        "      <inertia ixx=\"{i}\" ixy=\"0\" ixz=\"0\" iyy=\"{i}\" iyz=\"0\" izz=\"{i}\"/>"
    );
    let _ = writeln!(s, "    </inertial>");
    if let Some(file) = mesh_file(node) {
        let file = xml_escape(&file);
        for tag in ["visual", "collision"] {
            let _ = writeln!(s, "    <{tag}>");
            let _ = writeln!(s, "      <origin xyz=\"0 0 0\" rpy=\"0 0 0\"/>");
            let _ = writeln!(s, "      <geometry>");
            let _ = writeln!(s, "        <mesh filename=\"{file}\"/>");
            let _ = writeln!(s, "      </geometry>");
            if tag == "visual" {
                if let Some(m) = &node.material_ref {
                    let _ = writeln!(s, "      <material name=\"{}\"/>", xml_escape(m));
                }
            }
            let _ = writeln!(s, "    </{tag}>");
        }
    }
    let _ = writeln!(s, "  </link>");
}

/// URDF text for a fully synthesized tree with expanded compound joints.
pub fn urdf_string(tree: &ArticulationTree) -> Result<String, ExportError> {
    let root = tree.root().ok_or(ExportError::NoRoot)?;
    let order = tree.preorder();
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\"?>");
    let _ = writeln!(s, "<robot name=\"{}\">", xml_escape(&tree.category));
    for (name, m) in &tree.materials {
        let c = m.base_color;
        let _ = writeln!(s, "  <material name=\"{}\">", xml_escape(name));
        let _ = writeln!(
            s,
            "    <color rgba=\"{} {} {} 1\"/>",
            fmt_g17(c[0]),
            fmt_g17(c[1]),
            fmt_g17(c[2])
        );
        let _ = writeln!(s, "  </material>");
    }
    for &n in &order {
        if let Some(m) = &tree.nodes[n].mesh_ref {
            if !tree.meshes.contains_key(m) {
                return Err(ExportError::MissingMesh { node: n, mesh: m.clone() });
            }
        }
        write_link(&mut s, tree, n);
    }
    for &n in &order {
        if n == root {
            continue;
        }
        let p = tree.parent[n].expect("non-root has a parent");
        let j = match &tree.edge_joint[n] {
            Some(JointSlot::Simple(j)) => j,
            Some(JointSlot::Compound(_)) => return Err(ExportError::UnexpandedCompound(n)),
            _ => return Err(ExportError::NotSynthesized(n)),
        };
        let child = &tree.nodes[n];
        let parent = &tree.nodes[p];
        let _ = writeln!(s, "  <joint name=\"joint_{}\" type=\"{}\">", child.id, j.kind.name());
        let _ = writeln!(
            s,
            "    <parent link=\"{}\"/>",
            xml_escape(&link_name(&parent.label, parent.id))
        );
        let _ = writeln!(
            s,
            "    <child link=\"{}\"/>",
            xml_escape(&link_name(&child.label, child.id))
        );
        let _ = writeln!(s, "    {}", origin_element(&j.origin));
        if j.kind != JointKind::Fixed {
            let _ = writeln!(s, "    <axis xyz=\"{}\"/>", fmt3(&j.axis));
        }
        if let Some((lo, hi)) = j.limits {
            let _ = writeln!(
                s,
                "    <limit lower=\"{}\" upper=\"{}\" effort=\"{}\" velocity=\"{}\"/>",
                fmt_g17(lo),
                fmt_g17(hi),
                fmt_g17(EFFORT),
                fmt_g17(VELOCITY)
            );
        }
        let _ = writeln!(s, "  </joint>");
    }
    let _ = writeln!(s, "</robot>");
    Ok(s)
}

/// Result of parsing a URDF. `warnings` lists everything outside the subset
/// this crate writes; files it wrote itself parse with no warnings.
#[derive(Clone, Debug)]
pub struct ParsedUrdf {
    pub tree: ArticulationTree,
    pub warnings: Vec<String>,
    /// Mesh filename per node, as written in the file.
    pub mesh_files: BTreeMap<usize, String>,
}

fn parse_vec3(s: &str, what: &str) -> Result<Vector3<f64>, ExportError> {
    let parts: Vec<f64> = s
        .split_whitespace()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ExportError::InvalidUrdf(format!("{what}: `{s}` is not a list of numbers")))?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(ExportError::InvalidUrdf(format!("{what}: expected 3 numbers, got `{s}`"))),
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64, ExportError> {
    s.trim()
        .parse()
        .map_err(|_| ExportError::InvalidUrdf(format!("{what}: `{s}` is not a number")))
}

fn parse_origin(node: Option<roxmltree::Node>, what: &str) -> Result<Isometry3<f64>, ExportError> {
    let Some(o) = node else {
        return Ok(Isometry3::identity());
    };
    let xyz = o.attribute("xyz").map_or(Ok(Vector3::zeros()), |s| parse_vec3(s, what))?;
    let rpy = o.attribute("rpy").map_or(Ok(Vector3::zeros()), |s| parse_vec3(s, what))?;
    let rotation = if rpy == Vector3::zeros() {
        UnitQuaternion::identity()
    } else {
        rotation_from_rpy(&rpy)
    };
    Ok(Isometry3::from_parts(Translation3::from(xyz), rotation))
}

fn child<'a, 'i>(n: roxmltree::Node<'a, 'i>, tag: &str) -> Option<roxmltree::Node<'a, 'i>> {
    n.children().find(|c| c.is_element() && c.has_tag_name(tag))
}

/// Parses URDF text. Link labels come from link names (`category/part_<id>`);
/// names without a category take the robot name as category.
pub fn parse_urdf_str(xml: &str) -> Result<ParsedUrdf, ExportError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| ExportError::MalformedXml(e.to_string()))?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(ExportError::InvalidUrdf(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }
    let category = robot.attribute("name").unwrap_or("object").to_string();
    let mut warnings = Vec::new();

    let mut links = Vec::new();
    let mut joints = Vec::new();
    for el in robot.children().filter(|c| c.is_element()) {
        match el.tag_name().name() {
            "link" => links.push(el),
            "joint" => joints.push(el),
            "material" => {}
            other => warnings.push(format!("ignored element <{other}>")),
        }
    }
    if links.is_empty() {
        return Err(ExportError::InvalidUrdf("no <link> elements".into()));
    }

    let mut index = BTreeMap::new();
    let mut nodes = Vec::with_capacity(links.len());
    let mut mesh_files = BTreeMap::new();
    for (i, el) in links.iter().enumerate() {
        let name = el
            .attribute("name")
            .ok_or_else(|| ExportError::InvalidUrdf(format!("link #{i} has no name")))?;
        if index.insert(name.to_string(), i).is_some() {
            return Err(ExportError::InvalidUrdf(format!("duplicate link name `{name}`")));
        }
        let (label, id) = split_link_name(name, &category);
        if let Some(id) = id {
            if id != i {
                warnings.push(format!("link `{name}` is at position {i}"));
            }
        }
        let mut node = LinkNode::new(i, label);
        if let Some(visual) = child(*el, "visual") {
            if let Some(mesh) = child(visual, "geometry").and_then(|g| child(g, "mesh")) {
                if let Some(file) = mesh.attribute("filename") {
                    let stem = Path::new(file)
                        .file_stem()
                        .map_or_else(|| file.to_string(), |s| s.to_string_lossy().into_owned());
                    node.mesh_ref = Some(stem);
                    mesh_files.insert(i, file.to_string());
                }
            } else {
                warnings.push(format!("link `{name}` has a visual without mesh geometry"));
            }
            node.material_ref = child(visual, "material").and_then(|m| m.attribute("name")).map(str::to_string);
        }
        if node.label.is_dummy() && node.mesh_ref.is_some() {
            warnings.push(format!("dummy link `{name}` has geometry"));
        }
        nodes.push(node);
    }

    let mut parent: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut edge: Vec<Option<JointSlot>> = vec![None; nodes.len()];
    for el in &joints {
        let name = el.attribute("name").unwrap_or("<unnamed>").to_string();
        let kind_name = el.attribute("type").unwrap_or("");
        let kind = JointKind::from_name(kind_name).ok_or_else(|| ExportError::UnsupportedJointType {
            joint: name.clone(),
            kind: kind_name.to_string(),
        })?;
        let link_of = |tag: &str| -> Result<usize, ExportError> {
            let l = child(*el, tag)
                .and_then(|c| c.attribute("link"))
                .ok_or_else(|| ExportError::InvalidUrdf(format!("joint `{name}` lacks <{tag} link=..>")))?;
            index.get(l).copied().ok_or_else(|| ExportError::UnknownLink {
                joint: name.clone(),
                link: l.to_string(),
            })
        };
        let (p, c) = (link_of("parent")?, link_of("child")?);
        if parent[c].is_some() {
            return Err(ExportError::MultipleParents(link_name(&nodes[c].label, c)));
        }
        if p == c {
            return Err(ExportError::CycleDetected(link_name(&nodes[c].label, c)));
        }
        let origin = parse_origin(child(*el, "origin"), &name)?;
        let axis = match child(*el, "axis").and_then(|a| a.attribute("xyz")) {
            Some(s) => parse_vec3(s, &name)?,
            None => {
                if kind != JointKind::Fixed {
                    warnings.push(format!("joint `{name}` has no axis; using 1 0 0"));
                }
                Vector3::x()
            }
        };
        let limits = if kind.has_limits() {
            let l = child(*el, "limit")
                .ok_or_else(|| ExportError::InvalidUrdf(format!("{} joint `{name}` lacks <limit>", kind.name())))?;
            let lo = parse_num(l.attribute("lower").unwrap_or("0"), &name)?;
            let hi = parse_num(l.attribute("upper").unwrap_or("0"), &name)?;
            Some((lo, hi))
        } else {
            if child(*el, "limit").is_some() && kind == JointKind::Fixed {
                warnings.push(format!("fixed joint `{name}` has a <limit>"));
            }
            None
        };
        let spec = JointSpec {
            kind,
            origin,
            axis,
            limits,
        };
        if let Err(e) = spec.check() {
            warnings.push(format!("joint `{name}`: {e}"));
        }
        parent[c] = Some(p);
        edge[c] = Some(JointSlot::Simple(spec));
    }

    let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parent[i].is_none()).collect();
    // Every link reachable from a single root rules out cycles.
    for start in 0..nodes.len() {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = parent[cur] {
            cur = p;
            steps += 1;
            if steps > nodes.len() {
                return Err(ExportError::CycleDetected(link_name(&nodes[start].label, start)));
            }
        }
    }
    match roots.len() {
        0 => return Err(ExportError::NoRoot),
        1 => {}
        _ => {
            return Err(ExportError::MultipleRoots(
                roots.iter().map(|&r| link_name(&nodes[r].label, r)).collect(),
            ))
        }
    }
    let tree = ArticulationTree {
        category,
        nodes,
        parent,
        edge_joint: edge,
        meshes: BTreeMap::new(),
        materials: BTreeMap::new(),
    };
    Ok(ParsedUrdf {
        tree,
        warnings,
        mesh_files,
    })
}

/// Parses a URDF file and loads the OBJ meshes it references, resolved
/// relative to the file, plus the bundle material library when present. Missing or unreadable meshes become warnings.
pub fn parse_urdf(path: &Path) -> Result<ParsedUrdf, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExportError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut parsed = parse_urdf_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mtl = base.join("meshes").join(MTL_FILE);
    if let Ok(text) = std::fs::read_to_string(&mtl) {
        match parse_mtl(&text) {
            Ok(materials) => parsed.tree.materials = materials,
            Err(e) => parsed.warnings.push(format!("{}: {e}", mtl.display())),
        }
    }
    for (&n, file) in &parsed.mesh_files {
        if Path::new(file).is_absolute() || file.contains("://") {
            parsed.warnings.push(format!("mesh path `{file}` is not bundle-relative"));
        }
        let full = base.join(file.trim_start_matches("package://"));
        match std::fs::read_to_string(&full) {
            Ok(obj) => match parse_obj(&obj) {
                Ok(mesh) => {
                    let key = parsed.tree.nodes[n].mesh_ref.clone().expect("mesh node has a ref");
                    parsed.tree.meshes.insert(key, mesh);
                }
                Err(e) => parsed.warnings.push(format!("{}: {e}", full.display())),
            },
            Err(e) => parsed.warnings.push(format!("{}: {e}", full.display())),
        }
    }
    Ok(parsed)
}
