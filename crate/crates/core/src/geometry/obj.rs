//! Wavefront OBJ text reading and writing.
//!
//! Floats are written with Rust's shortest round-trip representation, so a
//! parse of written output reproduces every coordinate bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Vector3;

use super::mesh::area_weighted_normals;
use super::{GeometryError, Mesh};

/// OBJ text for `mesh`. `mtllib` and `material` add the material-library
/// header lines.
pub fn obj_to_string(mesh: &Mesh, mtllib: Option<&str>, material: Option<&str>) -> String {
    let mut s = String::with_capacity(64 * mesh.vertices.len() + 32 * mesh.faces.len());
    if let Some(lib) = mtllib {
        let _ = writeln!(s, "mtllib {lib}");
    }
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            let _ = writeln!(s, "vt {} {}", t[0], t[1]);
        }
    }
    for n in &mesh.normals {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    if let Some(m) = material {
        let _ = writeln!(s, "usemtl {m}");
    }
    let with_uv = mesh.uvs.is_some();
    for f in &mesh.faces {
        let (a, b, c) = (f[0] + 1, f[1] + 1, f[2] + 1);
        if with_uv {
            let _ = writeln!(s, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
        } else {
            let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
        }
    }
    s
}

fn obj_err(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Obj {
        line,
        message: message.into(),
    }
}

fn resolve(raw: &str, count: usize, line: usize) -> Result<usize, GeometryError> {
    let i: i64 = raw
        .parse()
        .map_err(|_| obj_err(line, format!("bad index `{raw}`")))?;
    let idx = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(obj_err(line, "index 0 is invalid"));
    };
    if idx < 0 || idx as usize >= count {
        return Err(obj_err(line, format!("index {i} out of range ({count})")));
    }
    Ok(idx as usize)
}

fn floats<const N: usize>(parts: &[&str], line: usize) -> Result<[f64; N], GeometryError> {
    if parts.len() < N {
        return Err(obj_err(line, format!("expected {N} numbers")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| obj_err(line, format!("bad number `{p}`")))?;
    }
    Ok(out)
}

/// Parses `v`/`vt`/`vn`/`f` records. Quads are split along their shorter
/// diagonal; other records are ignored. Missing normals are recomputed.
/// Corners with distinct position/texcoord/normal indices become distinct
/// vertices, numbered in order of first use.
pub fn parse_obj(text: &str) -> Result<Mesh, GeometryError> {
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut file_normals: Vec<Vector3<f64>> = Vec::new();

    type Key = (usize, Option<usize>, Option<usize>);
    let mut lookup: HashMap<Key, u32> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        let mut it = body.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let rest: Vec<&str> = it.collect();
        match tag {
            "v" => {
                let [x, y, z] = floats::<3>(&rest, line)?;
                positions.push(Vector3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = floats::<2>(&rest, line)?;
                texcoords.push([u, v]);
            }
            "vn" => {
                let [x, y, z] = floats::<3>(&rest, line)?;
                file_normals.push(Vector3::new(x, y, z));
            }
            "f" => {
                if rest.len() < 3 || rest.len() > 4 {
                    return Err(obj_err(
                        line,
                        format!("only triangles and quads are supported, got {} corners", rest.len()),
                    ));
                }
                let mut corner = Vec::with_capacity(4);
                for tok in &rest {
                    let mut parts = tok.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), line)?;
                    let vt = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, texcoords.len(), line)?),
                        _ => None,
                    };
                    let vn = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, file_normals.len(), line)?),
                        _ => None,
                    };
                    let key = (v, vt, vn);
                    let id = *lookup.entry(key).or_insert_with(|| {
                        keys.push(key);
                        (keys.len() - 1) as u32
                    });
                    corner.push(id);
                }
                if corner.len() == 3 {
                    faces.push([corner[0], corner[1], corner[2]]);
                } else {
                    let p = |i: usize| positions[keys[corner[i] as usize].0];
                    if (p(0) - p(2)).norm() <= (p(1) - p(3)).norm() {
                        faces.push([corner[0], corner[1], corner[2]]);
                        faces.push([corner[0], corner[2], corner[3]]);
                    } else {
                        faces.push([corner[0], corner[1], corner[3]]);
                        faces.push([corner[1], corner[2], corner[3]]);
                    }
                }
            }
            _ => {}
        }
    }

    // Files whose corners use one index for position, texcoord and normal
    // (as written by `obj_to_string`) keep their vertex order.
    let with_vt = keys.first().is_some_and(|k| k.1.is_some());
    let with_vn = keys.first().is_some_and(|k| k.2.is_some());
    let aligned = keys.iter().all(|&(v, vt, vn)| {
        vt == with_vt.then_some(v) && vn == with_vn.then_some(v)
    }) && (!with_vt || texcoords.len() >= positions.len())
        && (!with_vn || file_normals.len() >= positions.len());
    if aligned && !keys.is_empty() {
        for f in &mut faces {
            for c in f.iter_mut() {
                *c = keys[*c as usize].0 as u32;
            }
        }
        keys = (0..positions.len())
            .map(|i| (i, with_vt.then_some(i), with_vn.then_some(i)))
            .collect();
    }

    let vertices: Vec<Vector3<f64>> = keys.iter().map(|k| positions[k.0]).collect();
    let uvs = if !keys.is_empty() && keys.iter().all(|k| k.1.is_some()) {
        Some(keys.iter().map(|k| texcoords[k.1.unwrap()]).collect())
    } else {
        None
    };
    let normals = if !keys.is_empty() && keys.iter().all(|k| k.2.is_some()) {
        keys.iter()
            .map(|k| {
                let n = file_normals[k.2.unwrap()];
                if (n.norm() - 1.0).abs() <= 1e-6 {
                    n
                } else if n.norm() > 0.0 {
                    n.normalize()
                } else {
                    Vector3::z()
                }
            })
            .collect()
    } else {
        area_weighted_normals(&vertices, &faces)
    };
    Ok(Mesh {
        vertices,
        faces,
        normals,
        uvs,
    })
}
