use std::collections::{BTreeMap, VecDeque};

use nalgebra::{Isometry3, Matrix3, Vector3};

use super::{Aabb, GeometryError};

/// Triangle mesh in meters with per-vertex unit normals.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub normals: Vec<Vector3<f64>>,
    pub uvs: Option<Vec<[f64; 2]>>,
}

impl Mesh {
    /// Mesh from positions and faces; normals are computed by area weighting
    /// without touching face orientation.
    pub fn from_triangles(vertices: Vec<Vector3<f64>>, faces: Vec<[u32; 3]>) -> Self {
        let mut m = Mesh {
            vertices,
            faces,
            normals: Vec::new(),
            uvs: None,
        };
        m.normals = area_weighted_normals(&m.vertices, &m.faces);
        m
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Structural checks: face indices in range, one unit normal per vertex,
    /// uv count matches.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(GeometryError::InvalidMesh(format!(
                "face {f:?} indexes past {n} vertices"
            )));
        }
        if self.normals.len() != n {
            return Err(GeometryError::InvalidMesh(format!(
                "{} normals for {n} vertices",
                self.normals.len()
            )));
        }
        if let Some((i, nv)) = self
            .normals
            .iter()
            .enumerate()
            .find(|(_, nv)| (nv.norm() - 1.0).abs() > 1e-6)
        {
            return Err(GeometryError::InvalidMesh(format!(
                "normal {i} has norm {}",
                nv.norm()
            )));
        }
        if let Some(uv) = &self.uvs {
            if uv.len() != n {
                return Err(GeometryError::InvalidMesh(format!(
                    "{} uvs for {n} vertices",
                    uv.len()
                )));
            }
        }
        Ok(())
    }

    /// Signed enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        signed_volume_of(&self.vertices, self.faces.iter())
    }

    /// Undirected edge -> number of incident faces.
    pub fn edge_incidence(&self) -> BTreeMap<(u32, u32), usize> {
        let mut map = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *map.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        map
    }

    /// Every edge is shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        !self.faces.is_empty() && self.edge_incidence().values().all(|&c| c == 2)
    }

    pub fn transformed(&self, pose: &Isometry3<f64>) -> Mesh {
        let rot = pose.rotation;
        Mesh {
            vertices: self.vertices.iter().map(|v| rot * v + pose.translation.vector).collect(),
            faces: self.faces.clone(),
            normals: self.normals.iter().map(|n| rot * n).collect(),
            uvs: self.uvs.clone(),
        }
    }

    pub fn translated(&self, by: &Vector3<f64>) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|v| v + by).collect(),
            ..self.clone()
        }
    }

    /// Uniform scale about `anchor`. Normals are unchanged.
    pub fn scaled_about(&self, anchor: &Vector3<f64>, factor: f64) -> Mesh {
        Mesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| anchor + (v - anchor) * factor)
                .collect(),
            ..self.clone()
        }
    }

    /// Similarity transform `x -> scale * rotation * x + translation`.
    pub fn similarity(&self, scale: f64, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Mesh {
        Mesh {
            vertices: self
                .vertices
                .iter()
                .map(|v| rotation * v * scale + translation)
                .collect(),
            faces: self.faces.clone(),
            normals: self.normals.iter().map(|n| (rotation * n).normalize()).collect(),
            uvs: self.uvs.clone(),
        }
    }

    /// Appends `other` as an additional component.
    pub fn merge(&mut self, other: &Mesh) {
        let offset = self.vertices.len() as u32;
        let uvs = match (self.uvs.take(), &other.uvs) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            (None, Some(b)) if self.vertices.is_empty() => Some(b.clone()),
            _ => None,
        };
        self.vertices.extend_from_slice(&other.vertices);
        self.normals.extend_from_slice(&other.normals);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
        self.uvs = uvs;
    }
}

pub(crate) fn signed_volume_of<'a>(
    vertices: &[Vector3<f64>],
    faces: impl Iterator<Item = &'a [u32; 3]>,
) -> f64 {
    faces
        .map(|f| {
            let (a, b, c) = (
                vertices[f[0] as usize],
                vertices[f[1] as usize],
                vertices[f[2] as usize],
            );
            a.dot(&b.cross(&c))
        })
        .sum::<f64>()
        / 6.0
}

/// Per-vertex normals as the area-weighted average of incident face normals.
pub fn area_weighted_normals(vertices: &[Vector3<f64>], faces: &[[u32; 3]]) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        let (a, b, c) = (
            vertices[f[0] as usize],
            vertices[f[1] as usize],
            vertices[f[2] as usize],
        );
        // |cross| is twice the triangle area, so summing it weights by area.
        let n = (b - a).cross(&(c - a));
        for &i in f {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                Vector3::z()
            }
        })
        .collect()
}

/// Tight componentwise bounds of the vertices.
pub fn compute_aabb(mesh: &Mesh) -> Result<Aabb, GeometryError> {
    Aabb::from_points(&mesh.vertices).ok_or(GeometryError::EmptyMesh)
}

/// Makes face orientation consistent and outward (positive volume per
/// connected component), then recomputes area-weighted vertex normals.
pub fn recompute_normals(mesh: &Mesh) -> Result<Mesh, GeometryError> {
    let mut edge_faces: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    if let Some((e, fs)) = edge_faces.iter().find(|(_, fs)| fs.len() != 2) {
        return Err(GeometryError::NonManifold {
            edge: *e,
            incident: fs.len(),
        });
    }

    let has_directed = |f: &[u32; 3], a: u32, b: u32| (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);

    let mut faces = mesh.faces.clone();
    let mut component = vec![usize::MAX; faces.len()];
    let mut n_components = 0;
    for seed in 0..faces.len() {
        if component[seed] != usize::MAX {
            continue;
        }
        component[seed] = n_components;
        let mut queue = VecDeque::from([seed]);
        while let Some(fi) = queue.pop_front() {
            let f = faces[fi];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let pair = &edge_faces[&(a.min(b), a.max(b))];
                let gi = if pair[0] == fi { pair[1] } else { pair[0] };
                if gi == fi {
                    return Err(GeometryError::NonManifold {
                        edge: (a.min(b), a.max(b)),
                        incident: 2,
                    });
                }
                // A consistent neighbour traverses the shared edge as b -> a.
                let consistent = !has_directed(&faces[gi], a, b);
                if component[gi] == usize::MAX {
                    if !consistent {
                        faces[gi].swap(1, 2);
                    }
                    component[gi] = n_components;
                    queue.push_back(gi);
                } else if !consistent {
                    return Err(GeometryError::NonOrientable);
                }
            }
        }
        n_components += 1;
    }

    for c in 0..n_components {
        let vol = signed_volume_of(
            &mesh.vertices,
            faces.iter().zip(&component).filter(|(_, &k)| k == c).map(|(f, _)| f),
        );
        if vol < 0.0 {
            for (f, _) in faces.iter_mut().zip(&component).filter(|(_, &k)| k == c) {
                f.swap(1, 2);
            }
        }
    }

    Ok(Mesh {
        normals: area_weighted_normals(&mesh.vertices, &faces),
        vertices: mesh.vertices.clone(),
        faces,
        uvs: mesh.uvs.clone(),
    })
}
