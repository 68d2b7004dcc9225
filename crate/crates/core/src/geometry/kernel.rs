//! Parametric mesh primitives: boxes (optionally chamfered), straight prisms
//! and surfaces of revolution. Every builder returns a closed mesh with
//! outward orientation.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};

use super::mesh::area_weighted_normals;
use super::{Aabb, GeometryError, Mesh};

fn orient_convex(vertices: &[Vector3<f64>], faces: &mut [[u32; 3]], center: &Vector3<f64>) {
    for f in faces.iter_mut() {
        let (a, b, c) = (
            vertices[f[0] as usize],
            vertices[f[1] as usize],
            vertices[f[2] as usize],
        );
        let n = (b - a).cross(&(c - a));
        let centroid = (a + b + c) / 3.0;
        if n.dot(&(centroid - center)) < 0.0 {
            f.swap(1, 2);
        }
    }
}

fn finish(vertices: Vec<Vector3<f64>>, mut faces: Vec<[u32; 3]>) -> Mesh {
    if super::mesh::signed_volume_of(&vertices, faces.iter()) < 0.0 {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }
    let normals = area_weighted_normals(&vertices, &faces);
    Mesh {
        vertices,
        faces,
        normals,
        uvs: None,
    }
}

/// Box filling `bbox`. A positive `bevel` chamfers every edge by that length
/// (24 vertices, 44 triangles); zero gives the plain 8-vertex, 12-triangle box.
pub fn build_box(bbox: &Aabb, bevel: f64) -> Result<Mesh, GeometryError> {
    let ext = bbox.extent();
    let smallest = ext.min();
    if smallest <= 0.0 {
        return Err(GeometryError::DegenerateBox(*bbox));
    }
    if !(bevel >= 0.0 && bevel < 0.5 * smallest) {
        return Err(GeometryError::InvalidBevel {
            bevel,
            limit: 0.5 * smallest,
        });
    }
    let center = bbox.center();
    let corner_sign = |c: usize, axis: usize| c >> axis & 1 == 1;

    if bevel == 0.0 {
        let vertices: Vec<Vector3<f64>> = bbox.corners().to_vec();
        let mut faces = Vec::with_capacity(12);
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in [false, true] {
                let quad: Vec<u32> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                    .iter()
                    .map(|&(bu, bv)| {
                        ((side as usize) << axis | (bu as usize) << u | (bv as usize) << v) as u32
                    })
                    .collect();
                faces.push([quad[0], quad[1], quad[2]]);
                faces.push([quad[0], quad[2], quad[3]]);
            }
        }
        orient_convex(&vertices, &mut faces, &center);
        return Ok(finish(vertices, faces));
    }

    let half = ext * 0.5;
    // Vertex (corner, axis): the corner point pulled in by `bevel` on the two
    // axes other than `axis`.
    let vid = |corner: usize, axis: usize| (corner * 3 + axis) as u32;
    let mut vertices = Vec::with_capacity(24);
    for corner in 0..8 {
        for axis in 0..3 {
            let mut p = Vector3::zeros();
            for b in 0..3 {
                let s = if corner_sign(corner, b) { 1.0 } else { -1.0 };
                p[b] = if b == axis { s * half[b] } else { s * (half[b] - bevel) };
            }
            vertices.push(center + p);
        }
    }
    let mut faces = Vec::with_capacity(44);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2usize {
            let q: Vec<u32> = [(0usize, 0usize), (1, 0), (1, 1), (0, 1)]
                .iter()
                .map(|&(bu, bv)| vid(side << axis | bu << u | bv << v, axis))
                .collect();
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        }
    }
    for e in 0..3 {
        let (a, b) = ((e + 1) % 3, (e + 2) % 3);
        for sa in 0..2usize {
            for sb in 0..2usize {
                let c0 = sa << a | sb << b;
                let c1 = c0 | 1 << e;
                let q = [vid(c0, a), vid(c1, a), vid(c1, b), vid(c0, b)];
                faces.push([q[0], q[1], q[2]]);
                faces.push([q[0], q[2], q[3]]);
            }
        }
    }
    for c in 0..8 {
        faces.push([vid(c, 0), vid(c, 1), vid(c, 2)]);
    }
    orient_convex(&vertices, &mut faces, &center);
    Ok(finish(vertices, faces))
}

/// Open-front carcass (five wall panels) filling `bbox`, open toward +x.
pub fn build_carcass(bbox: &Aabb, wall: f64, bevel: f64) -> Result<Mesh, GeometryError> {
    let (lo, hi) = (bbox.min, bbox.max);
    let ext = bbox.extent();
    if !(wall > 0.0 && 2.0 * wall < ext.y && 2.0 * wall < ext.z && wall < ext.x) {
        return Err(GeometryError::DegenerateBox(*bbox));
    }
    let panels = [
        Aabb::new(lo, Vector3::new(hi.x, hi.y, lo.z + wall)),
        Aabb::new(Vector3::new(lo.x, lo.y, hi.z - wall), hi),
        Aabb::new(
            Vector3::new(lo.x, lo.y, lo.z + wall),
            Vector3::new(hi.x, lo.y + wall, hi.z - wall),
        ),
        Aabb::new(
            Vector3::new(lo.x, hi.y - wall, lo.z + wall),
            Vector3::new(hi.x, hi.y, hi.z - wall),
        ),
        Aabb::new(
            Vector3::new(lo.x, lo.y + wall, lo.z + wall),
            Vector3::new(lo.x + wall, hi.y - wall, hi.z - wall),
        ),
    ];
    let mut mesh = Mesh::default();
    for p in &panels {
        let b = bevel.min(0.45 * p.extent().min());
        mesh.merge(&build_box(p, b)?);
    }
    Ok(mesh)
}

/// Twice the signed area (positive for counter-clockwise polygons).
fn twice_area(poly: &[Vector2<f64>]) -> f64 {
    (0..poly.len())
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            a.x * b.y - b.x * a.y
        })
        .sum()
}

fn cross2(o: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: Vector2<f64>, p2: Vector2<f64>, q1: Vector2<f64>, q2: Vector2<f64>) -> bool {
    let on_segment = |a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    let d1 = cross2(q1, q2, p1);
    let d2 = cross2(q1, q2, p2);
    let d3 = cross2(p1, p2, q1);
    let d4 = cross2(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// A closed polygon with nonzero area and no intersecting non-adjacent edges.
pub fn is_simple_polygon(poly: &[Vector2<f64>]) -> bool {
    let n = poly.len();
    if n < 3 || twice_area(poly).abs() <= 1e-18 {
        return false;
    }
    for i in 0..n {
        if (poly[i] - poly[(i + 1) % n]).norm() == 0.0 {
            return false;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Ear clipping of a simple counter-clockwise polygon.
fn triangulate_ccw(poly: &[Vector2<f64>]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if cross2(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = poly[j];
                cross2(a, b, p) >= 0.0 && cross2(b, c, p) >= 0.0 && cross2(c, a, p) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Only collinear runs remain; fan out what is left.
            for k in 1..idx.len() - 1 {
                out.push([idx[0], idx[k], idx[k + 1]]);
            }
            return out;
        }
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

/// Orthonormal `(u, v)` with `u x v = axis`.
fn plane_basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let v = axis.cross(&helper).normalize();
    let u = v.cross(axis);
    (u, v)
}

/// Extrudes a simple polygon (in the plane orthogonal to `axis`) by `length`.
/// Caps are ear-clipped into `n - 2` triangles each, walls are two triangles
/// per edge; a square prism has 12 triangles.
pub fn build_prism(profile: &[[f64; 2]], axis: &Vector3<f64>, length: f64) -> Result<Mesh, GeometryError> {
    let mut poly: Vec<Vector2<f64>> = profile.iter().map(|p| Vector2::new(p[0], p[1])).collect();
    if !is_simple_polygon(&poly) {
        return Err(GeometryError::DegenerateProfile(
            "prism profile is not a simple polygon with nonzero area".into(),
        ));
    }
    if !(length > 0.0) || axis.norm() == 0.0 {
        return Err(GeometryError::DegenerateProfile(format!(
            "prism needs a positive length and nonzero axis, got {length}"
        )));
    }
    if twice_area(&poly) < 0.0 {
        poly.reverse();
    }
    let axis = axis.normalize();
    let (u, v) = plane_basis(&axis);
    let n = poly.len();
    let mut vertices = Vec::with_capacity(2 * n);
    for lift in [0.0, length] {
        for p in &poly {
            vertices.push(u * p.x + v * p.y + axis * lift);
        }
    }
    let mut faces = Vec::new();
    for t in triangulate_ccw(&poly) {
        faces.push([t[0] as u32, t[2] as u32, t[1] as u32]);
        faces.push([(t[0] + n) as u32, (t[1] + n) as u32, (t[2] + n) as u32]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        let (bi, bj, ti, tj) = (i as u32, j as u32, (i + n) as u32, (j + n) as u32);
        faces.push([bi, bj, tj]);
        faces.push([bi, tj, ti]);
    }
    Ok(finish(vertices, faces))
}

/// Revolves a `(radius, height)` polyline about the z axis. The profile is
/// closed to the axis at both ends when it does not already touch it.
pub fn build_lathe(profile: &[[f64; 2]], segments: u32) -> Result<Mesh, GeometryError> {
    if segments < 3 {
        return Err(GeometryError::DegenerateProfile(format!(
            "lathe needs at least 3 segments, got {segments}"
        )));
    }
    if profile.is_empty() {
        return Err(GeometryError::DegenerateProfile("empty lathe profile".into()));
    }
    let mut pts: Vec<[f64; 2]> = profile.to_vec();
    if pts[0][0] != 0.0 {
        pts.insert(0, [0.0, pts[0][1]]);
    }
    if pts[pts.len() - 1][0] != 0.0 {
        let z = pts[pts.len() - 1][1];
        pts.push([0.0, z]);
    }
    let last = pts.len() - 1;
    if pts.iter().any(|p| p[0] < 0.0 || !p[0].is_finite() || !p[1].is_finite()) {
        return Err(GeometryError::DegenerateProfile("negative or non-finite radius".into()));
    }
    if pts[1..last].iter().any(|p| p[0] == 0.0) || last < 2 {
        return Err(GeometryError::DegenerateProfile(
            "only the profile endpoints may lie on the axis".into(),
        ));
    }
    let poly: Vec<Vector2<f64>> = pts.iter().map(|p| Vector2::new(p[0], p[1])).collect();
    if !is_simple_polygon(&poly) {
        return Err(GeometryError::DegenerateProfile(
            "lathe profile is self-intersecting or has zero area".into(),
        ));
    }

    let n = segments as usize;
    let mut vertices = Vec::new();
    // Index of the first vertex of each profile point (ring or pole).
    let mut start = Vec::with_capacity(pts.len());
    for p in &pts {
        start.push(vertices.len() as u32);
        if p[0] == 0.0 {
            vertices.push(Vector3::new(0.0, 0.0, p[1]));
        } else {
            for k in 0..n {
                let theta = 2.0 * PI * k as f64 / n as f64;
                vertices.push(Vector3::new(p[0] * theta.cos(), p[0] * theta.sin(), p[1]));
            }
        }
    }
    let ring = |i: usize, k: usize| start[i] + (k % n) as u32;
    let mut faces = Vec::new();
    for i in 0..last {
        let (pole_a, pole_b) = (pts[i][0] == 0.0, pts[i + 1][0] == 0.0);
        for k in 0..n {
            match (pole_a, pole_b) {
                (true, false) => faces.push([start[i], ring(i + 1, k + 1), ring(i + 1, k)]),
                (false, true) => faces.push([ring(i, k), ring(i, k + 1), start[i + 1]]),
                (false, false) => {
                    faces.push([ring(i, k), ring(i, k + 1), ring(i + 1, k + 1)]);
                    faces.push([ring(i, k), ring(i + 1, k + 1), ring(i + 1, k)]);
                }
                (true, true) => unreachable!("interior axis points rejected above"),
            }
        }
    }
    Ok(finish(vertices, faces))
}

/// Lathe of a unit profile (radius in `[0, 1]`, height in `[0, 1]`) stretched
/// to fill `bbox`: radius scales to half the smaller horizontal extent.
pub fn fit_lathe(unit_profile: &[[f64; 2]], bbox: &Aabb, segments: u32) -> Result<Mesh, GeometryError> {
    let ext = bbox.extent();
    let radius = 0.5 * ext.x.min(ext.y);
    let scaled: Vec<[f64; 2]> = unit_profile
        .iter()
        .map(|p| [p[0] * radius, bbox.min.z + p[1] * ext.z])
        .collect();
    let c = bbox.center();
    Ok(build_lathe(&scaled, segments)?.translated(&Vector3::new(c.x, c.y, 0.0)))
}

/// Volume of the prism inscribed in a cylinder of `radius` and `height` when
/// tessellated with `segments` sides.
pub fn inscribed_cylinder_volume(radius: f64, height: f64, segments: u32) -> f64 {
    let n = segments as f64;
    0.5 * n * radius * radius * (2.0 * PI / n).sin() * height
}
