//! Support-point alignment of retrieved parts.
//!
//! The transform is a similarity `x -> s R x + t` with `R` restricted to the
//! 24 axis-aligned orientations. For each candidate `R` the least-squares
//! scale and translation have a closed form; the candidate with the smallest
//! residual wins, ties going to the earlier candidate (identity first).

use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, Mesh};

/// The 24 proper rotations that permute and sign-flip the coordinate axes,
/// identity first, then in lexicographic order of (permutation, signs).
pub fn axis_rotations() -> Vec<Matrix3<f64>> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for perm in PERMS {
        for signs in 0..8u32 {
            let mut m = Matrix3::zeros();
            for (row, &col) in perm.iter().enumerate() {
                m[(row, col)] = if signs >> row & 1 == 1 { -1.0 } else { 1.0 };
            }
            if m.determinant() > 0.0 {
                out.push(m);
            }
        }
    }
    debug_assert_eq!(out.len(), 24);
    debug_assert_eq!(out[0], Matrix3::identity());
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }
}

#[derive(Clone, Debug)]
pub struct Alignment {
    pub mesh: Mesh,
    pub transform: Similarity,
    /// Root-mean-square distance between transformed source and target points.
    pub rms: f64,
    /// Source points are coincident: rotation fell back to identity and scale to 1.
    pub rank_deficient: bool,
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

/// Best similarity mapping `source` onto `target` (paired by index).
pub fn fit_similarity(
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
) -> Result<(Similarity, f64, bool), GeometryError> {
    if source.len() != target.len() {
        return Err(GeometryError::PointCountMismatch {
            sources: source.len(),
            targets: target.len(),
        });
    }
    if source.is_empty() {
        return Err(GeometryError::EmptyPointSet);
    }
    let n = source.len() as f64;
    let (cs, ct) = (centroid(source), centroid(target));
    let spread: f64 = source.iter().map(|p| (p - cs).norm_squared()).sum();
    let rms_of = |sim: &Similarity| {
        (source
            .iter()
            .zip(target)
            .map(|(p, q)| (sim.apply(p) - q).norm_squared())
            .sum::<f64>()
            / n)
            .sqrt()
    };

    if spread <= 1e-24 {
        let sim = Similarity {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: ct - cs,
        };
        let rms = rms_of(&sim);
        return Ok((sim, rms, true));
    }

    let mut best: Option<(Similarity, f64)> = None;
    for rot in axis_rotations() {
        let cross: f64 = source
            .iter()
            .zip(target)
            .map(|(p, q)| (rot * (p - cs)).dot(&(q - ct)))
            .sum();
        let scale = cross / spread;
        if scale <= 0.0 {
            continue;
        }
        let sim = Similarity {
            scale,
            rotation: rot,
            translation: ct - rot * cs * scale,
        };
        let rms = rms_of(&sim);
        let better = match &best {
            None => true,
            Some((_, r)) => rms < r - 1e-12,
        };
        if better {
            best = Some((sim, rms));
        }
    }
    match best {
        Some((sim, rms)) => Ok((sim, rms, false)),
        // Targets collapsed to a point: any positive scale is worse than none.
        None => {
            let sim = Similarity {
                scale: 1.0,
                rotation: Matrix3::identity(),
                translation: ct - cs,
            };
            let rms = rms_of(&sim);
            Ok((sim, rms, true))
        }
    }
}

/// Moves `mesh` by the similarity that best maps `source` support points
/// onto `target` points.
pub fn align_support_points(
    mesh: &Mesh,
    source: &[Vector3<f64>],
    target: &[Vector3<f64>],
) -> Result<Alignment, GeometryError> {
    let (transform, rms, rank_deficient) = fit_similarity(source, target)?;
    Ok(Alignment {
        mesh: mesh.similarity(transform.scale, &transform.rotation, &transform.translation),
        transform,
        rms,
        rank_deficient,
    })
}
