use nalgebra::{Isometry3, Vector3};
use serde::{Deserialize, Serialize};

/// Axis-aligned bounding box in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    /// Box from two corners; panics if `min > max` on any axis.
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Self {
        assert!(
            (0..3).all(|i| min[i] <= max[i]),
            "Aabb min {min:?} exceeds max {max:?}"
        );
        Self { min, max }
    }

    pub fn try_new(min: Vector3<f64>, max: Vector3<f64>) -> Option<Self> {
        (0..3).all(|i| min[i] <= max[i]).then_some(Self { min, max })
    }

    pub fn from_center_extent(center: Vector3<f64>, extent: Vector3<f64>) -> Self {
        let half = extent * 0.5;
        Self::new(center - half, center + half)
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut min, mut max) = (first, first);
        for p in it {
            min = min.inf(p);
            max = max.sup(p);
        }
        Some(Self { min, max })
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|i| self.min[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflate(&self, margin: f64) -> Aabb {
        let m = Vector3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn contains_point(&self, p: &Vector3<f64>, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    pub fn contains_box(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] - tol && other.max[i] <= self.max[i] + tol)
    }

    /// Overlap length along `axis` (negative when separated).
    pub fn overlap_on(&self, other: &Aabb, axis: usize) -> f64 {
        self.max[axis].min(other.max[axis]) - self.min[axis].max(other.min[axis])
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let mut out = [Vector3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vector3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            );
        }
        out
    }

    /// Bounds of the transformed box (axis-aligned in the target frame).
    pub fn transformed(&self, pose: &Isometry3<f64>) -> Aabb {
        let pts: Vec<Vector3<f64>> = self
            .corners()
            .iter()
            .map(|c| pose.transform_vector(c) + pose.translation.vector)
            .collect();
        Aabb::from_points(&pts).expect("eight corners")
    }

    pub fn translated(&self, by: &Vector3<f64>) -> Aabb {
        Aabb {
            min: self.min + by,
            max: self.max + by,
        }
    }
}
