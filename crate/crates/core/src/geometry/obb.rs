use nalgebra::{Isometry3, Matrix3, Vector3};

use super::Aabb;

/// Oriented box: a link-frame AABB carried into the world by a rigid pose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vector3<f64>,
    /// Columns are the box axes (unit length).
    pub axes: Matrix3<f64>,
    pub half: Vector3<f64>,
}

impl Obb {
    pub fn from_aabb(local: &Aabb, pose: &Isometry3<f64>) -> Self {
        let rot = pose.rotation.to_rotation_matrix().into_inner();
        Obb {
            center: pose.rotation * local.center() + pose.translation.vector,
            axes: rot,
            half: local.extent() * 0.5,
        }
    }

    fn radius_along(&self, axis: &Vector3<f64>) -> f64 {
        (0..3)
            .map(|i| self.half[i] * self.axes.column(i).dot(axis).abs())
            .sum()
    }

    /// Smallest overlap over the separating-axis candidates (face normals of
    /// both boxes and their edge cross products). Positive values are an
    /// interpenetration depth; zero or negative means touching or apart.
    pub fn penetration(&self, other: &Obb) -> f64 {
        let t = other.center - self.center;
        let mut best = f64::INFINITY;
        let mut test = |axis: Vector3<f64>| {
            let overlap = self.radius_along(&axis) + other.radius_along(&axis) - t.dot(&axis).abs();
            if overlap < best {
                best = overlap;
            }
        };
        for i in 0..3 {
            test(self.axes.column(i).into_owned());
            test(other.axes.column(i).into_owned());
        }
        for i in 0..3 {
            for j in 0..3 {
                let c = self.axes.column(i).cross(&other.axes.column(j));
                let n = c.norm();
                if n > 1e-9 {
                    test(c / n);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Translation3, UnitQuaternion};

    fn cube(c: Vector3<f64>) -> Aabb {
        Aabb::from_center_extent(c, Vector3::repeat(1.0))
    }

    #[test]
    fn axis_aligned_overlap_depth() {
        let a = Obb::from_aabb(&cube(Vector3::zeros()), &Isometry3::identity());
        let b = Obb::from_aabb(&cube(Vector3::new(0.75, 0.0, 0.0)), &Isometry3::identity());
        assert!((a.penetration(&b) - 0.25).abs() < 1e-12);
        let touching = Obb::from_aabb(&cube(Vector3::new(1.0, 0.3, 0.0)), &Isometry3::identity());
        assert!(a.penetration(&touching).abs() < 1e-12);
    }

    #[test]
    fn rotated_box_separation() {
        let a = Obb::from_aabb(&cube(Vector3::zeros()), &Isometry3::identity());
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_4);
        // Rotated cube's corner reaches sqrt(2)/2 along x.
        let pose = Isometry3::from_parts(Translation3::new(1.25, 0.0, 0.0), rot);
        let b = Obb::from_aabb(&cube(Vector3::zeros()), &pose);
        assert!(a.penetration(&b) < 0.0);
        let pose = Isometry3::from_parts(Translation3::new(1.1, 0.0, 0.0), rot);
        let b = Obb::from_aabb(&cube(Vector3::zeros()), &pose);
        let expected = 0.5 + 0.5f64.sqrt() - 1.1;
        assert!((a.penetration(&b) - expected).abs() < 1e-12);
    }
}
