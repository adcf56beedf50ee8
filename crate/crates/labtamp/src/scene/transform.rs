use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid pose: orthonormal rotation plus translation in meters.
///
/// `compose` follows matrix-product order: `a.compose(&b)` applies `b`
/// first, then `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

/// Wire form of a pose: `{"xyz": [m,m,m], "rpy": [rad,rad,rad]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseWire {
    xyz: [f64; 3],
    rpy: [f64; 3],
}

impl Serialize for Transform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (r, p, y) = self.rotation.euler_angles();
        PoseWire {
            xyz: [self.translation.x, self.translation.y, self.translation.z],
            rpy: [r, p, y],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = PoseWire::deserialize(deserializer)?;
        Ok(Transform::from_xyz_rpy(w.xyz, w.rpy))
    }
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Transform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Transform {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    /// Pose from position and roll/pitch/yaw (R = Rz(yaw)·Ry(pitch)·Rx(roll)).
    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Transform {
            rotation: Rotation3::from_euler_angles(rpy[0], rpy[1], rpy[2]),
            translation: Vector3::new(xyz[0], xyz[1], xyz[2]),
        }
    }

    /// Roll/pitch/yaw of the rotation part.
    pub fn rpy(&self) -> (f64, f64, f64) {
        self.rotation.euler_angles()
    }

    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rot_inv = self.rotation.inverse();
        Transform {
            rotation: rot_inv,
            translation: -(rot_inv * self.translation),
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation * p
    }

    /// Euclidean distance between the two translations [m].
    pub fn translation_distance(&self, other: &Transform) -> f64 {
        (self.translation - other.translation).norm()
    }

    /// Angle of the relative rotation [rad].
    pub fn rotation_distance(&self, other: &Transform) -> f64 {
        (self.rotation * other.rotation.inverse()).angle()
    }

    /// Deviation from a proper rotation: max of ‖RᵀR − I‖∞ and |det R − 1|.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.rotation.matrix();
        let gram = m.transpose() * m - Matrix3::identity();
        let det_defect = (m.determinant() - 1.0).abs();
        gram.iter().fold(det_defect, |acc, v| acc.max(v.abs()))
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample() -> Transform {
        Transform::from_xyz_rpy([0.3, -0.2, 0.5], [0.4, -0.7, 1.2])
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = sample();
        let id = t.compose(&t.inverse());
        assert!(id.translation.norm() < 1e-9);
        assert!(id.rotation.angle() < 1e-9);
    }

    #[test]
    fn composition_is_associative() {
        let a = sample();
        let b = Transform::from_xyz_rpy([0.1, 0.0, -0.4], [-0.2, 0.3, 0.0]);
        let c = Transform::from_xyz_rpy([0.0, 0.9, 0.2], [1.0, 0.0, -0.5]);
        let lhs = a.compose(&b).compose(&c);
        let rhs = a.compose(&b.compose(&c));
        assert!(lhs.translation_distance(&rhs) < 1e-12);
        assert!(lhs.rotation_distance(&rhs) < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal() {
        assert!(sample().orthonormality_defect() < 1e-9);
    }

    #[test]
    fn rpy_round_trip() {
        let (r, p, y) = sample().rpy();
        assert_abs_diff_eq!(r, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(p, -0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(y, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI);
        assert_abs_diff_eq!(wrap_angle(-0.1), -0.1, epsilon = 1e-15);
        assert!(wrap_angle(7.0) <= std::f64::consts::PI);
        assert!(wrap_angle(-7.0) > -std::f64::consts::PI);
    }
}
