use crate::dq::DualQuaternion;
use crate::error::{CalibError, Result};

/// Errors of an estimated calibration against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Geodesic rotation error in radians.
    pub rotation_rad: f64,
    /// Euclidean norm of the translation of the error motion.
    pub translation: f64,
    /// Absolute scale errors, one per scale group.
    pub scale: Vec<f64>,
}

impl ErrorReport {
    pub fn rotation_deg(&self) -> f64 {
        self.rotation_rad.to_degrees()
    }
}

/// Compares an estimated (pose, scales) against the reference pair.
///
/// Both poses must be unit dual quaternions; the comparison is insensitive
/// to their sign. The rotation error is the angle of the relative rotation,
/// the translation error the translation of the relative motion.
pub fn calibration_errors(
    est_pose: &DualQuaternion,
    est_scales: &[f64],
    ref_pose: &DualQuaternion,
    ref_scales: &[f64],
) -> Result<ErrorReport> {
    if est_scales.len() != ref_scales.len() {
        return Err(CalibError::ScaleCountMismatch {
            expected: ref_scales.len(),
            got: est_scales.len(),
        });
    }
    for pose in [est_pose, ref_pose] {
        let norm = pose.real.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(CalibError::NonUnitRotation { norm });
        }
    }
    let error_motion = (ref_pose.conjugate() * *est_pose).canonicalized();
    let w = (error_motion.real.w / error_motion.real.norm()).clamp(-1.0, 1.0);
    let rotation_rad = 2.0 * w.acos();
    let translation = error_motion.translation().norm();
    let scale = est_scales
        .iter()
        .zip(ref_scales)
        .map(|(e, r)| (e - r).abs())
        .collect();
    Ok(ErrorReport { rotation_rad, translation, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::Quaternion;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> DualQuaternion {
        let q = loop {
            let q = Quaternion::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            );
            if q.norm() > 1e-2 {
                break q.normalized().unwrap();
            }
        };
        let t = Vector3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        DualQuaternion::from_pose(q, &t).unwrap()
    }

    /// Rotation angle through the trace of the rotation matrix, built from
    /// rotated basis vectors rather than quaternion components.
    fn trace_angle(q: &Quaternion) -> f64 {
        let mut r = Matrix3::zeros();
        for i in 0..3 {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            r.set_column(i, &q.rotate_vector(&e));
        }
        (((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
    }

    #[test]
    fn identical_poses_have_zero_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let pose = random_pose(&mut rng);
        let report = calibration_errors(&pose, &[10.0], &pose, &[10.0]).unwrap();
        assert!(report.rotation_rad < 1e-9);
        assert!(report.translation < 1e-9);
        assert_eq!(report.scale, vec![0.0]);
    }

    #[test]
    fn pure_rotation_offset_is_measured_exactly() {
        let base = DualQuaternion::IDENTITY;
        let offset = DualQuaternion::from_pose(
            Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), 0.25),
            &Vector3::zeros(),
        )
        .unwrap();
        let report = calibration_errors(&offset, &[], &base, &[]).unwrap();
        assert_relative_eq!(report.rotation_rad, 0.25, epsilon = 1e-12);
        assert!(report.translation < 1e-12);
    }

    #[test]
    fn pure_translation_offset_is_measured_exactly() {
        let base = DualQuaternion::IDENTITY;
        let t = Vector3::new(0.03, -0.04, 0.12);
        let offset = DualQuaternion::from_pose(Quaternion::IDENTITY, &t).unwrap();
        let report = calibration_errors(&offset, &[], &base, &[]).unwrap();
        assert!(report.rotation_rad < 1e-12);
        assert_relative_eq!(report.translation, t.norm(), epsilon = 1e-12);
    }

    #[test]
    fn scale_errors_are_componentwise_absolute_differences() {
        let pose = DualQuaternion::IDENTITY;
        let report =
            calibration_errors(&pose, &[9.5, 2.0], &pose, &[10.0, 2.25]).unwrap();
        assert_relative_eq!(report.scale[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(report.scale[1], 0.25, epsilon = 1e-15);
        assert!(matches!(
            calibration_errors(&pose, &[1.0], &pose, &[1.0, 2.0]),
            Err(CalibError::ScaleCountMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn rotation_error_matches_the_trace_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let report = calibration_errors(&a, &[], &b, &[]).unwrap();
            let expected = trace_angle(&(b.real.conjugate() * a.real));
            assert_relative_eq!(report.rotation_rad, expected, epsilon = 1e-7);
        }
    }

    #[test]
    fn errors_are_insensitive_to_quaternion_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let a = random_pose(&mut rng);
        let b = random_pose(&mut rng);
        let flipped =
            DualQuaternion::from_parts(-a.real, -a.dual);
        let r1 = calibration_errors(&a, &[], &b, &[]).unwrap();
        let r2 = calibration_errors(&flipped, &[], &b, &[]).unwrap();
        assert_relative_eq!(r1.rotation_rad, r2.rotation_rad, epsilon = 1e-12);
        assert_relative_eq!(r1.translation, r2.translation, epsilon = 1e-12);
    }

    #[test]
    fn error_is_nearly_symmetric_in_its_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let r1 = calibration_errors(&a, &[], &b, &[]).unwrap();
            let r2 = calibration_errors(&b, &[], &a, &[]).unwrap();
            assert_relative_eq!(r1.rotation_rad, r2.rotation_rad, epsilon = 1e-9);
            assert_relative_eq!(r1.translation, r2.translation, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_unit_poses_are_rejected() {
        let bad = DualQuaternion::from_parts(
            Quaternion::new(1.2, 0.0, 0.0, 0.0),
            Quaternion::ZERO,
        );
        assert!(matches!(
            calibration_errors(&bad, &[], &DualQuaternion::IDENTITY, &[]),
            Err(CalibError::NonUnitRotation { .. })
        ));
    }

    #[test]
    fn degrees_conversion() {
        let report = ErrorReport {
            rotation_rad: std::f64::consts::PI / 2.0,
            translation: 0.0,
            scale: vec![],
        };
        assert_relative_eq!(report.rotation_deg(), 90.0, epsilon = 1e-12);
    }
}
