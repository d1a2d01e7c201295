use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dq::{DualQuaternion, Quaternion};
use crate::error::{CalibError, Result};
use crate::problem::{MotionPair, ScaledSensor, StateVector};

/// Description of a simulated two-sensor rig.
#[derive(Debug, Clone)]
pub struct RigSpec {
    /// Ground-truth calibration from the scaled sensor's frame to the other.
    pub calibration: DualQuaternion,
    /// One positive metric scale per sequence of the scaled sensor.
    pub scales: Vec<f64>,
    /// Motion pairs generated for each scale group.
    pub pairs_per_scale: Vec<usize>,
    /// Rotation angle per step, sampled uniformly from this range (radians).
    pub rotation_range: (f64, f64),
    /// Translation length per step, sampled uniformly from this range.
    pub translation_range: (f64, f64),
    pub scaled_sensor: ScaledSensor,
    pub seed: u64,
}

impl RigSpec {
    /// Rig with the given truth and `pairs` motions per scale group.
    pub fn new(calibration: DualQuaternion, scales: Vec<f64>, pairs: usize) -> Self {
        let groups = scales.len();
        RigSpec {
            calibration,
            scales,
            pairs_per_scale: vec![pairs; groups],
            rotation_range: (0.1, 0.8),
            translation_range: (0.1, 2.0),
            scaled_sensor: ScaledSensor::SensorB,
            seed: 0,
        }
    }

    /// Rig with a seed-derived random calibration, for randomized studies.
    pub fn sample(seed: u64, scales: Vec<f64>, pairs: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let rotation = random_unit_quaternion(&mut rng);
        let translation = random_unit_vector(&mut rng) * (0.05 + 0.5 * rng.random::<f64>());
        let calibration = DualQuaternion::from_pose(rotation, &translation).unwrap();
        let mut rig = RigSpec::new(calibration, scales, pairs);
        rig.seed = seed;
        rig
    }
}

/// Ground truth attached to a generated motion set.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub state: StateVector,
    pub calibration: DualQuaternion,
    pub scales: Vec<f64>,
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(std_normal(rng), std_normal(rng), std_normal(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn random_unit_quaternion(rng: &mut ChaCha8Rng) -> Quaternion {
    loop {
        let q = Quaternion::new(
            std_normal(rng),
            std_normal(rng),
            std_normal(rng),
            std_normal(rng),
        );
        if q.norm() > 1e-6 {
            return q.normalized().unwrap().canonicalized();
        }
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

/// Generates noise-free measured motion pairs for the rig.
///
/// Metric motions of the scaled sensor are sampled with uniformly random
/// rotation axes, then mapped through the calibration to the other sensor;
/// the scaled sensor reports its translation divided by the group's scale.
pub fn generate(rig: &RigSpec) -> Result<(Vec<MotionPair>, GroundTruth)> {
    if rig.scales.is_empty() || rig.scales.len() != rig.pairs_per_scale.len() {
        return Err(CalibError::InvalidParameter(
            "scales and pairs_per_scale must be nonempty and equally long".into(),
        ));
    }
    for &alpha in &rig.scales {
        if alpha <= 0.0 {
            return Err(CalibError::NonPositiveScale { alpha });
        }
    }
    if rig.rotation_range.0 < 0.0
        || rig.rotation_range.1 < rig.rotation_range.0
        || rig.translation_range.0 < 0.0
        || rig.translation_range.1 < rig.translation_range.0
    {
        return Err(CalibError::InvalidParameter("motion ranges must be ordered and nonnegative".into()));
    }

    let calib = rig.calibration.canonicalized();
    let mut rng = ChaCha8Rng::seed_from_u64(rig.seed);
    let mut pairs = Vec::new();
    for (j, (&alpha, &count)) in rig.scales.iter().zip(&rig.pairs_per_scale).enumerate() {
        for _ in 0..count {
            let axis = random_unit_vector(&mut rng);
            let angle = uniform_in(&mut rng, rig.rotation_range);
            let rotation = Quaternion::from_axis_angle(&axis, angle);
            let translation = random_unit_vector(&mut rng)
                * uniform_in(&mut rng, rig.translation_range);
            let metric = DualQuaternion::from_pose(rotation, &translation)?;
            let pair = match rig.scaled_sensor {
                ScaledSensor::SensorB => MotionPair {
                    motion_a: calib * metric * calib.conjugate(),
                    motion_b: metric.descale(alpha)?,
                    scale_index: j,
                },
                ScaledSensor::SensorA => MotionPair {
                    motion_a: metric.descale(alpha)?,
                    motion_b: calib.conjugate() * metric * calib,
                    scale_index: j,
                },
            };
            pairs.push(pair);
        }
    }
    let truth = GroundTruth {
        state: StateVector::from_pose_and_scales(&calib, &rig.scales),
        calibration: calib,
        scales: rig.scales.clone(),
    };
    Ok((pairs, truth))
}

/// Relative noise levels for the two sensors, each in [0, 1).
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub sensor_a: f64,
    pub sensor_b: f64,
}

impl NoiseSpec {
    pub fn new(sensor_a: f64, sensor_b: f64) -> Result<Self> {
        for p in [sensor_a, sensor_b] {
            if !(0.0..1.0).contains(&p) {
                return Err(CalibError::InvalidParameter(format!(
                    "noise level must lie in [0, 1), got {p}"
                )));
            }
        }
        Ok(NoiseSpec { sensor_a, sensor_b })
    }
}

/// Perturbs each motion with rotation and translation noise proportional to
/// its own magnitude: the rotation is post-multiplied by a random-axis
/// rotation with angle |N(0, (p * angle)^2)| and each translation component
/// receives N(0, (p * |t| / sqrt(3))^2).
pub fn add_noise(pairs: &[MotionPair], noise: &NoiseSpec, seed: u64) -> Result<Vec<MotionPair>> {
    NoiseSpec::new(noise.sensor_a, noise.sensor_b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs
        .iter()
        .map(|pair| {
            Ok(MotionPair {
                motion_a: perturb(&pair.motion_a, noise.sensor_a, &mut rng)?,
                motion_b: perturb(&pair.motion_b, noise.sensor_b, &mut rng)?,
                scale_index: pair.scale_index,
            })
        })
        .collect()
}

fn perturb(motion: &DualQuaternion, level: f64, rng: &mut ChaCha8Rng) -> Result<DualQuaternion> {
    let (rotation, translation) = motion.to_pose()?;
    if level == 0.0 {
        return Ok(*motion);
    }
    let angle_sigma = level * rotation.rotation_angle();
    let noise_angle = if angle_sigma > 0.0 {
        (std_normal(rng) * angle_sigma).abs()
    } else {
        0.0
    };
    let noisy_rotation = if noise_angle > 0.0 {
        let axis = random_unit_vector(rng);
        (rotation * Quaternion::from_axis_angle(&axis, noise_angle)).normalized()?
    } else {
        rotation
    };
    let sigma_t = level * translation.norm() / 3f64.sqrt();
    let mut noisy_translation = translation;
    if sigma_t > 0.0 {
        for i in 0..3 {
            noisy_translation[i] += std_normal(rng) * sigma_t;
        }
    }
    DualQuaternion::from_pose(noisy_rotation, &noisy_translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{
        accumulate_cost, build_motion_matrix, eval_all_constraints, ConstraintSet,
    };
    use approx::assert_relative_eq;

    fn test_rig() -> RigSpec {
        let calib = DualQuaternion::from_pose(
            Quaternion::from_axis_angle(&Vector3::new(0.0, 1.0, 0.0), 0.9),
            &Vector3::new(0.2, -0.1, 0.4),
        )
        .unwrap();
        let mut rig = RigSpec::new(calib, vec![10.0], 50);
        rig.seed = 7;
        rig
    }

    #[test]
    fn unit_scale_makes_both_sensors_agree_up_to_the_calibration() {
        let mut rig = test_rig();
        rig.scales = vec![1.0];
        rig.pairs_per_scale = vec![20];
        let (pairs, truth) = generate(&rig).unwrap();
        for pair in &pairs {
            // alpha = 1: measured motion b equals the metric motion, so the
            // cycle closes without any rescaling.
            let cycle = truth.calibration * pair.motion_b * truth.calibration.conjugate();
            let diff = (cycle.canonicalized().real - pair.motion_a.canonicalized().real).norm()
                + (cycle.canonicalized().dual - pair.motion_a.canonicalized().dual).norm();
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn truth_annihilates_every_generated_pair() {
        for scaled in [ScaledSensor::SensorB, ScaledSensor::SensorA] {
            let mut rig = RigSpec::sample(99, vec![10.0, 0.5, 3.0], 15);
            rig.scaled_sensor = scaled;
            let (pairs, truth) = generate(&rig).unwrap();
            assert_eq!(pairs.len(), 45);
            for pair in &pairs {
                let m = build_motion_matrix(pair, 3, scaled).unwrap();
                assert!((m * truth.state.as_vector()).amax() < 1e-12);
            }
            let problem = accumulate_cost(&pairs, 3, scaled, ConstraintSet::Full6).unwrap();
            assert!(problem.cost(&truth.state).unwrap().abs() < 1e-10);
            assert!(eval_all_constraints(&truth.state, ConstraintSet::Full6).amax() < 1e-12);
            assert!(problem.warnings().is_empty());
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let rig = test_rig();
        let (pairs1, _) = generate(&rig).unwrap();
        let (pairs2, _) = generate(&rig).unwrap();
        for (p1, p2) in pairs1.iter().zip(&pairs2) {
            assert_eq!(p1.motion_a.to_coeffs(), p2.motion_a.to_coeffs());
            assert_eq!(p1.motion_b.to_coeffs(), p2.motion_b.to_coeffs());
        }
        let mut other = test_rig();
        other.seed = 8;
        let (pairs3, _) = generate(&other).unwrap();
        assert_ne!(pairs1[0].motion_a.to_coeffs(), pairs3[0].motion_a.to_coeffs());
    }

    #[test]
    fn measured_translations_shrink_by_the_scale() {
        let rig = test_rig();
        let (pairs, truth) = generate(&rig).unwrap();
        let calib = truth.calibration;
        for pair in &pairs {
            let metric = calib.conjugate() * pair.motion_a * calib;
            let ratio = metric.translation().norm() / pair.motion_b.translation().norm();
            assert_relative_eq!(ratio, 10.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn invalid_rigs_are_rejected() {
        let mut rig = test_rig();
        rig.scales = vec![-1.0];
        assert!(matches!(generate(&rig), Err(CalibError::NonPositiveScale { .. })));
        let mut rig = test_rig();
        rig.pairs_per_scale = vec![];
        assert!(generate(&rig).is_err());
        let mut rig = test_rig();
        rig.rotation_range = (0.5, 0.1);
        assert!(generate(&rig).is_err());
        assert!(NoiseSpec::new(-0.1, 0.0).is_err());
        assert!(NoiseSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn zero_noise_is_the_identity() {
        let rig = test_rig();
        let (pairs, _) = generate(&rig).unwrap();
        let noisy = add_noise(&pairs, &NoiseSpec { sensor_a: 0.0, sensor_b: 0.0 }, 3).unwrap();
        for (p, n) in pairs.iter().zip(&noisy) {
            assert_eq!(p.motion_a.to_coeffs(), n.motion_a.to_coeffs());
            assert_eq!(p.motion_b.to_coeffs(), n.motion_b.to_coeffs());
        }
    }

    #[test]
    fn noise_is_deterministic_and_seed_sensitive() {
        let rig = test_rig();
        let (pairs, _) = generate(&rig).unwrap();
        let spec = NoiseSpec { sensor_a: 0.05, sensor_b: 0.05 };
        let n1 = add_noise(&pairs, &spec, 3).unwrap();
        let n2 = add_noise(&pairs, &spec, 3).unwrap();
        let n3 = add_noise(&pairs, &spec, 4).unwrap();
        assert_eq!(n1[0].motion_a.to_coeffs(), n2[0].motion_a.to_coeffs());
        assert_ne!(n1[0].motion_a.to_coeffs(), n3[0].motion_a.to_coeffs());
        for n in &n1 {
            assert!(n.motion_a.is_unit());
            assert!(n.motion_b.is_unit());
        }
    }

    #[test]
    fn rotation_noise_magnitude_follows_the_folded_gaussian_mean() {
        let calib = DualQuaternion::IDENTITY;
        let mut rig = RigSpec::new(calib, vec![1.0], 20000);
        rig.rotation_range = (0.5, 0.5);
        rig.seed = 13;
        let (pairs, _) = generate(&rig).unwrap();
        let level = 0.1;
        let noisy =
            add_noise(&pairs, &NoiseSpec { sensor_a: level, sensor_b: 0.0 }, 17).unwrap();
        let mean: f64 = pairs
            .iter()
            .zip(&noisy)
            .map(|(p, n)| {
                (p.motion_a.real.conjugate() * n.motion_a.real).rotation_angle()
            })
            .sum::<f64>()
            / pairs.len() as f64;
        // E |N(0, sigma)| = sigma * sqrt(2 / pi) with sigma = level * angle.
        let expected = level * 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        assert_relative_eq!(mean, expected, max_relative = 0.05);
    }

    #[test]
    fn translation_noise_is_relative_per_axis() {
        let calib = DualQuaternion::IDENTITY;
        let mut rig = RigSpec::new(calib, vec![1.0], 20000);
        rig.translation_range = (1.5, 1.5);
        rig.seed = 29;
        let (pairs, _) = generate(&rig).unwrap();
        let level = 0.2;
        let noisy =
            add_noise(&pairs, &NoiseSpec { sensor_a: 0.0, sensor_b: level }, 31).unwrap();
        let mean_sq: f64 = pairs
            .iter()
            .zip(&noisy)
            .map(|(p, n)| (p.motion_b.translation() - n.motion_b.translation()).norm_squared())
            .sum::<f64>()
            / pairs.len() as f64;
        // Three axes, each with variance (level * |t| / sqrt(3))^2.
        let expected = (level * 1.5).powi(2);
        assert_relative_eq!(mean_sq, expected, max_relative = 0.05);
    }
}
