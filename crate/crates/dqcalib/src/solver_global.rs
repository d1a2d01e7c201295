use nalgebra::{DMatrix, DVector};

use crate::error::{CalibError, Result};
use crate::problem::{
    accumulate_cost, assemble_z, constraint_matrices, CalibrationProblem, ConstraintMatrices,
    ConstraintSet, MotionPair, ScaledSensor, StateVector,
};

/// Settings of the dual interior-point solver and the primal recovery.
#[derive(Debug, Clone)]
pub struct SdpSettings {
    /// Initial barrier weight on the normalized problem.
    pub barrier_init: f64,
    /// Multiplicative decrease of the barrier weight per outer stage.
    pub barrier_decay: f64,
    /// Newton decrement target per stage, relative to 1 + |dual value|.
    pub newton_tol: f64,
    /// Duality-measure target mu * dim, relative to 1 + |dual value|.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Null-space eigenvalue floor, relative to the mean absolute eigenvalue.
    pub nullspace_abs_tol: f64,
    /// Minimum ratio between the second smallest and smallest eigenvalue.
    pub nullspace_ratio: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            barrier_init: 1.0,
            barrier_decay: 0.2,
            newton_tol: 1e-12,
            outer_tol: 1e-10,
            max_outer: 60,
            max_newton: 50,
            nullspace_abs_tol: 1e-6,
            nullspace_ratio: 1e4,
        }
    }
}

impl SdpSettings {
    fn validate(&self) -> Result<()> {
        if self.barrier_init <= 0.0
            || !(0.0..1.0).contains(&self.barrier_decay)
            || self.barrier_decay == 0.0
            || self.newton_tol <= 0.0
            || self.outer_tol <= 0.0
            || self.max_outer == 0
            || self.max_newton == 0
            || self.nullspace_abs_tol <= 0.0
            || self.nullspace_ratio <= 1.0
        {
            return Err(CalibError::InvalidParameter(
                "SDP settings require positive tolerances, barrier_decay in (0, 1), \
                 and nullspace_ratio > 1"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Dual value after one barrier stage.
#[derive(Debug, Clone, Copy)]
pub struct OuterIterate {
    pub mu: f64,
    pub dual_value: f64,
}

/// Multipliers maximizing the dual, with the path that led there.
#[derive(Debug, Clone)]
pub struct DualSolveOutcome {
    pub lambda: DVector<f64>,
    /// Optimal dual value; a lower bound on every feasible cost.
    pub dual_value: f64,
    pub outer_iterations: usize,
    pub trace: Vec<OuterIterate>,
}

/// Globally optimal solution recovered from the dual optimum.
#[derive(Debug, Clone)]
pub struct GlobalSolution {
    pub state: StateVector,
    pub lambda: DVector<f64>,
    pub dual_value: f64,
    pub cost: f64,
    /// Cost minus dual value; certifies optimality when small.
    pub gap: f64,
    /// Dimension of the null space of Z at the dual optimum: 1 generically,
    /// 2 when the measurements are exact (the degenerate direction is then
    /// removed algebraically).
    pub nullspace_dim: usize,
    /// Ratio between the second smallest and smallest eigenvalue of Z.
    pub spectrum_gap: f64,
    pub outer_iterations: usize,
}

/// Diagonal lift on the normalized cost inside the dual solve. Exact
/// measurements leave the feasible cone with an empty interior (one
/// direction of Z is pinned at zero for every multiplier), which a barrier
/// method cannot enter; the lift restores a strict interior and biases the
/// dual value by a quantity far below the reported-gap tolerances.
const DUAL_INTERIOR_MARGIN: f64 = 1e-12;

/// Maximizes the dual lambda_1 subject to Z(lambda) >= 0 with a log-det
/// barrier on the normalized cost, following the central path.
pub fn solve_dual(
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
    settings: &SdpSettings,
) -> Result<DualSolveOutcome> {
    settings.validate()?;
    check_compatible(problem, constraints)?;
    let dim = problem.dim();
    let nc = constraints.count();

    let mut scale = problem.q().trace() / dim as f64;
    if !(scale > 1e-300) {
        scale = 1.0;
    }
    let mut q_hat = problem.q() / scale;
    for i in 0..dim {
        q_hat[(i, i)] += DUAL_INTERIOR_MARGIN;
    }

    let mut lambda = strictly_feasible_start(&q_hat, constraints)?;
    let mut mu = settings.barrier_init;
    let mut trace = Vec::new();
    let mut outer = 0;
    loop {
        outer += 1;
        newton_stage(&q_hat, constraints, &mut lambda, mu, settings)?;
        trace.push(OuterIterate { mu, dual_value: lambda[0] * scale });
        if mu * dim as f64 <= settings.outer_tol * (1.0 + lambda[0].abs()) {
            break;
        }
        if outer >= settings.max_outer {
            break;
        }
        mu *= settings.barrier_decay;
    }

    let lambda_unscaled = DVector::from_iterator(nc, lambda.iter().map(|l| l * scale));
    let dual_value = lambda_unscaled[0];
    Ok(DualSolveOutcome { lambda: lambda_unscaled, dual_value, outer_iterations: outer, trace })
}

/// Reads the primal solution off the one-dimensional null space of Z at the
/// dual optimum.
pub fn recover_primal(
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
    outcome: &DualSolveOutcome,
    settings: &SdpSettings,
) -> Result<GlobalSolution> {
    settings.validate()?;
    check_compatible(problem, constraints)?;
    let dim = problem.dim();
    let z = assemble_z(problem.q(), constraints, &outcome.lambda)?;
    let eig = nalgebra::SymmetricEigen::new(z);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mean_abs = sorted.iter().map(|e| e.abs()).sum::<f64>() / dim as f64;
    let floor = settings.nullspace_abs_tol * mean_abs.max(1e-300);
    if sorted[0] < -floor {
        return Err(CalibError::IllConditioned {
            message: format!(
                "Z at the dual optimum is not positive semidefinite (min eigenvalue {:.3e})",
                sorted[0]
            ),
        });
    }
    let null_count = sorted.iter().filter(|e| e.abs() <= floor).count();
    let spectrum: Vec<f64> = sorted.iter().take(6).copied().collect();
    let (v, nullspace_dim, spectrum_gap) = match null_count {
        1 => {
            let gap = sorted[1] / sorted[0].abs().max(1e-300);
            if gap < settings.nullspace_ratio {
                return Err(CalibError::NullSpaceDimension { dim: 2, spectrum });
            }
            (eig.eigenvectors.column(order[0]).into_owned(), 1, gap)
        }
        2 => {
            // Exact measurements make the quadratic form degenerate: a
            // vector with zero rotation and scale blocks and the rotation in
            // the translation slot annihilates the cost and every constraint
            // form, so a second null direction appears. The true state is
            // orthogonal to it (that is the rotation-translation coupling
            // constraint), so the pair separates exactly: the solution is
            // the combination carrying all the rotation-block mass.
            let gap = sorted[2] / sorted[1].abs().max(1e-300);
            if gap < settings.nullspace_ratio {
                return Err(CalibError::NullSpaceDimension { dim: null_count, spectrum });
            }
            let v1 = eig.eigenvectors.column(order[0]).into_owned();
            let v2 = eig.eigenvectors.column(order[1]).into_owned();
            let r1 = v1.rows(0, 4).into_owned();
            let r2 = v2.rows(0, 4).into_owned();
            let (g11, g12, g22) = (r1.dot(&r1), r1.dot(&r2), r2.dot(&r2));
            let half_tr = 0.5 * (g11 + g22);
            let disc = (half_tr * half_tr - (g11 * g22 - g12 * g12)).max(0.0).sqrt();
            let (lo, hi) = (half_tr - disc, half_tr + disc);
            if lo > 1e-8 * hi.max(1e-300) {
                // Both directions carry rotation mass: a different, genuinely
                // ambiguous degeneracy that cannot be resolved.
                return Err(CalibError::NullSpaceDimension { dim: null_count, spectrum });
            }
            let w = {
                let a = nalgebra::Vector2::new(g12, hi - g11);
                let b = nalgebra::Vector2::new(hi - g22, g12);
                let best = if a.norm() >= b.norm() { a } else { b };
                if best.norm() > 1e-30 * hi.max(1e-300) {
                    best
                } else if g11 >= g22 {
                    nalgebra::Vector2::new(1.0, 0.0)
                } else {
                    nalgebra::Vector2::new(0.0, 1.0)
                }
            };
            (v1 * w[0] + v2 * w[1], 2, gap)
        }
        dim => return Err(CalibError::NullSpaceDimension { dim, spectrum }),
    };
    let rotation_norm = v.rows(0, 4).norm();
    if rotation_norm < 1e-8 {
        return Err(CalibError::DegenerateNullVector { rotation_norm });
    }
    let x = StateVector::from_vector(v / rotation_norm, problem.num_scales())
        .expect("eigenvector has problem dimension")
        .canonicalized();

    let misfit = constraints.eval(x.as_vector()).amax();
    if misfit > 1e-4 {
        return Err(CalibError::ConstraintViolation { misfit });
    }

    let cost = problem.cost(&x)?;
    Ok(GlobalSolution {
        state: x,
        lambda: outcome.lambda.clone(),
        dual_value: outcome.dual_value,
        cost,
        gap: cost - outcome.dual_value,
        nullspace_dim,
        spectrum_gap,
        outer_iterations: outcome.outer_iterations,
    })
}

/// Assembles the problem, solves the dual, and recovers the primal point.
pub fn solve_global(
    pairs: &[MotionPair],
    m: usize,
    scaled: ScaledSensor,
    set: ConstraintSet,
    settings: &SdpSettings,
) -> Result<GlobalSolution> {
    let problem = accumulate_cost(pairs, m, scaled, set)?;
    let constraints = constraint_matrices(m, set);
    let outcome = solve_dual(&problem, &constraints, settings)?;
    recover_primal(&problem, &constraints, &outcome, settings)
}

fn check_compatible(problem: &CalibrationProblem, constraints: &ConstraintMatrices) -> Result<()> {
    if constraints.dim() != problem.dim()
        || constraints.num_scales() != problem.num_scales()
        || constraints.set() != problem.constraint_set()
    {
        return Err(CalibError::DimensionMismatch {
            expected: problem.dim(),
            got: constraints.dim(),
        });
    }
    Ok(())
}

/// Log-determinant of a symmetric matrix when it is positive definite.
fn try_logdet(z: &DMatrix<f64>) -> Option<f64> {
    let chol = z.clone().cholesky()?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// Searches lambda = (-t, 0, .., 0) for a strictly feasible dual point; the
/// first constraint matrix adds t * I on the rotation block, which makes
/// Z positive definite unless the data leaves scale or dual directions
/// completely unconstrained.
fn strictly_feasible_start(
    q_hat: &DMatrix<f64>,
    constraints: &ConstraintMatrices,
) -> Result<DVector<f64>> {
    let nc = constraints.count();
    let mut t = 1e-3;
    while t <= 1e7 {
        let mut lambda = DVector::zeros(nc);
        lambda[0] = -t;
        let z = assemble_z(q_hat, constraints, &lambda).expect("dimensions checked");
        if try_logdet(&z).is_some() {
            return Ok(lambda);
        }
        t *= 10.0;
    }
    Err(CalibError::IllConditioned {
        message: "the dual has no strictly feasible point; the motions do not \
                  constrain every scale and translation direction"
            .into(),
    })
}

/// Damped Newton ascent on lambda_1 + mu * logdet Z(lambda) at fixed mu.
fn newton_stage(
    q_hat: &DMatrix<f64>,
    constraints: &ConstraintMatrices,
    lambda: &mut DVector<f64>,
    mu: f64,
    settings: &SdpSettings,
) -> Result<()> {
    let nc = constraints.count();
    for _ in 0..settings.max_newton {
        let z = assemble_z(q_hat, constraints, lambda)?;
        let chol = z.clone().cholesky().ok_or_else(|| CalibError::IllConditioned {
            message: "barrier iterate left the positive definite cone".into(),
        })?;
        let z_inv = chol.inverse();

        let w: Vec<DMatrix<f64>> =
            constraints.matrices().iter().map(|p| &z_inv * p).collect();
        let mut grad = DVector::zeros(nc);
        grad[0] = 1.0;
        for (i, wi) in w.iter().enumerate() {
            grad[i] += mu * wi.trace();
        }
        let mut hess = DMatrix::zeros(nc, nc);
        for i in 0..nc {
            for j in i..nc {
                let mut acc = 0.0;
                for a in 0..w[i].nrows() {
                    for b in 0..w[i].ncols() {
                        acc += w[i][(a, b)] * w[j][(b, a)];
                    }
                }
                hess[(i, j)] = mu * acc;
                hess[(j, i)] = mu * acc;
            }
        }

        let step = solve_spd(&hess, &grad).ok_or_else(|| CalibError::IllConditioned {
            message: "barrier Hessian could not be factorized".into(),
        })?;
        let decrement_sq = grad.dot(&step);
        if decrement_sq * 0.5 <= settings.newton_tol * (1.0 + lambda[0].abs()) {
            return Ok(());
        }

        let f_current = lambda[0] + mu * try_logdet(&z).expect("factorized above");
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-14 {
            let candidate = &*lambda + &step * t;
            let z_c = assemble_z(q_hat, constraints, &candidate)?;
            if let Some(logdet) = try_logdet(&z_c) {
                let f_c = candidate[0] + mu * logdet;
                if f_c >= f_current + 0.25 * t * decrement_sq {
                    *lambda = candidate;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // No further progress at this barrier weight.
            return Ok(());
        }
    }
    Ok(())
}

/// Solves a symmetric positive definite system, with a jitter fallback.
fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Some(chol.solve(b));
    }
    let mut jitter = 1e-14 * (1.0 + a.trace().abs());
    for _ in 0..8 {
        let mut reg = a.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += jitter;
        }
        if let Some(chol) = reg.cholesky() {
            return Some(chol.solve(b));
        }
        jitter *= 100.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::{DualQuaternion, Quaternion};
    use crate::problem::extract_calibration;
    use crate::solver_fast::{solve_sqp, SqpSettings};
    use crate::synth::{add_noise, generate, NoiseSpec, RigSpec};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    #[test]
    fn noise_free_dual_value_is_zero_and_truth_is_recovered() {
        let rig = RigSpec::sample(101, vec![10.0], 100);
        let (pairs, truth) = generate(&rig).unwrap();
        let solution = solve_global(
            &pairs,
            1,
            ScaledSensor::SensorB,
            ConstraintSet::Reduced3,
            &SdpSettings::default(),
        )
        .unwrap();
        let trace_q = accumulate_cost(&pairs, 1, ScaledSensor::SensorB, ConstraintSet::Reduced3)
            .unwrap()
            .q()
            .trace();
        assert!(solution.dual_value.abs() <= 1e-8 * (1.0 + trace_q));
        assert!(solution.gap.abs() <= 1e-6 * (1.0 + solution.cost.abs()));
        let diff = solution.state.as_vector() - truth.state.canonicalized().as_vector();
        assert!(diff.amax() < 1e-6, "state error {}", diff.amax());
        let calib = extract_calibration(&solution.state).unwrap();
        assert_relative_eq!(calib.alphas[0], 10.0, max_relative = 1e-6);
    }

    #[test]
    fn global_matches_local_solver_on_noisy_data() {
        let rig = RigSpec::sample(202, vec![10.0], 100);
        let (clean, _) = generate(&rig).unwrap();
        let pairs =
            add_noise(&clean, &NoiseSpec { sensor_a: 0.05, sensor_b: 0.05 }, 5).unwrap();
        let problem =
            accumulate_cost(&pairs, 1, ScaledSensor::SensorB, ConstraintSet::Reduced3).unwrap();
        let constraints = problem.constraint_matrices();
        let local = solve_sqp(&problem, &constraints, &SqpSettings::default()).unwrap();
        let outcome = solve_dual(&problem, &constraints, &SdpSettings::default()).unwrap();
        let global = recover_primal(&problem, &constraints, &outcome, &SdpSettings::default())
            .unwrap();
        assert!(
            (global.cost - local.cost).abs() <= 1e-6 * (1.0 + local.cost.abs()),
            "global {} local {}",
            global.cost,
            local.cost
        );
        let diff = global.state.as_vector() - local.state.as_vector();
        assert!(diff.amax() < 1e-4, "state gap {}", diff.amax());
        // Weak duality along the whole path, and a tight gap at the end.
        for it in &outcome.trace {
            assert!(it.dual_value <= local.cost + 1e-6 * (1.0 + local.cost.abs()));
        }
        assert!(global.gap >= -1e-6 * (1.0 + local.cost.abs()));
        assert!(global.gap.abs() <= 1e-6 * (1.0 + local.cost.abs()));
    }

    #[test]
    fn dual_path_is_monotone_and_bounded() {
        let rig = RigSpec::sample(303, vec![2.0], 80);
        let (clean, _) = generate(&rig).unwrap();
        let pairs =
            add_noise(&clean, &NoiseSpec { sensor_a: 0.1, sensor_b: 0.1 }, 7).unwrap();
        let problem =
            accumulate_cost(&pairs, 1, ScaledSensor::SensorB, ConstraintSet::Reduced3).unwrap();
        let constraints = problem.constraint_matrices();
        let outcome = solve_dual(&problem, &constraints, &SdpSettings::default()).unwrap();
        let scale = 1.0 + outcome.dual_value.abs();
        for pair in outcome.trace.windows(2) {
            assert!(pair[1].dual_value >= pair[0].dual_value - 1e-8 * scale);
        }
        assert_eq!(outcome.trace.len(), outcome.outer_iterations);
        // The recovered point's residual against Z vanishes.
        let global = recover_primal(&problem, &constraints, &outcome, &SdpSettings::default())
            .unwrap();
        let z = assemble_z(problem.q(), &constraints, &outcome.lambda).unwrap();
        let x = global.state.as_vector();
        let quad = (x.transpose() * &z * x)[(0, 0)];
        assert!(quad.abs() <= 1e-8 * (1.0 + z.trace().abs()));
        assert!(global.spectrum_gap >= 1e4);
    }

    #[test]
    fn multi_scale_full_constraints_recover_all_scales() {
        for scaled in [ScaledSensor::SensorB, ScaledSensor::SensorA] {
            let mut rig = RigSpec::sample(404, vec![10.0, 0.5, 3.0], 40);
            rig.scaled_sensor = scaled;
            let (pairs, truth) = generate(&rig).unwrap();
            let solution =
                solve_global(&pairs, 3, scaled, ConstraintSet::Full6, &SdpSettings::default())
                    .unwrap();
            assert_eq!(solution.lambda.len(), 20);
            let diff = solution.state.as_vector() - truth.state.canonicalized().as_vector();
            assert!(diff.amax() < 1e-6, "state error {} for {scaled:?}", diff.amax());
            let calib = extract_calibration(&solution.state).unwrap();
            for (a, b) in calib.alphas.iter().zip(&truth.scales) {
                assert_relative_eq!(a, b, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn reduced_constraints_have_eleven_multipliers_for_three_scales() {
        let rig = RigSpec::sample(505, vec![1.0, 2.0, 4.0], 25);
        let (pairs, _) = generate(&rig).unwrap();
        let solution = solve_global(
            &pairs,
            3,
            ScaledSensor::SensorB,
            ConstraintSet::Reduced3,
            &SdpSettings::default(),
        )
        .unwrap();
        assert_eq!(solution.lambda.len(), 11);
        // Exact data leaves the structural degenerate direction in the null
        // space; recovery resolves it and reports the detected dimension.
        assert_eq!(solution.nullspace_dim, 2);
    }

    #[test]
    fn recovery_rejects_multipliers_without_a_null_space() {
        let rig = RigSpec::sample(606, vec![3.0], 60);
        let (clean, _) = generate(&rig).unwrap();
        let pairs =
            add_noise(&clean, &NoiseSpec { sensor_a: 0.05, sensor_b: 0.05 }, 9).unwrap();
        let problem =
            accumulate_cost(&pairs, 1, ScaledSensor::SensorB, ConstraintSet::Reduced3).unwrap();
        let constraints = problem.constraint_matrices();
        // Zero multipliers leave Z = Q, strictly positive definite for
        // noisy data: no null space to read a solution from.
        let fake = DualSolveOutcome {
            lambda: DVector::zeros(constraints.count()),
            dual_value: 0.0,
            outer_iterations: 0,
            trace: vec![],
        };
        assert!(matches!(
            recover_primal(&problem, &constraints, &fake, &SdpSettings::default()),
            Err(CalibError::NullSpaceDimension { dim: 0, .. })
        ));
        // A large positive first multiplier makes Z indefinite.
        let mut bad = DVector::zeros(constraints.count());
        bad[0] = 10.0 * (1.0 + problem.q().trace());
        let fake = DualSolveOutcome {
            lambda: bad,
            dual_value: 0.0,
            outer_iterations: 0,
            trace: vec![],
        };
        assert!(matches!(
            recover_primal(&problem, &constraints, &fake, &SdpSettings::default()),
            Err(CalibError::IllConditioned { .. })
        ));
    }

    #[test]
    fn pure_rotations_leave_the_dual_infeasible() {
        let calib = DualQuaternion::from_pose(
            Quaternion::from_axis_angle(&Vector3::new(1.0, 0.0, 0.0), 0.8),
            &Vector3::new(0.3, 0.2, -0.1),
        )
        .unwrap();
        let mut rng_angle = 0.3f64;
        let mut pairs = Vec::new();
        for k in 0..12 {
            rng_angle += 0.11;
            let axis = Vector3::new((k as f64).sin(), (k as f64 * 0.7).cos(), 1.0).normalize();
            let metric = DualQuaternion::from_pose(
                Quaternion::from_axis_angle(&axis, rng_angle),
                &Vector3::zeros(),
            )
            .unwrap();
            pairs.push(MotionPair {
                motion_a: calib * metric * calib.conjugate(),
                motion_b: metric.descale(2.0).unwrap(),
                scale_index: 0,
            });
        }
        let result = solve_global(
            &pairs,
            1,
            ScaledSensor::SensorB,
            ConstraintSet::Reduced3,
            &SdpSettings::default(),
        );
        // Zero sensor-b translations leave every scale direction
        // unconstrained; the failure surfaces either as an unenterable dual
        // cone or as a fat null space at recovery, never as a "solution".
        assert!(matches!(
            result,
            Err(CalibError::IllConditioned { .. })
                | Err(CalibError::NullSpaceDimension { .. })
                | Err(CalibError::DegenerateNullVector { .. })
        ));
    }

    #[test]
    fn global_solver_is_deterministic() {
        let rig = RigSpec::sample(707, vec![5.0], 60);
        let (clean, _) = generate(&rig).unwrap();
        let pairs =
            add_noise(&clean, &NoiseSpec { sensor_a: 0.1, sensor_b: 0.1 }, 15).unwrap();
        let s1 = solve_global(
            &pairs,
            1,
            ScaledSensor::SensorB,
            ConstraintSet::Reduced3,
            &SdpSettings::default(),
        )
        .unwrap();
        let s2 = solve_global(
            &pairs,
            1,
            ScaledSensor::SensorB,
            ConstraintSet::Reduced3,
            &SdpSettings::default(),
        )
        .unwrap();
        assert_eq!(s1.state.as_vector(), s2.state.as_vector());
        assert_eq!(s1.lambda, s2.lambda);
        assert_eq!(s1.dual_value.to_bits(), s2.dual_value.to_bits());
    }

    #[test]
    fn settings_are_validated() {
        let rig = RigSpec::sample(808, vec![1.0], 10);
        let (pairs, _) = generate(&rig).unwrap();
        let bad = SdpSettings { barrier_decay: 1.5, ..SdpSettings::default() };
        assert!(matches!(
            solve_global(&pairs, 1, ScaledSensor::SensorB, ConstraintSet::Reduced3, &bad),
            Err(CalibError::InvalidParameter(_))
        ));
    }
}
