use nalgebra::{DMatrix, DVector, Matrix4, Vector4, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CalibError, Result};
use crate::problem::{
    accumulate_cost, assemble_z, constraint_matrices, CalibrationProblem, ConstraintMatrices,
    ConstraintSet, MotionPair, ScaledSensor, StateVector,
};

/// Settings of the local SQP solver.
#[derive(Debug, Clone)]
pub struct SqpSettings {
    /// Iteration budget per start.
    pub max_iter: usize,
    /// Stationarity target, relative to 1 + |Q x|.
    pub kkt_tol: f64,
    /// Largest tolerated constraint value at a solution.
    pub feasibility_tol: f64,
    /// Backtracking factor of the merit line search, in (0, 1).
    pub step_damping: f64,
    /// Deterministically perturbed restarts tried after the data-driven one.
    pub extra_starts: usize,
}

impl Default for SqpSettings {
    fn default() -> Self {
        SqpSettings {
            max_iter: 100,
            kkt_tol: 1e-10,
            feasibility_tol: 1e-8,
            step_damping: 0.5,
            extra_starts: 4,
        }
    }
}

impl SqpSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0
            || self.kkt_tol <= 0.0
            || self.feasibility_tol <= 0.0
            || !(0.0..1.0).contains(&self.step_damping)
            || self.step_damping == 0.0
        {
            return Err(CalibError::InvalidParameter(
                "SQP settings require max_iter > 0, positive tolerances, \
                 and step_damping in (0, 1)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Least-squares estimate of the Lagrange multipliers at a point.
#[derive(Debug, Clone)]
pub struct DualEstimate {
    pub lambda: DVector<f64>,
    /// Norm of the stationarity residual 2 Q x + sum lambda_i 2 P_i x.
    pub residual: f64,
    /// The constraint gradients did not have full rank; lambda is the
    /// minimum-norm choice among the minimizers.
    pub rank_deficient: bool,
}

/// Outcome of the post-hoc globality check at a candidate solution.
#[derive(Debug, Clone)]
pub struct GlobalityCertificate {
    pub lambda: DVector<f64>,
    /// Smallest eigenvalue of Z(lambda).
    pub min_eig_z: f64,
    /// Cost minus the dual value of lambda.
    pub gap: f64,
    /// Z(lambda) is positive semidefinite within tolerance, which bounds
    /// every feasible cost from below by the dual value.
    pub certified: bool,
}

/// Result of the local solver, with certification when it was conclusive.
#[derive(Debug, Clone)]
pub struct FastSolution {
    pub state: StateVector,
    pub cost: f64,
    /// Largest absolute constraint value at the solution.
    pub constraint_violation: f64,
    /// Stationarity residual at the solution.
    pub kkt_residual: f64,
    /// Iterations spent by the winning start.
    pub iterations: usize,
    /// Index of the winning start (0 is the data-driven one).
    pub start_index: usize,
    pub dual: Option<DualEstimate>,
    pub certificate: Option<GlobalityCertificate>,
}

/// Stationarity residual below which a dual estimate is meaningful enough
/// to attempt certification, relative to 1 + |2 Q x|.
const CERTIFY_RESIDUAL_GATE: f64 = 1e-6;

/// Relative slack on the smallest eigenvalue of Z when certifying.
const CERTIFY_EIG_TOL: f64 = 1e-8;

/// Runs the multistart SQP on an assembled problem.
///
/// Starts are tried in a fixed order and the converged one with the lowest
/// cost wins, so the result is deterministic for identical inputs.
pub fn solve_sqp(
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
    settings: &SqpSettings,
) -> Result<FastSolution> {
    settings.validate()?;
    check_compatible(problem, constraints)?;

    let starts = initial_states(problem, settings.extra_starts);
    let mut best: Option<FastSolution> = None;
    let mut best_kkt = f64::INFINITY;
    let mut best_violation = f64::INFINITY;
    for (index, x0) in starts.iter().enumerate() {
        let outcome = run_single_start(problem, constraints, settings, x0);
        match outcome {
            StartOutcome::Converged { x, cost, violation, kkt, iterations } => {
                let state = StateVector::from_vector(x, problem.num_scales())
                    .expect("start preserves dimension")
                    .canonicalized();
                let replace = match &best {
                    None => true,
                    Some(current) => cost < current.cost,
                };
                if replace {
                    best = Some(FastSolution {
                        state,
                        cost,
                        constraint_violation: violation,
                        kkt_residual: kkt,
                        iterations,
                        start_index: index,
                        dual: None,
                        certificate: None,
                    });
                }
            }
            StartOutcome::Failed { kkt, violation } => {
                best_kkt = best_kkt.min(kkt);
                best_violation = best_violation.min(violation);
            }
        }
    }
    best.ok_or(CalibError::NoConvergence { best_kkt, best_violation })
}

/// Estimates the multipliers that make the solution stationary, by linear
/// least squares over the constraint gradients.
pub fn estimate_dual_variables(
    x: &StateVector,
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
) -> Result<DualEstimate> {
    check_compatible(problem, constraints)?;
    if x.dim() != problem.dim() {
        return Err(CalibError::DimensionMismatch { expected: problem.dim(), got: x.dim() });
    }
    let v = x.as_vector();
    let nc = constraints.count();
    let mut g = DMatrix::zeros(problem.dim(), nc);
    for (i, p) in constraints.matrices().iter().enumerate() {
        g.set_column(i, &(p * v * 2.0));
    }
    let rhs = problem.q() * v * 2.0;
    let svd = SVD::new(g.clone(), true, true);
    let sv_max = svd.singular_values.max();
    let eps = 1e-12 * sv_max.max(1e-300);
    let rank = svd.rank(eps);
    let lambda = svd
        .solve(&(-&rhs), eps)
        .map_err(|msg| CalibError::IllConditioned { message: msg.to_string() })?
        .column(0)
        .into_owned();
    let residual = (&g * &lambda + rhs).norm();
    Ok(DualEstimate { lambda, residual, rank_deficient: rank < nc })
}

/// Checks whether Z(lambda) is positive semidefinite at the estimated
/// multipliers; if it is, the point's cost cannot be beaten by more than
/// the reported gap and the solution is globally optimal up to tolerance.
pub fn certify(
    x: &StateVector,
    lambda: &DVector<f64>,
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
) -> Result<GlobalityCertificate> {
    check_compatible(problem, constraints)?;
    let z = assemble_z(problem.q(), constraints, lambda)?;
    let eigs = z.symmetric_eigenvalues();
    let min_eig_z = eigs.min();
    let scale = 1.0 + problem.q().trace() / problem.dim() as f64;
    let certified = min_eig_z >= -CERTIFY_EIG_TOL * scale;
    let cost = problem.cost(x)?;
    Ok(GlobalityCertificate { lambda: lambda.clone(), min_eig_z, gap: cost - lambda[0], certified })
}

/// Assembles the problem from motion pairs, runs the SQP, and attaches the
/// dual estimate plus a certificate whenever the estimate is trustworthy.
pub fn solve_fast(
    pairs: &[MotionPair],
    m: usize,
    scaled: ScaledSensor,
    set: ConstraintSet,
    settings: &SqpSettings,
) -> Result<FastSolution> {
    let problem = accumulate_cost(pairs, m, scaled, set)?;
    let constraints = constraint_matrices(m, set);
    let mut solution = solve_sqp(&problem, &constraints, settings)?;
    let dual = estimate_dual_variables(&solution.state, &problem, &constraints)?;
    let gate = CERTIFY_RESIDUAL_GATE
        * (1.0 + (problem.q() * solution.state.as_vector() * 2.0).norm());
    if dual.residual <= gate {
        solution.certificate =
            Some(certify(&solution.state, &dual.lambda, &problem, &constraints)?);
    }
    solution.dual = Some(dual);
    Ok(solution)
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

enum StartOutcome {
    Converged { x: DVector<f64>, cost: f64, violation: f64, kkt: f64, iterations: usize },
    Failed { kkt: f64, violation: f64 },
}

/// Newton-Lagrange iteration with an l1 merit line search.
fn run_single_start(
    problem: &CalibrationProblem,
    constraints: &ConstraintMatrices,
    settings: &SqpSettings,
    x0: &DVector<f64>,
) -> StartOutcome {
    let dim = problem.dim();
    let nc = constraints.count();
    let q = problem.q();
    let trace_scale = 1.0 + q.trace().abs();

    let mut x = x0.clone();
    let mut lambda = DVector::zeros(nc);
    let mut tau = 0.0;
    let mut last_kkt = f64::INFINITY;
    let mut last_violation = f64::INFINITY;

    for iteration in 0..settings.max_iter {
        let g = constraints.eval(&x);
        let grad_f = q * &x * 2.0;
        let mut jac = DMatrix::zeros(nc, dim);
        for (i, p) in constraints.matrices().iter().enumerate() {
            jac.set_row(i, &(p * &x * 2.0).transpose());
        }
        let grad_lag = &grad_f + jac.transpose() * &lambda;

        let violation = g.amax();
        let kkt = grad_lag.norm();
        last_kkt = kkt;
        last_violation = violation;
        if violation <= settings.feasibility_tol && kkt <= settings.kkt_tol * (1.0 + grad_f.norm())
        {
            let cost = (x.transpose() * q * &x)[(0, 0)];
            return StartOutcome::Converged { x, cost, violation, kkt, iterations: iteration };
        }

        // KKT system on the Lagrangian Hessian 2 Z(lambda), regularized
        // only when factorization or descent fails.
        let step = loop {
            let z = match assemble_z(q, constraints, &lambda) {
                Ok(z) => z,
                Err(_) => return StartOutcome::Failed { kkt, violation },
            };
            let mut k = DMatrix::zeros(dim + nc, dim + nc);
            k.view_mut((0, 0), (dim, dim)).copy_from(&(z * 2.0));
            for i in 0..dim {
                k[(i, i)] += tau * trace_scale;
            }
            k.view_mut((dim, 0), (nc, dim)).copy_from(&jac);
            k.view_mut((0, dim), (dim, nc)).copy_from(&jac.transpose());
            let mut rhs = DVector::zeros(dim + nc);
            rhs.rows_mut(0, dim).copy_from(&(-&grad_lag));
            rhs.rows_mut(dim, nc).copy_from(&(-&g));
            match k.full_piv_lu().solve(&rhs) {
                Some(sol) if sol.iter().all(|v| v.is_finite()) => break sol,
                _ => {
                    tau = if tau == 0.0 { 1e-10 } else { tau * 100.0 };
                    if tau > 1.0 {
                        return StartOutcome::Failed { kkt, violation };
                    }
                }
            }
        };
        let dx = step.rows(0, dim).into_owned();
        let dlambda = step.rows(dim, nc).into_owned();

        // l1 merit with a penalty that dominates the new multipliers.
        let rho = (2.0 * (&lambda + &dlambda).amax()).max(1.0);
        let merit = |v: &DVector<f64>| -> f64 {
            let gv = constraints.eval(v);
            (v.transpose() * q * v)[(0, 0)] + rho * gv.abs().sum()
        };
        let current = merit(&x);
        let descent = grad_f.dot(&dx) - rho * g.abs().sum();
        let mut t = 1.0;
        let mut stepped = false;
        while t >= 1e-12 {
            let candidate = &x + &dx * t;
            if merit(&candidate) <= current + 1e-4 * t * descent.min(0.0) {
                x = candidate;
                lambda += &dlambda * t;
                stepped = true;
                break;
            }
            t *= settings.step_damping;
        }
        if !stepped {
            tau = if tau == 0.0 { 1e-10 } else { tau * 100.0 };
            if tau > 1.0 {
                return StartOutcome::Failed { kkt, violation };
            }
            continue;
        }
        if x.norm() > 1e8 {
            return StartOutcome::Failed { kkt: last_kkt, violation: last_violation };
        }
    }
    StartOutcome::Failed { kkt: last_kkt, violation: last_violation }
}

/// Builds the data-driven start and `extra` deterministic perturbations.
fn initial_states(problem: &CalibrationProblem, extra: usize) -> Vec<DVector<f64>> {
    let init = problem.init_data();
    let r0 = smallest_eigenvector(&init.rotation_gram);
    let alphas0 = init.scale_guess.clone();
    let mut starts = Vec::with_capacity(1 + extra);
    starts.push(assemble_start(problem, &r0, &alphas0));

    for k in 1..=extra {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut u = Vector4::zeros();
        for i in 0..4 {
            u[i] = rng.random::<f64>() * 2.0 - 1.0;
        }
        let delta = 0.3 * k as f64;
        let mut r = r0 + u * delta;
        let norm = r.norm();
        if norm < 1e-9 {
            r = r0;
        } else {
            r /= norm;
        }
        let alphas: Vec<f64> = alphas0
            .iter()
            .map(|a| a * 2f64.powf(rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        starts.push(assemble_start(problem, &r, &alphas));
    }
    starts
}

/// Completes a start from rotation and scales: s_j = alpha_j r and d from
/// the least-squares solution of the dual-part equations restricted to the
/// hyperplane r.d = 0.
fn assemble_start(
    problem: &CalibrationProblem,
    r: &Vector4<f64>,
    alphas: &[f64],
) -> DVector<f64> {
    let init = problem.init_data();
    let m = problem.num_scales();

    let mut h = Vector4::zeros();
    for j in 0..m {
        h += init.dual_cross_r[j] * r + init.dual_cross_s[j] * (r * alphas[j]);
    }
    let basis = orthonormal_complement(r);
    let reduced = basis.transpose() * init.rotation_gram * basis;
    let rhs = -(basis.transpose() * h);
    let d = match reduced.lu().solve(&rhs) {
        Some(y) if y.iter().all(|v| v.is_finite()) => basis * y,
        _ => Vector4::zeros(),
    };

    let s: Vec<Vector4<f64>> = alphas.iter().map(|a| r * *a).collect();
    StateVector::from_parts(r, &s, &d).as_vector().clone()
}

fn smallest_eigenvector(gram: &Matrix4<f64>) -> Vector4<f64> {
    let eig = nalgebra::SymmetricEigen::new(*gram);
    let mut best = 0;
    for i in 1..4 {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let v: Vector4<f64> = eig.eigenvectors.column(best).into_owned();
    let norm = v.norm();
    let v = if norm > 1e-12 { v / norm } else { Vector4::new(1.0, 0.0, 0.0, 0.0) };
    // Canonical sign keeps the start deterministic across eigen backends.
    for i in 0..4 {
        if v[i] > 0.0 {
            return v;
        }
        if v[i] < 0.0 {
            return -v;
        }
    }
    v
}

/// Orthonormal basis of the hyperplane orthogonal to a unit 4-vector.
fn orthonormal_complement(r: &Vector4<f64>) -> nalgebra::Matrix4x3<f64> {
    let mut columns: Vec<Vector4<f64>> = Vec::with_capacity(3);
    // Seed with the coordinate axes least aligned with r.
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()));
    for &i in order.iter().take(3) {
        let mut e = Vector4::zeros();
        e[i] = 1.0;
        let mut v = e - r * r.dot(&e);
        for c in &columns {
            v -= c * c.dot(&v);
        }
        let n = v.norm();
        if n > 1e-9 {
            columns.push(v / n);
        }
    }
    // A unit r always leaves a full three-dimensional complement.
    let mut basis = nalgebra::Matrix4x3::zeros();
    for (i, c) in columns.iter().enumerate() {
        basis.set_column(i, c);
    }
    basis
}
