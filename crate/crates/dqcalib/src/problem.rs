use nalgebra::{DMatrix, DVector, Matrix4, Vector2, Vector4};

use crate::dq::{DualQuaternion, Quaternion};
use crate::error::{CalibError, Result};

/// Which of the two sensors reports translations up to an unknown scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaledSensor {
    SensorA,
    #[default]
    SensorB,
}

/// Parallelism constraints tying each scaled-rotation block to the rotation.
///
/// `Reduced3` uses the three products against the scalar component and is
/// sufficient whenever that component is nonzero; rotations by exactly pi
/// leave it zero, which `Full6` covers with the remaining pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintSet {
    #[default]
    Reduced3,
    Full6,
}

impl ConstraintSet {
    pub fn per_scale(&self) -> usize {
        match self {
            ConstraintSet::Reduced3 => 3,
            ConstraintSet::Full6 => 6,
        }
    }

    /// Component index pairs (i, l) of the constraints r_i * s_l - r_l * s_i.
    pub fn component_pairs(&self) -> &'static [(usize, usize)] {
        const FULL: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        match self {
            ConstraintSet::Reduced3 => &FULL[..3],
            ConstraintSet::Full6 => &FULL,
        }
    }
}

/// One synchronized pair of per-sensor ego-motions.
#[derive(Debug, Clone, Copy)]
pub struct MotionPair {
    pub motion_a: DualQuaternion,
    pub motion_b: DualQuaternion,
    /// Scale group of the monocular sequence this pair came from.
    pub scale_index: usize,
}

pub fn state_dim(m: usize) -> usize {
    8 + 4 * m
}

/// Stacked unknowns [r, s_0, .., s_{m-1}, d] with s_j = alpha_j * r.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: DVector<f64>,
    m: usize,
}

impl StateVector {
    pub fn from_parts(r: &Vector4<f64>, s: &[Vector4<f64>], d: &Vector4<f64>) -> Self {
        let m = s.len();
        let mut data = DVector::zeros(state_dim(m));
        data.fixed_rows_mut::<4>(0).copy_from(r);
        for (j, sj) in s.iter().enumerate() {
            data.fixed_rows_mut::<4>(4 + 4 * j).copy_from(sj);
        }
        data.fixed_rows_mut::<4>(4 + 4 * m).copy_from(d);
        StateVector { data, m }
    }

    /// State of a known calibration: r, alpha_j * r, d.
    pub fn from_pose_and_scales(pose: &DualQuaternion, alphas: &[f64]) -> Self {
        let r = pose.real.coeffs();
        let d = pose.dual.coeffs();
        let s: Vec<Vector4<f64>> = alphas.iter().map(|a| r * *a).collect();
        StateVector::from_parts(&r, &s, &d)
    }

    pub fn from_vector(data: DVector<f64>, m: usize) -> Result<Self> {
        if data.len() != state_dim(m) {
            return Err(CalibError::DimensionMismatch {
                expected: state_dim(m),
                got: data.len(),
            });
        }
        Ok(StateVector { data, m })
    }

    pub fn num_scales(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn rotation(&self) -> Vector4<f64> {
        self.data.fixed_rows::<4>(0).into()
    }

    pub fn scaled_rotation(&self, j: usize) -> Vector4<f64> {
        assert!(j < self.m);
        self.data.fixed_rows::<4>(4 + 4 * j).into()
    }

    pub fn dual(&self) -> Vector4<f64> {
        self.data.fixed_rows::<4>(4 + 4 * self.m).into()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    /// Flips the global sign so the rotation block is canonical.
    pub fn canonicalized(&self) -> Self {
        let r = self.rotation();
        for i in 0..4 {
            if r[i] > 0.0 {
                return self.clone();
            }
            if r[i] < 0.0 {
                return StateVector { data: -&self.data, m: self.m };
            }
        }
        self.clone()
    }
}

/// Warnings attached to an assembled problem; none of them stop the solve.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemWarning {
    /// Rotation axes of the motions span fewer than two directions, so the
    /// calibration rotation is not fully observable. Carries the second
    /// smallest eigenvalue of the axis second-moment matrix.
    UnobservableRotation { second_moment: f64 },
}

impl std::fmt::Display for ProblemWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemWarning::UnobservableRotation { second_moment } => write!(
                f,
                "rotation axes are nearly collinear (axis second moment {second_moment:.3e}); \
                 the calibration rotation is not fully observable"
            ),
        }
    }
}

/// Aggregates the local solver needs to build its data-driven start.
#[derive(Debug, Clone)]
pub(crate) struct InitData {
    /// Sum of G' G over all pairs, G the real-part gap L(a_r) - R(b_r);
    /// its smallest eigenvector seeds the rotation.
    pub(crate) rotation_gram: Matrix4<f64>,
    /// Median translation-norm ratio per scale group, oriented so it
    /// estimates the group's metric scale.
    pub(crate) scale_guess: Vec<f64>,
    /// Per group: sum of G' * (coefficient matrix of r) in the dual-part
    /// equation, used for the least-squares start of the dual block.
    pub(crate) dual_cross_r: Vec<Matrix4<f64>>,
    /// Per group: sum of G' * (coefficient matrix of s_j), same purpose.
    pub(crate) dual_cross_s: Vec<Matrix4<f64>>,
}

/// Assembled least-squares cost x' Q x with its bookkeeping.
#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    q: DMatrix<f64>,
    m: usize,
    n_pairs: Vec<usize>,
    scaled: ScaledSensor,
    constraint_set: ConstraintSet,
    warnings: Vec<ProblemWarning>,
    init: InitData,
}

impl CalibrationProblem {
    pub fn dim(&self) -> usize {
        state_dim(self.m)
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn num_scales(&self) -> usize {
        self.m
    }

    pub fn pairs_per_scale(&self) -> &[usize] {
        &self.n_pairs
    }

    pub fn scaled_sensor(&self) -> ScaledSensor {
        self.scaled
    }

    pub fn constraint_set(&self) -> ConstraintSet {
        self.constraint_set
    }

    pub fn warnings(&self) -> &[ProblemWarning] {
        &self.warnings
    }

    pub fn cost(&self, x: &StateVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(CalibError::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        Ok((x.as_vector().transpose() * &self.q * x.as_vector())[(0, 0)])
    }

    pub fn constraint_matrices(&self) -> ConstraintMatrices {
        constraint_matrices(self.m, self.constraint_set)
    }

    pub(crate) fn init_data(&self) -> &InitData {
        &self.init
    }
}

/// 8 x (8 + 4m) residual matrix of one motion pair.
///
/// Rows 0..4 hold the real-part equation, rows 4..8 the dual-part equation
/// with the scale substitution s_j = alpha_j * r in place.
pub fn build_motion_matrix(
    pair: &MotionPair,
    m: usize,
    scaled: ScaledSensor,
) -> Result<DMatrix<f64>> {
    if pair.scale_index >= m {
        return Err(CalibError::BadScaleIndex { index: pair.scale_index, m });
    }
    let dim = state_dim(m);
    let mut mat = DMatrix::zeros(8, dim);

    let real_gap = pair.motion_a.real.left_matrix() - pair.motion_b.real.right_matrix();
    let l_dual_a = pair.motion_a.dual.left_matrix();
    let r_dual_b = pair.motion_b.dual.right_matrix();

    let s_col = 4 + 4 * pair.scale_index;
    let d_col = 4 + 4 * m;

    mat.view_mut((0, 0), (4, 4)).copy_from(&real_gap);
    mat.view_mut((4, d_col), (4, 4)).copy_from(&real_gap);
    match scaled {
        ScaledSensor::SensorB => {
            mat.view_mut((4, 0), (4, 4)).copy_from(&l_dual_a);
            mat.view_mut((4, s_col), (4, 4)).copy_from(&(-r_dual_b));
        }
        ScaledSensor::SensorA => {
            mat.view_mut((4, 0), (4, 4)).copy_from(&(-r_dual_b));
            mat.view_mut((4, s_col), (4, 4)).copy_from(&l_dual_a);
        }
    }
    Ok(mat)
}

/// Sums M' M over all pairs into one positive semidefinite cost matrix.
pub fn accumulate_cost(
    pairs: &[MotionPair],
    m: usize,
    scaled: ScaledSensor,
    constraint_set: ConstraintSet,
) -> Result<CalibrationProblem> {
    if m == 0 {
        return Err(CalibError::InvalidParameter("number of scale groups must be at least 1".into()));
    }
    let dim = state_dim(m);
    let mut q = DMatrix::zeros(dim, dim);
    let mut n_pairs = vec![0usize; m];
    let mut rotation_gram = Matrix4::zeros();
    let mut dual_cross_r = vec![Matrix4::zeros(); m];
    let mut dual_cross_s = vec![Matrix4::zeros(); m];
    let mut ratios: Vec<Vec<f64>> = vec![Vec::new(); m];
    for pair in pairs {
        let mat = build_motion_matrix(pair, m, scaled)?;
        q.gemm_tr(1.0, &mat, &mat, 1.0);
        n_pairs[pair.scale_index] += 1;

        let gap = pair.motion_a.real.left_matrix() - pair.motion_b.real.right_matrix();
        rotation_gram += gap.transpose() * gap;
        let (c_r, c_s) = match scaled {
            ScaledSensor::SensorB => {
                (pair.motion_a.dual.left_matrix(), -pair.motion_b.dual.right_matrix())
            }
            ScaledSensor::SensorA => {
                (-pair.motion_b.dual.right_matrix(), pair.motion_a.dual.left_matrix())
            }
        };
        dual_cross_r[pair.scale_index] += gap.transpose() * c_r;
        dual_cross_s[pair.scale_index] += gap.transpose() * c_s;

        let t_a = pair.motion_a.translation().norm();
        let t_b = pair.motion_b.translation().norm();
        let (num, den) = match scaled {
            ScaledSensor::SensorB => (t_a, t_b),
            ScaledSensor::SensorA => (t_b, t_a),
        };
        if num > 1e-12 && den > 1e-12 {
            ratios[pair.scale_index].push(num / den);
        }
    }
    if let Some(idx) = n_pairs.iter().position(|&n| n == 0) {
        return Err(CalibError::EmptyScaleGroup { index: idx });
    }
    let scale_guess = ratios.iter_mut().map(|r| median_or_one(r)).collect();

    let mut warnings = Vec::new();
    if let Some(second_moment) = axis_second_moment(pairs) {
        if second_moment < 1e-6 {
            warnings.push(ProblemWarning::UnobservableRotation { second_moment });
        }
    } else {
        warnings.push(ProblemWarning::UnobservableRotation { second_moment: 0.0 });
    }

    Ok(CalibrationProblem {
        q,
        m,
        n_pairs,
        scaled,
        constraint_set,
        warnings,
        init: InitData { rotation_gram, scale_guess, dual_cross_r, dual_cross_s },
    })
}

fn median_or_one(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Second smallest eigenvalue of the normalized second moment of rotation
/// axes; `None` when every motion is numerically a pure translation.
fn axis_second_moment(pairs: &[MotionPair]) -> Option<f64> {
    let mut c = nalgebra::Matrix3::<f64>::zeros();
    let mut n = 0usize;
    for pair in pairs {
        if pair.motion_a.real.rotation_angle() < 1e-12 {
            continue;
        }
        if let Some(axis) = pair.motion_a.real.axis() {
            c += axis * axis.transpose();
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    c /= n as f64;
    let mut eigs: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.total_cmp(b));
    Some(eigs[1])
}

/// Values of the two unit-norm constraints [1 - |r|^2, 2 r.d].
pub fn eval_unit_constraints(x: &StateVector) -> Vector2<f64> {
    let r = x.rotation();
    let d = x.dual();
    Vector2::new(1.0 - r.dot(&r), 2.0 * r.dot(&d))
}

/// Values of the parallelism constraints for scale group `j`.
pub fn eval_parallelism_constraints(
    x: &StateVector,
    j: usize,
    set: ConstraintSet,
) -> DVector<f64> {
    let r = x.rotation();
    let s = x.scaled_rotation(j);
    let pairs = set.component_pairs();
    DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, l)| r[i] * s[l] - r[l] * s[i]))
}

/// All constraint values in solver order: unit pair first, then each scale
/// group's parallelism block.
pub fn eval_all_constraints(x: &StateVector, set: ConstraintSet) -> DVector<f64> {
    let per = set.per_scale();
    let mut g = DVector::zeros(2 + per * x.num_scales());
    g.fixed_rows_mut::<2>(0).copy_from(&eval_unit_constraints(x));
    for j in 0..x.num_scales() {
        g.rows_mut(2 + per * j, per)
            .copy_from(&eval_parallelism_constraints(x, j, set));
    }
    g
}

/// Symmetric matrices P_i and offsets c_i with g_i(x) = c_i + x' P_i x,
/// ordered like `eval_all_constraints`.
#[derive(Debug, Clone)]
pub struct ConstraintMatrices {
    mats: Vec<DMatrix<f64>>,
    offsets: Vec<f64>,
    m: usize,
    set: ConstraintSet,
}

impl ConstraintMatrices {
    pub fn count(&self) -> usize {
        self.mats.len()
    }

    pub fn dim(&self) -> usize {
        state_dim(self.m)
    }

    pub fn num_scales(&self) -> usize {
        self.m
    }

    pub fn set(&self) -> ConstraintSet {
        self.set
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    /// Evaluates every constraint through its quadratic form.
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.mats.len(),
            self.mats
                .iter()
                .zip(&self.offsets)
                .map(|(p, c)| c + (x.transpose() * p * x)[(0, 0)]),
        )
    }
}

/// Builds the constraint matrices for `m` scale groups.
pub fn constraint_matrices(m: usize, set: ConstraintSet) -> ConstraintMatrices {
    let dim = state_dim(m);
    let d_col = 4 + 4 * m;
    let mut mats = Vec::with_capacity(2 + set.per_scale() * m);
    let mut offsets = Vec::with_capacity(mats.capacity());

    // g_0 = 1 - |r|^2
    let mut p = DMatrix::zeros(dim, dim);
    for i in 0..4 {
        p[(i, i)] = -1.0;
    }
    mats.push(p);
    offsets.push(1.0);

    // g_1 = 2 r.d
    let mut p = DMatrix::zeros(dim, dim);
    for i in 0..4 {
        p[(i, d_col + i)] = 1.0;
        p[(d_col + i, i)] = 1.0;
    }
    mats.push(p);
    offsets.push(0.0);

    // g = r_i s_l - r_l s_i per scale group, symmetrized.
    for j in 0..m {
        let s_col = 4 + 4 * j;
        for &(i, l) in set.component_pairs() {
            let mut p = DMatrix::zeros(dim, dim);
            p[(i, s_col + l)] = 0.5;
            p[(s_col + l, i)] = 0.5;
            p[(l, s_col + i)] = -0.5;
            p[(s_col + i, l)] = -0.5;
            mats.push(p);
            offsets.push(0.0);
        }
    }
    ConstraintMatrices { mats, offsets, m, set }
}

/// Z(lambda) = Q + sum_i lambda_i P_i.
pub fn assemble_z(
    q: &DMatrix<f64>,
    constraints: &ConstraintMatrices,
    lambda: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if lambda.len() != constraints.count() {
        return Err(CalibError::DimensionMismatch {
            expected: constraints.count(),
            got: lambda.len(),
        });
    }
    if q.nrows() != constraints.dim() || q.ncols() != constraints.dim() {
        return Err(CalibError::DimensionMismatch {
            expected: constraints.dim(),
            got: q.nrows(),
        });
    }
    let mut z = q.clone();
    for (p, &l) in constraints.matrices().iter().zip(lambda.iter()) {
        z += p * l;
    }
    Ok(z)
}

/// Calibration read off a feasible state vector.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// Unit dual quaternion of the sensor-to-sensor transform, canonical sign.
    pub pose: DualQuaternion,
    /// One metric scale factor per scale group.
    pub alphas: Vec<f64>,
    /// Largest angle between the rotation block and any scaled block.
    pub parallel_misfit: f64,
    /// Distance between the raw (r, d) blocks and their rigid projection.
    pub projection_residual: f64,
}

/// Extracts pose and scales from a state satisfying the constraints to
/// moderate accuracy, projecting (r, d) onto the unit dual quaternions.
pub fn extract_calibration(x: &StateVector) -> Result<Calibration> {
    let r = x.rotation();
    let norm_r = r.norm();
    if (norm_r - 1.0).abs() > 1e-3 {
        return Err(CalibError::NonUnitRotation { norm: norm_r });
    }

    let mut alphas = Vec::with_capacity(x.num_scales());
    let mut parallel_misfit: f64 = 0.0;
    for j in 0..x.num_scales() {
        let s = x.scaled_rotation(j);
        let norm_s = s.norm();
        if norm_s < 1e-12 {
            return Err(CalibError::NonPositiveScale { alpha: norm_s });
        }
        let dot = r.dot(&s);
        if dot < 0.0 {
            return Err(CalibError::AntiparallelScale { index: j, dot });
        }
        alphas.push(norm_s / norm_r);
        let angle = (dot / (norm_r * norm_s)).clamp(-1.0, 1.0).acos();
        parallel_misfit = parallel_misfit.max(angle);
    }

    let r_hat = r / norm_r;
    let d_scaled = x.dual() / norm_r;
    let d_hat = &d_scaled - r_hat * r_hat.dot(&d_scaled);
    let residual =
        ((r - r_hat).norm_squared() + (x.dual() - d_hat).norm_squared()).sqrt();

    let pose = DualQuaternion::from_parts(
        Quaternion::from_coeffs(&r_hat),
        Quaternion::from_coeffs(&d_hat),
    )
    .canonicalized();
    Ok(Calibration { pose, alphas, parallel_misfit, projection_residual: residual })
}
