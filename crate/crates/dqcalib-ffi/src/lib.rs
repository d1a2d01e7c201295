//! C interface for the dqcalib hand-eye calibration library.
//!
//! The API follows a dataset/solution handle model: build a `DqcDataset`
//! from motion pairs or trajectory files, solve it into a `DqcSolution`,
//! read the calibration out through getters, free both handles. All
//! functions are safe to call from multiple threads as long as each handle
//! is used from one thread at a time; error messages are thread-local.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dqcalib::error::CalibError;
use dqcalib::problem::{
    accumulate_cost, ConstraintSet, MotionPair, ScaledSensor,
};
use dqcalib::solver_fast::{solve_fast, SqpSettings};
use dqcalib::solver_global::{solve_global, SdpSettings};
use dqcalib::{
    load_trajectory, make_motion_pairs, CalibrationReport, DualQuaternion, PairingPolicy,
    Quaternion,
};

/// Status code returned by fallible functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqcStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument or option value is out of range.
    InvalidArgument = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Input data is malformed or insufficient (parse, timestamps,
    /// association, too few pairs).
    Data = 4,
    /// The solver declared failure (no convergence, degenerate geometry,
    /// ambiguous null space, infeasible recovery).
    Solver = 5,
    /// An internal invariant was violated.
    Internal = 6,
}

/// Solver selection.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqcSolver {
    /// Local SQP with a posteriori globality certification.
    Fast = 0,
    /// Lagrangian-dual interior point, globally optimal by construction.
    Global = 1,
}

/// Which sensor reports translations up to an unknown scale.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqcScaledSensor {
    SensorA = 0,
    SensorB = 1,
}

/// Solve and pairing options. Obtain defaults from `dqc_options_default`
/// and override selectively.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqcOptions {
    pub solver: DqcSolver,
    pub scaled_sensor: DqcScaledSensor,
    /// Parallelism constraints per scale group: 3 (reduced) or 6 (full).
    pub constraints: u32,
    /// Frame distance between the poses of one relative motion (files).
    pub stride: u32,
    /// Association window in seconds; <= 0 selects half the median
    /// sensor-b frame interval (files).
    pub max_dt: f64,
    /// Interpolate sensor-b poses at sensor-a timestamps (files).
    pub interpolate: bool,
    /// Drop motion pairs rotating less than this angle in radians;
    /// <= 0 keeps all pairs (files).
    pub min_rotation: f64,
}

/// Dataset handle: accumulated relative-motion pairs (opaque).
pub struct DqcDataset {
    pairs: Vec<MotionPair>,
}

/// Solution handle (opaque).
pub struct DqcSolution {
    report: CalibrationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_for(err: &CalibError) -> DqcStatus {
    match err {
        CalibError::InvalidParameter(_)
        | CalibError::ScaleCountMismatch { .. }
        | CalibError::BadScaleIndex { .. }
        | CalibError::EmptyScaleGroup { .. }
        | CalibError::DimensionMismatch { .. } => DqcStatus::InvalidArgument,
        CalibError::Io { .. } => DqcStatus::Io,
        CalibError::Parse { .. }
        | CalibError::NonMonotonicTimestamps { .. }
        | CalibError::NoOverlap
        | CalibError::TooFewPairs { .. } => DqcStatus::Data,
        _ => DqcStatus::Solver,
    }
}

fn fail(err: &CalibError) -> DqcStatus {
    set_last_error(&err.to_string());
    status_for(err)
}

/// Runs `f` with panics converted to `DqcStatus::Internal`.
fn guarded(f: impl FnOnce() -> DqcStatus) -> DqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            DqcStatus::Internal
        }
    }
}

fn policy_from(options: &DqcOptions) -> PairingPolicy {
    PairingPolicy {
        stride: options.stride.max(1) as usize,
        max_dt: (options.max_dt > 0.0).then_some(options.max_dt),
        interpolate: options.interpolate,
        min_rotation: (options.min_rotation > 0.0).then_some(options.min_rotation),
    }
}

fn constraint_set_from(options: &DqcOptions) -> Result<ConstraintSet, CalibError> {
    match options.constraints {
        3 => Ok(ConstraintSet::Reduced3),
        6 => Ok(ConstraintSet::Full6),
        other => Err(CalibError::InvalidParameter(format!(
            "constraints must be 3 or 6, got {other}"
        ))),
    }
}

impl From<DqcScaledSensor> for ScaledSensor {
    fn from(value: DqcScaledSensor) -> Self {
        match value {
            DqcScaledSensor::SensorA => ScaledSensor::SensorA,
            DqcScaledSensor::SensorB => ScaledSensor::SensorB,
        }
    }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn dqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent error on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn dqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Fills `options` with the defaults (fast solver, sensor b scaled,
/// 3 constraints, stride 1, automatic association window, interpolation on,
/// no rotation filter).
#[no_mangle]
pub extern "C" fn dqc_options_default(options: *mut DqcOptions) -> DqcStatus {
    guarded(|| {
        let Some(options) = (unsafe { options.as_mut() }) else {
            set_last_error("options pointer is null");
            return DqcStatus::NullPointer;
        };
        *options = DqcOptions {
            solver: DqcSolver::Fast,
            scaled_sensor: DqcScaledSensor::SensorB,
            constraints: 3,
            stride: 1,
            max_dt: 0.0,
            interpolate: true,
            min_rotation: 0.0,
        };
        DqcStatus::Ok
    })
}

/// Creates an empty dataset. Free with `dqc_dataset_free`.
#[no_mangle]
pub extern "C" fn dqc_dataset_new() -> *mut DqcDataset {
    Box::into_raw(Box::new(DqcDataset { pairs: Vec::new() }))
}

/// Frees a dataset; a null pointer is ignored.
#[no_mangle]
pub extern "C" fn dqc_dataset_free(dataset: *mut DqcDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Appends one relative-motion pair. Each motion is 8 doubles: the real
/// quaternion (w, x, y, z) then the dual quaternion (w, x, y, z). The
/// sensor-b motion is the measured (possibly scaled) one. `scale_index`
/// selects the scale group (0 for single-scale problems).
#[no_mangle]
pub extern "C" fn dqc_dataset_add_pair(
    dataset: *mut DqcDataset,
    motion_a: *const f64,
    motion_b: *const f64,
    scale_index: u32,
) -> DqcStatus {
    guarded(|| {
        let Some(dataset) = (unsafe { dataset.as_mut() }) else {
            set_last_error("dataset pointer is null");
            return DqcStatus::NullPointer;
        };
        if motion_a.is_null() || motion_b.is_null() {
            set_last_error("motion pointer is null");
            return DqcStatus::NullPointer;
        }
        let a = unsafe { std::slice::from_raw_parts(motion_a, 8) };
        let b = unsafe { std::slice::from_raw_parts(motion_b, 8) };
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            set_last_error("motion components must be finite");
            return DqcStatus::InvalidArgument;
        }
        let build = |c: &[f64]| {
            DualQuaternion::from_parts(
                Quaternion::new(c[0], c[1], c[2], c[3]),
                Quaternion::new(c[4], c[5], c[6], c[7]),
            )
        };
        dataset.pairs.push(MotionPair {
            motion_a: build(a),
            motion_b: build(b),
            scale_index: scale_index as usize,
        });
        DqcStatus::Ok
    })
}

/// Loads one sequence (two trajectory files in the documented format),
/// associates the poses per `options`, and appends the relative-motion
/// pairs under `scale_index`.
#[no_mangle]
pub extern "C" fn dqc_dataset_load_files(
    dataset: *mut DqcDataset,
    path_a: *const c_char,
    path_b: *const c_char,
    options: *const DqcOptions,
    scale_index: u32,
) -> DqcStatus {
    guarded(|| {
        let Some(dataset) = (unsafe { dataset.as_mut() }) else {
            set_last_error("dataset pointer is null");
            return DqcStatus::NullPointer;
        };
        if path_a.is_null() || path_b.is_null() || options.is_null() {
            set_last_error("path or options pointer is null");
            return DqcStatus::NullPointer;
        }
        let decode = |p: *const c_char| -> Result<String, DqcStatus> {
            match unsafe { CStr::from_ptr(p) }.to_str() {
                Ok(s) => Ok(s.to_owned()),
                Err(_) => {
                    set_last_error("path is not valid UTF-8");
                    Err(DqcStatus::InvalidArgument)
                }
            }
        };
        let (path_a, path_b) = match (decode(path_a), decode(path_b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let options = unsafe { *options };
        let policy = policy_from(&options);
        let traj_a = match load_trajectory(&path_a) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        let traj_b = match load_trajectory(&path_b) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        match make_motion_pairs(&traj_a, &traj_b, &policy, scale_index as usize) {
            Ok(pairs) => {
                dataset.pairs.extend(pairs);
                DqcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of motion pairs currently in the dataset (0 for null).
#[no_mangle]
pub extern "C" fn dqc_dataset_pair_count(dataset: *const DqcDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.pairs.len())
}

/// Solves the dataset's calibration problem. On success, `*solution`
/// receives a handle to free with `dqc_solution_free`.
#[no_mangle]
pub extern "C" fn dqc_solve(
    dataset: *const DqcDataset,
    options: *const DqcOptions,
    solution: *mut *mut DqcSolution,
) -> DqcStatus {
    guarded(|| {
        let Some(dataset) = (unsafe { dataset.as_ref() }) else {
            set_last_error("dataset pointer is null");
            return DqcStatus::NullPointer;
        };
        if options.is_null() || solution.is_null() {
            set_last_error("options or solution pointer is null");
            return DqcStatus::NullPointer;
        }
        let options = unsafe { *options };
        let set = match constraint_set_from(&options) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let scaled: ScaledSensor = options.scaled_sensor.into();
        let m = dataset.pairs.iter().map(|p| p.scale_index + 1).max().unwrap_or(0);
        if m == 0 {
            set_last_error("dataset is empty");
            return DqcStatus::InvalidArgument;
        }
        let problem = match accumulate_cost(&dataset.pairs, m, scaled, set) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        let report = match options.solver {
            DqcSolver::Fast => {
                match solve_fast(&dataset.pairs, m, scaled, set, &SqpSettings::default()) {
                    Ok(s) => CalibrationReport::from_fast(&s, problem.warnings()),
                    Err(e) => return fail(&e),
                }
            }
            DqcSolver::Global => {
                match solve_global(&dataset.pairs, m, scaled, set, &SdpSettings::default()) {
                    Ok(s) => CalibrationReport::from_global(&s, problem.warnings()),
                    Err(e) => return fail(&e),
                }
            }
        };
        match report {
            Ok(report) => {
                unsafe {
                    *solution = Box::into_raw(Box::new(DqcSolution { report }));
                }
                DqcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Frees a solution; a null pointer is ignored.
#[no_mangle]
pub extern "C" fn dqc_solution_free(solution: *mut DqcSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Hand-eye rotation as a unit quaternion (w, x, y, z), canonical sign.
#[no_mangle]
pub extern "C" fn dqc_solution_rotation(
    solution: *const DqcSolution,
    out: *mut f64,
) -> DqcStatus {
    guarded(|| {
        let (Some(solution), false) = (unsafe { solution.as_ref() }, out.is_null()) else {
            set_last_error("solution or output pointer is null");
            return DqcStatus::NullPointer;
        };
        let out = unsafe { std::slice::from_raw_parts_mut(out, 4) };
        out.copy_from_slice(&solution.report.rotation);
        DqcStatus::Ok
    })
}

/// Hand-eye translation in meters (x, y, z).
#[no_mangle]
pub extern "C" fn dqc_solution_translation(
    solution: *const DqcSolution,
    out: *mut f64,
) -> DqcStatus {
    guarded(|| {
        let (Some(solution), false) = (unsafe { solution.as_ref() }, out.is_null()) else {
            set_last_error("solution or output pointer is null");
            return DqcStatus::NullPointer;
        };
        let out = unsafe { std::slice::from_raw_parts_mut(out, 3) };
        out.copy_from_slice(&solution.report.translation);
        DqcStatus::Ok
    })
}

/// Number of estimated scale factors (one per scale group).
#[no_mangle]
pub extern "C" fn dqc_solution_alpha_count(solution: *const DqcSolution) -> usize {
    unsafe { solution.as_ref() }.map_or(0, |s| s.report.alpha.len())
}

/// Copies up to `capacity` scale factors into `out`.
#[no_mangle]
pub extern "C" fn dqc_solution_alphas(
    solution: *const DqcSolution,
    out: *mut f64,
    capacity: usize,
) -> DqcStatus {
    guarded(|| {
        let (Some(solution), false) = (unsafe { solution.as_ref() }, out.is_null()) else {
            set_last_error("solution or output pointer is null");
            return DqcStatus::NullPointer;
        };
        if capacity < solution.report.alpha.len() {
            set_last_error("alpha buffer too small");
            return DqcStatus::InvalidArgument;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(out, solution.report.alpha.len()) };
        out.copy_from_slice(&solution.report.alpha);
        DqcStatus::Ok
    })
}

/// Objective value at the solution (NaN for null).
#[no_mangle]
pub extern "C" fn dqc_solution_cost(solution: *const DqcSolution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.report.cost)
}

/// Duality gap when one was computed, NaN otherwise.
#[no_mangle]
pub extern "C" fn dqc_solution_gap(solution: *const DqcSolution) -> f64 {
    unsafe { solution.as_ref() }
        .and_then(|s| s.report.gap)
        .unwrap_or(f64::NAN)
}

/// 1 when the solution is certified globally optimal, 0 when it is not,
/// -1 for null.
#[no_mangle]
pub extern "C" fn dqc_solution_certified(solution: *const DqcSolution) -> i32 {
    match unsafe { solution.as_ref() } {
        Some(s) => i32::from(s.report.certified.unwrap_or(false)),
        None => -1,
    }
}

/// Full result document as JSON (schema dqcalib/1). Free the returned
/// string with `dqc_string_free`; returns null for a null solution.
#[no_mangle]
pub extern "C" fn dqc_solution_json(solution: *const DqcSolution) -> *mut c_char {
    let Some(solution) = (unsafe { solution.as_ref() }) else {
        return std::ptr::null_mut();
    };
    let json = solution.report.to_json().replace('\0', " ");
    CString::new(json).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// Frees a string returned by this library; a null pointer is ignored.
#[no_mangle]
pub extern "C" fn dqc_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(unsafe { CString::from_raw(string) });
    }
}
