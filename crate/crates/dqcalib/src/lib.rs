//! Hand-eye calibration between two rigidly mounted ego-motion sensors when
//! one of them (typically a monocular camera) reports translations up to an
//! unknown metric scale.
//!
//! The calibration, the scale factors, and their algebraic couplings are
//! estimated jointly as a quadratically constrained quadratic program over
//! dual quaternions. Two solvers are provided: a fast local SQP solver whose
//! result can be certified globally optimal after the fact, and a solver
//! that is globally optimal by construction via the Lagrangian dual.

pub mod data_io;
pub mod dq;
pub mod error;
pub mod metrics;
pub mod problem;
pub mod solver_fast;
pub mod solver_global;
pub mod synth;

pub use solver_fast::{
    certify, estimate_dual_variables, solve_fast, solve_sqp, DualEstimate, FastSolution,
    GlobalityCertificate, SqpSettings,
};
pub use solver_global::{
    recover_primal, solve_dual, solve_global, DualSolveOutcome, GlobalSolution, OuterIterate,
    SdpSettings,
};

pub use data_io::{
    load_trajectory, make_motion_pairs, parse_trajectory, read_result, resample, write_result,
    write_trajectory, CalibrationReport, PairingPolicy, TrajectoryRecord, RESULT_SCHEMA,
};
pub use dq::{DualQuaternion, QuatMatrix, Quaternion};
pub use error::{CalibError, Result};
pub use metrics::{calibration_errors, ErrorReport};
pub use problem::{
    accumulate_cost, assemble_z, build_motion_matrix, constraint_matrices, extract_calibration,
    eval_all_constraints, eval_parallelism_constraints, eval_unit_constraints, Calibration,
    CalibrationProblem, ConstraintMatrices, ConstraintSet, MotionPair, ProblemWarning,
    ScaledSensor, StateVector,
};
pub use synth::{add_noise, generate, GroundTruth, NoiseSpec, RigSpec};
