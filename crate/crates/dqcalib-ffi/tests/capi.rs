//! Exercises the C interface end to end: handle lifecycle, solving,
//! getters, file loading, and error reporting.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use dqcalib::{
    generate, solve_fast, write_trajectory, CalibrationReport, DualQuaternion, MotionPair,
    Quaternion, RigSpec, SqpSettings, TrajectoryRecord, RESULT_SCHEMA,
};
use dqcalib_ffi::{
    dqc_dataset_add_pair, dqc_dataset_free, dqc_dataset_load_files, dqc_dataset_new,
    dqc_dataset_pair_count, dqc_last_error_message, dqc_options_default, dqc_solution_alpha_count,
    dqc_solution_alphas, dqc_solution_certified, dqc_solution_cost, dqc_solution_free,
    dqc_solution_gap, dqc_solution_json, dqc_solution_rotation, dqc_solution_translation,
    dqc_solve, dqc_string_free, dqc_version, DqcOptions, DqcSolver, DqcStatus,
};
use nalgebra::Vector3;

fn default_options() -> DqcOptions {
    let mut options = std::mem::MaybeUninit::<DqcOptions>::uninit();
    let status = dqc_options_default(options.as_mut_ptr());
    assert_eq!(status, DqcStatus::Ok);
    unsafe { options.assume_init() }
}

fn flatten(dq: &DualQuaternion) -> [f64; 8] {
    [
        dq.real.w, dq.real.x, dq.real.y, dq.real.z, dq.dual.w, dq.dual.x, dq.dual.y, dq.dual.z,
    ]
}

fn dataset_from_pairs(pairs: &[MotionPair]) -> *mut dqcalib_ffi::DqcDataset {
    let dataset = dqc_dataset_new();
    assert!(!dataset.is_null());
    for pair in pairs {
        let a = flatten(&pair.motion_a);
        let b = flatten(&pair.motion_b);
        let status =
            dqc_dataset_add_pair(dataset, a.as_ptr(), b.as_ptr(), pair.scale_index as u32);
        assert_eq!(status, DqcStatus::Ok);
    }
    dataset
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dqc_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

#[test]
fn options_default_matches_the_documented_values() {
    let options = default_options();
    assert_eq!(options.solver, DqcSolver::Fast);
    assert_eq!(options.constraints, 3);
    assert_eq!(options.stride, 1);
    assert_eq!(options.max_dt, 0.0);
    assert!(options.interpolate);
    assert_eq!(options.min_rotation, 0.0);
    assert_eq!(dqc_options_default(ptr::null_mut()), DqcStatus::NullPointer);
}

#[test]
fn version_matches_the_crate_metadata() {
    let version = unsafe { CStr::from_ptr(dqc_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn solving_added_pairs_matches_the_library_result() {
    let rig = RigSpec::sample(7, vec![3.0], 60);
    let (pairs, truth) = generate(&rig).unwrap();
    let expected = CalibrationReport::from_fast(
        &solve_fast(
            &pairs,
            1,
            Default::default(),
            Default::default(),
            &SqpSettings::default(),
        )
        .unwrap(),
        &[],
    )
    .unwrap();

    let dataset = dataset_from_pairs(&pairs);
    assert_eq!(dqc_dataset_pair_count(dataset), 60);

    let options = default_options();
    let mut solution = ptr::null_mut();
    assert_eq!(dqc_solve(dataset, &options, &mut solution), DqcStatus::Ok);

    let mut rotation = [0.0; 4];
    let mut translation = [0.0; 3];
    assert_eq!(
        dqc_solution_rotation(solution, rotation.as_mut_ptr()),
        DqcStatus::Ok
    );
    assert_eq!(
        dqc_solution_translation(solution, translation.as_mut_ptr()),
        DqcStatus::Ok
    );
    assert_eq!(rotation, expected.rotation);
    assert_eq!(translation, expected.translation);

    assert_eq!(dqc_solution_alpha_count(solution), 1);
    let mut alphas = [0.0; 1];
    assert_eq!(
        dqc_solution_alphas(solution, alphas.as_mut_ptr(), 1),
        DqcStatus::Ok
    );
    assert_eq!(alphas[0], expected.alpha[0]);
    assert!((alphas[0] - truth.scales[0]).abs() < 1e-6);

    assert_eq!(dqc_solution_cost(solution), expected.cost);
    assert_eq!(dqc_solution_certified(solution), 1);
    assert!(dqc_solution_gap(solution).abs() < 1e-8);

    dqc_solution_free(solution);
    dqc_dataset_free(dataset);
}

#[test]
fn the_global_solver_runs_through_the_c_api() {
    let rig = RigSpec::sample(21, vec![0.5], 50);
    let (pairs, truth) = generate(&rig).unwrap();
    let dataset = dataset_from_pairs(&pairs);

    let mut options = default_options();
    options.solver = DqcSolver::Global;
    let mut solution = ptr::null_mut();
    assert_eq!(dqc_solve(dataset, &options, &mut solution), DqcStatus::Ok);

    let mut rotation = [0.0; 4];
    assert_eq!(
        dqc_solution_rotation(solution, rotation.as_mut_ptr()),
        DqcStatus::Ok
    );
    let (q_true, t_true) = truth.calibration.to_pose().unwrap();
    let q_true = q_true.canonicalized();
    for (got, want) in rotation.iter().zip(q_true.coeffs().iter()) {
        assert!((got - want).abs() < 1e-6, "rotation {got} vs {want}");
    }
    let mut translation = [0.0; 3];
    assert_eq!(
        dqc_solution_translation(solution, translation.as_mut_ptr()),
        DqcStatus::Ok
    );
    for (got, want) in translation.iter().zip(t_true.iter()) {
        assert!((got - want).abs() < 1e-6, "translation {got} vs {want}");
    }
    assert_eq!(dqc_solution_certified(solution), 1);

    let json = dqc_solution_json(solution);
    assert!(!json.is_null());
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    dqc_string_free(json);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema"], RESULT_SCHEMA);
    assert_eq!(value["solver"], "global");

    dqc_solution_free(solution);
    dqc_dataset_free(dataset);
}

#[test]
fn trajectory_files_load_and_solve_through_the_c_api() {
    // Derive two consistent trajectories: pose_b = W * pose_a * X with the
    // sensor-b translations divided by the metric scale.
    let q_x = Quaternion::from_axis_angle(&Vector3::new(0.3, -1.0, 0.5).normalize(), 0.7);
    let t_x = Vector3::new(0.2, -0.1, 0.35);
    let calibration = DualQuaternion::from_pose(q_x, &t_x).unwrap();
    let world = DualQuaternion::from_pose(
        Quaternion::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), -0.4),
        &Vector3::new(1.0, 2.0, -0.5),
    )
    .unwrap();
    let alpha = 4.0;

    let mut pose_a = DualQuaternion::from_pose(Quaternion::IDENTITY, &Vector3::zeros()).unwrap();
    let mut records_a = Vec::new();
    let mut records_b = Vec::new();
    for k in 0..40 {
        let axis = Vector3::new(
            (0.9 * k as f64).sin(),
            (0.7 * k as f64 + 1.0).cos(),
            0.6 + (0.3 * k as f64).sin(),
        )
        .normalize();
        let step = DualQuaternion::from_pose(
            Quaternion::from_axis_angle(&axis, 0.25 + 0.1 * (k as f64 * 0.5).sin()),
            &Vector3::new(
                0.1 * (k as f64).cos(),
                0.08 * (k as f64 * 1.3).sin(),
                0.05 + 0.02 * (k as f64),
            ),
        )
        .unwrap();
        pose_a = (pose_a * step).canonicalized();
        let pose_b = (world * pose_a * calibration).canonicalized();
        let timestamp = 0.1 * k as f64;
        let (q_a, t_a) = pose_a.to_pose().unwrap();
        let (q_b, t_b) = pose_b.to_pose().unwrap();
        records_a.push(TrajectoryRecord {
            timestamp,
            translation: t_a,
            rotation: q_a,
        });
        records_b.push(TrajectoryRecord {
            timestamp,
            translation: t_b / alpha,
            rotation: q_b,
        });
    }

    let dir = std::env::temp_dir().join("dqcalib_ffi_files");
    std::fs::create_dir_all(&dir).unwrap();
    let path_a = dir.join("a.txt");
    let path_b = dir.join("b.txt");
    write_trajectory(&path_a, &records_a).unwrap();
    write_trajectory(&path_b, &records_b).unwrap();

    let dataset = dqc_dataset_new();
    let options = default_options();
    let c_path_a = CString::new(path_a.to_str().unwrap()).unwrap();
    let c_path_b = CString::new(path_b.to_str().unwrap()).unwrap();
    let status = dqc_dataset_load_files(dataset, c_path_a.as_ptr(), c_path_b.as_ptr(), &options, 0);
    assert_eq!(status, DqcStatus::Ok, "{}", last_error());
    assert_eq!(dqc_dataset_pair_count(dataset), 39);

    let mut solution = ptr::null_mut();
    assert_eq!(dqc_solve(dataset, &options, &mut solution), DqcStatus::Ok);
    let mut rotation = [0.0; 4];
    let mut translation = [0.0; 3];
    let mut alphas = [0.0; 1];
    dqc_solution_rotation(solution, rotation.as_mut_ptr());
    dqc_solution_translation(solution, translation.as_mut_ptr());
    dqc_solution_alphas(solution, alphas.as_mut_ptr(), 1);

    let q_want = q_x.canonicalized();
    for (got, want) in rotation.iter().zip(q_want.coeffs().iter()) {
        assert!((got - want).abs() < 1e-6, "rotation {got} vs {want}");
    }
    for (got, want) in translation.iter().zip(t_x.iter()) {
        assert!((got - want).abs() < 1e-6, "translation {got} vs {want}");
    }
    assert!((alphas[0] - alpha).abs() < 1e-6, "alpha {}", alphas[0]);

    dqc_solution_free(solution);
    dqc_dataset_free(dataset);
}

#[test]
fn failures_set_a_status_and_a_message() {
    // Null handles.
    assert_eq!(
        dqc_dataset_add_pair(ptr::null_mut(), ptr::null(), ptr::null(), 0),
        DqcStatus::NullPointer
    );
    assert!(!last_error().is_empty());
    assert_eq!(dqc_dataset_pair_count(ptr::null()), 0);
    assert!(dqc_solution_cost(ptr::null()).is_nan());
    assert!(dqc_solution_gap(ptr::null()).is_nan());
    assert_eq!(dqc_solution_certified(ptr::null()), -1);
    assert_eq!(dqc_solution_alpha_count(ptr::null()), 0);
    assert!(dqc_solution_json(ptr::null()).is_null());
    dqc_dataset_free(ptr::null_mut());
    dqc_solution_free(ptr::null_mut());
    dqc_string_free(ptr::null_mut());

    let dataset = dqc_dataset_new();
    let options = default_options();

    // Non-finite motion components.
    let bad = [f64::NAN; 8];
    let good = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    assert_eq!(
        dqc_dataset_add_pair(dataset, bad.as_ptr(), good.as_ptr(), 0),
        DqcStatus::InvalidArgument
    );
    assert!(last_error().contains("finite"));

    // Empty dataset cannot be solved.
    let mut solution = ptr::null_mut();
    assert_eq!(
        dqc_solve(dataset, &options, &mut solution),
        DqcStatus::InvalidArgument
    );
    assert!(last_error().contains("empty"));

    // Invalid constraint count.
    let rig = RigSpec::sample(3, vec![1.0], 12);
    let (pairs, _) = generate(&rig).unwrap();
    let filled = dataset_from_pairs(&pairs);
    let mut bad_options = options;
    bad_options.constraints = 4;
    assert_eq!(
        dqc_solve(filled, &bad_options, &mut solution),
        DqcStatus::InvalidArgument
    );
    assert!(last_error().contains("3 or 6"));

    // Missing file.
    let missing = CString::new("/nonexistent/trajectory.txt").unwrap();
    assert_eq!(
        dqc_dataset_load_files(dataset, missing.as_ptr(), missing.as_ptr(), &options, 0),
        DqcStatus::Io
    );
    assert!(last_error().contains("trajectory.txt"));

    // Malformed file content maps to the data status.
    let dir = std::env::temp_dir().join("dqcalib_ffi_errors");
    std::fs::create_dir_all(&dir).unwrap();
    let bad_path = dir.join("bad.txt");
    std::fs::write(&bad_path, "1.0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n").unwrap();
    let c_bad = CString::new(bad_path.to_str().unwrap()).unwrap();
    assert_eq!(
        dqc_dataset_load_files(dataset, c_bad.as_ptr(), c_bad.as_ptr(), &options, 0),
        DqcStatus::Data
    );

    // Undersized alpha buffer.
    let mut ok_solution = ptr::null_mut();
    assert_eq!(
        dqc_solve(filled, &options, &mut ok_solution),
        DqcStatus::Ok
    );
    let mut tiny: [f64; 0] = [];
    assert_eq!(
        dqc_solution_alphas(ok_solution, tiny.as_mut_ptr(), 0),
        DqcStatus::InvalidArgument
    );

    dqc_solution_free(ok_solution);
    dqc_dataset_free(filled);
    dqc_dataset_free(dataset);
}

#[test]
fn the_generated_header_declares_the_public_api() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("dqcalib.h");
    let text = std::fs::read_to_string(&header)
        .unwrap_or_else(|e| panic!("missing {}: {e}", header.display()));
    for symbol in [
        "typedef struct DqcDataset DqcDataset;",
        "typedef struct DqcSolution DqcSolution;",
        "DQC_STATUS_OK",
        "DQC_SOLVER_GLOBAL",
        "struct DqcOptions",
        "dqc_options_default",
        "dqc_dataset_new",
        "dqc_dataset_add_pair",
        "dqc_dataset_load_files",
        "dqc_solve",
        "dqc_solution_rotation",
        "dqc_solution_json",
        "dqc_string_free",
        "dqc_last_error_message",
        "dqc_version",
    ] {
        assert!(text.contains(symbol), "header is missing `{symbol}`");
    }
}
