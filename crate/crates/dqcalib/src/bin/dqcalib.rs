//! Command-line front end: calibrate from trajectory files, run synthetic
//! experiments, sweep noise levels, and benchmark the solvers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dqcalib::error::{CalibError, Result};
use dqcalib::problem::{
    accumulate_cost, extract_calibration, ConstraintSet, MotionPair, ScaledSensor,
};
use dqcalib::solver_fast::{solve_fast, SqpSettings};
use dqcalib::solver_global::{solve_global, SdpSettings};
use dqcalib::synth::{add_noise, generate, NoiseSpec, RigSpec};
use dqcalib::{
    calibration_errors, load_trajectory, make_motion_pairs, write_result, CalibrationReport,
    PairingPolicy, RESULT_SCHEMA,
};

#[derive(Parser)]
#[command(
    name = "dqcalib",
    version,
    about = "Hand-eye calibration from per-sensor ego-motion, with monocular scale estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate from absolute-pose trajectory files.
    Calibrate(CalibrateArgs),
    /// Generate a synthetic rig, solve it, and report errors against truth.
    Simulate(SimulateArgs),
    /// Monte Carlo sweep over sensor noise levels; emits CSV.
    #[command(name = "sweep-noise")]
    SweepNoise(SweepArgs),
    /// Time the solvers on a fixed synthetic instance.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SolverChoice {
    Fast,
    Global,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SensorChoice {
    A,
    B,
}

impl From<SensorChoice> for ScaledSensor {
    fn from(value: SensorChoice) -> Self {
        match value {
            SensorChoice::A => ScaledSensor::SensorA,
            SensorChoice::B => ScaledSensor::SensorB,
        }
    }
}

#[derive(Args)]
struct CalibrateArgs {
    /// One sequence: sensor-a file then sensor-b file; repeat the flag for
    /// multi-scale calibration (one scale factor per sequence).
    #[arg(long, num_args = 2, value_names = ["SENSOR_A", "SENSOR_B"],
          required = true, action = clap::ArgAction::Append)]
    sequence: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverChoice::Fast)]
    solver: SolverChoice,
    /// Which sensor reports translations up to scale.
    #[arg(long, value_enum, default_value_t = SensorChoice::B)]
    scaled_sensor: SensorChoice,
    /// Parallelism constraint count per scale: 3 (reduced) or 6 (full).
    #[arg(long, default_value_t = 3)]
    constraints: u8,
    /// Frame distance between the poses of one relative motion.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Association window in seconds (default: half the median sensor-b
    /// frame interval).
    #[arg(long)]
    max_dt: Option<f64>,
    /// Associate nearest poses instead of interpolating sensor b.
    #[arg(long)]
    no_interpolate: bool,
    /// Drop motion pairs rotating less than this angle (radians).
    #[arg(long)]
    min_rotation: Option<f64>,
    /// Expected number of sequences (cross-check).
    #[arg(long)]
    m: Option<usize>,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scale factors, comma separated; defines the number of sequences.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0])]
    alpha: Vec<f64>,
    /// Number of scale groups (cross-check, or replicate a single --alpha).
    #[arg(long)]
    m: Option<usize>,
    /// Relative motion pairs per scale group.
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    /// Sensor-a noise fraction in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    noise_a: f64,
    /// Sensor-b noise fraction in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    noise_b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SolverChoice::Fast)]
    solver: SolverChoice,
    #[arg(long, value_enum, default_value_t = SensorChoice::B)]
    scaled_sensor: SensorChoice,
    #[arg(long, default_value_t = 3)]
    constraints: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Noise fractions forming the (sensor-a, sensor-b) grid.
    #[arg(long, value_delimiter = ',',
          default_values_t = vec![0.0, 0.05, 0.1, 0.15, 0.2])]
    grid: Vec<f64>,
    /// Monte Carlo trials per grid cell.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// fast or global (both is not meaningful for a sweep).
    #[arg(long, value_enum, default_value_t = SolverChoice::Fast)]
    solver: SolverChoice,
    #[arg(long, value_enum, default_value_t = SensorChoice::B)]
    scaled_sensor: SensorChoice,
    #[arg(long, default_value_t = 3)]
    constraints: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SensorChoice::B)]
    scaled_sensor: SensorChoice,
    #[arg(long, default_value_t = 3)]
    constraints: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    let outcome = match cli.command {
        Command::Calibrate(args) => cmd_calibrate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::SweepNoise(args) => cmd_sweep_noise(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match outcome {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

/// 1 usage, 2 solver-declared failure, 3 I/O and data problems.
fn exit_code(err: &CalibError) -> i32 {
    match err {
        CalibError::InvalidParameter(_)
        | CalibError::ScaleCountMismatch { .. }
        | CalibError::BadScaleIndex { .. }
        | CalibError::EmptyScaleGroup { .. }
        | CalibError::DimensionMismatch { .. } => 1,
        CalibError::Io { .. }
        | CalibError::Parse { .. }
        | CalibError::NonMonotonicTimestamps { .. }
        | CalibError::NoOverlap
        | CalibError::TooFewPairs { .. } => 3,
        _ => 2,
    }
}

fn constraint_set(flag: u8) -> Result<ConstraintSet> {
    match flag {
        3 => Ok(ConstraintSet::Reduced3),
        6 => Ok(ConstraintSet::Full6),
        other => Err(CalibError::InvalidParameter(format!(
            "--constraints must be 3 or 6, got {other}"
        ))),
    }
}

/// Prints `text` to stdout and mirrors it to `out` when given.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text).map_err(|source| CalibError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

/// Runs the requested solver(s) and assembles timed reports.
fn run_solvers(
    pairs: &[MotionPair],
    m: usize,
    scaled: ScaledSensor,
    set: ConstraintSet,
    choice: SolverChoice,
) -> Result<Vec<CalibrationReport>> {
    let problem = accumulate_cost(pairs, m, scaled, set)?;
    let warnings = problem.warnings();
    let mut reports = Vec::new();
    if matches!(choice, SolverChoice::Fast | SolverChoice::Both) {
        let start = Instant::now();
        let solution = solve_fast(pairs, m, scaled, set, &SqpSettings::default())?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let mut report = CalibrationReport::from_fast(&solution, warnings)?;
        report.wall_time_ms = Some(elapsed);
        reports.push(report);
    }
    if matches!(choice, SolverChoice::Global | SolverChoice::Both) {
        let start = Instant::now();
        let solution = solve_global(pairs, m, scaled, set, &SdpSettings::default())?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let mut report = CalibrationReport::from_global(&solution, warnings)?;
        report.wall_time_ms = Some(elapsed);
        reports.push(report);
    }
    Ok(reports)
}

fn reports_to_json(reports: &[CalibrationReport], choice: SolverChoice) -> serde_json::Value {
    if choice == SolverChoice::Both {
        serde_json::json!({
            "schema": RESULT_SCHEMA,
            "fast": reports[0],
            "global": reports[1],
            "fast_minus_global_cost": reports[0].cost - reports[1].cost,
        })
    } else {
        serde_json::to_value(&reports[0]).expect("report serializes")
    }
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let sequences: Vec<&[PathBuf]> = args.sequence.chunks(2).collect();
    let m = sequences.len();
    if let Some(expected) = args.m {
        if expected != m {
            return Err(CalibError::InvalidParameter(format!(
                "--m {expected} does not match the {m} --sequence pair(s) given"
            )));
        }
    }
    let set = constraint_set(args.constraints)?;
    let policy = PairingPolicy {
        stride: args.stride,
        max_dt: args.max_dt,
        interpolate: !args.no_interpolate,
        min_rotation: args.min_rotation,
    };
    let mut pairs = Vec::new();
    for (index, chunk) in sequences.iter().enumerate() {
        let traj_a = load_trajectory(&chunk[0])?;
        let traj_b = load_trajectory(&chunk[1])?;
        pairs.extend(make_motion_pairs(&traj_a, &traj_b, &policy, index)?);
    }
    eprintln!(
        "note: scale the sensor whose motion estimates carry less noise; \
         putting the noisier sensor on the scaled side degrades accuracy."
    );
    let reports = run_solvers(&pairs, m, args.scaled_sensor.into(), set, args.solver)?;
    if args.solver == SolverChoice::Both {
        emit(&pretty(&reports_to_json(&reports, args.solver)), args.out.as_deref())
    } else {
        let text = reports[0].to_json();
        print!("{text}");
        if let Some(path) = &args.out {
            write_result(&reports[0], path)?;
        }
        Ok(())
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut alphas = args.alpha.clone();
    if let Some(m) = args.m {
        if alphas.len() == 1 && m > 1 {
            alphas = vec![alphas[0]; m];
        } else if alphas.len() != m {
            return Err(CalibError::InvalidParameter(format!(
                "--m {m} does not match {} --alpha value(s)",
                alphas.len()
            )));
        }
    }
    let m = alphas.len();
    let set = constraint_set(args.constraints)?;
    let scaled: ScaledSensor = args.scaled_sensor.into();

    let mut rig = RigSpec::sample(args.seed, alphas.clone(), args.pairs);
    rig.scaled_sensor = scaled;
    let (clean, truth) = generate(&rig)?;
    let pairs = if args.noise_a > 0.0 || args.noise_b > 0.0 {
        add_noise(
            &clean,
            &NoiseSpec { sensor_a: args.noise_a, sensor_b: args.noise_b },
            args.seed.wrapping_add(1),
        )?
    } else {
        clean
    };

    let reports = run_solvers(&pairs, m, scaled, set, args.solver)?;
    let (q_true, t_true) = truth.calibration.to_pose()?;
    let q_true = q_true.canonicalized();

    let mut errors = Vec::new();
    for report in &reports {
        let est_pose = dqcalib::DualQuaternion::from_pose(
            dqcalib::Quaternion::new(
                report.rotation[0],
                report.rotation[1],
                report.rotation[2],
                report.rotation[3],
            ),
            &nalgebra::Vector3::new(
                report.translation[0],
                report.translation[1],
                report.translation[2],
            ),
        )?;
        let err = calibration_errors(&est_pose, &report.alpha, &truth.calibration, &truth.scales)?;
        errors.push(serde_json::json!({
            "solver": report.solver,
            "rotation_rad": err.rotation_rad,
            "translation": err.translation,
            "alpha": err.scale,
        }));
    }

    let value = serde_json::json!({
        "schema": RESULT_SCHEMA,
        "simulate": {
            "seed": args.seed,
            "pairs": args.pairs,
            "noise_a": args.noise_a,
            "noise_b": args.noise_b,
            "truth": {
                "rotation": [q_true.w, q_true.x, q_true.y, q_true.z],
                "translation": [t_true.x, t_true.y, t_true.z],
                "alpha": truth.scales,
            },
        },
        "results": reports,
        "errors": errors,
    });
    emit(&pretty(&value), args.out.as_deref())
}

struct SweepSample {
    eps_t: f64,
    eps_r: f64,
    eps_alpha: f64,
}

/// Deterministic per-trial seed derivation (splittable-mix style).
fn mix_seed(base: u64, k: u64) -> u64 {
    let mut z = base ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sweep_trial(
    seed: u64,
    noise: &NoiseSpec,
    args: &SweepArgs,
    set: ConstraintSet,
) -> Result<SweepSample> {
    let scaled: ScaledSensor = args.scaled_sensor.into();
    let mut rig = RigSpec::sample(seed, vec![args.alpha], args.pairs);
    rig.scaled_sensor = scaled;
    let (clean, truth) = generate(&rig)?;
    let pairs = if noise.sensor_a > 0.0 || noise.sensor_b > 0.0 {
        add_noise(&clean, noise, mix_seed(seed, 0xA5))?
    } else {
        clean
    };
    let state = match args.solver {
        SolverChoice::Fast => {
            solve_fast(&pairs, 1, scaled, set, &SqpSettings::default())?.state
        }
        SolverChoice::Global => {
            solve_global(&pairs, 1, scaled, set, &SdpSettings::default())?.state
        }
        SolverChoice::Both => unreachable!("validated before the sweep starts"),
    };
    let calibration = extract_calibration(&state)?;
    let err = calibration_errors(
        &calibration.pose,
        &calibration.alphas,
        &truth.calibration,
        &truth.scales,
    )?;
    Ok(SweepSample { eps_t: err.translation, eps_r: err.rotation_rad, eps_alpha: err.scale[0] })
}

/// Lower median of an unsorted sample.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len() - 1) / 2]
}

fn cmd_sweep_noise(args: &SweepArgs) -> Result<()> {
    if args.solver == SolverChoice::Both {
        return Err(CalibError::InvalidParameter(
            "--solver both is not meaningful for sweep-noise; pick fast or global".into(),
        ));
    }
    if args.trials == 0 {
        return Err(CalibError::InvalidParameter("--trials must be at least 1".into()));
    }
    for p in &args.grid {
        if !(0.0..1.0).contains(p) {
            return Err(CalibError::InvalidParameter(format!(
                "grid noise fraction {p} outside [0, 1)"
            )));
        }
    }
    let set = constraint_set(args.constraints)?;
    let cells: Vec<(usize, f64, f64)> = args
        .grid
        .iter()
        .enumerate()
        .flat_map(|(i, &pa)| {
            args.grid.iter().enumerate().map(move |(j, &pb)| (i * 1000 + j, pa, pb))
        })
        .collect();

    let per_cell: Vec<Vec<Result<SweepSample>>> = cells
        .par_iter()
        .map(|&(cell_key, pa, pb)| {
            let noise = NoiseSpec { sensor_a: pa, sensor_b: pb };
            (0..args.trials)
                .map(|t| {
                    let seed = mix_seed(args.seed, (cell_key as u64) << 16 | t as u64);
                    sweep_trial(seed, &noise, args, set)
                })
                .collect()
        })
        .collect();

    let mut csv = String::from("p_a,p_b,median_eps_t,median_eps_r,median_eps_alpha,trials\n");
    for ((_, pa, pb), samples) in cells.iter().zip(&per_cell) {
        let mut eps_t = Vec::new();
        let mut eps_r = Vec::new();
        let mut eps_a = Vec::new();
        for sample in samples.iter().flatten() {
            eps_t.push(sample.eps_t);
            eps_r.push(sample.eps_r);
            eps_a.push(sample.eps_alpha);
        }
        if eps_t.is_empty() {
            return Err(CalibError::NoConvergence {
                best_kkt: f64::NAN,
                best_violation: f64::NAN,
            });
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            pa,
            pb,
            median(&mut eps_t),
            median(&mut eps_r),
            median(&mut eps_a),
            eps_t.len()
        ));
    }
    emit(&csv, args.out.as_deref())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.runs == 0 {
        return Err(CalibError::InvalidParameter("--runs must be at least 1".into()));
    }
    let set = constraint_set(args.constraints)?;
    let scaled: ScaledSensor = args.scaled_sensor.into();
    let mut rig = RigSpec::sample(args.seed, vec![10.0], args.pairs);
    rig.scaled_sensor = scaled;
    let (clean, _) = generate(&rig)?;
    let noise = NoiseSpec { sensor_a: 0.05, sensor_b: 0.05 };
    let pairs = add_noise(&clean, &noise, args.seed.wrapping_add(1))?;

    let time_ms = |f: &dyn Fn() -> Result<()>| -> Result<(f64, f64)> {
        f()?; // warm-up, also surfaces errors once
        let mut total = 0.0;
        let mut min = f64::INFINITY;
        for _ in 0..args.runs {
            let start = Instant::now();
            f()?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            total += elapsed;
            min = min.min(elapsed);
        }
        Ok((total / args.runs as f64, min))
    };

    let sqp = SqpSettings::default();
    let sdp = SdpSettings::default();
    let (fast_mean, fast_min) = time_ms(&|| {
        let solution = solve_fast(&pairs, 1, scaled, set, &sqp)?;
        extract_calibration(&solution.state).map(|_| ())
    })?;
    let (global_mean, global_min) = time_ms(&|| {
        let solution = solve_global(&pairs, 1, scaled, set, &sdp)?;
        extract_calibration(&solution.state).map(|_| ())
    })?;

    let value = serde_json::json!({
        "schema": RESULT_SCHEMA,
        "bench": {
            "pairs": args.pairs,
            "runs": args.runs,
            "noise": 0.05,
            "fast": {"mean_ms": fast_mean, "min_ms": fast_min},
            "global": {"mean_ms": global_mean, "min_ms": global_min},
        },
    });
    emit(&pretty(&value), args.out.as_deref())
}
