use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dq::{DualQuaternion, Quaternion};
use crate::error::{CalibError, Result};
use crate::problem::{extract_calibration, MotionPair, ProblemWarning};
use crate::solver_fast::FastSolution;
use crate::solver_global::GlobalSolution;

/// Version tag of the JSON result document.
pub const RESULT_SCHEMA: &str = "dqcalib/1";

/// Quaternion norms may deviate this much in a trajectory file before the
/// line is rejected; smaller deviations are normalized away.
pub const QUAT_NORM_TOL: f64 = 1e-3;

/// One absolute pose sample of a sensor.
///
/// On disk a record is one whitespace-separated line
/// `timestamp tx ty tz qx qy qz qw` (quaternion scalar-last); in memory the
/// quaternion is scalar-first.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Seconds; strictly increasing within a trajectory.
    pub timestamp: f64,
    /// Meters (or scale-consistent units for a scaled sensor).
    pub translation: Vector3<f64>,
    /// Unit rotation, scalar-first.
    pub rotation: Quaternion,
}

/// Parses trajectory text; `label` names the source in errors.
pub fn parse_trajectory(text: &str, label: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut records: Vec<TrajectoryRecord> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(CalibError::Parse {
                path: label.into(),
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 8];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| CalibError::Parse {
                path: label.into(),
                line: line_no,
                message: format!("not a number: {field:?}"),
            })?;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CalibError::Parse {
                path: label.into(),
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        let timestamp = values[0];
        if let Some(prev) = records.last() {
            if timestamp <= prev.timestamp {
                return Err(CalibError::NonMonotonicTimestamps {
                    path: label.into(),
                    line: line_no,
                });
            }
        }
        // Disk order is (qx, qy, qz, qw).
        let q = Quaternion::new(values[7], values[4], values[5], values[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(CalibError::Parse {
                path: label.into(),
                line: line_no,
                message: format!("quaternion norm {norm:.6} deviates from 1"),
            });
        }
        // Conditional rescale keeps already-unit quaternions bit-identical
        // across write/load round trips.
        let rotation = if (norm - 1.0).abs() > 1e-12 { q.scaled(1.0 / norm) } else { q };
        records.push(TrajectoryRecord {
            timestamp,
            translation: Vector3::new(values[1], values[2], values[3]),
            rotation,
        });
    }
    Ok(records)
}

/// Loads a trajectory file.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trajectory(&text, &path.display().to_string())
}

/// Serializes records in the on-disk format. Numbers use the shortest
/// representation that parses back to the identical value.
pub fn format_trajectory(records: &[TrajectoryRecord]) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for r in records {
        let (t, q) = (&r.translation, &r.rotation);
        writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            r.timestamp, t.x, t.y, t.z, q.x, q.y, q.z, q.w
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes a trajectory file.
pub fn write_trajectory(path: impl AsRef<Path>, records: &[TrajectoryRecord]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trajectory(records)).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// How two trajectories are associated into relative-motion pairs.
#[derive(Debug, Clone)]
pub struct PairingPolicy {
    /// Index distance between the frames of one relative motion.
    pub stride: usize,
    /// Maximum time distance for associating a sensor-b sample with a
    /// sensor-a timestamp; `None` uses half the median sensor-b frame
    /// interval.
    pub max_dt: Option<f64>,
    /// Interpolate sensor-b poses at sensor-a timestamps (spherical-linear
    /// rotations, linear translations); otherwise nearest neighbor.
    pub interpolate: bool,
    /// Drop pairs whose rotation angle falls below this (radians).
    pub min_rotation: Option<f64>,
}

impl Default for PairingPolicy {
    fn default() -> Self {
        PairingPolicy { stride: 1, max_dt: None, interpolate: true, min_rotation: None }
    }
}

impl PairingPolicy {
    fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(CalibError::InvalidParameter("stride must be at least 1".into()));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(CalibError::InvalidParameter(
                    "max_dt must be positive and finite".into(),
                ));
            }
        }
        if let Some(th) = self.min_rotation {
            if !(th >= 0.0) || !th.is_finite() {
                return Err(CalibError::InvalidParameter(
                    "min_rotation must be non-negative and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Pose of `traj` at time `t`, or `None` when `t` cannot be associated
/// within `max_dt`. Interpolation does not extrapolate beyond the ends.
pub fn resample(
    traj: &[TrajectoryRecord],
    t: f64,
    max_dt: f64,
    interpolate: bool,
) -> Option<(Quaternion, Vector3<f64>)> {
    if traj.is_empty() {
        return None;
    }
    // First index with timestamp >= t.
    let idx = traj.partition_point(|r| r.timestamp < t);
    if interpolate {
        if idx == 0 {
            let first = &traj[0];
            return (first.timestamp == t).then(|| (first.rotation, first.translation));
        }
        if idx == traj.len() {
            return None;
        }
        let (lo, hi) = (&traj[idx - 1], &traj[idx]);
        if (t - lo.timestamp).min(hi.timestamp - t) > max_dt {
            return None;
        }
        let u = (t - lo.timestamp) / (hi.timestamp - lo.timestamp);
        // Exact hits return the sample verbatim, sign included.
        if u == 0.0 {
            return Some((lo.rotation, lo.translation));
        }
        if u == 1.0 {
            return Some((hi.rotation, hi.translation));
        }
        let rotation = lo.rotation.slerp(&hi.rotation, u);
        let translation = lo.translation * (1.0 - u) + hi.translation * u;
        Some((rotation, translation))
    } else {
        let mut best: Option<&TrajectoryRecord> = None;
        for candidate in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(r) = traj.get(candidate) {
                if best.is_none_or(|b| (r.timestamp - t).abs() < (b.timestamp - t).abs()) {
                    best = Some(r);
                }
            }
        }
        let b = best?;
        ((b.timestamp - t).abs() <= max_dt).then(|| (b.rotation, b.translation))
    }
}

/// Associates the two trajectories in time and forms relative-motion pairs
/// `pose(t_i)^-1 * pose(t_{i+stride})` over the sensor-a timestamps; the two
/// motions of a pair always span the identical time interval.
pub fn make_motion_pairs(
    traj_a: &[TrajectoryRecord],
    traj_b: &[TrajectoryRecord],
    policy: &PairingPolicy,
    scale_index: usize,
) -> Result<Vec<MotionPair>> {
    policy.validate()?;
    if traj_a.len() < policy.stride + 1 || traj_b.len() < policy.stride + 1 {
        return Err(CalibError::TooFewPairs { count: 0 });
    }
    let max_dt = match policy.max_dt {
        Some(dt) => dt,
        None => {
            let mut gaps: Vec<f64> =
                traj_b.windows(2).map(|w| w[1].timestamp - w[0].timestamp).collect();
            gaps.sort_by(f64::total_cmp);
            0.5 * gaps[gaps.len() / 2]
        }
    };
    if !(max_dt > 0.0) {
        return Err(CalibError::InvalidParameter(
            "association window must be positive; sensor-b timestamps collapse".into(),
        ));
    }

    let mut aligned: Vec<(DualQuaternion, DualQuaternion)> = Vec::new();
    for rec in traj_a {
        if let Some((qb, tb)) = resample(traj_b, rec.timestamp, max_dt, policy.interpolate) {
            aligned.push((
                DualQuaternion::from_pose(rec.rotation, &rec.translation)?,
                DualQuaternion::from_pose(qb, &tb)?,
            ));
        }
    }
    if aligned.is_empty() {
        return Err(CalibError::NoOverlap);
    }

    let mut pairs = Vec::new();
    for i in 0..aligned.len().saturating_sub(policy.stride) {
        let (pa_i, pb_i) = &aligned[i];
        let (pa_j, pb_j) = &aligned[i + policy.stride];
        let motion_a = (pa_i.conjugate() * *pa_j).canonicalized();
        let mut motion_b = pb_i.conjugate() * *pb_j;
        // A quaternion and its negation encode the same motion, but the
        // hand-eye cycle couples the representatives: corresponding motions
        // have equal rotation angles, so their real parts must lie in the
        // same hemisphere. Absolute-pose files carry arbitrary signs.
        if motion_a.real.dot(&motion_b.real) < 0.0 {
            motion_b = DualQuaternion::from_parts(
                motion_b.real.scaled(-1.0),
                motion_b.dual.scaled(-1.0),
            );
        }
        if let Some(th) = policy.min_rotation {
            if motion_a.rotation().rotation_angle() < th {
                continue;
            }
        }
        pairs.push(MotionPair { motion_a, motion_b, scale_index });
    }
    if pairs.len() < 3 {
        return Err(CalibError::TooFewPairs { count: pairs.len() });
    }
    Ok(pairs)
}

/// Calibration result document (schema `dqcalib/1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema: String,
    /// "fast" or "global".
    pub solver: String,
    /// Unit quaternion, scalar-first, canonicalized (non-negative scalar).
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    /// One scale factor per sensor-b sequence group.
    pub alpha: Vec<f64>,
    pub cost: f64,
    /// Lower bound on every feasible cost, when one was computed.
    pub dual_value: Option<f64>,
    /// cost - dual_value, when a dual value was computed.
    pub gap: Option<f64>,
    /// Whether the solution is certified globally optimal.
    pub certified: Option<bool>,
    /// Null-space dimension seen by the global recovery.
    pub nullspace_dim: Option<usize>,
    /// Filled by callers that time the solve; excluded from reproducibility
    /// comparisons.
    pub wall_time_ms: Option<f64>,
    pub warnings: Vec<String>,
}

impl CalibrationReport {
    pub fn from_fast(solution: &FastSolution, warnings: &[ProblemWarning]) -> Result<Self> {
        let calibration = extract_calibration(&solution.state)?;
        let (q, t) = calibration.pose.to_pose()?;
        let q = q.canonicalized();
        let certificate = solution.certificate.as_ref();
        Ok(CalibrationReport {
            schema: RESULT_SCHEMA.into(),
            solver: "fast".into(),
            rotation: [q.w, q.x, q.y, q.z],
            translation: [t.x, t.y, t.z],
            alpha: calibration.alphas,
            cost: solution.cost,
            dual_value: certificate.map(|c| solution.cost - c.gap),
            gap: certificate.map(|c| c.gap),
            certified: Some(certificate.is_some_and(|c| c.certified)),
            nullspace_dim: None,
            wall_time_ms: None,
            warnings: warnings.iter().map(|w| w.to_string()).collect(),
        })
    }

    pub fn from_global(solution: &GlobalSolution, warnings: &[ProblemWarning]) -> Result<Self> {
        let calibration = extract_calibration(&solution.state)?;
        let (q, t) = calibration.pose.to_pose()?;
        let q = q.canonicalized();
        Ok(CalibrationReport {
            schema: RESULT_SCHEMA.into(),
            solver: "global".into(),
            rotation: [q.w, q.x, q.y, q.z],
            translation: [t.x, t.y, t.z],
            alpha: calibration.alphas,
            cost: solution.cost,
            dual_value: Some(solution.dual_value),
            gap: Some(solution.gap),
            certified: Some(solution.gap.abs() <= 1e-6 * (1.0 + solution.cost.abs())),
            nullspace_dim: Some(solution.nullspace_dim),
            wall_time_ms: None,
            warnings: warnings.iter().map(|w| w.to_string()).collect(),
        })
    }

    /// Pretty JSON with a trailing newline; field order is fixed, so the
    /// bytes are reproducible.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain struct serializes");
        s.push('\n');
        s
    }
}

/// Writes a result document.
pub fn write_result(report: &CalibrationReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_json()).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a result document back, checking the schema tag.
pub fn read_result(path: impl AsRef<Path>) -> Result<CalibrationReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let report: CalibrationReport =
        serde_json::from_str(&text).map_err(|e| CalibError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
    if report.schema != RESULT_SCHEMA {
        return Err(CalibError::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("unsupported schema {:?}", report.schema),
        });
    }
    Ok(report)
}
