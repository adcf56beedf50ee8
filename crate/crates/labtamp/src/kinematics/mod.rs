//! Serial-manipulator model: forward kinematics, geometric Jacobian,
//! multi-restart inverse kinematics and manipulability.
//!
//! Joints are revolute, parameterized by modified (Craig) DH rows
//! `Rx(α)·Tx(a)·Rz(θ+offset)·Tz(d)` plus a fixed flange-to-tool transform.
//! All poses are expressed relative to the robot base.

mod models;

pub use models::{load_robot, panda7, panda8, RobotModelError};

use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::Transform;
use crate::seeding::{derive_seed, rng_from_seed};

/// IK pose tolerance: position [m].
pub const IK_POS_TOL: f64 = 1e-4;
/// IK pose tolerance: orientation [rad].
pub const IK_ROT_TOL: f64 = 1e-3;

const IK_DAMPING: f64 = 1e-3;
const IK_MAX_ITERS: usize = 200;
const IK_MAX_STEP: f64 = 0.5;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("joint vector has {got} entries, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// One modified-DH row plus joint limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhRow {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    pub theta_offset: f64,
    /// [lower, upper] joint limits [rad], lower < upper.
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModel {
    pub name: String,
    pub dh: Vec<DhRow>,
    pub tool: Transform,
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        self.dh.len()
    }

    pub fn validate(&self) -> Result<(), RobotModelError> {
        if self.dh.is_empty() {
            return Err(RobotModelError::Invalid("model has no joints".into()));
        }
        for (i, row) in self.dh.iter().enumerate() {
            if row.limits[0] >= row.limits[1] {
                return Err(RobotModelError::Invalid(format!(
                    "joint {}: lower limit must be below upper",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.0.iter()
            .zip(&self.dh)
            .all(|(qi, row)| *qi >= row.limits[0] - 1e-12 && *qi <= row.limits[1] + 1e-12)
    }

    pub fn clamp_to_limits(&self, q: &mut JointConfig) {
        for (qi, row) in q.0.iter_mut().zip(&self.dh) {
            *qi = qi.clamp(row.limits[0], row.limits[1]);
        }
    }

    /// Uniform in-limits sample.
    pub fn random_config<R: Rng>(&self, rng: &mut R) -> JointConfig {
        JointConfig(DVector::from_iterator(
            self.dof(),
            self.dh.iter().map(|row| rng.gen_range(row.limits[0]..row.limits[1])),
        ))
    }

    fn check_dof(&self, q: &JointConfig) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }
}

/// Joint-angle vector [rad]; length equals the model's DoF.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig(pub DVector<f64>);

impl JointConfig {
    pub fn zeros(dof: usize) -> Self {
        JointConfig(DVector::zeros(dof))
    }

    pub fn from_vec(q: Vec<f64>) -> Self {
        JointConfig(DVector::from_vec(q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Joint-space L2 distance [rad].
    pub fn distance(&self, other: &JointConfig) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl Serialize for JointConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JointConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(JointConfig::from_vec(Vec::<f64>::deserialize(deserializer)?))
    }
}

fn dh_pre(row: &DhRow) -> Transform {
    // Rx(alpha) · Tx(a): fixed part before the joint rotation.
    Transform::new(
        nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), row.alpha),
        Vector3::zeros(),
    )
    .compose(&Transform::from_translation(Vector3::new(row.a, 0.0, 0.0)))
}

fn dh_post(row: &DhRow, q: f64) -> Transform {
    // Rz(theta) · Tz(d).
    Transform::new(
        nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), row.theta_offset + q),
        Vector3::zeros(),
    )
    .compose(&Transform::from_translation(Vector3::new(0.0, 0.0, row.d)))
}

/// End-effector pose in the base frame.
pub fn fk(model: &RobotModel, q: &JointConfig) -> Result<Transform, KinematicsError> {
    model.check_dof(q)?;
    let mut cum = Transform::identity();
    for (row, qi) in model.dh.iter().zip(q.0.iter()) {
        cum = cum.compose(&dh_pre(row)).compose(&dh_post(row, *qi));
    }
    Ok(cum.compose(&model.tool))
}

/// Joint axes and origins in the base frame, plus the tool pose.
/// Axis `i` is the rotation axis of joint `i` with the first `i-1` joints
/// applied.
pub(crate) fn joint_frames(
    model: &RobotModel,
    q: &JointConfig,
) -> Result<(Vec<(Vector3<f64>, Vector3<f64>)>, Transform), KinematicsError> {
    model.check_dof(q)?;
    let mut cum = Transform::identity();
    let mut frames = Vec::with_capacity(model.dof());
    for (row, qi) in model.dh.iter().zip(q.0.iter()) {
        cum = cum.compose(&dh_pre(row));
        let axis = cum.rotation * Vector3::z();
        frames.push((axis, cum.translation));
        cum = cum.compose(&dh_post(row, *qi));
    }
    Ok((frames, cum.compose(&model.tool)))
}

/// Chain of joint-frame origins from base to tool tip, for link capsules.
pub fn link_points(model: &RobotModel, q: &JointConfig) -> Result<Vec<Vector3<f64>>, KinematicsError> {
    model.check_dof(q)?;
    let mut cum = Transform::identity();
    let mut points = vec![Vector3::zeros()];
    for (row, qi) in model.dh.iter().zip(q.0.iter()) {
        cum = cum.compose(&dh_pre(row)).compose(&dh_post(row, *qi));
        points.push(cum.translation);
    }
    points.push(cum.compose(&model.tool).translation);
    Ok(points)
}

/// Geometric Jacobian, 6×dof: rows 0–2 linear [m/rad], rows 3–5 angular.
pub fn jacobian(model: &RobotModel, q: &JointConfig) -> Result<DMatrix<f64>, KinematicsError> {
    let (frames, tool) = joint_frames(model, q)?;
    let mut j = DMatrix::zeros(6, model.dof());
    for (i, (axis, origin)) in frames.iter().enumerate() {
        let linear = axis.cross(&(tool.translation - origin));
        let mut col = j.column_mut(i);
        col[0] = linear.x;
        col[1] = linear.y;
        col[2] = linear.z;
        col[3] = axis.x;
        col[4] = axis.y;
        col[5] = axis.z;
    }
    Ok(j)
}

/// Yoshikawa manipulability w(q) = √det(J·Jᵀ); zero exactly at
/// singularities. Models with fewer than six joints use the leading `dof`
/// rows of the task Jacobian (planar embeddings), making J square.
pub fn manipulability(model: &RobotModel, q: &JointConfig) -> Result<f64, KinematicsError> {
    let j = jacobian(model, q)?;
    let dof = model.dof();
    let det = if dof >= 6 {
        let jjt = &j * j.transpose();
        jjt.determinant()
    } else {
        let jr = j.rows(0, dof).into_owned();
        let sq = &jr * jr.transpose();
        sq.determinant()
    };
    Ok(det.max(0.0).sqrt())
}

/// 6-vector pose error from `current` to `target`: translation delta then
/// rotation log (scaled axis).
pub fn pose_error(current: &Transform, target: &Transform) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// IK scoring: pure pose error, or pose error traded against
/// manipulability for maneuvers that must stay far from singularities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkObjective {
    maximize_manipulability: bool,
    manipulability_weight: f64,
}

impl IkObjective {
    /// Sum-of-squares pose error only (weight exactly 0).
    pub fn pose_error_only() -> Self {
        IkObjective {
            maximize_manipulability: false,
            manipulability_weight: 0.0,
        }
    }

    /// Pose error minus `weight`·manipulability, `weight` ≥ 0.
    pub fn with_manipulability(weight: f64) -> Self {
        assert!(weight >= 0.0, "manipulability weight must be ≥ 0");
        IkObjective {
            maximize_manipulability: true,
            manipulability_weight: weight,
        }
    }

    pub fn weight(&self) -> f64 {
        self.manipulability_weight
    }

    fn score(&self, model: &RobotModel, q: &JointConfig, err: &Vector6<f64>) -> f64 {
        let pose_term = err.norm_squared();
        if self.maximize_manipulability {
            pose_term - self.manipulability_weight * manipulability(model, q).unwrap_or(0.0)
        } else {
            pose_term
        }
    }
}

#[derive(Debug, Clone)]
pub struct IkSolution {
    pub q: JointConfig,
    pub pos_err: f64,
    pub rot_err: f64,
    /// Objective value the winner was selected by.
    pub score: f64,
    pub restart: usize,
}

#[derive(Debug, Error)]
#[error("IK failed after {restarts} restarts (best residual {best_pos_err:.2e} m, {best_rot_err:.2e} rad)")]
pub struct IkFailure {
    pub restarts: usize,
    pub best_pos_err: f64,
    pub best_rot_err: f64,
}

/// Multi-restart damped-least-squares IK.
///
/// Each restart draws a uniform in-limits seed configuration from its own
/// sub-seed and iterates Newton steps on the pose error. Among converged
/// restarts the winner minimizes `(objective score, restart index)`, so the
/// result is identical however restarts are scheduled.
pub fn solve_ik(
    model: &RobotModel,
    target: &Transform,
    objective: IkObjective,
    restarts: usize,
    seed: u64,
) -> Result<IkSolution, IkFailure> {
    assert!(restarts >= 1, "restarts must be ≥ 1");
    let mut best: Option<IkSolution> = None;
    let mut best_residual = (f64::INFINITY, f64::INFINITY);

    for restart in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(seed, restart as u64));
        let q0 = model.random_config(&mut rng);
        match newton_descend(model, target, q0) {
            Ok((q, pos_err, rot_err)) => {
                let err = pose_error(&fk(model, &q).expect("dof checked"), target);
                let score = objective.score(model, &q, &err);
                let candidate = IkSolution {
                    q,
                    pos_err,
                    rot_err,
                    score,
                    restart,
                };
                let better = match &best {
                    None => true,
                    Some(b) => (score, restart) < (b.score, b.restart),
                };
                if better {
                    best = Some(candidate);
                }
            }
            Err((pos_err, rot_err)) => {
                if (pos_err, rot_err) < best_residual {
                    best_residual = (pos_err, rot_err);
                }
            }
        }
    }

    best.ok_or(IkFailure {
        restarts,
        best_pos_err: best_residual.0,
        best_rot_err: best_residual.1,
    })
}

/// Damped-least-squares descent from one seed; `Ok` on tolerance hit.
fn newton_descend(
    model: &RobotModel,
    target: &Transform,
    mut q: JointConfig,
) -> Result<(JointConfig, f64, f64), (f64, f64)> {
    let mut best_res = (f64::INFINITY, f64::INFINITY);
    for _ in 0..IK_MAX_ITERS {
        let cur = fk(model, &q).expect("dof checked");
        let err = pose_error(&cur, target);
        let pos_err = err.fixed_rows::<3>(0).norm();
        let rot_err = err.fixed_rows::<3>(3).norm();
        if (pos_err, rot_err) < best_res {
            best_res = (pos_err, rot_err);
        }
        if pos_err <= IK_POS_TOL && rot_err <= IK_ROT_TOL {
            return Ok((q, pos_err, rot_err));
        }
        let j = jacobian(model, &q).expect("dof checked");
        let a = &j * j.transpose() + Matrix6::identity() * (IK_DAMPING * IK_DAMPING);
        let Some(y) = a.lu().solve(&err) else {
            return Err(best_res);
        };
        let mut dq = j.transpose() * y;
        let step = dq.norm();
        if step > IK_MAX_STEP {
            dq *= IK_MAX_STEP / step;
        }
        q.0 += dq;
        model.clamp_to_limits(&mut q);
    }
    Err(best_res)
}
