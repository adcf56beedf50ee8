//! Built-in robot models and the JSON model-file loader.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::{DhRow, RobotModel};
use crate::scene::Transform;

#[derive(Debug, Error)]
pub enum RobotModelError {
    #[error("cannot read robot model {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("robot model parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid robot model: {0}")]
    Invalid(String),
}

fn row(a: f64, d: f64, alpha: f64, limits: [f64; 2]) -> DhRow {
    DhRow {
        a,
        d,
        alpha,
        theta_offset: 0.0,
        limits,
    }
}

fn panda_rows() -> Vec<DhRow> {
    vec![
        row(0.0, 0.333, 0.0, [-2.8973, 2.8973]),
        row(0.0, 0.0, -FRAC_PI_2, [-1.7628, 1.7628]),
        row(0.0, 0.316, FRAC_PI_2, [-2.8973, 2.8973]),
        row(0.0825, 0.0, FRAC_PI_2, [-3.0718, -0.0698]),
        row(-0.0825, 0.384, -FRAC_PI_2, [-2.8973, 2.8973]),
        row(0.0, 0.0, FRAC_PI_2, [-0.0175, 3.7525]),
        row(0.088, 0.0, FRAC_PI_2, [-2.8973, 2.8973]),
    ]
}

/// 7-DoF arm (Franka Emika Panda parameters); tool frame at the flange.
pub fn panda7() -> RobotModel {
    RobotModel {
        name: "panda7".into(),
        dh: panda_rows(),
        tool: Transform::from_translation(Vector3::new(0.0, 0.0, 0.107)),
    }
}

/// 8-DoF variant: an extra revolute wrist joint at the flange whose axis
/// is perpendicular to the flange normal, limits ±π/2. At q₈ = 0 the tool
/// pose coincides with the 7-DoF flange; q₈ pitches the tool, which keeps
/// it level without driving the wrist toward its limits.
pub fn panda8() -> RobotModel {
    let mut dh = panda_rows();
    // Fold the flange offset into joint 7 so the extra joint sits at the
    // flange itself.
    dh[6].d = 0.107;
    dh.push(row(0.0, 0.0, FRAC_PI_2, [-FRAC_PI_2, FRAC_PI_2]));
    RobotModel {
        name: "panda8".into(),
        dh,
        tool: Transform::from_xyz_rpy([0.0, 0.0, 0.0], [-FRAC_PI_2, 0.0, 0.0]),
    }
}

/// Home (ready) configuration: elbow bent, tool pointing straight down.
pub fn home_config(model: &RobotModel) -> super::JointConfig {
    let mut q = vec![0.0, -PI / 4.0, 0.0, -3.0 * PI / 4.0, 0.0, PI / 2.0, PI / 4.0];
    if model.dof() == 8 {
        q.push(0.0);
    }
    q.truncate(model.dof());
    super::JointConfig::from_vec(q)
}

/// Loads a robot model file: `{"name", "dh": [{a,d,alpha,theta_offset,limits}], "tool"}`.
pub fn load_robot(path: &Path) -> Result<RobotModel, RobotModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| RobotModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let model: RobotModel = serde_json::from_str(&text).map_err(|e| RobotModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_validate() {
        panda7().validate().unwrap();
        panda8().validate().unwrap();
        assert_eq!(panda7().dof(), 7);
        assert_eq!(panda8().dof(), 8);
    }

    #[test]
    fn home_config_is_level_and_in_limits() {
        for model in [panda7(), panda8()] {
            let q = home_config(&model);
            assert!(model.within_limits(&q));
            let t = super::super::fk(&model, &q).unwrap();
            let (roll, pitch, _) = t.rpy();
            // Tool points down: roll π, pitch 0.
            assert!((crate::scene::wrap_angle(roll - PI)).abs() < 1e-9);
            assert!(pitch.abs() < 1e-9);
        }
    }
}
