//! Task-and-motion planning for a simulated robotic chemistry lab.
//!
//! The pipeline turns an XDL experiment description into executable
//! pick/move/place/pour plans for a 7- or 8-DoF serial arm, keeps grasped
//! vessels level with a constrained motion planner, and closes the loop
//! against simulated scale and turbidity instruments.
//!
//! Module map:
//! - [`scene`] — workspace model: vessels, devices, obstacles, poses.
//! - [`kinematics`] — serial-arm FK, Jacobian, multi-restart IK,
//!   manipulability.
//! - [`cplanner`] — orientation-constrained motion planning (projection +
//!   roadmap) and collision checking.
//! - [`xdl`] — XDL parser and translation to planning goals.
//! - [`taskplan`] — grounded symbolic planner with optimistic stream
//!   instantiation and the per-goal planning loop.
//! - [`skills`] — pouring controllers and the simulated pouring plant.
//! - [`perception`] — turbidity model, dissolution detection, solubility
//!   and recrystallization arithmetic, calibration error bound.

pub mod cplanner;
pub mod kinematics;
pub mod perception;
pub mod scene;
pub mod seeding;
pub mod skills;
pub mod taskplan;
pub mod xdl;
