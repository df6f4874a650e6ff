//! Simulation and open-loop motion planning for a three-cable suspended
//! parallel robot.
//!
//! The pipeline runs maneuver law → sampled reference trajectory → cable
//! natural lengths (inverse kinematics plus pretension) → drum shaft speed →
//! quantized stepper pulse schedule. The same natural-length commands drive
//! a rigid-payload simulation with unilateral elastic cables, used to check
//! residual sway and motor loads.

pub mod actuation;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod pipeline;
pub mod planners;
pub mod types;

pub use config::{load_config, Config, SimSettings};
pub use error::{Error, Result};
pub use io::read_numeric_csv;
pub use types::{
    default_rig, CableSpec, MotorSpec, Orientation, PayloadSpec, PayloadState, PayloadVariant, Pose, Rig,
    RobotGeometry, Vec3,
};
