//! Model and simulation of a vertebraic soft robotic tail driven by
//! pneumatic actuators.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod fitting;
pub mod io;
pub mod kinematics;
pub mod platform;
pub mod scenario;
pub mod series;
pub mod simulate;

pub use actuation::{ActuationError, ActuatorCommand, PressureProfile};
pub use config::{
    ActuatorAnchor, ConfigError, DynamicParams, JointGeometry, LeverArm, Model, ModelFile,
    PlatformParams, SoaParams,
};
pub use dynamics::{BaseReaction, DynamicsError, DynamicsTerms, JointState};
pub use fitting::{FitError, FitResult, LinearFit, PowerLaw, PulseExperiment, TorqueTrace};
pub use io::{IoError, Record};
pub use kinematics::{JointConfig, Pose};
pub use platform::{PlatformError, PlatformState};
pub use scenario::{Direction, RunOptions, RunSummary, ScenarioError, ScenarioFile, ScenarioKind};
pub use simulate::{
    JointRecord, JointTrajectory, MotionMetrics, PlatformTrajectory, SimulationError, Trajectory,
};
