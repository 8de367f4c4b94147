//! Neuro-genetic inverse kinematics toolkit.
//!
//! The pipeline in one sentence: dense networks are trained to solve IK by
//! mapping target poses to joint angles and measuring the loss in Cartesian
//! space through differentiable forward kinematics, then a genetic algorithm
//! seeded with the network's solutions (and an optional damped least-squares
//! refiner) squeezes out the remaining error.
//!
//! Modules:
//! - [`math`], [`chain`]: quaternion/transform algebra and the chain model.
//! - [`kinematics`]: forward kinematics, pose Jacobian, pose errors.
//! - [`dataset`]: workspace-bounded sampling, splits, CSV persistence.
//! - [`neural`]: a small dense-net engine with reverse-mode gradients.
//! - [`goals`], [`training`]: weighted multi-objective cost and the
//!   cycle-consistent training loops for the regressor and the
//!   noise-conditioned generator.
//! - [`solvers`]: genetic search, local refinement, hybrid pipelines.
//! - [`evalbench`]: test-set evaluation and runtime measurement.

pub mod chain;
pub mod dataset;
pub mod evalbench;
pub mod goals;
pub mod hull;
pub mod kinematics;
pub mod math;
pub mod neural;
pub mod rngutil;
pub mod sample_chains;
pub mod solvers;
pub mod training;

pub use chain::{parse_chain, serialize_chain, JointSpec, KinematicChain, Pose};
pub use kinematics::{fk, fk_jacobian, pose_error, JointConfig, PoseError, PoseJacobian};
pub use math::{quat_angle_deg, quat_mul, Quaternion, Transform, Vec3};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by chain parsing, dataset and model persistence, and
/// training.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("chain document: {0}")]
    ChainFormat(String),

    #[error("joint '{joint}', field {field}: {reason}")]
    JointInvalid {
        joint: String,
        field: &'static str,
        reason: String,
    },

    #[error("duplicate joint name '{0}'")]
    DuplicateJoint(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("dataset row {row}: {reason}")]
    DatasetRow { row: usize, reason: String },

    #[error("chain hash mismatch: file has {found}, expected {expected}")]
    ChainHashMismatch { found: String, expected: String },

    #[error(
        "workspace bounds look unreachable: acceptance rate {rate:.6} over the last {window} samples"
    )]
    BoundsUnreachable { rate: f64, window: u64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("model file version {found} unsupported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("training diverged after {restarts} restart(s)")]
    TrainingDiverged {
        restarts: u32,
        report: Box<training::TrainReport>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
