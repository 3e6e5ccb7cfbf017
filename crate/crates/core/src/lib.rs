//! Hybrid attitude and gyro-bias observers on SO(3).
//!
//! The observers combine a family of angularly warped potentials with a
//! hysteresis switching rule so that the estimation error converges from
//! every initial condition, including the unstable critical points that
//! trap smooth observers.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x <= tol)` also rejects NaN.

pub mod eigen;
pub mod error;
pub mod hybrid_design;
pub mod observer;
pub mod potentials;
pub mod sim;
pub mod so3;
pub mod warping;

pub use error::{Error, Result};
pub use hybrid_design::{make_config, HybridConfig, Variant};
pub use observer::{Gains, MeasurementSet, Mode, Observer, ObserverState};
pub use potentials::WeightMatrix;
pub use sim::{default_example, run, ScenarioConfig, SimOutput, TraceRecord};
pub use so3::{hat, psi, vee, AngleAxis, Mat3, Rotation, UnitQuaternion, Vec3};
pub use warping::{PotentialKind, WarpParams};
