//! Foot-mounted pedestrian dead reckoning.
//!
//! A strapdown INS is corrected by a 15-state error-state Kalman filter
//! during stance phases. Three estimator variants are provided:
//!
//! * `IEZ`: zero-velocity and roll/pitch updates only;
//! * `IEZ + classical QMD`: adds compass heading whenever the field magnitude
//!   is stable;
//! * `AIEZ`: a GLRT field detector chooses between the compass and the
//!   heuristic straight-path heading (HDR).
//!
//! The [`synth`] module generates ground-truth walks and IMU streams for
//! verification, [`io`] and [`config`] provide the CSV and TOML surfaces used
//! by the command-line tool.

pub mod config;
pub mod detectors;
pub mod ekf;
pub mod error;
pub mod heading;
pub mod ins;
pub mod io;
pub mod math;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
