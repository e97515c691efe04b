//! Simulation and certification toolkit for the inertial Kuramoto model
//!
//! ```text
//! m θ̈_i + θ̇_i = ν_i + (κ/N) Σ_j sin(θ_j − θ_i)          (m > 0)
//!       θ̇_i = ν_i + (κ/N) Σ_j sin(θ_j − θ_i)          (m = 0)
//! ```
//!
//! Modules:
//! - [`model`]: parameters, states, right-hand sides, symmetries, Duhamel residual
//! - [`integrate`](mod@integrate): certified trajectories, dense output, Taylor jets, root location
//! - [`observables`]: order parameter, diameters, ξ-criterion, lock certificates
//! - [`tikhonov`]: closed-form m → 0 error bounds and their checks against trajectories
//! - [`reconstruct`]: velocity reconstruction by contraction, determinability threshold
//! - [`experiments`]: seeded scenario pipelines producing JSON reports
//! - [`cli`]: the `sync-lab` command line
//!
//! The `examples/` directory has one runnable program per capability, e.g.
//! `cargo run --release --example tikhonov_sweep`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod model;
pub mod observables;
pub mod quad;
pub mod reconstruct;
pub mod tikhonov;

pub use error::{Error, Result};
pub use integrate::{integrate, Trajectory};
pub use model::{PhaseState, SystemParams};
