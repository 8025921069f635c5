//! Two-dimensional Lagrangian simulator for the free-surface incompressible
//! Navier-Stokes equations on a family of near-self-intersecting "dinosaur
//! wave" domains.
//!
//! The crate is organised in layers:
//!
//! * [`geometry`] builds the domain family, its charts, boundary splines,
//!   triangulations and the self-intersection / gap queries used to detect a
//!   splash.
//! * [`fem`] holds the quadratic/linear mixed finite element machinery and
//!   the sparse saddle-point solver.
//! * [`elliptic`] assembles the Stokes and pressure problems that produce the
//!   initial data.
//! * [`lagrangian`] advances the flow map in time and carries the runtime
//!   monitors.
//! * [`experiments`] orchestrates splash runs, sweeps and fits.
//! * [`cli_io`] is the configuration, serialization and command-line layer.

pub mod cli_io;
pub mod elliptic;
pub mod experiments;
pub mod fem;
pub mod geometry;
pub mod lagrangian;

mod error;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 real matrices.
pub type Mat2 = nalgebra::Matrix2<f64>;
