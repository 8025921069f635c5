//! Stokes problems for the initial data: the boundary profile `b0`, the
//! Dirichlet and slip Stokes solves, the initial pressure and the
//! compatibility residual.

mod fields;
mod profile;
mod stokes;

pub use fields::{PressureField, VelocityField};
pub use profile::{build_b0, outward_normal_at, plateau, smooth_step, BoundaryProfile, ProfileOptions};
pub use stokes::{
    assemble_stokes, compatibility_residual, divergence_l2, gradient_at, solve_initial_pressure,
    solve_initial_velocity, solve_saddle, solve_stokes, InitialPressureReport, InitialVelocity,
    InitialVelocityReport, StokesBc, StokesData, StokesSolution, COMPATIBILITY_TOL,
};

#[cfg(test)]
mod tests;
