//! Splash experiments: single runs with splash-time bracketing and particle
//! tracking, epsilon sweeps, drift-exponent fits, the general splash-domain
//! pipeline and the manufactured Stokes convergence study.

mod convergence;
mod fit;
mod general;
mod run;
mod setup;
mod sweep;
mod tracking;

pub use convergence::{
    convergence_study, disk_space, manufactured_forcing, manufactured_pressure, manufactured_velocity,
    ConvergenceReport, ConvergenceRow,
};
pub use fit::{fit_drift_exponent, fit_power_law, DriftFit, PowerFit};
pub use general::{general_splash_run, general_sweep, proximity, GeneralRow, GeneralRun, GeneralSweepReport, Proximity};
pub use run::{
    interpolate_pole, ordering_crossing, resume_run, run_splash_experiment, Frame, RunMonitors, RunOptions,
    RunOutcome, RunReport, RunSnapshot, SplashEvent, TrajectoryRow,
};
pub use setup::{build_initial_data, DomainSource, InitialData, InitialDataSummary};
pub use sweep::{epsilon_sweep, Sweep, SweepReport, SweepRow, SweepSpec, SweepTrends};
pub use tracking::{track_particles, ParticleTracking};
