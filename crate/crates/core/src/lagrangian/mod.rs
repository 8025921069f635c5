//! Time stepping of the Lagrangian free-boundary system: the flow map, its
//! inverse deformation, semi-implicit Stokes-type steps, remeshing and the
//! runtime monitors.

mod monitors;
mod remesh;
mod state;
mod step;

pub use monitors::{
    deformation_monitor, deformation_report, drift_monitor, energy, normals_from_boundary, normals_from_cofactor,
    DeformationReport, EnergyAccumulator, EnergyReport, EnergySummary, SeriesRow,
};
pub use remesh::{needs_remesh, remesh, remesh_if_needed, CurrentLocator, RemeshOutcome};
pub use state::{
    cofactor_a, det_range, element_deformation, grad_eta_at, reference_l2_squared, FlowSnapshot, FlowState, StepConfig, Tracking,
};
pub use step::{step, StepInfo, Stepper};

#[cfg(test)]
mod tests;
