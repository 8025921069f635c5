use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::state::{element_deformation, reference_l2_squared, FlowState, StepConfig};
use crate::elliptic::{PressureField, VelocityField};
use crate::fem::{
    vector_norms, Loads, LuSolver, P2Space, SaddlePattern, StokesOperator, VelocityConstraints, ViscousForm,
};
use crate::{Error, Result};

/// Largest number of step halvings tried when an update tangles the mesh.
const MAX_HALVINGS: usize = 4;

/// Diagnostics of one time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub dt: f64,
    pub halvings: usize,
    pub solver_residual: f64,
    pub kinetic_before: f64,
    pub kinetic_after: f64,
    /// `|(v_new - v_old) / dt|^2` in `L2` and `H1`.
    pub vt_l2_sq: f64,
    pub vt_h1_sq: f64,
}

/// Semi-implicit stepper: implicit viscous and pressure terms with the
/// geometry frozen at the current flow map, explicit flow map update.
/// Keeps the sparsity pattern and symbolic factorization between steps.
pub struct Stepper {
    pub cfg: StepConfig,
    pattern: Option<(Arc<P2Space>, SaddlePattern)>,
    solver: LuSolver,
}

impl Stepper {
    pub fn new(cfg: StepConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, pattern: None, solver: LuSolver::new() })
    }

    /// Step size for `state`: the configured `dt` capped by the CFL bound.
    pub fn step_size(&self, state: &FlowState) -> f64 {
        let vmax = (0..state.space.n_nodes()).map(|i| state.v.node(i).norm()).fold(0.0, f64::max);
        if vmax > 0.0 {
            self.cfg.dt.min(self.cfg.cfl * state.min_edge() / vmax)
        } else {
            self.cfg.dt
        }
    }

    fn pattern(&mut self, space: &Arc<P2Space>) -> &SaddlePattern {
        let stale = self.pattern.as_ref().map_or(true, |(s, _)| !Arc::ptr_eq(s, space));
        if stale {
            let mask = vec![false; space.n_velocity()];
            self.pattern = Some((space.clone(), SaddlePattern::new(space, mask, false)));
        }
        &self.pattern.as_ref().unwrap().1
    }

    /// Advances `state` by one step of size at most `dt`.
    pub fn step(&mut self, state: &FlowState) -> Result<(FlowState, StepInfo)> {
        self.step_with(state, self.step_size(state))
    }

    /// Advances `state` by one step of size `dt`, halving it if the update tangles.
    pub fn step_with(&mut self, state: &FlowState, dt: f64) -> Result<(FlowState, StepInfo)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("step size must be positive (got {dt})")));
        }
        let space = state.space.clone();
        let bc = VelocityConstraints::free(&space);
        let mut dt = dt;
        let mut halvings = 0;
        loop {
            let op = StokesOperator {
                nu: self.cfg.nu,
                mass: 1.0 / dt,
                form: ViscousForm::Deformation,
                pressure_mean: false,
                reference_mass: true,
            };
            let loads = Loads { previous: Some(&state.v.coeffs), ..Default::default() };
            let sys = self.pattern(&space).assemble(&space, &state.eta, &op, &bc, &loads)?;
            let sol = sys.solve(&mut self.solver)?;
            let eta: Vec<f64> = state.eta.iter().zip(&sol.velocity).map(|(x, v)| x + dt * v).collect();
            match element_deformation(&space, &eta) {
                Ok((a, det_j)) if super::state::det_range(&space, &eta).0 > 0.0 => {
                    let vt: Vec<f64> =
                        sol.velocity.iter().zip(&state.v.coeffs).map(|(n, o)| (n - o) / dt).collect();
                    let vt_norms = vector_norms(&space, &vt);
                    let v = VelocityField::new(space.clone(), sol.velocity)?;
                    let q = PressureField::new(space.clone(), sol.pressure)?;
                    let next = FlowState {
                        t: state.t + dt,
                        space: space.clone(),
                        eta,
                        v,
                        q,
                        a,
                        det_j,
                        step: state.step + 1,
                        remesh_count: state.remesh_count,
                        tracking: state.tracking.clone(),
                    };
                    let info = StepInfo {
                        dt,
                        halvings,
                        solver_residual: sol.residual,
                        kinetic_before: state.kinetic_energy(),
                        kinetic_after: next.kinetic_energy(),
                        vt_l2_sq: reference_l2_squared(&space, &vt),
                        vt_h1_sq: vt_norms.h1().powi(2),
                    };
                    return Ok((next, info));
                }
                Ok(_) | Err(Error::Tangled { .. }) if halvings < MAX_HALVINGS => {
                    dt *= 0.5;
                    halvings += 1;
                }
                Ok(_) => {
                    let (det, element) = crate::fem::min_det(&space, &eta);
                    return Err(Error::Tangled { element, det });
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// One step with a fresh [`Stepper`].
pub fn step(state: &FlowState, cfg: &StepConfig) -> Result<FlowState> {
    Ok(Stepper::new(*cfg)?.step(state)?.0)
}
