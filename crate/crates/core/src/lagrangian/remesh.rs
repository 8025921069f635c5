use std::sync::Arc;

use super::state::{det_range, element_deformation, FlowState, StepConfig};
use crate::elliptic::{PressureField, VelocityField};
use crate::fem::{p1_shape, p2_grad, p2_shape, P2Space};
use crate::geometry::{detect_self_intersection, triangulate_with, Contact, MeshOptions};
use crate::{Error, Mat2, Result, Vec2};

/// Result of [`remesh_if_needed`].
#[derive(Clone, Debug)]
pub enum RemeshOutcome {
    Unchanged,
    Remeshed(FlowState),
    /// The deformed boundary already touches itself; no remesh is possible.
    Splashed(Vec<Contact>),
}

/// Whether the current mesh violates the quality floor or the determinant bound.
pub fn needs_remesh(state: &FlowState, cfg: &StepConfig) -> bool {
    state.min_angle() < cfg.quality_floor || det_range(&state.space, &state.eta).0 < cfg.min_det
}

/// Remeshes `state` when its mesh quality or `det grad eta` is below the
/// configured limits.
pub fn remesh_if_needed(state: &FlowState, cfg: &StepConfig) -> Result<RemeshOutcome> {
    if needs_remesh(state, cfg) {
        remesh(state)
    } else {
        Ok(RemeshOutcome::Unchanged)
    }
}

/// Re-triangulates the current domain keeping every boundary vertex (and
/// its index), interpolates velocity and pressure at the new nodes and
/// resets the reference configuration to the current one.
pub fn remesh(state: &FlowState) -> Result<RemeshOutcome> {
    let boundary = state.boundary_positions();
    let report = detect_self_intersection(&boundary, 0.0);
    if !report.is_simple() {
        return Ok(RemeshOutcome::Splashed(report.contacts));
    }
    let curve = state.boundary_curve()?;
    let mesh = triangulate_with(&curve, &MeshOptions::new(state.space.mesh.target_size))?;
    let nb = boundary.len();
    if (0..nb).any(|k| mesh.vertices[k] != boundary[k]) {
        return Err(Error::LandmarkLost("remeshing moved a boundary vertex".into()));
    }
    let space = Arc::new(P2Space::new(mesh));
    let locator = CurrentLocator::new(state);
    let mut v = vec![0.0; space.n_velocity()];
    let mut q = vec![0.0; space.n_vertices()];
    for (i, &x) in space.node_pos.iter().enumerate() {
        let val = if i < nb {
            state.v.node(i)
        } else {
            let (e, xi, et) = locator.locate(x)?;
            state.space.eval_in(&state.v.coeffs, e, xi, et)
        };
        v[2 * i] = val.x;
        v[2 * i + 1] = val.y;
        if i < space.n_vertices() {
            q[i] = if i < nb {
                state.q.values[i]
            } else {
                let (e, xi, et) = locator.locate(x)?;
                let psi = p1_shape(xi, et);
                let t = state.space.mesh.triangles[e];
                (0..3).map(|a| psi[a] * state.q.values[t[a]]).sum()
            };
        }
    }
    let eta = space.identity_map();
    let (a, det_j) = element_deformation(&space, &eta)?;
    Ok(RemeshOutcome::Remeshed(FlowState {
        t: state.t,
        space: space.clone(),
        eta,
        v: VelocityField::new(space.clone(), v)?,
        q: PressureField::new(space, q)?,
        a,
        det_j,
        step: state.step,
        remesh_count: state.remesh_count + 1,
        tracking: state.tracking.clone(),
    }))
}

/// Inverts the quadratic flow map of a state: finds the reference element
/// and local coordinates of a current position.
pub struct CurrentLocator<'a> {
    state: &'a FlowState,
    /// Current straight-sided triangle corners.
    corners: Vec<[Vec2; 3]>,
}

impl<'a> CurrentLocator<'a> {
    pub fn new(state: &'a FlowState) -> Self {
        let corners = state.space.mesh.triangles.iter().map(|t| t.map(|i| state.position(i))).collect();
        Self { state, corners }
    }

    fn map(&self, e: usize, xi: f64, et: f64) -> (Vec2, Mat2) {
        let nodes = &self.state.space.elem_nodes[e];
        let phi = p2_shape(xi, et);
        let g = p2_grad(xi, et);
        let mut x = Vec2::zeros();
        let mut jac = Mat2::zeros();
        for a in 0..6 {
            let p = self.state.position(nodes[a]);
            x += p * phi[a];
            jac += p * g[a].transpose();
        }
        (x, jac)
    }

    /// Element and local coordinates of the current point `x`.
    pub fn locate(&self, x: Vec2) -> Result<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (e, c) in self.corners.iter().enumerate() {
            let jac = Mat2::from_columns(&[c[1] - c[0], c[2] - c[0]]);
            let Some(inv) = jac.try_inverse() else { continue };
            let mut l = inv * (x - c[0]);
            // Newton on the curved element map, starting from the straight guess
            for _ in 0..20 {
                let (y, j) = self.map(e, l.x, l.y);
                let Some(ji) = j.try_inverse() else { break };
                let dl = ji * (x - y);
                l += dl;
                if dl.norm() < 1e-15 {
                    break;
                }
            }
            let outside = (-l.x).max(-l.y).max(l.x + l.y - 1.0);
            if best.map_or(true, |b| outside < b.3) {
                best = Some((e, l.x, l.y, outside));
            }
            if outside <= 1e-12 {
                break;
            }
        }
        match best {
            Some((e, xi, et, out)) if out < 1e-8 => Ok((e, xi, et)),
            _ => Err(Error::Geometry(format!("point ({:.6}, {:.6}) lies outside the deformed mesh", x.x, x.y))),
        }
    }
}
