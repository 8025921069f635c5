use std::sync::Arc;

use faer::sparse::Triplet;
use serde::Serialize;

use super::fields::{PressureField, VelocityField};
use super::profile::BoundaryProfile;
use crate::fem::{
    assemble_saddle, element_kinematics, p1_poisson, p2_grad, Loads, LuSolver, P2Space, SaddleSystem, SparseSystem,
    StokesOperator, VelocityConstraints, ViscousForm, GAUSS3_POINTS, GAUSS3_WEIGHTS, NQ,
};
use crate::{Error, Mat2, Result, Vec2};

/// Relative tolerance of the Dirichlet compatibility check.
pub const COMPATIBILITY_TOL: f64 = 1e-3;

/// Boundary condition of a Stokes problem.
pub enum StokesBc<'a> {
    /// Full velocity `g` on the boundary.
    Dirichlet(&'a (dyn Fn(Vec2) -> Vec2 + Sync)),
    /// Outward normal velocity at each boundary node with zero tangential traction.
    Slip(&'a [f64]),
}

/// Data of `-nu div(...) + grad p = f`, `div u = phi`.
pub struct StokesData<'a> {
    pub nu: f64,
    pub body: Option<&'a (dyn Fn(Vec2) -> Vec2 + Sync)>,
    pub divergence: Option<&'a (dyn Fn(Vec2) -> f64 + Sync)>,
    pub bc: StokesBc<'a>,
}

/// Assembles the Stokes saddle system on the reference configuration.
/// Dirichlet problems use the gradient form; slip problems use the
/// deformation form so the zero tangential traction is natural.
pub fn assemble_stokes(space: &P2Space, data: &StokesData<'_>) -> Result<SaddleSystem> {
    if !(data.nu > 0.0) {
        return Err(Error::InvalidInput(format!("viscosity must be positive (got {})", data.nu)));
    }
    let pos = space.identity_map();
    let (bc, form) = match data.bc {
        StokesBc::Dirichlet(g) => {
            check_compatibility(space, g, data.divergence)?;
            (VelocityConstraints::dirichlet(space, |i| g(space.node_pos[i])), ViscousForm::Laplace)
        }
        StokesBc::Slip(values) => {
            if values.len() != space.boundary_nodes.len() {
                return Err(Error::InvalidInput("slip data length differs from boundary node count".into()));
            }
            (VelocityConstraints::slip(space, &pos, values), ViscousForm::Deformation)
        }
    };
    let op = StokesOperator { nu: data.nu, mass: 0.0, form, pressure_mean: true, reference_mass: false };
    let loads = Loads { body: data.body, previous: None, divergence: data.divergence };
    assemble_saddle(space, &pos, &op, &bc, &loads)
}

fn check_compatibility(
    space: &P2Space,
    g: &(dyn Fn(Vec2) -> Vec2 + Sync),
    divergence: Option<&(dyn Fn(Vec2) -> f64 + Sync)>,
) -> Result<()> {
    let w = space.boundary_weights(&space.identity_map());
    let mut flux = 0.0;
    let mut scale = 0.0;
    for (k, &i) in space.boundary_nodes.iter().enumerate() {
        let v = g(space.node_pos[i]);
        flux += v.dot(&w[k]);
        scale += v.norm() * w[k].norm();
    }
    let mut div = 0.0;
    if let Some(phi) = divergence {
        let wq = P2Space::weights();
        for e in 0..space.n_elements() {
            for q in 0..NQ {
                let d = phi(space.quad_point(e, q)) * wq[q] * space.geom[e].det;
                div += d;
                scale += d.abs();
            }
        }
    }
    if (flux - div).abs() > COMPATIBILITY_TOL * scale + 1e-12 {
        return Err(Error::IncompatibleData { divergence: div, flux });
    }
    Ok(())
}

/// Solution of a Stokes problem with its diagnostics.
#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub velocity: VelocityField,
    /// Zero-mean pressure.
    pub pressure: PressureField,
    /// Pressure-mean multiplier (absorbs residual data incompatibility).
    pub multiplier: f64,
    pub residual: f64,
}

pub fn solve_saddle(space: &Arc<P2Space>, system: &SaddleSystem, solver: &mut LuSolver) -> Result<StokesSolution> {
    let sol = system.solve(solver)?;
    let mut pressure = PressureField::new(space.clone(), sol.pressure)?;
    pressure.subtract_mean();
    Ok(StokesSolution {
        velocity: VelocityField::new(space.clone(), sol.velocity)?,
        pressure,
        multiplier: sol.multiplier,
        residual: sol.residual,
    })
}

pub fn solve_stokes(space: &Arc<P2Space>, data: &StokesData<'_>) -> Result<StokesSolution> {
    let sys = assemble_stokes(space, data)?;
    solve_saddle(space, &sys, &mut LuSolver::new())
}

/// Initial velocity and its diagnostics.
#[derive(Clone, Debug)]
pub struct InitialVelocity {
    pub velocity: VelocityField,
    /// Pressure of the slip problem (zero mean).
    pub pressure: PressureField,
    pub report: InitialVelocityReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InitialVelocityReport {
    pub divergence_l2: f64,
    pub divergence_relative: f64,
    pub compatibility_residual: f64,
    pub multiplier: f64,
    pub solver_residual: f64,
    pub h1: f64,
}

/// Slip Stokes problem with zero forcing and divergence, normal trace given
/// by the profile and zero tangential traction.
pub fn solve_initial_velocity(space: &Arc<P2Space>, profile: &BoundaryProfile, nu: f64) -> Result<InitialVelocity> {
    let normal = profile.outward_normal_values();
    let data = StokesData { nu, body: None, divergence: None, bc: StokesBc::Slip(&normal) };
    let sol = solve_stokes(space, &data)?;
    let div = divergence_l2(&sol.velocity);
    let norms = sol.velocity.norms();
    let report = InitialVelocityReport {
        divergence_l2: div,
        divergence_relative: if norms.h1_semi > 0.0 { div / norms.h1_semi } else { 0.0 },
        compatibility_residual: compatibility_residual(&sol.velocity),
        multiplier: sol.multiplier,
        solver_residual: sol.residual,
        h1: norms.h1(),
    };
    Ok(InitialVelocity { velocity: sol.velocity, pressure: sol.pressure, report })
}

/// `L2` norm of the pointwise divergence.
pub fn divergence_l2(u: &VelocityField) -> f64 {
    let s = &u.space;
    let w = P2Space::weights();
    let mut acc = 0.0;
    for e in 0..s.n_elements() {
        let nodes = &s.elem_nodes[e];
        for q in 0..NQ {
            let g = s.grads(e, q);
            let d: f64 = (0..6).map(|a| u.coeffs[2 * nodes[a]] * g[a].x + u.coeffs[2 * nodes[a] + 1] * g[a].y).sum();
            acc += w[q] * s.geom[e].det * d * d;
        }
    }
    acc.sqrt()
}

/// Velocity gradient `(du_i/dx_j)` at local coordinates of element `e`.
pub fn gradient_at(u: &VelocityField, e: usize, xi: f64, eta: f64) -> Mat2 {
    let s = &u.space;
    let inv_t = s.geom[e].inv.transpose();
    let nodes = &s.elem_nodes[e];
    let g = p2_grad(xi, eta);
    (0..6).fold(Mat2::zeros(), |acc, a| acc + u.node(nodes[a]) * (inv_t * g[a]).transpose())
}

const EDGE_ENDS: [[[f64; 2]; 2]; 3] = [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]]];

/// Maximum over boundary Gauss points of `|(Def u N) . tau|`, divided by the
/// `H1` norm of `u` (zero for the zero field).
pub fn compatibility_residual(u: &VelocityField) -> f64 {
    let s = &u.space;
    let h1 = u.norms().h1();
    if h1 == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for (k, &(e, le)) in s.boundary_edge_elem.iter().enumerate() {
        let [a, b, _] = s.boundary_edge_nodes[k];
        let d = s.node_pos[b] - s.node_pos[a];
        let tau = d.normalize();
        let n = Vec2::new(tau.y, -tau.x);
        let [p0, p1] = EDGE_ENDS[le];
        for &t in &GAUSS3_POINTS {
            let g = gradient_at(u, e, p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]));
            let def = g + g.transpose();
            worst = worst.max((def * n).dot(&tau).abs());
        }
    }
    worst / h1
}

/// Lumped boundary `L2` projection of `N . (nu Def u N)` onto the boundary
/// vertices, with the gradient taken from the element owning each edge.
fn normal_stress_data(u: &VelocityField, nu: f64) -> Vec<f64> {
    let s = &u.space;
    let nb = s.mesh.boundary_count();
    let mut num = vec![0.0; nb];
    let mut den = vec![0.0; nb];
    for (k, &(e, le)) in s.boundary_edge_elem.iter().enumerate() {
        let [a, b, _] = s.boundary_edge_nodes[k];
        let d = s.node_pos[b] - s.node_pos[a];
        let len = d.norm();
        let n = Vec2::new(d.y, -d.x) / len;
        let [p0, p1] = EDGE_ENDS[le];
        for (&t, &w) in GAUSS3_POINTS.iter().zip(&GAUSS3_WEIGHTS) {
            let g = gradient_at(u, e, p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]));
            let val = nu * n.dot(&((g + g.transpose()) * n));
            num[a] += w * len * (1.0 - t) * val;
            num[b] += w * len * t * val;
            den[a] += w * len * (1.0 - t);
            den[b] += w * len * t;
        }
    }
    num.iter().zip(&den).map(|(x, d)| x / d).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InitialPressureReport {
    pub h1: f64,
    pub boundary_max: f64,
    pub solver_residual: f64,
}

/// P1 Poisson problem `-lap p = (du_i/dx_j)(du_j/dx_i)` with Dirichlet data
/// `p = N . (nu Def u N)` at boundary vertices.
pub fn solve_initial_pressure(u0: &VelocityField, nu: f64) -> Result<(PressureField, InitialPressureReport)> {
    let s = &u0.space;
    let nv = s.n_vertices();
    let pos = s.identity_map();
    let rhs_q: Vec<[f64; NQ]> = (0..s.n_elements())
        .map(|e| {
            let nodes = &s.elem_nodes[e];
            let kin = element_kinematics(s, &pos, e);
            std::array::from_fn(|q| {
                let g = kin[q].grads;
                let grad = (0..6).fold(Mat2::zeros(), |acc, a| acc + u0.node(nodes[a]) * g[a].transpose());
                (grad * grad).trace()
            })
        })
        .collect();
    let (trip, load) = p1_poisson(s, &rhs_q);
    let data = normal_stress_data(u0, nu);
    let mut fixed = vec![None; nv];
    for (v, &val) in data.iter().enumerate() {
        fixed[v] = Some(val);
    }
    let mut rhs = load;
    let mut entries = Vec::with_capacity(trip.len());
    for t in &trip {
        if fixed[t.row].is_some() {
            continue;
        }
        match fixed[t.col] {
            Some(v) => rhs[t.row] -= t.val * v,
            None => entries.push(*t),
        }
    }
    for (i, v) in fixed.iter().enumerate() {
        if let Some(v) = v {
            entries.push(Triplet::new(i, i, 1.0));
            rhs[i] = *v;
        }
    }
    let sys = SparseSystem::from_triplets(nv, &entries, rhs)?;
    let sol = LuSolver::new().solve(&sys)?;
    let boundary_max = fixed.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let p = PressureField::new(s.clone(), sol.x)?;
    let report = InitialPressureReport { h1: p.norms().h1(), boundary_max, solver_residual: sol.residual };
    Ok((p, report))
}
