use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::fem::{p1_l2_error, vector_l2_error, P2Space};
use crate::geometry::{build_dinosaur_domain, triangulate, BoundaryCurve, DomainSpec, RegionTag};
use crate::{Error, Vec2};

pub(crate) fn disk_space(h: f64) -> Arc<P2Space> {
    let n = (2.0 * PI / h).ceil() as usize;
    let nodes: Vec<Vec2> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let curve = BoundaryCurve::new(nodes, vec![RegionTag::Other; n], None).unwrap();
    Arc::new(P2Space::new(triangulate(&curve, h).unwrap()))
}

fn exact_u(p: Vec2) -> Vec2 {
    Vec2::new(PI * (PI * p.x).sin() * (PI * p.y).cos(), -PI * (PI * p.x).cos() * (PI * p.y).sin())
}

fn exact_p(p: Vec2) -> f64 {
    (PI * p.x).cos() * (PI * p.y).cos()
}

fn forcing(p: Vec2) -> Vec2 {
    let gp = Vec2::new(-PI * (PI * p.x).sin() * (PI * p.y).cos(), -PI * (PI * p.x).cos() * (PI * p.y).sin());
    exact_u(p) * (2.0 * PI * PI) + gp
}

fn manufactured_errors(h: f64) -> (f64, f64) {
    let s = disk_space(h);
    let data = StokesData { nu: 1.0, body: Some(&forcing), divergence: None, bc: StokesBc::Dirichlet(&exact_u) };
    let sol = solve_stokes(&s, &data).unwrap();
    (vector_l2_error(&s, &sol.velocity.coeffs, exact_u), p1_l2_error(&s, &sol.pressure.values, exact_p, true))
}

#[test]
fn zero_data_gives_zero_solution() {
    let s = disk_space(0.3);
    let zero = |_: Vec2| Vec2::zeros();
    let data = StokesData { nu: 1.0, body: None, divergence: None, bc: StokesBc::Dirichlet(&zero) };
    let sol = solve_stokes(&s, &data).unwrap();
    assert!(sol.velocity.coeffs.iter().all(|v| v.abs() < 1e-14));
    assert!(sol.pressure.values.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn manufactured_solution_converges() {
    let (eu1, ep1) = manufactured_errors(0.3);
    let (eu2, ep2) = manufactured_errors(0.15);
    assert!((eu1 / eu2).log2() > 2.5, "velocity rates {eu1} {eu2}");
    assert!((ep1 / ep2).log2() > 1.5, "pressure rates {ep1} {ep2}");
}

#[test]
fn incompatible_dirichlet_data_rejected() {
    let s = disk_space(0.3);
    let radial = |p: Vec2| p;
    let data = StokesData { nu: 1.0, body: None, divergence: None, bc: StokesBc::Dirichlet(&radial) };
    assert!(matches!(solve_stokes(&s, &data), Err(Error::IncompatibleData { .. })));
    // matching divergence restores compatibility
    let two = |_: Vec2| 2.0;
    let data = StokesData { nu: 1.0, body: None, divergence: Some(&two), bc: StokesBc::Dirichlet(&radial) };
    let sol = solve_stokes(&s, &data).unwrap();
    assert!(vector_l2_error(&s, &sol.velocity.coeffs, radial) < 1e-10);
}

#[test]
fn rigid_rotation_has_zero_residual_and_known_pressure() {
    let s = disk_space(0.1);
    let u = VelocityField::from_fn(s.clone(), |p| Vec2::new(-p.y, p.x));
    assert!(compatibility_residual(&u) < 1e-13);
    assert!(divergence_l2(&u) < 1e-13);
    // -lap p = grad u : grad u^T = -2, p = 0 on the circle
    let (p, rep) = solve_initial_pressure(&u, 1.0).unwrap();
    assert!(rep.boundary_max < 1e-13);
    let err = p1_l2_error(&s, &p.values, |x| 0.5 * (x.norm_squared() - 1.0), false);
    assert!(err < 5e-3, "pressure error {err}");
}

#[test]
fn zero_velocity_gives_zero_pressure() {
    let s = disk_space(0.3);
    let (p, _) = solve_initial_pressure(&VelocityField::zeros(s), 1.0).unwrap();
    assert!(p.values.iter().all(|v| *v == 0.0));
}

fn dinosaur_initial(eps: f64, target: f64) -> (Arc<P2Space>, usize, usize, InitialVelocity) {
    let curve = build_dinosaur_domain(&DomainSpec::new(eps)).unwrap();
    let l = curve.landmarks().unwrap();
    let space = Arc::new(P2Space::new(triangulate(&curve, target).unwrap()));
    let prof = build_b0(&space, l.x_plus, &ProfileOptions::default()).unwrap();
    let init = solve_initial_velocity(&space, &prof, 1.0).unwrap();
    (space, l.x_plus, l.x_minus, init)
}

#[test]
fn initial_velocity_boundary_values() {
    let (space, x_plus, _, init) = dinosaur_initial(0.05, 0.15);
    let u = &init.velocity;
    // falling with unit speed at the pole
    assert!((u.node(x_plus).y + 1.0).abs() < 0.02);
    let w = space.boundary_weights(&space.identity_map());
    for (k, &i) in space.boundary_nodes.iter().enumerate() {
        if space.boundary_tag(k) == RegionTag::Trough {
            assert!(u.node(i).dot(&w[k].normalize()).abs() < 1e-8);
        }
    }
    assert!(init.report.multiplier.abs() < 1e-8);
}

#[test]
fn divergence_and_residual_decrease_under_refinement() {
    let refined = |h: f64| {
        let mut s = DomainSpec::new(0.05);
        s.node_spacing = h;
        let curve = build_dinosaur_domain(&s).unwrap();
        let space = Arc::new(P2Space::new(triangulate(&curve, h).unwrap()));
        let prof = build_b0(&space, curve.landmarks().unwrap().x_plus, &ProfileOptions::default()).unwrap();
        solve_initial_velocity(&space, &prof, 1.0).unwrap().report
    };
    let (c, f) = (refined(0.1), refined(0.05));
    // quadratic velocities: weak divergence error of order h^2 once the boundary is refined too
    assert!(c.divergence_relative / f.divergence_relative > 3.0, "{c:?} {f:?}");
    assert!(c.compatibility_residual / f.compatibility_residual > 1.5, "{c:?} {f:?}");
}

#[test]
fn zero_profile_gives_zero_velocity() {
    let curve = build_dinosaur_domain(&DomainSpec::new(0.1)).unwrap();
    let space = Arc::new(P2Space::new(triangulate(&curve, 0.2).unwrap()));
    let opts = ProfileOptions { amplitude: 0.0, ..Default::default() };
    let prof = build_b0(&space, curve.landmarks().unwrap().x_plus, &opts).unwrap();
    let init = solve_initial_velocity(&space, &prof, 1.0).unwrap();
    assert!(init.velocity.coeffs.iter().all(|v| v.abs() < 1e-12));
}
