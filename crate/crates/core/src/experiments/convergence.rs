use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_stokes, StokesBc, StokesData};
use crate::fem::{p1_l2_error, vector_l2_error, P2Space};
use crate::geometry::{triangulate, BoundaryCurve, RegionTag};
use crate::{Error, Result, Vec2};

/// Velocity `curl psi` with stream function `psi = sin(pi x) sin(pi y)`.
pub fn manufactured_velocity(p: Vec2) -> Vec2 {
    Vec2::new(PI * (PI * p.x).sin() * (PI * p.y).cos(), -PI * (PI * p.x).cos() * (PI * p.y).sin())
}

pub fn manufactured_pressure(p: Vec2) -> f64 {
    (PI * p.x).cos() * (PI * p.y).cos()
}

/// Body force `-lap u + grad p` of the manufactured pair with unit viscosity.
pub fn manufactured_forcing(p: Vec2) -> Vec2 {
    let gp = Vec2::new(-PI * (PI * p.x).sin() * (PI * p.y).cos(), -PI * (PI * p.x).cos() * (PI * p.y).sin());
    manufactured_velocity(p) * (2.0 * PI * PI) + gp
}

/// Unit disk with boundary spacing about `h`, meshed at target size `h`.
pub fn disk_space(h: f64) -> Result<Arc<P2Space>> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidInput(format!("disk mesh size must lie in (0, 1) (got {h})")));
    }
    let n = (2.0 * PI / h).ceil() as usize;
    let nodes = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let curve = BoundaryCurve::new(nodes, vec![RegionTag::Other; n], None)?;
    Ok(Arc::new(P2Space::new(triangulate(&curve, h)?)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub elements: usize,
    pub velocity_l2: f64,
    pub pressure_l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Observed orders between consecutive levels.
    pub velocity_orders: Vec<f64>,
    pub pressure_orders: Vec<f64>,
    /// Least-squares orders over all levels.
    pub velocity_order: f64,
    pub pressure_order: f64,
}

impl ConvergenceReport {
    pub const HEADER: &'static str = "h,elements,velocity_l2_error,pressure_l2_error";

    /// Rows followed by the fitted orders as comment lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.h, r.elements, r.velocity_l2, r.pressure_l2);
        }
        let _ = writeln!(s, "# velocity_order,{}", self.velocity_order);
        let _ = writeln!(s, "# pressure_order,{}", self.pressure_order);
        s
    }
}

/// Dirichlet Stokes solves of the manufactured pair on the unit disk at
/// each mesh size in `hs` (decreasing), with observed `L2` orders.
pub fn convergence_study(hs: &[f64]) -> Result<ConvergenceReport> {
    if hs.len() < 2 || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("convergence study needs at least two decreasing mesh sizes".into()));
    }
    let mut rows = Vec::with_capacity(hs.len());
    for &h in hs {
        let s = disk_space(h)?;
        let data = StokesData {
            nu: 1.0,
            body: Some(&manufactured_forcing),
            divergence: None,
            bc: StokesBc::Dirichlet(&manufactured_velocity),
        };
        let sol = solve_stokes(&s, &data)?;
        rows.push(ConvergenceRow {
            h,
            elements: s.n_elements(),
            velocity_l2: vector_l2_error(&s, &sol.velocity.coeffs, manufactured_velocity),
            pressure_l2: p1_l2_error(&s, &sol.pressure.values, manufactured_pressure, true),
        });
    }
    let orders = |f: fn(&ConvergenceRow) -> f64| -> Vec<f64> {
        rows.windows(2).map(|w| (f(&w[0]) / f(&w[1])).ln() / (w[0].h / w[1].h).ln()).collect()
    };
    let hv: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let fit = |f: fn(&ConvergenceRow) -> f64| -> Result<f64> {
        Ok(super::fit::fit_power_law(&hv, &rows.iter().map(f).collect::<Vec<_>>())?.exponent)
    };
    Ok(ConvergenceReport {
        velocity_orders: orders(|r| r.velocity_l2),
        pressure_orders: orders(|r| r.pressure_l2),
        velocity_order: fit(|r| r.velocity_l2)?,
        pressure_order: fit(|r| r.pressure_l2)?,
        rows,
    })
}
