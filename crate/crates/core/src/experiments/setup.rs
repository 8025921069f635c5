use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    build_b0, solve_initial_pressure, solve_initial_velocity, BoundaryProfile, InitialPressureReport,
    InitialVelocityReport, PressureField, ProfileOptions, VelocityField,
};
use crate::fem::P2Space;
use crate::geometry::{
    approximate_splash_domain_with_targets, build_dinosaur_domain, min_boundary_gap, triangulate, BoundaryCurve,
    DomainSpec, RegionTag, SplashApproxOptions, SplashDomainSpec,
};
use crate::{Error, Result, Vec2};

/// Where the initial boundary comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSource {
    Dinosaur(DomainSpec),
    Splash { spec: SplashDomainSpec, epsilon: f64, approx: SplashApproxOptions },
}

impl DomainSource {
    pub fn epsilon(&self) -> f64 {
        match self {
            DomainSource::Dinosaur(s) => s.epsilon,
            DomainSource::Splash { epsilon, .. } => *epsilon,
        }
    }

    /// Same source with the gap parameter replaced.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        match self {
            DomainSource::Dinosaur(s) => DomainSource::Dinosaur(s.with_epsilon(epsilon)),
            DomainSource::Splash { spec, approx, .. } => {
                DomainSource::Splash { spec: spec.clone(), epsilon, approx: *approx }
            }
        }
    }

    /// Boundary curve and, for splash domains, the unlifted limit position of each node.
    pub fn build(&self) -> Result<(BoundaryCurve, Option<Vec<Vec2>>)> {
        match self {
            DomainSource::Dinosaur(s) => Ok((build_dinosaur_domain(s)?, None)),
            DomainSource::Splash { spec, epsilon, approx } => {
                let (c, t) = approximate_splash_domain_with_targets(spec, *epsilon, approx)?;
                Ok((c, Some(t)))
            }
        }
    }
}

/// Initial boundary, mesh and data of one run.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub curve: BoundaryCurve,
    pub targets: Option<Vec<Vec2>>,
    pub space: Arc<P2Space>,
    pub profile: BoundaryProfile,
    pub velocity: VelocityField,
    pub pressure: PressureField,
    pub velocity_report: InitialVelocityReport,
    pub pressure_report: InitialPressureReport,
    pub initial_gap: f64,
}

/// Scalar summary of [`InitialData`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSummary {
    pub epsilon: f64,
    pub n_elements: usize,
    pub initial_gap: f64,
    /// `u0 . N` at the falling point, with `N` the inward normal as for `b0`.
    pub pole_normal_velocity: f64,
    /// `max |u0 . N|` over trough vertices.
    pub trough_normal_velocity: f64,
    pub compatibility_residual: f64,
    pub divergence_relative: f64,
    pub u0_h1: f64,
    pub p0_h1: f64,
    pub p0_l2: f64,
    pub b0_norm: f64,
    /// `|u0|_H1 / |b0|`, the solution-to-data ratio of the slip problem.
    pub solution_to_data: f64,
}

/// Builds the domain, mesh, profile `b0`, velocity `u0` and pressure `p0`.
pub fn build_initial_data(
    source: &DomainSource,
    mesh_size: f64,
    profile: &ProfileOptions,
    nu: f64,
) -> Result<InitialData> {
    let (curve, targets) = source.build()?;
    let lm = curve
        .landmarks()
        .ok_or_else(|| Error::InvalidInput("domain has no falling-point landmark".into()))?;
    let initial_gap = min_boundary_gap(&curve, RegionTag::CapPlus, RegionTag::Trough)?.distance;
    let space = Arc::new(P2Space::new(triangulate(&curve, mesh_size)?));
    let prof = build_b0(&space, lm.x_plus, profile)?;
    let init = solve_initial_velocity(&space, &prof, nu)?;
    let (pressure, pressure_report) = solve_initial_pressure(&init.velocity, nu)?;
    Ok(InitialData {
        curve,
        targets,
        space,
        profile: prof,
        velocity: init.velocity,
        pressure,
        velocity_report: init.report,
        pressure_report,
        initial_gap,
    })
}

impl InitialData {
    pub fn summary(&self, epsilon: f64) -> Result<InitialDataSummary> {
        let s = &self.space;
        let w = s.boundary_weights(&s.identity_map());
        let lm = self.curve.landmarks().unwrap();
        // boundary vertex k is P2 boundary node 2k
        let normal = |k: usize| w[2 * k].normalize();
        let pole = -self.velocity.node(lm.x_plus).dot(&normal(lm.x_plus));
        let trough = self
            .curve
            .indices_with_tag(RegionTag::Trough)
            .into_iter()
            .map(|k| self.velocity.node(k).dot(&normal(k)).abs())
            .fold(0.0, f64::max);
        let b0_norm = self.profile.norm_surrogate(4096)?;
        let u0_h1 = self.velocity_report.h1;
        Ok(InitialDataSummary {
            epsilon,
            n_elements: s.n_elements(),
            initial_gap: self.initial_gap,
            pole_normal_velocity: pole,
            trough_normal_velocity: trough,
            compatibility_residual: self.velocity_report.compatibility_residual,
            divergence_relative: self.velocity_report.divergence_relative,
            u0_h1,
            p0_h1: self.pressure_report.h1,
            p0_l2: self.pressure.norms().l2,
            b0_norm,
            solution_to_data: u0_h1 / b0_norm,
        })
    }
}
