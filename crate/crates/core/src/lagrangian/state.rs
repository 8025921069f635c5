use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elliptic::{PressureField, VelocityField};
use crate::fem::{element_kinematics, p2_grad, P2Space};
use crate::geometry::{BoundaryCurve, Landmarks, RegionTag, TriMesh};
use crate::{Error, Mat2, Result, Vec2};

/// Time-stepping and monitoring parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    /// Deformation threshold; the monitor compares against `theta^10`.
    pub theta: f64,
    /// Smallest admissible triangle angle (degrees) before remeshing.
    pub quality_floor: f64,
    /// Smallest admissible `det grad eta` before remeshing.
    pub min_det: f64,
    /// Boundary gap at which contact is declared.
    pub delta_splash: f64,
    pub nu: f64,
    /// Step is capped at `cfl * h_min / max |v|`.
    pub cfl: f64,
    /// Bound `C` in `max E <= C M0`.
    pub energy_bound: f64,
}

impl StepConfig {
    /// Defaults for the domain with gap `epsilon`.
    pub fn for_epsilon(epsilon: f64) -> Self {
        Self {
            dt: epsilon / 100.0,
            theta: 0.5,
            quality_floor: 10.0,
            min_det: 0.5,
            delta_splash: epsilon / 100.0,
            nu: 1.0,
            cfl: 0.25,
            energy_bound: 10.0,
        }
    }

    /// Reads `dt` and `delta_splash` as multiples of `epsilon` and returns
    /// the absolute configuration.
    pub fn at_epsilon(&self, epsilon: f64) -> Self {
        Self { dt: self.dt * epsilon, delta_splash: self.delta_splash * epsilon, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta must lie in (0, 1) (got {})", self.theta));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.quality_floor >= 0.0 && self.quality_floor < 60.0) {
            return bad(format!("quality floor must lie in [0, 60) degrees (got {})", self.quality_floor));
        }
        if !(self.min_det > 0.0 && self.min_det < 1.0) {
            return bad(format!("min_det must lie in (0, 1) (got {})", self.min_det));
        }
        if !(self.delta_splash >= 0.0 && self.delta_splash.is_finite()) {
            return bad(format!("delta_splash must be nonnegative (got {})", self.delta_splash));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad(format!("cfl must be positive (got {})", self.cfl));
        }
        if !(self.energy_bound > 0.0) {
            return bad(format!("energy bound must be positive (got {})", self.energy_bound));
        }
        Ok(())
    }
}

/// Material data attached to the boundary vertices. Remeshing keeps every
/// boundary vertex and its index, so the index is the material label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tracking {
    /// Region tag of each boundary vertex.
    pub tags: Vec<RegionTag>,
    pub landmarks: Option<Landmarks>,
    /// Unit outward normal of the initial boundary at each boundary vertex.
    pub reference_normals: Vec<Vec2>,
    /// Initial velocity at each boundary vertex.
    pub initial_velocity: Vec<Vec2>,
    pub initial_area: f64,
}

impl Tracking {
    pub fn indices_with_tag(&self, tag: RegionTag) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] == tag).collect()
    }
}

/// Discrete flow map, velocity and pressure at one time.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub space: Arc<P2Space>,
    /// Current position of every P2 node (interleaved), the quadratic flow map.
    pub eta: Vec<f64>,
    pub v: VelocityField,
    pub q: PressureField,
    /// `(grad eta)^-1` at each element centroid.
    pub a: Vec<Mat2>,
    /// `det grad eta` at each element centroid.
    pub det_j: Vec<f64>,
    pub step: usize,
    pub remesh_count: usize,
    pub tracking: Arc<Tracking>,
}

/// `A = (grad eta)^-1` from the cofactor formula, with `det grad eta`.
pub fn cofactor_a(grad_eta: &Mat2) -> Result<(Mat2, f64)> {
    let det = grad_eta.determinant();
    if !(det.abs() >= 1e-12) {
        return Err(Error::Tangled { element: 0, det });
    }
    let g = grad_eta;
    let cof_t = Mat2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]);
    Ok((cof_t / det, det))
}

/// Gradient of the flow map at local coordinates of element `e`.
pub fn grad_eta_at(space: &P2Space, eta: &[f64], e: usize, xi: f64, et: f64) -> Mat2 {
    let inv_t = space.geom[e].inv.transpose();
    let nodes = &space.elem_nodes[e];
    let g = p2_grad(xi, et);
    (0..6).fold(Mat2::zeros(), |acc, a| {
        acc + Vec2::new(eta[2 * nodes[a]], eta[2 * nodes[a] + 1]) * (inv_t * g[a]).transpose()
    })
}

/// `A` and `det grad eta` at every element centroid.
pub fn element_deformation(space: &P2Space, eta: &[f64]) -> Result<(Vec<Mat2>, Vec<f64>)> {
    let mut a = Vec::with_capacity(space.n_elements());
    let mut det = Vec::with_capacity(space.n_elements());
    for e in 0..space.n_elements() {
        let g = grad_eta_at(space, eta, e, 1.0 / 3.0, 1.0 / 3.0);
        let (ae, de) = cofactor_a(&g).map_err(|err| match err {
            Error::Tangled { det, .. } => Error::Tangled { element: e, det },
            other => other,
        })?;
        if de <= 0.0 {
            return Err(Error::Tangled { element: e, det: de });
        }
        a.push(ae);
        det.push(de);
    }
    Ok((a, det))
}

/// Smallest and largest `det grad eta` over all quadrature points.
pub fn det_range(space: &P2Space, eta: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in 0..space.n_elements() {
        for k in element_kinematics(space, eta, e) {
            lo = lo.min(k.det);
            hi = hi.max(k.det);
        }
    }
    (lo, hi)
}

impl FlowState {
    /// State at `t = 0`: identity flow map, velocity `u0`, pressure `p0`.
    /// `curve` is the boundary the mesh of `u0` was built from.
    pub fn initial(curve: &BoundaryCurve, u0: VelocityField, p0: PressureField) -> Result<Self> {
        let space = u0.space.clone();
        let nb = space.mesh.boundary_count();
        if curve.len() != nb || !Arc::ptr_eq(&space, &p0.space) {
            return Err(Error::InvalidInput("curve, velocity and pressure do not share one mesh".into()));
        }
        if (0..nb).any(|k| space.mesh.vertices[k] != curve.nodes()[k]) {
            return Err(Error::InvalidInput("mesh boundary vertices differ from the curve nodes".into()));
        }
        let eta = space.identity_map();
        let w = space.boundary_weights(&eta);
        let tracking = Tracking {
            tags: curve.tags().to_vec(),
            landmarks: curve.landmarks(),
            reference_normals: (0..nb).map(|k| w[2 * k].normalize()).collect(),
            initial_velocity: (0..nb).map(|k| u0.node(k)).collect(),
            initial_area: space.mesh.area(),
        };
        let (a, det_j) = element_deformation(&space, &eta)?;
        Ok(Self { t: 0.0, space, eta, v: u0, q: p0, a, det_j, step: 0, remesh_count: 0, tracking: Arc::new(tracking) })
    }

    /// Current position of P2 node `i`.
    pub fn position(&self, i: usize) -> Vec2 {
        Vec2::new(self.eta[2 * i], self.eta[2 * i + 1])
    }

    /// Current positions of the boundary vertices, in curve order.
    pub fn boundary_positions(&self) -> Vec<Vec2> {
        (0..self.space.mesh.boundary_count()).map(|k| self.position(k)).collect()
    }

    /// The deformed boundary as a tagged curve through the boundary vertices.
    pub fn boundary_curve(&self) -> Result<BoundaryCurve> {
        BoundaryCurve::new(self.boundary_positions(), self.tracking.tags.clone(), self.tracking.landmarks)
    }

    /// `max |A grad eta - Id|` over element centroids.
    pub fn inverse_defect(&self) -> f64 {
        (0..self.space.n_elements())
            .map(|e| {
                let g = grad_eta_at(&self.space, &self.eta, e, 1.0 / 3.0, 1.0 / 3.0);
                (self.a[e] * g - Mat2::identity()).abs().max()
            })
            .fold(0.0, f64::max)
    }

    /// Area of the current domain, `int det grad eta` over the reference mesh.
    pub fn area(&self) -> f64 {
        let s = &self.space;
        (0..s.n_elements()).map(|e| element_kinematics(s, &self.eta, e).iter().map(|k| k.weight).sum::<f64>()).sum()
    }

    /// Discrete kinetic energy `1/2 int |v|^2` over the reference configuration.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * reference_l2_squared(&self.space, &self.v.coeffs)
    }

    /// Shortest current edge over all triangles.
    pub fn min_edge(&self) -> f64 {
        self.space
            .mesh
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| (self.position(a) - self.position(b)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest angle (degrees) of the current straight-sided triangles.
    pub fn min_angle(&self) -> f64 {
        self.space
            .mesh
            .triangles
            .iter()
            .map(|t| {
                let p = t.map(|i| self.position(i));
                (0..3)
                    .map(|k| (p[(k + 1) % 3] - p[k]).angle(&(p[(k + 2) % 3] - p[k])).to_degrees())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `int |u|^2` over the reference configuration.
pub fn reference_l2_squared(space: &P2Space, coeffs: &[f64]) -> f64 {
    let w = P2Space::weights();
    let mut s = 0.0;
    for e in 0..space.n_elements() {
        let nodes = &space.elem_nodes[e];
        for q in 0..w.len() {
            let v = (0..6).fold(Vec2::zeros(), |acc, a| {
                acc + Vec2::new(coeffs[2 * nodes[a]], coeffs[2 * nodes[a] + 1]) * space.phi[q][a]
            });
            s += w[q] * space.geom[e].det * v.norm_squared();
        }
    }
    s
}

/// Serializable form of a [`FlowState`]. The finite element space and the
/// per-element deformation are rebuilt on load, so a loaded state has the
/// same coefficient vectors bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSnapshot {
    pub t: f64,
    pub mesh: TriMesh,
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub step: usize,
    pub remesh_count: usize,
    pub tracking: Tracking,
}

impl FlowState {
    pub fn snapshot(&self) -> FlowSnapshot {
        FlowSnapshot {
            t: self.t,
            mesh: self.space.mesh.clone(),
            eta: self.eta.clone(),
            v: self.v.coeffs.clone(),
            q: self.q.values.clone(),
            step: self.step,
            remesh_count: self.remesh_count,
            tracking: (*self.tracking).clone(),
        }
    }

    pub fn from_snapshot(snap: &FlowSnapshot) -> Result<Self> {
        let space = Arc::new(P2Space::new(snap.mesh.clone()));
        if snap.eta.len() != space.n_velocity() || snap.tracking.tags.len() != space.mesh.boundary_count() {
            return Err(Error::InvalidInput("snapshot vectors do not match its mesh".into()));
        }
        let (a, det_j) = element_deformation(&space, &snap.eta)?;
        Ok(Self {
            t: snap.t,
            space: space.clone(),
            eta: snap.eta.clone(),
            v: VelocityField::new(space.clone(), snap.v.clone())?,
            q: PressureField::new(space, snap.q.clone())?,
            a,
            det_j,
            step: snap.step,
            remesh_count: snap.remesh_count,
            tracking: Arc::new(snap.tracking.clone()),
        })
    }
}
