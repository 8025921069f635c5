use serde::{Deserialize, Serialize};

use super::state::{grad_eta_at, FlowState};
use super::step::StepInfo;
use crate::fem::{p1_norms, vector_norms, NQ, TRI7_POINTS};
use crate::{Mat2, Vec2};

/// Surrogate terms of the higher-order energy at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub eta_h2_sq: f64,
    pub v_h1_sq: f64,
    pub sup_v_h1_sq: f64,
    pub int_v_h2_sq: f64,
    pub int_q_h1_sq: f64,
    pub vt_l2_sq: f64,
    pub int_vt_h1_sq: f64,
    /// `1 + eta_h2_sq + sup_v_h1_sq + int_v_h2_sq + int_q_h1_sq + vt_l2_sq + int_vt_h1_sq`.
    pub total: f64,
    /// Value of `total` at `t = 0`.
    pub m0: f64,
}

impl EnergyReport {
    fn sum(&self) -> f64 {
        1.0 + self.eta_h2_sq
            + self.sup_v_h1_sq
            + self.int_v_h2_sq
            + self.int_q_h1_sq
            + self.vt_l2_sq
            + self.int_vt_h1_sq
    }
}

/// Running energy surrogate over a run. The `t = 0` row takes its
/// acceleration term from the first step, the discrete counterpart of the
/// initial acceleration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAccumulator {
    pub bound: f64,
    pub history: Vec<EnergyReport>,
}

/// Outcome of the `max E <= C M0` check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub m0: f64,
    pub max_total: f64,
    pub max_ratio: f64,
    pub bound: f64,
    pub bounded: bool,
}

impl EnergyAccumulator {
    pub fn new(state: &FlowState, bound: f64) -> Self {
        let v_h1_sq = state.v.norms().h1().powi(2);
        let mut r = EnergyReport {
            t: state.t,
            eta_h2_sq: vector_norms(&state.space, &state.eta).h2().powi(2),
            v_h1_sq,
            sup_v_h1_sq: v_h1_sq,
            int_v_h2_sq: 0.0,
            int_q_h1_sq: 0.0,
            vt_l2_sq: 0.0,
            int_vt_h1_sq: 0.0,
            total: 0.0,
            m0: 0.0,
        };
        r.total = r.sum();
        r.m0 = r.total;
        Self { bound, history: vec![r] }
    }

    /// Appends the row of `state`, reached by the step described by `info`.
    pub fn record(&mut self, state: &FlowState, info: &StepInfo) -> EnergyReport {
        if self.history.len() == 1 {
            let r0 = &mut self.history[0];
            r0.vt_l2_sq = info.vt_l2_sq;
            r0.total = r0.sum();
            r0.m0 = r0.total;
        }
        let prev = *self.history.last().unwrap();
        let vn = state.v.norms();
        let v_h1_sq = vn.h1().powi(2);
        let mut r = EnergyReport {
            t: state.t,
            eta_h2_sq: vector_norms(&state.space, &state.eta).h2().powi(2),
            v_h1_sq,
            sup_v_h1_sq: prev.sup_v_h1_sq.max(v_h1_sq),
            int_v_h2_sq: prev.int_v_h2_sq + info.dt * vn.h2().powi(2),
            int_q_h1_sq: prev.int_q_h1_sq + info.dt * p1_norms(&state.space, &state.q.values).h1().powi(2),
            vt_l2_sq: info.vt_l2_sq,
            int_vt_h1_sq: prev.int_vt_h1_sq + info.dt * info.vt_h1_sq,
            total: 0.0,
            m0: self.history[0].m0,
        };
        r.total = r.sum();
        self.history.push(r);
        r
    }

    pub fn last(&self) -> &EnergyReport {
        self.history.last().unwrap()
    }

    pub fn summary(&self) -> EnergySummary {
        energy(&self.history, self.bound)
    }
}

/// Checks `max_t E(t) <= bound * E(0)` over a report history.
pub fn energy(history: &[EnergyReport], bound: f64) -> EnergySummary {
    let m0 = history.first().map_or(0.0, |r| r.m0);
    let max_total = history.iter().map(|r| r.total).fold(0.0, f64::max);
    let max_ratio = if m0 > 0.0 { max_total / m0 } else { 0.0 };
    EnergySummary { m0, max_total, max_ratio, bound, bounded: max_ratio <= bound }
}

/// `max |grad eta - Id|` (Frobenius) over all quadrature points, computed
/// from the displacement so the identity map gives exactly zero.
pub fn deformation_monitor(state: &FlowState) -> f64 {
    let s = &state.space;
    let disp: Vec<f64> = state.eta.iter().zip(s.identity_map()).map(|(x, x0)| x - x0).collect();
    let mut m: f64 = 0.0;
    for e in 0..s.n_elements() {
        for q in 0..NQ {
            let [x, y] = TRI7_POINTS[q];
            m = m.max(grad_eta_at(s, &disp, e, x, y).norm());
        }
    }
    m
}

/// Deformation against the threshold `theta^10` and the prediction `sqrt(t E)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationReport {
    pub value: f64,
    pub threshold: f64,
    pub exceeds: bool,
    pub prediction: f64,
}

pub fn deformation_report(state: &FlowState, theta: f64, max_energy: f64) -> DeformationReport {
    let value = deformation_monitor(state);
    let threshold = theta.powi(10);
    DeformationReport { value, threshold, exceeds: value > threshold, prediction: (state.t * max_energy).sqrt() }
}

/// `max |(v - u0) . N|` over boundary vertices, with the initial normal `N`.
pub fn drift_monitor(state: &FlowState) -> f64 {
    let tr = &state.tracking;
    (0..tr.reference_normals.len())
        .map(|k| ((state.v.node(k) - tr.initial_velocity[k]).dot(&tr.reference_normals[k])).abs())
        .fold(0.0, f64::max)
}

/// Unit outward normals of the deformed boundary at boundary edge midpoints
/// from `A^T N / |A^T N|`, with `N` the reference normal.
pub fn normals_from_cofactor(state: &FlowState) -> Vec<Vec2> {
    let s = &state.space;
    s.boundary_edge_elem
        .iter()
        .zip(&s.boundary_edge_nodes)
        .map(|(&(e, le), &[a, b, _])| {
            let d = s.node_pos[b] - s.node_pos[a];
            let n = Vec2::new(d.y, -d.x).normalize();
            let [xi, et] = EDGE_MIDPOINTS[le];
            let g = grad_eta_at(s, &state.eta, e, xi, et);
            let (a_mat, _) = super::state::cofactor_a(&g).unwrap_or((Mat2::identity(), 1.0));
            (a_mat.transpose() * n).normalize()
        })
        .collect()
}

/// Unit outward normals at boundary edge midpoints from the deformed
/// quadratic boundary curve alone (its tangent at the midpoint is `eta_b - eta_a`).
pub fn normals_from_boundary(state: &FlowState) -> Vec<Vec2> {
    state
        .space
        .boundary_edge_nodes
        .iter()
        .map(|&[a, b, _]| {
            let t = state.position(b) - state.position(a);
            Vec2::new(t.y, -t.x).normalize()
        })
        .collect()
}

const EDGE_MIDPOINTS: [[f64; 2]; 3] = [[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

/// One row of the run time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    pub det_j_min: f64,
    pub det_j_max: f64,
    pub grad_eta_dev: f64,
    pub drift: f64,
    pub kinetic_energy: f64,
    pub e_surrogate: f64,
    pub gap_cap_trough: f64,
    pub remesh_count: usize,
}

impl SeriesRow {
    pub const HEADER: &'static str =
        "step,t,detJ_min,detJ_max,grad_eta_dev,drift,kinetic_energy,E_surrogate,gap_cap_trough,remesh_count";

    pub fn new(state: &FlowState, energy: &EnergyReport, gap: f64) -> Self {
        let (lo, hi) = super::state::det_range(&state.space, &state.eta);
        Self {
            step: state.step,
            t: state.t,
            det_j_min: lo,
            det_j_max: hi,
            grad_eta_dev: deformation_monitor(state),
            drift: drift_monitor(state),
            kinetic_energy: state.kinetic_energy(),
            e_surrogate: energy.total,
            gap_cap_trough: gap,
            remesh_count: state.remesh_count,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.t,
            self.det_j_min,
            self.det_j_max,
            self.grad_eta_dev,
            self.drift,
            self.kinetic_energy,
            self.e_surrogate,
            self.gap_cap_trough,
            self.remesh_count
        )
    }
}
