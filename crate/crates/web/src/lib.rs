//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Each operation takes plain numbers and returns a JSON string; the plain
//! Rust functions are also usable (and tested) natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use splash_core::elliptic::ProfileOptions;
use splash_core::experiments::{build_initial_data, run_splash_experiment, DomainSource, RunOptions};
use splash_core::geometry::{min_boundary_gap, triangulate, DomainSpec, RegionTag};
use splash_core::lagrangian::StepConfig;

#[derive(Serialize)]
pub struct DomainView {
    pub boundary: Vec<[f64; 2]>,
    pub tags: Vec<&'static str>,
    pub gap: f64,
    pub gap_points: [[f64; 2]; 2],
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

#[derive(Serialize)]
pub struct InitialView {
    pub boundary: Vec<[f64; 2]>,
    /// Node position and velocity `(x, y, u, v)` at each mesh vertex.
    pub velocity: Vec<[f64; 4]>,
    pub pole_normal_velocity: f64,
    pub compatibility_residual: f64,
    pub u0_h1: f64,
    pub p0_l2: f64,
}

#[derive(Serialize)]
pub struct RunView {
    pub status: &'static str,
    pub t_star: Option<f64>,
    pub t_star_over_eps: Option<f64>,
    pub frames: Vec<FrameView>,
    pub min_gap: f64,
}

#[derive(Serialize)]
pub struct FrameView {
    pub t: f64,
    pub boundary: Vec<[f64; 2]>,
}

fn xy(p: &splash_core::Vec2) -> [f64; 2] {
    [p.x, p.y]
}

fn source(epsilon: f64) -> Result<DomainSource, String> {
    let spec = DomainSpec::new(epsilon);
    spec.validate().map_err(|e| e.to_string())?;
    Ok(DomainSource::Dinosaur(spec))
}

pub fn domain_view(epsilon: f64, mesh_size: f64) -> Result<DomainView, String> {
    let (curve, _) = source(epsilon)?.build().map_err(|e| e.to_string())?;
    let gap = min_boundary_gap(&curve, RegionTag::CapPlus, RegionTag::Trough).map_err(|e| e.to_string())?;
    let mesh = triangulate(&curve, mesh_size).map_err(|e| e.to_string())?;
    Ok(DomainView {
        boundary: curve.nodes().iter().map(xy).collect(),
        tags: curve.tags().iter().map(|t| t.as_str()).collect(),
        gap: gap.distance,
        gap_points: [xy(&gap.point_a), xy(&gap.point_b)],
        vertices: mesh.vertices.iter().map(xy).collect(),
        triangles: mesh.triangles.clone(),
    })
}

pub fn initial_view(epsilon: f64, mesh_size: f64) -> Result<InitialView, String> {
    let init = build_initial_data(&source(epsilon)?, mesh_size, &ProfileOptions::default(), 1.0)
        .map_err(|e| e.to_string())?;
    let s = init.summary(epsilon).map_err(|e| e.to_string())?;
    let velocity = (0..init.space.n_vertices())
        .map(|k| {
            let p = init.space.mesh.vertices[k];
            let u = init.velocity.node(k);
            [p.x, p.y, u.x, u.y]
        })
        .collect();
    Ok(InitialView {
        boundary: init.curve.nodes().iter().map(xy).collect(),
        velocity,
        pole_normal_velocity: s.pole_normal_velocity,
        compatibility_residual: s.compatibility_residual,
        u0_h1: s.u0_h1,
        p0_l2: s.p0_l2,
    })
}

pub fn run_view(epsilon: f64, mesh_size: f64, t_max_factor: f64) -> Result<RunView, String> {
    let opts = RunOptions { mesh_size, t_max_factor, frame_stride: 10, ..Default::default() };
    let run = run_splash_experiment(&source(epsilon)?, &StepConfig::for_epsilon(epsilon), &opts)
        .map_err(|e| e.to_string())?;
    let ev = run.outcome.event();
    let mut frames: Vec<FrameView> =
        run.frames.iter().map(|f| FrameView { t: f.t, boundary: f.boundary.iter().map(xy).collect() }).collect();
    frames.push(FrameView {
        t: ev.map_or_else(|| run.series.last().map_or(0.0, |r| r.t), |e| e.t_star),
        boundary: run.terminal_boundary.iter().map(xy).collect(),
    });
    Ok(RunView {
        status: run.outcome.status(),
        t_star: ev.map(|e| e.t_star),
        t_star_over_eps: ev.map(|e| e.t_star_over_eps),
        frames,
        min_gap: run.monitors.min_gap,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

/// Boundary, gap and triangulation of the dinosaur domain.
#[wasm_bindgen(js_name = buildDomain)]
pub fn build_domain(epsilon: f64, mesh_size: f64) -> Result<String, JsValue> {
    to_js(domain_view(epsilon, mesh_size))
}

/// Initial velocity field and its summary norms.
#[wasm_bindgen(js_name = initialData)]
pub fn initial_data(epsilon: f64, mesh_size: f64) -> Result<String, JsValue> {
    to_js(initial_view(epsilon, mesh_size))
}

/// Runs to splash (or `t_max_factor * epsilon`) and returns boundary frames.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate(epsilon: f64, mesh_size: f64, t_max_factor: f64) -> Result<String, JsValue> {
    to_js(run_view(epsilon, mesh_size, t_max_factor))
}
