use serde::{Deserialize, Serialize};

use super::setup::{build_initial_data, DomainSource, InitialDataSummary};
use crate::elliptic::ProfileOptions;
use crate::geometry::{min_boundary_gap, GapResult, RegionTag};
use crate::lagrangian::{
    deformation_report, det_range, drift_monitor, needs_remesh, remesh, DeformationReport, EnergyAccumulator,
    EnergyReport, EnergySummary, FlowSnapshot, FlowState, RemeshOutcome, SeriesRow, StepConfig, Stepper,
};
use crate::{Error, Result, Vec2};

/// Run parameters that are not part of the time stepper.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Interior target edge length of the triangulation.
    pub mesh_size: f64,
    pub profile: ProfileOptions,
    /// Final time as a multiple of epsilon.
    pub t_max_factor: f64,
    /// Steps between stored restart snapshots.
    pub snapshot_stride: usize,
    /// Steps between stored boundary frames.
    pub frame_stride: usize,
    /// Halvings of the contact step when bracketing the splash time.
    pub bisection_depth: usize,
    /// Steps taken past contact to observe the vertical ordering crossing.
    pub overshoot_steps: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mesh_size: 0.15,
            profile: ProfileOptions::default(),
            t_max_factor: 20.0,
            snapshot_stride: 25,
            frame_stride: 25,
            bisection_depth: 3,
            overshoot_steps: 40,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.mesh_size > 0.0 && self.mesh_size.is_finite()) {
            return bad(format!("mesh size must be positive (got {})", self.mesh_size));
        }
        if !(self.t_max_factor > 0.0 && self.t_max_factor.is_finite()) {
            return bad(format!("t_max factor must be positive (got {})", self.t_max_factor));
        }
        if self.snapshot_stride == 0 || self.frame_stride == 0 {
            return bad("snapshot and frame strides must be at least 1".into());
        }
        Ok(())
    }
}

/// Positions of the falling point and the trough at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub pole_x: f64,
    /// Vertical coordinate of the falling point.
    pub pole_y: f64,
    /// Lowest vertical coordinate over the trough material points.
    pub trough_min_y: f64,
    pub gap: f64,
    /// Row computed after the gap fell below the contact distance.
    pub after_contact: bool,
}

impl TrajectoryRow {
    pub const HEADER: &'static str = "step,t,pole_x,pole_y,trough_min_y,gap,after_contact";

    pub fn new(state: &FlowState, gap: f64, after_contact: bool) -> Result<Self> {
        let lm = state
            .tracking
            .landmarks
            .ok_or_else(|| Error::LandmarkLost("state carries no falling-point landmark".into()))?;
        let trough = state.tracking.indices_with_tag(RegionTag::Trough);
        if trough.is_empty() || lm.x_plus >= state.tracking.tags.len() {
            return Err(Error::LandmarkLost("trough or falling point missing from the boundary".into()));
        }
        let pole = state.position(lm.x_plus);
        let trough_min_y = trough.iter().map(|&k| state.position(k).y).fold(f64::INFINITY, f64::min);
        Ok(Self { step: state.step, t: state.t, pole_x: pole.x, pole_y: pole.y, trough_min_y, gap, after_contact })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.t, self.pole_x, self.pole_y, self.trough_min_y, self.gap, self.after_contact as u8
        )
    }
}

/// Deformed boundary at one stored time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: usize,
    pub t: f64,
    pub boundary: Vec<Vec2>,
}

/// Worst values of the conservation monitors over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMonitors {
    /// `max |det grad eta - 1|` over quadrature points and steps.
    pub max_det_deviation: f64,
    /// Largest relative area change.
    pub max_area_error: f64,
    /// Steps whose kinetic energy exceeded the previous one.
    pub kinetic_increases: usize,
    pub max_kinetic_increase: f64,
    pub min_gap: f64,
    pub step_halvings: usize,
    pub remeshes: usize,
}

impl RunMonitors {
    fn new(gap: f64) -> Self {
        Self {
            max_det_deviation: 0.0,
            max_area_error: 0.0,
            kinetic_increases: 0,
            max_kinetic_increase: 0.0,
            min_gap: gap,
            step_halvings: 0,
            remeshes: 0,
        }
    }
}

/// Splash detected by the gap criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplashEvent {
    pub t_star: f64,
    /// `gap(t_lo) > delta >= gap(t_hi)` and `t_lo < t_star <= t_hi`.
    pub bracket: (f64, f64),
    pub gap_bracket: (f64, f64),
    pub contact_points: [Vec2; 2],
    pub contact_tags: [RegionTag; 2],
    pub t_star_over_eps: f64,
    /// `t_star < 10 eps`.
    pub within_ten_eps: bool,
    /// Crossing time of the vertical ordering detector.
    pub ordering_crossing: Option<f64>,
    /// `|ordering_crossing - t_star|`, in units of `dt`.
    pub detector_offset_steps: Option<f64>,
    /// Height of the falling point at `min(10 eps, t_star)`.
    pub pole_height: f64,
    pub pole_height_time: f64,
    /// `pole_height <= -eps`.
    pub pole_below_minus_eps: bool,
    /// `pole_height < -8 eps`.
    pub pole_below_minus_eight_eps: bool,
    /// Gap strictly decreasing over the last tenth of `[0, t_star]`.
    pub gap_monotone_tail: bool,
    pub energy: EnergySummary,
    pub terminal_energy: EnergyReport,
    pub deformation: DeformationReport,
    pub drift: f64,
    pub det_range: (f64, f64),
    pub area_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Splash(SplashEvent),
    NoSplash { t_end: f64, t_max: f64, min_gap: f64 },
    Aborted { t: f64, step: usize, kind: String, reason: String },
}

impl RunOutcome {
    pub fn status(&self) -> &'static str {
        match self {
            RunOutcome::Splash(_) => "splash",
            RunOutcome::NoSplash { .. } => "no_splash",
            RunOutcome::Aborted { .. } => "aborted",
        }
    }

    pub fn event(&self) -> Option<&SplashEvent> {
        match self {
            RunOutcome::Splash(e) => Some(e),
            _ => None,
        }
    }
}

/// Everything needed to continue a run from a stored step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub source: DomainSource,
    pub cfg: StepConfig,
    pub options: RunOptions,
    pub initial: InitialDataSummary,
    pub targets: Option<Vec<Vec2>>,
    pub flow: FlowSnapshot,
    pub energy: EnergyAccumulator,
    pub series: Vec<SeriesRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub frames: Vec<Frame>,
    pub monitors: RunMonitors,
    pub last_gap: f64,
}

impl RunSnapshot {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Result of a splash run with its time series.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub source: DomainSource,
    pub epsilon: f64,
    pub cfg: StepConfig,
    pub options: RunOptions,
    pub initial: InitialDataSummary,
    pub outcome: RunOutcome,
    pub series: Vec<SeriesRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub frames: Vec<Frame>,
    pub energy: EnergyAccumulator,
    pub monitors: RunMonitors,
    pub snapshots: Vec<RunSnapshot>,
    /// Boundary at the upper end of the splash bracket (or the last state).
    pub terminal_boundary: Vec<Vec2>,
    pub tags: Vec<RegionTag>,
    /// Unlifted limit position of each boundary vertex, for splash domains.
    pub targets: Option<Vec<Vec2>>,
}

/// Mutable part of a run.
struct Progress {
    state: FlowState,
    energy: EnergyAccumulator,
    series: Vec<SeriesRow>,
    trajectory: Vec<TrajectoryRow>,
    frames: Vec<Frame>,
    monitors: RunMonitors,
    last_gap: f64,
}

fn gap_of(state: &FlowState) -> Result<GapResult> {
    min_boundary_gap(&state.boundary_curve()?, RegionTag::CapPlus, RegionTag::Trough)
}

fn frame(state: &FlowState) -> Frame {
    Frame { step: state.step, t: state.t, boundary: state.boundary_positions() }
}

/// Builds the domain and initial data, then steps until the cap-trough gap
/// falls to `cfg.delta_splash` or `t` passes `t_max_factor * eps`. On
/// contact the last step is bisected to bracket the splash time, and a few
/// more steps are taken to observe the vertical ordering crossing.
pub fn run_splash_experiment(source: &DomainSource, cfg: &StepConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    opts.validate()?;
    let eps = source.epsilon();
    let init = build_initial_data(source, opts.mesh_size, &opts.profile, cfg.nu)?;
    let summary = init.summary(eps)?;
    if init.initial_gap <= cfg.delta_splash {
        return Err(Error::Degenerate(format!(
            "initial gap {:.3e} is already within the contact distance {:.3e}",
            init.initial_gap, cfg.delta_splash
        )));
    }
    let state = FlowState::initial(&init.curve, init.velocity, init.pressure)?;
    let gap = gap_of(&state)?.distance;
    let energy = EnergyAccumulator::new(&state, cfg.energy_bound);
    let series = vec![SeriesRow::new(&state, energy.last(), gap)];
    let trajectory = vec![TrajectoryRow::new(&state, gap, false)?];
    let progress = Progress {
        frames: vec![frame(&state)],
        state,
        energy,
        series,
        trajectory,
        monitors: RunMonitors::new(gap),
        last_gap: gap,
    };
    drive(source.clone(), *cfg, *opts, summary, init.targets, progress)
}

/// Continues a run from a stored snapshot.
pub fn resume_run(snap: &RunSnapshot) -> Result<RunReport> {
    snap.cfg.validate()?;
    snap.options.validate()?;
    let progress = Progress {
        state: FlowState::from_snapshot(&snap.flow)?,
        energy: snap.energy.clone(),
        series: snap.series.clone(),
        trajectory: snap.trajectory.clone(),
        frames: snap.frames.clone(),
        monitors: snap.monitors,
        last_gap: snap.last_gap,
    };
    drive(snap.source.clone(), snap.cfg, snap.options, snap.initial, snap.targets.clone(), progress)
}

fn drive(
    source: DomainSource,
    cfg: StepConfig,
    opts: RunOptions,
    initial: InitialDataSummary,
    targets: Option<Vec<Vec2>>,
    mut p: Progress,
) -> Result<RunReport> {
    let eps = source.epsilon();
    let t_max = opts.t_max_factor * eps;
    let mut stepper = Stepper::new(cfg)?;
    let mut snapshots = Vec::new();
    let tags = p.state.tracking.tags.clone();
    let finish = |p: Progress, outcome: RunOutcome, snapshots: Vec<RunSnapshot>, terminal: Vec<Vec2>| RunReport {
        source: source.clone(),
        epsilon: eps,
        cfg,
        options: opts,
        initial,
        outcome,
        series: p.series,
        trajectory: p.trajectory,
        frames: p.frames,
        energy: p.energy,
        monitors: p.monitors,
        snapshots,
        terminal_boundary: terminal,
        tags: tags.clone(),
        targets: targets.clone(),
    };
    let abort = |state: &FlowState, e: &Error| RunOutcome::Aborted {
        t: state.t,
        step: state.step,
        kind: e.kind().to_string(),
        reason: e.to_string(),
    };

    loop {
        if p.state.t >= t_max * (1.0 - 1e-12) {
            let outcome = RunOutcome::NoSplash { t_end: p.state.t, t_max, min_gap: p.monitors.min_gap };
            let terminal = p.state.boundary_positions();
            return Ok(finish(p, outcome, snapshots, terminal));
        }
        let (next, info) = match stepper.step(&p.state) {
            Ok(r) => r,
            Err(e) => {
                let outcome = abort(&p.state, &e);
                let terminal = p.state.boundary_positions();
                return Ok(finish(p, outcome, snapshots, terminal));
            }
        };
        p.energy.record(&next, &info);
        p.monitors.step_halvings += info.halvings;
        if info.kinetic_after > info.kinetic_before {
            p.monitors.kinetic_increases += 1;
            p.monitors.max_kinetic_increase =
                p.monitors.max_kinetic_increase.max(info.kinetic_after - info.kinetic_before);
        }
        let (lo, hi) = det_range(&next.space, &next.eta);
        p.monitors.max_det_deviation = p.monitors.max_det_deviation.max((1.0 - lo).max(hi - 1.0));
        let area0 = next.tracking.initial_area;
        p.monitors.max_area_error = p.monitors.max_area_error.max(((next.area() - area0) / area0).abs());

        let mut next = next;
        let mut touching = false;
        if needs_remesh(&next, &cfg) {
            match remesh(&next) {
                Ok(RemeshOutcome::Remeshed(r)) => {
                    next = r;
                    p.monitors.remeshes += 1;
                }
                Ok(RemeshOutcome::Splashed(_)) => touching = true,
                Ok(RemeshOutcome::Unchanged) => {}
                Err(e) => {
                    let outcome = abort(&next, &e);
                    let terminal = next.boundary_positions();
                    return Ok(finish(p, outcome, snapshots, terminal));
                }
            }
        }
        let gap = match gap_of(&next) {
            Ok(g) => g,
            Err(e) => {
                let outcome = abort(&next, &e);
                let terminal = next.boundary_positions();
                return Ok(finish(p, outcome, snapshots, terminal));
            }
        };
        let contact = touching || gap.distance <= cfg.delta_splash;
        p.monitors.min_gap = p.monitors.min_gap.min(gap.distance);
        p.series.push(SeriesRow::new(&next, p.energy.last(), gap.distance));
        p.trajectory.push(TrajectoryRow::new(&next, gap.distance, false)?);
        if next.step % opts.frame_stride == 0 || contact {
            p.frames.push(frame(&next));
        }

        if contact {
            let prev = std::mem::replace(&mut p.state, next.clone());
            let (event, terminal) = close_in(&mut stepper, &mut p, &opts, prev, next, gap, eps)?;
            return Ok(finish(p, RunOutcome::Splash(event), snapshots, terminal));
        }
        p.last_gap = gap.distance;
        p.state = next;
        if p.state.step % opts.snapshot_stride == 0 {
            snapshots.push(RunSnapshot {
                source: source.clone(),
                cfg,
                options: opts,
                initial,
                targets: targets.clone(),
                flow: p.state.snapshot(),
                energy: p.energy.clone(),
                series: p.series.clone(),
                trajectory: p.trajectory.clone(),
                frames: p.frames.clone(),
                monitors: p.monitors,
                last_gap: p.last_gap,
            });
        }
    }
}

/// Brackets the splash time between `prev` (gap above the contact
/// distance) and `hit` (gap at or below it), then steps on from `hit` until
/// the falling point drops below the trough.
fn close_in(
    stepper: &mut Stepper,
    p: &mut Progress,
    opts: &RunOptions,
    prev: FlowState,
    hit: FlowState,
    hit_gap: GapResult,
    eps: f64,
) -> Result<(SplashEvent, Vec<Vec2>)> {
    let cfg = stepper.cfg;
    let delta = cfg.delta_splash;
    let dt_main = hit.t - prev.t;
    let (mut lo, mut g_lo) = (prev, p.last_gap);
    let (mut hi, mut g_hi) = (hit.clone(), hit_gap);
    for _ in 0..opts.bisection_depth {
        let h = 0.5 * (hi.t - lo.t);
        let Ok((mid, _)) = stepper.step_with(&lo, h) else { break };
        let Ok(g) = gap_of(&mid) else { break };
        if g.distance <= delta {
            hi = mid;
            g_hi = g;
        } else {
            lo = mid;
            g_lo = g.distance;
        }
    }
    let frac = if g_lo > g_hi.distance { ((g_lo - delta) / (g_lo - g_hi.distance)).clamp(0.0, 1.0) } else { 1.0 };
    let mut t_star = lo.t + frac * (hi.t - lo.t);
    if t_star <= lo.t {
        t_star = hi.t;
    }

    // vertical ordering needs the falling point to pass the trough
    let mut cur = hit;
    for _ in 0..opts.overshoot_steps {
        if p.trajectory.last().is_some_and(|r| r.pole_y < r.trough_min_y) {
            break;
        }
        let Ok((n, _)) = stepper.step(&cur) else { break };
        let g = gap_of(&n).map(|g| g.distance).unwrap_or(0.0);
        p.trajectory.push(TrajectoryRow::new(&n, g, true)?);
        cur = n;
    }
    let ordering_crossing = ordering_crossing(&p.trajectory);
    let window_end = t_star.min(10.0 * eps);
    let pole_height = interpolate_pole(&p.trajectory, window_end);

    let energy = p.energy.summary();
    let t0 = 0.9 * t_star;
    let tail: Vec<f64> = p.series.iter().filter(|r| r.t >= t0 && r.t < t_star).map(|r| r.gap_cap_trough).collect();
    let gap_monotone_tail = tail.windows(2).all(|w| w[1] < w[0]);
    let (dlo, dhi) = det_range(&hi.space, &hi.eta);
    let area0 = hi.tracking.initial_area;
    let event = SplashEvent {
        t_star,
        bracket: (lo.t, hi.t),
        gap_bracket: (g_lo, g_hi.distance),
        contact_points: [g_hi.point_a, g_hi.point_b],
        contact_tags: [RegionTag::CapPlus, RegionTag::Trough],
        t_star_over_eps: t_star / eps,
        within_ten_eps: t_star < 10.0 * eps,
        ordering_crossing,
        detector_offset_steps: ordering_crossing.map(|c| (c - t_star).abs() / dt_main),
        pole_height,
        pole_height_time: window_end,
        pole_below_minus_eps: pole_height <= -eps,
        pole_below_minus_eight_eps: pole_height < -8.0 * eps,
        gap_monotone_tail,
        energy,
        terminal_energy: *p.energy.last(),
        deformation: deformation_report(&hi, cfg.theta, energy.max_total),
        drift: drift_monitor(&hi),
        det_range: (dlo, dhi),
        area_error: (hi.area() - area0) / area0,
    };
    Ok((event, hi.boundary_positions()))
}

/// First time the falling point is strictly below every trough point,
/// linearly interpolated between rows.
pub fn ordering_crossing(rows: &[TrajectoryRow]) -> Option<f64> {
    let d = |r: &TrajectoryRow| r.pole_y - r.trough_min_y;
    let k = rows.iter().position(|r| d(r) < 0.0)?;
    if k == 0 {
        return Some(rows[0].t);
    }
    let (a, b) = (&rows[k - 1], &rows[k]);
    let f = d(a) / (d(a) - d(b));
    Some(a.t + f * (b.t - a.t))
}

/// Falling-point height at time `t`, linear between rows (clamped to the ends).
pub fn interpolate_pole(rows: &[TrajectoryRow], t: f64) -> f64 {
    match rows.iter().position(|r| r.t >= t) {
        None => rows.last().map_or(f64::NAN, |r| r.pole_y),
        Some(0) => rows[0].pole_y,
        Some(k) => {
            let (a, b) = (&rows[k - 1], &rows[k]);
            a.pole_y + (t - a.t) / (b.t - a.t) * (b.pole_y - a.pole_y)
        }
    }
}
