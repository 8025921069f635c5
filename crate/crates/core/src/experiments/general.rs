use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_power_law, PowerFit};
use super::run::{run_splash_experiment, RunOptions, RunReport};
use super::setup::DomainSource;
use crate::geometry::{discrete_sobolev_norm, DeviationSamples, RegionTag, SplashApproxOptions, SplashDomainSpec};
use crate::lagrangian::StepConfig;
use crate::{Error, Result, Vec2};

/// Uniform samples used to resample the deviation along the contact arcs.
const PROXIMITY_SAMPLES: usize = 401;

/// Distance of the terminal boundary from the limit splash boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    /// Order-3 discrete norm of `eta(X, t) - X_limit` over the `cap_plus` arcs.
    pub h3: f64,
    /// Order-0 part of the same deviation.
    pub l2: f64,
    pub max_pointwise: f64,
    pub arc_length: f64,
    pub samples: usize,
}

/// Splash run on an approximated splash domain with its proximity report.
pub struct GeneralRun {
    pub run: RunReport,
    pub proximity: Option<Proximity>,
}

/// Natural cubic spline through `(x_i, y_i)`, `x` strictly increasing.
struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut sub = vec![0.0; k];
            for i in 1..n - 1 {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                diag[i - 1] = 2.0 * (h0 + h1);
                sub[i - 1] = h0;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let w = sub[i] / diag[i - 1];
                diag[i] -= w * (x[i + 1] - x[i]);
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - (x[i + 1] - x[i]) * m[i + 1]) / diag[i - 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Indices of the `cap_plus` vertices as one contiguous run in curve order.
fn cap_run(tags: &[RegionTag]) -> Result<Vec<usize>> {
    let n = tags.len();
    let on = |i: usize| tags[i % n] == RegionTag::CapPlus;
    let start = (0..n).find(|&i| on(i) && !on(i + n - 1)).ok_or_else(|| {
        Error::InvalidInput("no contiguous cap_plus run on the boundary".into())
    })?;
    let run: Vec<usize> = (0..n).map(|k| (start + k) % n).take_while(|&i| on(i)).collect();
    if run.len() != tags.iter().filter(|t| **t == RegionTag::CapPlus).count() {
        return Err(Error::InvalidInput("cap_plus vertices are not contiguous".into()));
    }
    Ok(run)
}

/// Order-3 discrete norm of the material deviation between `boundary` and
/// the limit positions `targets` over the `cap_plus` run, resampled
/// uniformly in limit arclength by natural cubic splines.
pub fn proximity(boundary: &[Vec2], targets: &[Vec2], tags: &[RegionTag]) -> Result<Proximity> {
    if boundary.len() != targets.len() || boundary.len() != tags.len() {
        return Err(Error::InvalidInput("boundary, targets and tags differ in length".into()));
    }
    let run = cap_run(tags)?;
    if run.len() < 4 {
        return Err(Error::InvalidInput(format!("cap_plus run has {} vertices, needs 4", run.len())));
    }
    let mut s = vec![0.0; run.len()];
    for k in 1..run.len() {
        s[k] = s[k - 1] + (targets[run[k]] - targets[run[k - 1]]).norm();
    }
    let len = *s.last().unwrap();
    let dev: Vec<Vec2> = run.iter().map(|&i| boundary[i] - targets[i]).collect();
    let sx = NaturalSpline::new(s.clone(), dev.iter().map(|d| d.x).collect());
    let sy = NaturalSpline::new(s, dev.iter().map(|d| d.y).collect());
    let h = len / (PROXIMITY_SAMPLES - 1) as f64;
    let vals: Vec<Vec2> =
        (0..PROXIMITY_SAMPLES).map(|k| Vec2::new(sx.eval(k as f64 * h), sy.eval(k as f64 * h))).collect();
    let samples = DeviationSamples::vector(&vals, h, false);
    Ok(Proximity {
        h3: discrete_sobolev_norm(&samples, 3)?,
        l2: discrete_sobolev_norm(&samples, 0)?,
        max_pointwise: dev.iter().map(|d| d.norm()).fold(0.0, f64::max),
        arc_length: len,
        samples: PROXIMITY_SAMPLES,
    })
}

/// Runs to splash on the domain obtained by separating the contact of
/// `sds` by `epsilon`, with the falling bump on the `theta_plus` side, and
/// reports how far the boundary at the splash is from the limit boundary.
pub fn general_splash_run(
    sds: &SplashDomainSpec,
    approx: &SplashApproxOptions,
    epsilon: f64,
    cfg: &StepConfig,
    opts: &RunOptions,
) -> Result<GeneralRun> {
    sds.validate(approx)?;
    let source = DomainSource::Splash { spec: sds.clone(), epsilon, approx: *approx };
    let run = run_splash_experiment(&source, cfg, opts)?;
    let proximity = match (&run.targets, run.outcome.event()) {
        (Some(t), Some(_)) => Some(proximity(&run.terminal_boundary, t, &run.tags)?),
        _ => None,
    };
    Ok(GeneralRun { run, proximity })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralRow {
    pub epsilon: f64,
    pub status: String,
    pub t_star: Option<f64>,
    pub proximity: Option<Proximity>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralSweepReport {
    pub rows: Vec<GeneralRow>,
    /// Proximity ratios between consecutive levels.
    pub ratios: Vec<f64>,
    /// Power law of the order-3 proximity in epsilon.
    pub fit: Option<PowerFit>,
    pub all_splashed: bool,
}

impl GeneralSweepReport {
    pub const HEADER: &'static str = "epsilon,status,T_star,proximity_h3,proximity_l2,max_deviation";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let p = r.proximity;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.epsilon,
                r.status,
                r.t_star.map_or_else(String::new, |v| v.to_string()),
                p.map_or_else(String::new, |v| v.h3.to_string()),
                p.map_or_else(String::new, |v| v.l2.to_string()),
                p.map_or_else(String::new, |v| v.max_pointwise.to_string()),
            );
        }
        s
    }
}

/// [`general_splash_run`] over decreasing epsilons (in parallel), with the
/// fitted power of the proximity in epsilon. `step` holds `dt` and
/// `delta_splash` as multiples of epsilon.
pub fn general_sweep(
    sds: &SplashDomainSpec,
    approx: &SplashApproxOptions,
    epsilons: &[f64],
    step: &StepConfig,
    opts: &RunOptions,
) -> Result<(GeneralSweepReport, Vec<Option<GeneralRun>>)> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("sweep epsilons must be nonempty and strictly decreasing".into()));
    }
    sds.validate(approx)?;
    let out: Vec<(GeneralRow, Option<GeneralRun>)> = epsilons
        .par_iter()
        .map(|&e| match general_splash_run(sds, approx, e, &step.at_epsilon(e), opts) {
            Ok(g) => {
                let row = GeneralRow {
                    epsilon: e,
                    status: g.run.outcome.status().into(),
                    t_star: g.run.outcome.event().map(|ev| ev.t_star),
                    proximity: g.proximity,
                    message: String::new(),
                };
                (row, Some(g))
            }
            Err(err) => {
                let row =
                    GeneralRow { epsilon: e, status: "aborted".into(), t_star: None, proximity: None, message: err.to_string() };
                (row, None)
            }
        })
        .collect();
    let (rows, runs): (Vec<GeneralRow>, Vec<Option<GeneralRun>>) = out.into_iter().unzip();
    let all_splashed = rows.iter().all(|r| r.proximity.is_some());
    let ratios = rows
        .windows(2)
        .filter_map(|w| Some(w[0].proximity?.h3 / w[1].proximity?.h3))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| Some((r.epsilon, r.proximity?.h3))).unzip();
    let fit = if x.len() >= 2 { fit_power_law(&x, &y).ok() } else { None };
    Ok((GeneralSweepReport { rows, ratios, fit, all_splashed }, runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_spline_reproduces_lines_and_interpolates() {
        let x = vec![0.0, 0.3, 0.35, 0.9, 1.4, 2.0];
        let sp = NaturalSpline::new(x.clone(), x.iter().map(|v| 2.0 * v - 1.0).collect());
        for t in [0.0, 0.1, 0.33, 1.0, 1.7, 2.0] {
            assert!((sp.eval(t) - (2.0 * t - 1.0)).abs() < 1e-13);
        }
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let sp = NaturalSpline::new(x.clone(), y.clone());
        for (a, b) in x.iter().zip(&y) {
            assert!((sp.eval(*a) - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_deviation_has_zero_proximity() {
        let n = 40;
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let tags: Vec<RegionTag> =
            (0..n).map(|k| if (5..15).contains(&k) { RegionTag::CapPlus } else { RegionTag::Other }).collect();
        let p = proximity(&pts, &pts, &tags).unwrap();
        assert_eq!(p.h3, 0.0);
        // a rigid shift c gives |c| sqrt(L) for every order
        let c = Vec2::new(0.003, -0.004);
        let moved: Vec<Vec2> = pts.iter().map(|p| p + c).collect();
        let p = proximity(&moved, &pts, &tags).unwrap();
        let expected = c.norm() * (p.arc_length + p.arc_length / 400.0).sqrt();
        assert!((p.h3 - expected).abs() < 1e-9 * expected, "{} vs {expected}", p.h3);
    }

    #[test]
    fn wrapped_cap_run_is_ordered() {
        let mut tags = vec![RegionTag::Other; 10];
        for k in [8, 9, 0, 1] {
            tags[k] = RegionTag::CapPlus;
        }
        assert_eq!(cap_run(&tags).unwrap(), vec![8, 9, 0, 1]);
        tags[5] = RegionTag::CapPlus;
        assert!(cap_run(&tags).is_err());
    }
}
