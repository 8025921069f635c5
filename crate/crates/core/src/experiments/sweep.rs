use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::fit_drift_exponent;
use super::run::{run_splash_experiment, RunOptions, RunOutcome, RunReport};
use super::setup::DomainSource;
use crate::geometry::RegionTag;
use crate::lagrangian::StepConfig;
use crate::{Error, Result};

/// An epsilon sweep: one run per gap value, all other parameters shared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub source: DomainSource,
    /// Strictly decreasing gap values.
    pub epsilons: Vec<f64>,
    /// `dt` and `delta_splash` are multiples of epsilon.
    pub step: StepConfig,
    pub options: RunOptions,
}

impl SweepSpec {
    pub fn new(source: DomainSource, epsilons: Vec<f64>) -> Self {
        Self { source, epsilons, step: StepConfig::for_epsilon(1.0), options: RunOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub status: String,
    pub t_star: Option<f64>,
    pub t_star_over_eps: Option<f64>,
    pub within_ten_eps: Option<bool>,
    pub contact_tags_ok: bool,
    /// Height of the falling point at `min(10 eps, t_star)`.
    pub pole_height: Option<f64>,
    pub pole_below_minus_eps: Option<bool>,
    pub ordering_crossing: Option<f64>,
    pub detector_offset_steps: Option<f64>,
    pub drift_exponent: Option<f64>,
    pub drift_confidence: Option<f64>,
    pub drift_sublinear: Option<bool>,
    pub max_energy_ratio: f64,
    pub volume_error: f64,
    pub max_det_deviation: f64,
    pub kinetic_increases: usize,
    pub gap_monotone_tail: Option<bool>,
    pub steps: usize,
    pub message: String,
}

impl SweepRow {
    pub const HEADER: &'static str = "epsilon,status,T_star,T_star_over_eps,within_10eps,contact_tags_ok,pole_height,pole_below_minus_eps,ordering_crossing,detector_offset_dt,drift_exponent,drift_ci95,max_E_ratio,volume_error,max_detJ_dev,kinetic_increases,steps";

    pub fn to_csv(&self) -> String {
        fn o<T: std::fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(String::new, |x| x.to_string())
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.epsilon,
            self.status,
            o(self.t_star),
            o(self.t_star_over_eps),
            o(self.within_ten_eps),
            self.contact_tags_ok,
            o(self.pole_height),
            o(self.pole_below_minus_eps),
            o(self.ordering_crossing),
            o(self.detector_offset_steps),
            o(self.drift_exponent),
            o(self.drift_confidence),
            self.max_energy_ratio,
            self.volume_error,
            self.max_det_deviation,
            self.kinetic_increases,
            self.steps
        )
    }

    fn failed(epsilon: f64, err: &Error) -> Self {
        Self {
            epsilon,
            status: "aborted".into(),
            t_star: None,
            t_star_over_eps: None,
            within_ten_eps: None,
            contact_tags_ok: false,
            pole_height: None,
            pole_below_minus_eps: None,
            ordering_crossing: None,
            detector_offset_steps: None,
            drift_exponent: None,
            drift_confidence: None,
            drift_sublinear: None,
            max_energy_ratio: 0.0,
            volume_error: 0.0,
            max_det_deviation: 0.0,
            kinetic_increases: 0,
            gap_monotone_tail: None,
            steps: 0,
            message: err.to_string(),
        }
    }

    pub fn from_run(run: &RunReport) -> Self {
        let eps = run.epsilon;
        let ev = run.outcome.event();
        let drift = ev.and_then(|e| {
            let t: Vec<f64> = run.series.iter().map(|r| r.t).collect();
            let d: Vec<f64> = run.series.iter().map(|r| r.drift).collect();
            fit_drift_exponent(&t, &d, (0.1 * eps, e.t_star)).ok()
        });
        let message = match &run.outcome {
            RunOutcome::Splash(_) => String::new(),
            RunOutcome::NoSplash { t_max, min_gap, .. } => format!("no splash by t = {t_max} (min gap {min_gap:.3e})"),
            RunOutcome::Aborted { reason, .. } => reason.clone(),
        };
        Self {
            epsilon: eps,
            status: run.outcome.status().into(),
            t_star: ev.map(|e| e.t_star),
            t_star_over_eps: ev.map(|e| e.t_star_over_eps),
            within_ten_eps: ev.map(|e| e.within_ten_eps),
            contact_tags_ok: ev.is_some_and(|e| e.contact_tags == [RegionTag::CapPlus, RegionTag::Trough]),
            pole_height: ev.map(|e| e.pole_height),
            pole_below_minus_eps: ev.map(|e| e.pole_below_minus_eps),
            ordering_crossing: ev.and_then(|e| e.ordering_crossing),
            detector_offset_steps: ev.and_then(|e| e.detector_offset_steps),
            drift_exponent: drift.map(|d| d.fit.exponent),
            drift_confidence: drift.map(|d| d.fit.confidence),
            drift_sublinear: drift.map(|d| d.sublinear),
            max_energy_ratio: run.energy.summary().max_ratio,
            volume_error: run.monitors.max_area_error,
            max_det_deviation: run.monitors.max_det_deviation,
            kinetic_increases: run.monitors.kinetic_increases,
            gap_monotone_tail: ev.map(|e| e.gap_monotone_tail),
            steps: run.series.last().map_or(0, |r| r.step),
            message,
        }
    }
}

/// Trend checks across the rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrends {
    pub all_splashed: bool,
    /// `t_star` decreases with epsilon; `None` when skipped.
    pub t_star_decreasing: Option<bool>,
    /// Largest `t_star / eps` over splashing rows.
    pub t_star_over_eps_max: Option<f64>,
    pub rows_beyond_ten_eps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Sorted by epsilon, largest first.
    pub rows: Vec<SweepRow>,
    pub trends: SweepTrends,
    pub notices: Vec<String>,
    pub spec: SweepSpec,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SweepRow::HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.to_csv());
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sweep result with the individual runs.
pub struct Sweep {
    pub report: SweepReport,
    /// One entry per row; `None` where the run failed before stepping.
    pub runs: Vec<Option<RunReport>>,
}

/// Runs one splash experiment per epsilon (in parallel) and checks that the
/// splash time decreases with epsilon and that `t_star / eps` stays bounded.
pub fn epsilon_sweep(spec: &SweepSpec) -> Result<Sweep> {
    let eps = &spec.epsilons;
    if eps.is_empty() {
        return Err(Error::InvalidInput("epsilon sweep needs at least one value".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("sweep epsilons must be positive and strictly decreasing".into()));
    }
    spec.step.at_epsilon(eps[0]).validate()?;
    spec.options.validate()?;
    let results: Vec<(SweepRow, Option<RunReport>)> = eps
        .par_iter()
        .map(|&e| {
            let source = spec.source.with_epsilon(e);
            match run_splash_experiment(&source, &spec.step.at_epsilon(e), &spec.options) {
                Ok(run) => (SweepRow::from_run(&run), Some(run)),
                Err(err) => (SweepRow::failed(e, &err), None),
            }
        })
        .collect();
    let (rows, runs): (Vec<SweepRow>, Vec<Option<RunReport>>) = results.into_iter().unzip();

    let mut notices = Vec::new();
    let splashed: Vec<&SweepRow> = rows.iter().filter(|r| r.t_star.is_some()).collect();
    let all_splashed = splashed.len() == rows.len();
    let t_star_decreasing = if rows.len() < 3 {
        notices.push(format!("{} row(s): trend checks need at least three values and were skipped", rows.len()));
        None
    } else if !all_splashed {
        notices.push("not every row splashed: the decrease check was skipped".into());
        None
    } else {
        Some(splashed.windows(2).all(|w| w[1].t_star.unwrap() < w[0].t_star.unwrap()))
    };
    let t_star_over_eps_max = splashed.iter().filter_map(|r| r.t_star_over_eps).reduce(f64::max);
    let rows_beyond_ten_eps = splashed.iter().filter(|r| r.within_ten_eps == Some(false)).count();
    if rows_beyond_ten_eps > 0 {
        notices.push(format!("{rows_beyond_ten_eps} row(s) splashed after 10 eps"));
    }
    for r in &rows {
        if r.status != "splash" {
            notices.push(format!("eps = {}: {} ({})", r.epsilon, r.status, r.message));
        }
    }
    Ok(Sweep {
        report: SweepReport {
            rows,
            trends: SweepTrends { all_splashed, t_star_decreasing, t_star_over_eps_max, rows_beyond_ten_eps },
            notices,
            spec: spec.clone(),
        },
        runs,
    })
}
