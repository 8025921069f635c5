use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::elliptic::ProfileOptions;
use crate::experiments::{DomainSource, RunOptions};
use crate::geometry::{DomainSpec, SplashApproxOptions, SplashDomainSpec};
use crate::lagrangian::StepConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    BuildDomain,
    InitData,
    Simulate,
    Sweep,
    GeneralSplash,
    Convergence,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::BuildDomain, Mode::InitData, Mode::Simulate, Mode::Sweep, Mode::GeneralSplash, Mode::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Mode::BuildDomain => "build-domain",
            Mode::InitData => "init-data",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::GeneralSplash => "general-splash",
            Mode::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Dinosaur,
    /// Touching member of the dinosaur family, separated as a splash domain.
    DinosaurLimit,
    /// Built-in asymmetric overhang splash domain.
    Overhang,
    /// Splash domain read from `domain.splash_file`.
    SplashFile,
}

impl DomainKind {
    const ALL: [DomainKind; 4] =
        [DomainKind::Dinosaur, DomainKind::DinosaurLimit, DomainKind::Overhang, DomainKind::SplashFile];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Dinosaur => "dinosaur",
            DomainKind::DinosaurLimit => "dinosaur_limit",
            DomainKind::Overhang => "overhang",
            DomainKind::SplashFile => "splash_file",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Domain section. Optional lengths fall back to their epsilon-dependent defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub epsilon: f64,
    pub neck_height: f64,
    pub neck_radius: f64,
    pub trough_halfwidth: Option<f64>,
    pub body_width: f64,
    pub body_depth: f64,
    pub arch_radius: f64,
    pub smoothing_radius: f64,
    pub node_spacing: f64,
    pub contact_spacing: Option<f64>,
    pub grading: f64,
    /// Lift plateau and transition of the splash-domain separation.
    pub plateau: f64,
    pub transition: f64,
    /// Canonical path, checked to exist at parse time.
    pub splash_file: Option<PathBuf>,
}

impl DomainConfig {
    pub fn dinosaur_spec(&self, epsilon: f64) -> DomainSpec {
        let mut s = DomainSpec::new(epsilon);
        s.neck_height = self.neck_height;
        s.neck_radius = self.neck_radius;
        if let Some(w) = self.trough_halfwidth {
            s.trough_halfwidth = w;
        }
        s.body_extent = [self.body_width, self.body_depth];
        s.arch_radius = self.arch_radius;
        s.smoothing_radius = self.smoothing_radius;
        s.node_spacing = self.node_spacing;
        s.contact_spacing = self.contact_spacing.unwrap_or_else(|| DomainSpec::default_contact_spacing(epsilon, self.node_spacing));
        s.grading = self.grading;
        s
    }

    pub fn approx(&self) -> SplashApproxOptions {
        SplashApproxOptions {
            plateau: self.plateau,
            transition: self.transition,
            node_spacing: self.node_spacing,
            contact_spacing: self.contact_spacing,
            grading: self.grading,
        }
    }

    /// The splash-domain description, for every kind except `dinosaur`.
    pub fn splash_spec(&self) -> Result<Option<SplashDomainSpec>> {
        Ok(match self.kind {
            DomainKind::Dinosaur => None,
            DomainKind::DinosaurLimit => Some(SplashDomainSpec::dinosaur_limit(&self.dinosaur_spec(self.epsilon))),
            DomainKind::Overhang => Some(SplashDomainSpec::overhang_fixture()),
            DomainKind::SplashFile => {
                let path = self.splash_file.as_ref().expect("checked at parse time");
                Some(SplashDomainSpec::from_json(&std::fs::read_to_string(path)?)?)
            }
        })
    }

    pub fn source(&self) -> Result<DomainSource> {
        Ok(match self.splash_spec()? {
            None => DomainSource::Dinosaur(self.dinosaur_spec(self.epsilon)),
            Some(spec) => DomainSource::Splash { spec, epsilon: self.epsilon, approx: self.approx() },
        })
    }
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub domain: DomainConfig,
    /// `dt` and `delta_splash` are stored as multiples of epsilon.
    pub solver: StepConfig,
    /// Includes the frame stride of the output section.
    pub run: RunOptions,
    pub epsilons: Vec<f64>,
    pub convergence_h: Vec<f64>,
    pub output_dir: PathBuf,
    /// Sweeps run on a single worker thread.
    pub deterministic: bool,
}

impl RunConfig {
    /// Absolute step configuration at the configured epsilon.
    pub fn step_config(&self) -> StepConfig {
        self.solver.at_epsilon(self.domain.epsilon)
    }
}

/// `(key, default shown in the usage text, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("mode", "", "build-domain | init-data | simulate | sweep | general-splash | convergence"),
    ("seed", "0", "seed for randomized checks"),
    ("domain.kind", "dinosaur", "dinosaur | dinosaur_limit | overhang | splash_file"),
    ("domain.epsilon", "", "gap parameter in (0, 1); required except for convergence"),
    ("domain.neck_height", "1.0", "neck channel height"),
    ("domain.neck_radius", "0.5", "neck channel half-width"),
    ("domain.trough_halfwidth", "max(sqrt(eps), 0.5)", "flat trough half-width"),
    ("domain.body_width", "1.5", "right extent of the lower body"),
    ("domain.body_depth", "1.0", "depth of the lower body"),
    ("domain.arch_radius", "0.5", "inner arch radius"),
    ("domain.smoothing_radius", "0.125", "corner rounding radius"),
    ("domain.node_spacing", "0.1", "largest boundary node spacing"),
    ("domain.contact_spacing", "min(eps/2, node_spacing)", "node spacing at the contact"),
    ("domain.grading", "0.3", "spacing growth rate away from the contact"),
    ("domain.plateau", "0.2", "splash domains: arclength half-width lifted by the full eps"),
    ("domain.transition", "0.3", "splash domains: arclength of the lift decay"),
    ("domain.splash_file", "", "splash domain JSON, relative to the config file"),
    ("solver.dt_over_eps", "0.01", "time step as a multiple of eps"),
    ("solver.delta_over_eps", "0.01", "contact gap as a multiple of eps"),
    ("solver.theta", "0.5", "deformation threshold in (0, 1)"),
    ("solver.nu", "1.0", "kinematic viscosity"),
    ("solver.quality_floor", "10.0", "remesh below this angle (degrees)"),
    ("solver.min_det", "0.5", "remesh below this det grad eta"),
    ("solver.cfl", "0.25", "CFL cap"),
    ("solver.energy_bound", "10.0", "bound C in max E <= C M0"),
    ("run.mesh_size", "0.15", "interior triangle size"),
    ("run.t_max_factor", "20.0", "final time as a multiple of eps"),
    ("run.snapshot_stride", "25", "steps between restart snapshots"),
    ("run.bisection_depth", "3", "halvings of the contact step"),
    ("run.overshoot_steps", "40", "steps past contact for the ordering detector"),
    ("run.bump_radius", "0.4", "arclength radius of the initial normal-velocity bump"),
    ("run.amplitude", "1.0", "falling speed at the bump center"),
    ("sweep.epsilons", "0.1, 0.05, 0.025", "strictly decreasing gap values"),
    ("convergence.h", "0.2, 0.1, 0.05", "strictly decreasing mesh sizes"),
    ("output.dir", "out", "output directory"),
    ("output.frame_stride", "25", "steps between SVG frames"),
    ("output.deterministic", "true", "run sweeps on one thread"),
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    /// Column of the key and of the value, 1-based.
    key_col: usize,
    value_col: usize,
}

fn cfg_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Config { line, column, message: message.into() }
}

fn column_of(line: &str, part: &str) -> usize {
    // `part` is a subslice of `line`
    line[..part.as_ptr() as usize - line.as_ptr() as usize].chars().count() + 1
}

fn read_lines(
    text: &str,
    first_line: usize,
    overriding: bool,
    entries: &mut BTreeMap<String, Entry>,
) -> Result<usize> {
    let mut section = String::new();
    let mut n = 0;
    for (i, raw) in text.lines().enumerate() {
        n = i + 1;
        let line_no = first_line + i;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| cfg_err(line_no, column_of(raw, trimmed), "unterminated section header"))?
                .trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                return Err(cfg_err(line_no, column_of(raw, trimmed), format!("invalid section name '{name}'")));
            }
            section = format!("{name}.");
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| cfg_err(line_no, column_of(raw, trimmed), "expected 'key = value'"))?;
        let key = k.trim();
        let value = v.trim();
        let key_col = column_of(raw, key);
        let value_col = if value.is_empty() { column_of(raw, v) } else { column_of(raw, value) };
        if key.is_empty() {
            return Err(cfg_err(line_no, key_col, "missing key"));
        }
        let full = if key.contains('.') || key == "mode" || key == "seed" { key.to_string() } else { format!("{section}{key}") };
        if !KEYS.iter().any(|(k, _, _)| *k == full) {
            return Err(cfg_err(line_no, key_col, format!("unknown key '{full}'")));
        }
        let e = Entry { value: value.to_string(), line: line_no, key_col, value_col };
        if let Some(prev) = entries.insert(full.clone(), e) {
            if !overriding {
                return Err(cfg_err(line_no, key_col, format!("duplicate key '{full}' (first set on line {})", prev.line)));
            }
        }
    }
    Ok(n)
}

struct Fields {
    entries: BTreeMap<String, Entry>,
    /// Reported position of errors that concern no single key.
    end_line: usize,
}

impl Fields {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<(T, &Entry)>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(|v| Some((v, e)))
                .map_err(|_| cfg_err(e.line, e.value_col, format!("{key}: expected {what}, got '{}'", e.value))),
        }
    }

    fn f64_in(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64> {
        match self.parsed::<f64>(key, "a number")? {
            None => Ok(default),
            Some((v, _)) if v.is_finite() && ok(v) => Ok(v),
            Some((v, e)) => Err(cfg_err(e.line, e.value_col, format!("{key} = {v} is out of range: must be {range}"))),
        }
    }

    fn opt_f64_in(&self, key: &str, ok: impl Fn(f64) -> bool, range: &str) -> Result<Option<f64>> {
        if self.get(key).is_none() {
            return Ok(None);
        }
        self.f64_in(key, 0.0, ok, range).map(Some)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        self.f64_in(key, default, |v| v > 0.0, "positive")
    }

    fn usize_in(&self, key: &str, default: usize, lo: usize, hi: usize) -> Result<usize> {
        match self.parsed::<usize>(key, "a nonnegative integer")? {
            None => Ok(default),
            Some((v, _)) if (lo..=hi).contains(&v) => Ok(v),
            Some((v, e)) => Err(cfg_err(e.line, e.value_col, format!("{key} = {v} is out of range: must be in [{lo}, {hi}]"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let Some(e) = self.get(key) else {
            return Ok(default.to_vec());
        };
        let bad = |m: String| cfg_err(e.line, e.value_col, format!("{key}: {m}"));
        let vals = e
            .value
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("'{}' is not a number", s.trim()))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
            return Err(bad("values must lie in (0, 1)".into()));
        }
        if vals.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("values must be strictly decreasing".into()));
        }
        Ok(vals)
    }

    fn missing(&self, key: &str) -> Error {
        cfg_err(self.end_line, 1, format!("missing required field '{key}'"))
    }

    /// Position for errors found by whole-section validation.
    fn at(&self, key: &str, err: Error) -> Error {
        let (line, column) = self.get(key).map_or((self.end_line, 1), |e| (e.line, e.key_col));
        cfg_err(line, column, err.to_string())
    }
}

/// Parses a configuration with relative paths resolved against the current directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[], Path::new("."))
}

/// Parses `text`, then applies `key=value` overrides, which replace file
/// entries and are numbered as lines following the file.
pub fn parse_config_with(text: &str, overrides: &[String], base_dir: &Path) -> Result<RunConfig> {
    let mut entries = BTreeMap::new();
    let n = read_lines(text, 1, false, &mut entries)?;
    let mut line = n + 1;
    for o in overrides {
        if o.contains('\n') {
            return Err(cfg_err(line, 1, "override must be a single key=value"));
        }
        if !o.contains('=') {
            return Err(cfg_err(line, 1, format!("override '{o}' is not key=value")));
        }
        read_lines(o, line, true, &mut entries)?;
        line += 1;
    }
    let f = Fields { entries, end_line: line };

    let mode_entry = f.get("mode").ok_or_else(|| f.missing("mode"))?;
    let mode = Mode::parse(&mode_entry.value).ok_or_else(|| {
        cfg_err(mode_entry.line, mode_entry.value_col, format!("unknown mode '{}'", mode_entry.value))
    })?;
    let seed = f.parsed::<u64>("seed", "a nonnegative integer")?.map_or(0, |(v, _)| v);

    let kind = match f.get("domain.kind") {
        None => DomainKind::Dinosaur,
        Some(e) => DomainKind::parse(&e.value)
            .ok_or_else(|| cfg_err(e.line, e.value_col, format!("unknown domain kind '{}'", e.value)))?,
    };
    let epsilon = match f.opt_f64_in("domain.epsilon", |v| v > 0.0 && v < 1.0, "in (0, 1)")? {
        Some(e) => e,
        None if mode == Mode::Convergence => 0.05,
        None => return Err(f.missing("domain.epsilon")),
    };
    let splash_file = match f.get("domain.splash_file") {
        None if kind == DomainKind::SplashFile => return Err(f.missing("domain.splash_file")),
        None => None,
        Some(e) => {
            let p = base_dir.join(&e.value);
            Some(std::fs::canonicalize(&p).map_err(|err| {
                cfg_err(e.line, e.value_col, format!("cannot resolve '{}': {err}", p.display()))
            })?)
        }
    };
    let base = DomainSpec::new(epsilon);
    let approx = SplashApproxOptions::default();
    let domain = DomainConfig {
        kind,
        epsilon,
        neck_height: f.positive("domain.neck_height", base.neck_height)?,
        neck_radius: f.positive("domain.neck_radius", base.neck_radius)?,
        trough_halfwidth: f.opt_f64_in("domain.trough_halfwidth", |v| v > 0.0, "positive")?,
        body_width: f.positive("domain.body_width", base.body_extent[0])?,
        body_depth: f.positive("domain.body_depth", base.body_extent[1])?,
        arch_radius: f.positive("domain.arch_radius", base.arch_radius)?,
        smoothing_radius: f.positive("domain.smoothing_radius", base.smoothing_radius)?,
        node_spacing: f.f64_in("domain.node_spacing", base.node_spacing, |v| v > 0.0 && v <= 1.0, "in (0, 1]")?,
        contact_spacing: f.opt_f64_in("domain.contact_spacing", |v| v > 0.0 && v <= 1.0, "in (0, 1]")?,
        grading: f.positive("domain.grading", base.grading)?,
        plateau: f.f64_in("domain.plateau", approx.plateau, |v| v >= 0.0, "nonnegative")?,
        transition: f.positive("domain.transition", approx.transition)?,
        splash_file,
    };
    if kind == DomainKind::Dinosaur || kind == DomainKind::DinosaurLimit {
        domain.dinosaur_spec(epsilon).validate().map_err(|e| f.at("domain.epsilon", e))?;
    }

    let d = StepConfig::for_epsilon(1.0);
    let solver = StepConfig {
        dt: f.f64_in("solver.dt_over_eps", d.dt, |v| v > 0.0 && v <= 1.0, "in (0, 1]")?,
        delta_splash: f.f64_in("solver.delta_over_eps", d.delta_splash, |v| (0.0..1.0).contains(&v), "in [0, 1)")?,
        theta: f.f64_in("solver.theta", d.theta, |v| v > 0.0 && v < 1.0, "in (0, 1)")?,
        nu: f.positive("solver.nu", d.nu)?,
        quality_floor: f.f64_in("solver.quality_floor", d.quality_floor, |v| (0.0..60.0).contains(&v), "in [0, 60)")?,
        min_det: f.f64_in("solver.min_det", d.min_det, |v| v > 0.0 && v < 1.0, "in (0, 1)")?,
        cfl: f.f64_in("solver.cfl", d.cfl, |v| v > 0.0 && v <= 1.0, "in (0, 1]")?,
        energy_bound: f.f64_in("solver.energy_bound", d.energy_bound, |v| v >= 1.0, "at least 1")?,
    };
    solver.at_epsilon(epsilon).validate().map_err(|e| f.at("solver.dt_over_eps", e))?;

    let r = RunOptions::default();
    let p = ProfileOptions::default();
    let run = RunOptions {
        mesh_size: f.f64_in("run.mesh_size", r.mesh_size, |v| v > 0.0 && v <= 1.0, "in (0, 1]")?,
        profile: ProfileOptions {
            bump_radius: f.positive("run.bump_radius", p.bump_radius)?,
            amplitude: f.f64_in("run.amplitude", p.amplitude, |v| v >= 0.0, "nonnegative")?,
            ..p
        },
        t_max_factor: f.f64_in("run.t_max_factor", r.t_max_factor, |v| v > 0.0 && v <= 1000.0, "in (0, 1000]")?,
        snapshot_stride: f.usize_in("run.snapshot_stride", r.snapshot_stride, 1, usize::MAX)?,
        frame_stride: f.usize_in("output.frame_stride", r.frame_stride, 1, usize::MAX)?,
        bisection_depth: f.usize_in("run.bisection_depth", r.bisection_depth, 0, 20)?,
        overshoot_steps: f.usize_in("run.overshoot_steps", r.overshoot_steps, 0, 100_000)?,
    };

    let epsilons = f.list("sweep.epsilons", &[0.1, 0.05, 0.025])?;
    let convergence_h = f.list("convergence.h", &[0.2, 0.1, 0.05])?;
    if convergence_h.len() < 2 {
        return Err(f.at("convergence.h", Error::InvalidInput("needs at least two mesh sizes".into())));
    }
    let output_dir = match f.get("output.dir") {
        Some(e) if e.value.is_empty() => return Err(cfg_err(e.line, e.value_col, "output.dir is empty")),
        Some(e) => PathBuf::from(&e.value),
        None => PathBuf::from("out"),
    };
    let deterministic = f.parsed::<bool>("output.deterministic", "true or false")?.is_none_or(|(v, _)| v);

    Ok(RunConfig { mode, seed, domain, solver, run, epsilons, convergence_h, output_dir, deterministic })
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Canonical text of a configuration with every default written out.
pub fn emit_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let d = &c.domain;
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("mode", c.mode.name().into());
    kv("seed", c.seed.to_string());
    kv("domain.kind", d.kind.name().into());
    kv("domain.epsilon", format!("{:?}", d.epsilon));
    kv("domain.neck_height", format!("{:?}", d.neck_height));
    kv("domain.neck_radius", format!("{:?}", d.neck_radius));
    if let Some(w) = d.trough_halfwidth {
        kv("domain.trough_halfwidth", format!("{w:?}"));
    }
    kv("domain.body_width", format!("{:?}", d.body_width));
    kv("domain.body_depth", format!("{:?}", d.body_depth));
    kv("domain.arch_radius", format!("{:?}", d.arch_radius));
    kv("domain.smoothing_radius", format!("{:?}", d.smoothing_radius));
    kv("domain.node_spacing", format!("{:?}", d.node_spacing));
    if let Some(c) = d.contact_spacing {
        kv("domain.contact_spacing", format!("{c:?}"));
    }
    kv("domain.grading", format!("{:?}", d.grading));
    kv("domain.plateau", format!("{:?}", d.plateau));
    kv("domain.transition", format!("{:?}", d.transition));
    if let Some(p) = &d.splash_file {
        kv("domain.splash_file", p.display().to_string());
    }
    let sv = &c.solver;
    kv("solver.dt_over_eps", format!("{:?}", sv.dt));
    kv("solver.delta_over_eps", format!("{:?}", sv.delta_splash));
    kv("solver.theta", format!("{:?}", sv.theta));
    kv("solver.nu", format!("{:?}", sv.nu));
    kv("solver.quality_floor", format!("{:?}", sv.quality_floor));
    kv("solver.min_det", format!("{:?}", sv.min_det));
    kv("solver.cfl", format!("{:?}", sv.cfl));
    kv("solver.energy_bound", format!("{:?}", sv.energy_bound));
    let r = &c.run;
    kv("run.mesh_size", format!("{:?}", r.mesh_size));
    kv("run.t_max_factor", format!("{:?}", r.t_max_factor));
    kv("run.snapshot_stride", r.snapshot_stride.to_string());
    kv("run.bisection_depth", r.bisection_depth.to_string());
    kv("run.overshoot_steps", r.overshoot_steps.to_string());
    kv("run.bump_radius", format!("{:?}", r.profile.bump_radius));
    kv("run.amplitude", format!("{:?}", r.profile.amplitude));
    kv("sweep.epsilons", list_text(&c.epsilons));
    kv("convergence.h", list_text(&c.convergence_h));
    kv("output.dir", c.output_dir.display().to_string());
    kv("output.frame_stride", r.frame_stride.to_string());
    kv("output.deterministic", c.deterministic.to_string());
    s
}
