use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{emit_config, parse_config_with, Mode, RunConfig, KEYS};
use super::output::{b0_csv, svg_document, write_run_frames, write_run_tables, SvgCurve, SvgMarker};
use crate::experiments::{
    build_initial_data, convergence_study, epsilon_sweep, general_sweep, resume_run, run_splash_experiment,
    track_particles, RunOutcome, RunReport, RunSnapshot, SweepSpec,
};
use crate::geometry::{min_boundary_gap, triangulate, RegionTag};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;
pub const EXIT_NO_SPLASH: i32 = 4;

pub fn usage() -> String {
    let mut s = String::from(
        "usage: splash <subcommand> [--config PATH] [--out DIR] [--override key=value]... [--restart SNAPSHOT]\n\n\
         subcommands:\n",
    );
    for m in Mode::ALL {
        s.push_str(&format!("  {}\n", m.name()));
    }
    s.push_str("\nconfig keys (key = value, optionally under [section] headers):\n");
    for (k, d, help) in KEYS {
        if d.is_empty() {
            s.push_str(&format!("  {k:<26} {help}\n"));
        } else {
            s.push_str(&format!("  {k:<26} {help} (default {d})\n"));
        }
    }
    s.push_str("\nexit status: 0 success, 2 invalid input, 3 aborted run, 4 no splash before t_max\n");
    s
}

/// Exit status of a failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver(_) | Error::Tangled { .. } | Error::LandmarkLost(_) | Error::Mesh(_) => EXIT_ABORTED,
        _ => EXIT_VALIDATION,
    }
}

fn write_error(dir: &Path, err: &Error, code: i32) {
    let mut v = json!({ "exit_code": code, "kind": err.kind(), "message": err.to_string() });
    if let Error::Config { line, column, message } = err {
        v["line"] = json!(line);
        v["column"] = json!(column);
        v["detail"] = json!(message);
    }
    if fs::create_dir_all(dir).is_ok() {
        let _ = fs::write(dir.join("error.json"), serde_json::to_string_pretty(&v).unwrap_or_default());
    }
}

struct Args {
    mode: Mode,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
    restart: Option<PathBuf>,
}

fn parse_args(args: &[String]) -> std::result::Result<Args, String> {
    let mut it = args.iter();
    let sub = it.next().ok_or("missing subcommand")?;
    let mode = Mode::parse(sub).ok_or_else(|| format!("unknown subcommand '{sub}'"))?;
    let mut a = Args { mode, config: None, out: None, overrides: Vec::new(), restart: None };
    while let Some(flag) = it.next() {
        let mut value = || it.next().cloned().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--config" => a.config = Some(value()?.into()),
            "--out" => a.out = Some(value()?.into()),
            "--override" => a.overrides.push(value()?),
            "--restart" => a.restart = Some(value()?.into()),
            _ => return Err(format!("unknown flag '{flag}'")),
        }
    }
    if a.restart.is_some() && mode != Mode::Simulate {
        return Err("--restart only applies to simulate".into());
    }
    Ok(a)
}

/// Runs one subcommand and returns its exit status. `args` excludes the
/// program name. Failures are written to `error.json` in the output
/// directory and to stderr.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let args: Vec<String> = args.into_iter().map(|s| s.as_ref().to_string()).collect();
    if args.first().is_some_and(|a| a == "help" || a == "--help" || a == "-h") {
        print!("{}", usage());
        return EXIT_OK;
    }
    let a = match parse_args(&args) {
        Ok(a) => a,
        Err(m) => {
            eprintln!("error: {m}\n\n{}", usage());
            return EXIT_VALIDATION;
        }
    };
    let fallback_dir = a.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let cfg = match load_config(&a) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            write_error(&fallback_dir, &e, EXIT_VALIDATION);
            return EXIT_VALIDATION;
        }
    };
    match execute(&cfg, a.restart.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            write_error(&cfg.output_dir, &e, code);
            code
        }
    }
}

fn load_config(a: &Args) -> Result<RunConfig> {
    let (text, base) = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read config '{}': {e}", p.display())))?;
            (text, p.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf))
        }
        None => (String::new(), PathBuf::from(".")),
    };
    let mut overrides = vec![format!("mode={}", a.mode.name())];
    overrides.extend(a.overrides.iter().cloned());
    if let Some(o) = &a.out {
        overrides.push(format!("output.dir={}", o.display()));
    }
    let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
    parse_config_with(&text, &overrides, &base)
}

/// Runs the configured mode and writes its outputs.
pub fn execute(cfg: &RunConfig, restart: Option<&Path>) -> Result<i32> {
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("config_echo.cfg"), emit_config(cfg))?;
    match cfg.mode {
        Mode::BuildDomain => build_domain(cfg).map(|_| EXIT_OK),
        Mode::InitData => init_data(cfg).map(|_| EXIT_OK),
        Mode::Simulate => simulate(cfg, restart),
        Mode::Sweep => sweep(cfg),
        Mode::GeneralSplash => general(cfg),
        Mode::Convergence => {
            let rep = convergence_study(&cfg.convergence_h)?;
            fs::write(out.join("convergence.csv"), rep.to_csv())?;
            fs::write(out.join("convergence.json"), serde_json::to_string_pretty(&rep)?)?;
            Ok(EXIT_OK)
        }
    }
}

fn build_domain(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    let (curve, targets) = cfg.domain.source()?.build()?;
    let mesh = triangulate(&curve, cfg.run.mesh_size)?;
    let gap = min_boundary_gap(&curve, RegionTag::CapPlus, RegionTag::Trough)?;
    fs::write(out.join("domain.json"), curve.to_json()?)?;
    fs::write(out.join("mesh.txt"), mesh.to_text())?;
    let markers: Vec<SvgMarker> = [(gap.point_a, "gap_a"), (gap.point_b, "gap_b")]
        .into_iter()
        .map(|(at, label)| SvgMarker { at, label })
        .collect();
    let mut curves = vec![SvgCurve { points: curve.nodes(), class: "boundary" }];
    if let Some(t) = &targets {
        curves.push(SvgCurve { points: t, class: "target" });
    }
    fs::write(out.join("domain.svg"), svg_document("domain", &curves, &markers))?;
    let summary = json!({
        "epsilon": cfg.domain.epsilon,
        "boundary_nodes": curve.len(),
        "perimeter": curve.perimeter(),
        "area": curve.polygon_area(),
        "gap": gap.distance,
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "min_angle_degrees": mesh.min_angle().0,
    });
    fs::write(out.join("domain_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn init_data(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    let init = build_initial_data(&cfg.domain.source()?, cfg.run.mesh_size, &cfg.run.profile, cfg.solver.nu)?;
    fs::write(out.join("velocity.csv"), init.velocity.to_csv())?;
    fs::write(out.join("pressure.csv"), init.pressure.to_csv())?;
    fs::write(out.join("b0.csv"), b0_csv(&init.profile))?;
    let summary = json!({
        "summary": init.summary(cfg.domain.epsilon)?,
        "velocity": init.velocity_report,
        "pressure": init.pressure_report,
    });
    fs::write(out.join("initial_data.json"), serde_json::to_string_pretty(&summary)?)?;
    println!("compatibility residual {:.6e}", init.velocity_report.compatibility_residual);
    Ok(())
}

fn outcome_code(outcome: &RunOutcome) -> i32 {
    match outcome {
        RunOutcome::Splash(_) => EXIT_OK,
        RunOutcome::NoSplash { .. } => EXIT_NO_SPLASH,
        RunOutcome::Aborted { .. } => EXIT_ABORTED,
    }
}

fn write_run(dir: &Path, run: &RunReport) -> Result<()> {
    write_run_tables(dir, run)?;
    let tracking = track_particles(run).ok();
    let summary = json!({
        "status": run.outcome.status(),
        "epsilon": run.epsilon,
        "initial": run.initial,
        "monitors": run.monitors,
        "energy": run.energy.summary(),
        "tracking": tracking.map(|t| json!({
            "crossing_time": t.crossing_time, "t_star": t.t_star, "offset": t.offset, "consistent": t.consistent
        })),
    });
    fs::write(dir.join("run_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn simulate(cfg: &RunConfig, restart: Option<&Path>) -> Result<i32> {
    let out = &cfg.output_dir;
    let run = match restart {
        Some(p) => resume_run(&RunSnapshot::from_json(&fs::read_to_string(p)?)?)?,
        None => run_splash_experiment(&cfg.domain.source()?, &cfg.step_config(), &cfg.run)?,
    };
    write_run(out, &run)?;
    write_run_frames(out, &run)?;
    Ok(outcome_code(&run.outcome))
}

fn in_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    if !cfg.deterministic {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn sweep_code<'a>(statuses: impl Iterator<Item = &'a str>) -> i32 {
    statuses.fold(EXIT_OK, |code, s| match s {
        "aborted" => EXIT_ABORTED,
        "no_splash" if code == EXIT_OK => EXIT_NO_SPLASH,
        _ => code,
    })
}

fn sweep(cfg: &RunConfig) -> Result<i32> {
    let out = &cfg.output_dir;
    let spec = SweepSpec {
        source: cfg.domain.source()?,
        epsilons: cfg.epsilons.clone(),
        step: cfg.solver,
        options: cfg.run.clone(),
    };
    let sw = in_pool(cfg, || epsilon_sweep(&spec))??;
    fs::write(out.join("sweep.csv"), sw.report.to_csv())?;
    fs::write(out.join("sweep.json"), sw.report.to_json()?)?;
    for run in sw.runs.iter().flatten() {
        write_run(&out.join(format!("eps_{}", run.epsilon)), run)?;
    }
    Ok(sweep_code(sw.report.rows.iter().map(|r| r.status.as_str())))
}

fn general(cfg: &RunConfig) -> Result<i32> {
    let out = &cfg.output_dir;
    let sds = cfg
        .domain
        .splash_spec()?
        .ok_or_else(|| Error::InvalidInput("general-splash needs a splash-domain kind, not 'dinosaur'".into()))?;
    let approx = cfg.domain.approx();
    let (rep, runs) = in_pool(cfg, || general_sweep(&sds, &approx, &cfg.epsilons, &cfg.solver, &cfg.run))??;
    fs::write(out.join("general.csv"), rep.to_csv())?;
    fs::write(out.join("general.json"), serde_json::to_string_pretty(&rep)?)?;
    for g in runs.iter().flatten() {
        let dir = out.join(format!("eps_{}", g.run.epsilon));
        write_run(&dir, &g.run)?;
        let mut curves = vec![SvgCurve { points: &g.run.terminal_boundary, class: "boundary" }];
        if let Some(t) = &g.run.targets {
            curves.push(SvgCurve { points: t, class: "target" });
        }
        fs::write(dir.join("terminal.svg"), svg_document("terminal boundary", &curves, &[]))?;
    }
    Ok(sweep_code(rep.rows.iter().map(|r| r.status.as_str())))
}
