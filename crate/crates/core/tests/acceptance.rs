//! Acceptance criteria 1 to 10. Each test writes one `PASS`/`FAIL` line to
//! stderr (uncaptured) before asserting.

use std::io::Write as _;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splash_core::cli_io::{execute, parse_config_with};
use splash_core::elliptic::ProfileOptions;
use splash_core::experiments::{
    build_initial_data, convergence_study, epsilon_sweep, general_sweep, DomainSource, InitialDataSummary,
    RunOptions, Sweep, SweepSpec,
};
use splash_core::geometry::{
    build_charts, detect_self_intersection, DomainSpec, SplashApproxOptions, SplashDomainSpec,
};
use splash_core::lagrangian::StepConfig;
use splash_core::Vec2;

const EPSILONS: [f64; 3] = [0.1, 0.05, 0.025];

fn report(n: usize, name: &str, pass: bool, detail: String) {
    let line = format!("acceptance {n:>2} {:<4} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

/// The dinosaur sweep shared by criteria 4 to 7, with its wall time.
fn sweep() -> &'static (Sweep, Duration) {
    static SWEEP: OnceLock<(Sweep, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let spec = SweepSpec::new(DomainSource::Dinosaur(DomainSpec::new(EPSILONS[0])), EPSILONS.to_vec());
        (epsilon_sweep(&spec).unwrap(), start.elapsed())
    })
}

fn summaries(mesh: f64) -> Vec<InitialDataSummary> {
    EPSILONS
        .iter()
        .map(|&e| {
            build_initial_data(&DomainSource::Dinosaur(DomainSpec::new(e)), mesh, &ProfileOptions::default(), 1.0)
                .unwrap()
                .summary(e)
                .unwrap()
        })
        .collect()
}

#[test]
fn criterion_01_manufactured_convergence() {
    let start = Instant::now();
    let rep = convergence_study(&[0.2, 0.1, 0.05]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = rep.velocity_order >= 2.2 && rep.pressure_order >= 1.2 && secs <= 120.0;
    report(
        1,
        "manufactured Stokes convergence",
        pass,
        format!(
            "velocity L2 order {:.3} (need >= 2.5 - 0.3), pressure L2 order {:.3} (need >= 1.5 - 0.3), {secs:.1} s",
            rep.velocity_order, rep.pressure_order
        ),
    );
    assert!(pass, "{rep:?}");
}

#[test]
fn criterion_02_uniform_elliptic_constants() {
    let s = summaries(0.15);
    let ratio = spread(&s.iter().map(|x| x.solution_to_data).collect::<Vec<_>>());
    let u0 = spread(&s.iter().map(|x| x.u0_h1).collect::<Vec<_>>());
    let p0 = spread(&s.iter().map(|x| x.p0_l2).collect::<Vec<_>>());
    let p0_h1 = spread(&s.iter().map(|x| x.p0_h1).collect::<Vec<_>>());
    let pass = ratio < 0.1 && u0 < 0.1 && p0 < 0.1;
    report(
        2,
        "eps-uniform elliptic constants",
        pass,
        format!(
            "relative spread over eps: solution/data {ratio:.4}, |u0|_H1 {u0:.4}, |p0|_L2 {p0:.4} (each < 0.1); |p0|_H1 spread {p0_h1:.4} reported"
        ),
    );
    assert!(pass, "{s:?}");
}

fn compatibility_residual(eps: f64, h: f64) -> f64 {
    let mut spec = DomainSpec::new(eps);
    spec.node_spacing = h;
    spec.contact_spacing = DomainSpec::default_contact_spacing(eps, h);
    let init = build_initial_data(&DomainSource::Dinosaur(spec), h, &ProfileOptions::default(), 1.0).unwrap();
    init.velocity_report.compatibility_residual
}

#[test]
fn criterion_03_initial_data() {
    let s = summaries(0.15);
    let values_ok = s.iter().all(|x| (x.pole_normal_velocity + 1.0).abs() <= 0.02 && x.trough_normal_velocity <= 1e-8);
    let orders: Vec<f64> = EPSILONS
        .iter()
        .map(|&e| (compatibility_residual(e, 0.1) / compatibility_residual(e, 0.05)).log2())
        .collect();
    let pass = values_ok && orders.iter().all(|o| *o >= 1.0);
    let pole: Vec<String> = s.iter().map(|x| format!("{:.4}", x.pole_normal_velocity)).collect();
    let trough = s.iter().map(|x| x.trough_normal_velocity).fold(0.0, f64::max);
    report(
        3,
        "initial data",
        pass,
        format!(
            "u0.N at falling point [{}], max |u0.N| on trough {trough:.1e}, compatibility residual order (h 0.1 -> 0.05) {:?}",
            pole.join(", "),
            orders.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_conservation_and_dissipation() {
    let (sw, _) = sweep();
    let runs: Vec<_> = sw.runs.iter().flatten().collect();
    let det = runs.iter().map(|r| r.monitors.max_det_deviation).fold(0.0, f64::max);
    let area = runs.iter().map(|r| r.monitors.max_area_error).fold(0.0, f64::max);
    let increases: usize = runs.iter().map(|r| r.monitors.kinetic_increases).sum();
    let pass = runs.len() == EPSILONS.len() && det <= 1e-2 && area <= 1e-2 && increases == 0;
    report(
        4,
        "conservation and dissipation",
        pass,
        format!("max |detJ - 1| {det:.2e}, max area drift {area:.2e}, kinetic energy increases {increases}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_splash_occurrence() {
    let (sw, elapsed) = sweep();
    let rep = &sw.report;
    let tags_ok = rep.rows.iter().all(|r| r.contact_tags_ok);
    let pass = rep.trends.all_splashed
        && tags_ok
        && rep.trends.t_star_decreasing == Some(true)
        && rep.trends.t_star_over_eps_max.is_some_and(|m| m <= 20.0)
        && elapsed.as_secs_f64() <= 1800.0;
    let ts: Vec<String> = rep.rows.iter().map(|r| format!("{}: {:?}", r.epsilon, r.t_star)).collect();
    report(
        5,
        "splash occurrence",
        pass,
        format!(
            "T* [{}], max T*/eps {:?}, rows past 10 eps {}, contact tags (cap_plus, trough) {tags_ok}, {:.0} s",
            ts.join(", "),
            rep.trends.t_star_over_eps_max,
            rep.trends.rows_beyond_ten_eps,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass, "{:?}", rep.notices);
}

#[test]
fn criterion_06_detector_consistency() {
    let (sw, _) = sweep();
    let offsets: Vec<Option<f64>> = sw.report.rows.iter().map(|r| r.detector_offset_steps).collect();
    let pass = offsets.iter().all(|o| o.is_some_and(|v| v <= 2.0));
    report(6, "detector consistency", pass, format!("|crossing - T*| / dt per row {offsets:?} (each <= 2)"));
    assert!(pass);
}

#[test]
fn criterion_07_drift() {
    let (sw, _) = sweep();
    let zero_start = sw.runs.iter().flatten().all(|r| r.series[0].drift == 0.0);
    let rows = &sw.report.rows;
    let exps: Vec<Option<f64>> = rows.iter().map(|r| r.drift_exponent).collect();
    let pass = zero_start
        && rows
            .iter()
            .all(|r| r.drift_exponent.is_some_and(|p| p > 0.0 && p < 1.0) && r.drift_sublinear == Some(true));
    report(
        7,
        "drift behaviour",
        pass,
        format!("drift(0) = 0 {zero_start}, fitted exponents {exps:?} over [eps/10, T*] (reference 1/4 and 1/2)"),
    );
    assert!(pass);
}

/// All-pairs segment crossing oracle on a closed polyline.
fn all_pairs(points: &[Vec2]) -> Vec<(usize, usize)> {
    let n = points.len();
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b - a).perp(&(c - a));
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (points[i], points[(i + 1) % n]);
            let (c, d) = (points[j], points[(j + 1) % n]);
            let (o1, o2) = (orient(a, b, c), orient(a, b, d));
            let (o3, o4) = (orient(c, d, a), orient(c, d, b));
            if o1 * o2 <= 0.0 && o3 * o4 <= 0.0 && (o1 != 0.0 || o2 != 0.0) {
                out.push((i, j));
            }
        }
    }
    out
}

#[test]
fn criterion_08_geometry_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut discrepancies = 0;
    let mut crossings = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=48);
        let pts: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let got: Vec<(usize, usize)> =
            detect_self_intersection(&pts, 0.0).contacts.iter().map(|c| (c.seg_a, c.seg_b)).collect();
        let want = all_pairs(&pts);
        crossings += want.len();
        discrepancies += usize::from(got != want);
    }
    let mut worst = 0.0f64;
    for eps in [0.5, 0.1, 0.05, 0.025] {
        for c in build_charts(&DomainSpec::new(eps)).unwrap() {
            let dets: Vec<f64> = (0..64)
                .map(|_| {
                    let z = Vec2::new(rng.gen_range(-0.65..0.65), rng.gen_range(-0.65..0.65));
                    c.fd_jacobian_det(z, 1e-3)
                })
                .collect();
            worst = worst.max(spread(&dets));
        }
    }
    let pass = discrepancies == 0 && worst <= 1e-10;
    report(
        8,
        "geometry oracles",
        pass,
        format!(
            "{discrepancies} discrepancies on 1000 random polylines ({crossings} crossings), max chart Jacobian ratio - 1 = {worst:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_general_geometry() {
    let sds = SplashDomainSpec::overhang_fixture();
    let opts = RunOptions { mesh_size: 0.3, ..Default::default() };
    let (rep, _) =
        general_sweep(&sds, &SplashApproxOptions::default(), &EPSILONS, &StepConfig::for_epsilon(1.0), &opts).unwrap();
    let tags_ok = rep.rows.iter().all(|r| r.status == "splash");
    let fit = rep.fit;
    let pass = rep.all_splashed && tags_ok && fit.is_some_and(|f| (f.exponent - 0.5).abs() <= 0.2);
    let prox: Vec<String> =
        rep.rows.iter().map(|r| format!("{}: {:?}", r.epsilon, r.proximity.map(|p| p.h3))).collect();
    report(
        9,
        "general splash geometry",
        pass,
        format!(
            "all splashed {}, order-3 proximity [{}], fitted exponent {:?} (need 0.5 +- 0.2)",
            rep.all_splashed,
            prox.join(", "),
            fit.map(|f| f.exponent)
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let text = "mode = simulate\ndomain.epsilon = 0.1\nrun.mesh_size = 0.3\nrun.snapshot_stride = 20\n";
    let run_in = |name: &str| {
        let out = dir.path().join(name);
        let ov = vec![format!("output.dir={}", out.display())];
        let cfg = parse_config_with(text, &ov, dir.path()).unwrap();
        assert_eq!(execute(&cfg, None).unwrap(), 0);
        out
    };
    let (a, b) = (run_in("a"), run_in("b"));
    let read = |d: &std::path::Path, f: &str| std::fs::read(d.join(f)).unwrap();
    let identical = ["series.csv", "trajectory.csv", "outcome.json"].iter().all(|f| read(&a, f) == read(&b, f));

    let snap = a.join("snapshots/snapshot_000020.json");
    let ov = vec![format!("output.dir={}", dir.path().join("r").display())];
    let cfg = parse_config_with(text, &ov, dir.path()).unwrap();
    assert_eq!(execute(&cfg, Some(&snap)).unwrap(), 0);
    let rows = |d: &std::path::Path| -> Vec<Vec<f64>> {
        String::from_utf8(read(d, "series.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect()
    };
    let (orig, resumed) = (rows(&a), rows(&dir.path().join("r")));
    let worst = orig
        .iter()
        .zip(&resumed)
        .filter(|(r, _)| r[0] > 20.0)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let pass = identical && orig.len() == resumed.len() && worst <= 1e-10;
    report(
        10,
        "reproducibility",
        pass,
        format!("bitwise-identical CSV/JSON outputs {identical}, restart max row difference {worst:.1e} over {} rows", orig.len()),
    );
    assert!(pass);
}
