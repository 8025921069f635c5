//! Output formats, snapshot restart and determinism on one coarse splash run.

use std::sync::OnceLock;

use splash_core::cli_io::{
    b0_csv, series_csv, trajectory_csv, write_run_frames, B0_HEADER, FIELD_HEADER,
};
use splash_core::elliptic::ProfileOptions;
use splash_core::experiments::{
    build_initial_data, convergence_study, epsilon_sweep, resume_run, run_splash_experiment, ConvergenceReport,
    DomainSource, GeneralSweepReport, RunOptions, RunReport, RunSnapshot, SweepSpec,
};
use splash_core::geometry::DomainSpec;
use splash_core::lagrangian::{FlowState, StepConfig};

const EPS: f64 = 0.1;

fn options() -> RunOptions {
    RunOptions { mesh_size: 0.3, snapshot_stride: 10, frame_stride: 20, ..Default::default() }
}

fn run() -> &'static RunReport {
    static RUN: OnceLock<RunReport> = OnceLock::new();
    RUN.get_or_init(|| {
        run_splash_experiment(&DomainSource::Dinosaur(DomainSpec::new(EPS)), &StepConfig::for_epsilon(EPS), &options())
            .unwrap()
    })
}

fn golden() -> Vec<(String, String)> {
    include_str!("golden/csv_headers.txt")
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap()
}

#[test]
fn csv_headers_match_golden_file() {
    let r = run();
    let init = build_initial_data(&r.source, 0.3, &ProfileOptions::default(), 1.0).unwrap();
    let mut spec = SweepSpec::new(r.source.clone(), vec![EPS]);
    spec.options = RunOptions { t_max_factor: 0.05, ..options() };
    let sweep = epsilon_sweep(&spec).unwrap().report.to_csv();
    let general = GeneralSweepReport { rows: vec![], ratios: vec![], fit: None, all_splashed: true }.to_csv();
    let conv = convergence_study(&[0.4, 0.3]).unwrap().to_csv();
    assert_eq!(first_line(&conv), ConvergenceReport::HEADER);
    let emitted = [
        ("series", series_csv(&r.series)),
        ("trajectory", trajectory_csv(&r.trajectory)),
        ("sweep", sweep),
        ("general", general),
        ("convergence", conv),
        ("field", init.velocity.to_csv()),
        ("b0", b0_csv(&init.profile)),
    ];
    assert_eq!(first_line(&init.pressure.to_csv()), FIELD_HEADER);
    assert_eq!(first_line(&emitted[6].1), B0_HEADER);
    let g = golden();
    assert_eq!(g.len(), emitted.len());
    for (name, text) in &emitted {
        let want = &g.iter().find(|(k, _)| k == name).unwrap().1;
        assert_eq!(first_line(text), want, "{name}");
    }
}

#[test]
fn svg_frames_are_xml_with_one_path_and_landmarks() {
    let dir = tempfile::tempdir().unwrap();
    write_run_frames(dir.path(), run()).unwrap();
    let mut frames: Vec<_> = std::fs::read_dir(dir.path().join("frames")).unwrap().map(|e| e.unwrap().path()).collect();
    frames.sort();
    assert_eq!(frames.len(), run().frames.len());
    assert!(!frames.is_empty());
    for f in frames {
        let text = std::fs::read_to_string(&f).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
        assert_eq!(count("path"), 1);
        assert_eq!(count("circle"), 2);
    }
    let snaps = std::fs::read_dir(dir.path().join("snapshots")).unwrap().count();
    assert_eq!(snaps, run().snapshots.len());
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn snapshot_json_round_trips_bitwise() {
    let r = run();
    assert!(r.snapshots.len() >= 2);
    for snap in &r.snapshots {
        let back = RunSnapshot::from_json(&snap.to_json().unwrap()).unwrap();
        assert_eq!(&back, snap);
        let a = FlowState::from_snapshot(&snap.flow).unwrap();
        let b = FlowState::from_snapshot(&back.flow).unwrap();
        assert_eq!(bits(&a.eta), bits(&b.eta));
        assert_eq!(bits(&a.v.coeffs), bits(&b.v.coeffs));
        assert_eq!(bits(&a.q.values), bits(&b.q.values));
    }
}

#[test]
fn restart_reproduces_series_rows() {
    let r = run();
    let snap = RunSnapshot::from_json(&r.snapshots[1].to_json().unwrap()).unwrap();
    let resumed = resume_run(&snap).unwrap();
    assert_eq!(resumed.series.len(), r.series.len());
    let k0 = snap.flow.step;
    let mut compared = 0;
    for (a, b) in r.series.iter().zip(&resumed.series).filter(|(a, _)| a.step > k0) {
        assert_eq!(a.step, b.step);
        let pairs = [
            (a.t, b.t),
            (a.det_j_min, b.det_j_min),
            (a.det_j_max, b.det_j_max),
            (a.grad_eta_dev, b.grad_eta_dev),
            (a.drift, b.drift),
            (a.kinetic_energy, b.kinetic_energy),
            (a.e_surrogate, b.e_surrogate),
            (a.gap_cap_trough, b.gap_cap_trough),
        ];
        for (x, y) in pairs {
            assert!((x - y).abs() <= 1e-10, "step {}: {x} vs {y}", a.step);
        }
        compared += 1;
    }
    assert!(compared > 10);
    assert_eq!(resumed.outcome.event().map(|e| e.t_star), r.outcome.event().map(|e| e.t_star));
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let again = run_splash_experiment(&run().source, &run().cfg, &options()).unwrap();
    assert_eq!(series_csv(&again.series), series_csv(&run().series));
    assert_eq!(trajectory_csv(&again.trajectory), trajectory_csv(&run().trajectory));

    let mut spec = SweepSpec::new(DomainSource::Dinosaur(DomainSpec::new(0.1)), vec![0.1, 0.05]);
    spec.options = RunOptions { t_max_factor: 0.5, ..options() };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| epsilon_sweep(&spec).unwrap().report);
    let parallel = epsilon_sweep(&spec).unwrap().report;
    assert_eq!(serial.to_json().unwrap(), parallel.to_json().unwrap());
    assert_eq!(serial.to_csv(), parallel.to_csv());
}
