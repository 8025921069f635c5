//! Randomized checks of the domain, chart, profile, fit and config invariants.

use proptest::prelude::*;

use splash_core::cli_io::{emit_config, parse_config};
use splash_core::elliptic::{build_b0, ProfileOptions};
use splash_core::experiments::fit_power_law;
use splash_core::fem::P2Space;
use splash_core::geometry::{
    build_charts, build_dinosaur_domain, detect_self_intersection, min_boundary_gap, triangulate, ChartRole,
    DomainSpec, RegionTag,
};
use splash_core::Vec2;

fn spec(eps: f64) -> DomainSpec {
    let mut s = DomainSpec::new(eps);
    // fixed so that only the neck changes with epsilon
    s.trough_halfwidth = 0.75;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dinosaur_domain_is_simple_with_gap_epsilon(eps in 0.01f64..=0.5) {
        let c = build_dinosaur_domain(&spec(eps)).unwrap();
        prop_assert!(detect_self_intersection(c.nodes(), 0.0).is_simple());
        let g = min_boundary_gap(&c, RegionTag::CapPlus, RegionTag::Trough).unwrap();
        prop_assert!((g.distance - eps).abs() <= 1e-3 * eps, "gap {} vs eps {}", g.distance, eps);
    }

    #[test]
    fn area_changes_only_through_the_neck(e1 in 0.02f64..0.25, e2 in 0.26f64..=0.5) {
        let s1 = spec(e1);
        let a1 = build_dinosaur_domain(&s1).unwrap().polygon_area();
        let a2 = build_dinosaur_domain(&spec(e2)).unwrap().polygon_area();
        let predicted = (e2 - e1) * 2.0 * s1.neck_radius;
        prop_assert!(((a1 - a2) - predicted).abs() <= 0.01 * predicted, "{} vs {}", a1 - a2, predicted);
    }

    #[test]
    fn neck_dilation_maps_ends_exactly(eps in 0.01f64..=0.5, h in 0.5f64..3.0, x in -0.4f64..0.4) {
        let mut s = DomainSpec::new(eps);
        s.neck_height = h;
        let charts = build_charts(&s).unwrap();
        let neck = charts.iter().find(|c| c.role == ChartRole::Neck).unwrap();
        prop_assert!((neck.transform(Vec2::new(x, 1.5)).y - (0.5 + eps)).abs() < 1e-12);
        prop_assert!((neck.transform(Vec2::new(x, 1.5 + h)).y - (1.5 + h)).abs() < 1e-12);
    }

    #[test]
    fn chart_jacobians_are_constant(eps in 0.01f64..=0.5, zx in -0.6f64..0.6, zy in -0.6f64..0.6) {
        for c in build_charts(&DomainSpec::new(eps)).unwrap() {
            let d0 = c.fd_jacobian_det(Vec2::zeros(), 1e-3);
            let d1 = c.fd_jacobian_det(Vec2::new(zx, zy), 1e-3);
            prop_assert!((d1 / d0 - 1.0).abs() <= 1e-10, "chart {}: {}", c.label, d1 / d0 - 1.0);
            prop_assert!((d0 / c.jacobian_det() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn power_fit_recovers_exponent(p in -2.0f64..2.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (1..=8).map(|k| 0.01 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        let f = fit_power_law(&x, &y).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-9);
        prop_assert!((f.prefactor / c - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn b0_has_unit_plateau_zero_mean_and_spares_the_trough(eps in 0.02f64..=0.3, radius in 0.25f64..0.5) {
        let curve = build_dinosaur_domain(&DomainSpec::new(eps)).unwrap();
        let x_plus = curve.landmarks().unwrap().x_plus;
        let space = P2Space::new(triangulate(&curve, 0.3).unwrap());
        let b = build_b0(&space, x_plus, &ProfileOptions { bump_radius: radius, ..Default::default() }).unwrap();
        prop_assert_eq!(b.values[2 * x_plus], -1.0);
        prop_assert!(b.integral().abs() <= 1e-10 * b.perimeter);
        for (v, t) in b.values.iter().zip(&b.tags) {
            if *t == RegionTag::Trough {
                prop_assert_eq!(*v, 0.0);
            }
        }
    }
}

fn config_text() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["build-domain", "init-data", "simulate", "sweep", "general-splash", "convergence"]),
        0.001f64..0.9,
        prop::option::of(0.001f64..0.1),
        0.05f64..0.5,
        0.0f64..59.0,
        1usize..500,
        any::<u64>(),
        prop::sample::select(vec!["dinosaur", "overhang", "dinosaur_limit"]),
        any::<bool>(),
    )
        .prop_map(|(mode, eps, contact, theta, floor, stride, seed, kind, det)| {
            let mut s = format!(
                "mode = {mode}\nseed = {seed}\n[domain]\nkind = {kind}\nepsilon = {eps}\n\
                 [solver]\ntheta = {theta}\nquality_floor = {floor}\n[output]\nframe_stride = {stride}\ndeterministic = {det}\n"
            );
            if let Some(c) = contact {
                s.push_str(&format!("domain.contact_spacing = {c:e}\n"));
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn emitted_config_reparses_to_the_same_value(text in config_text()) {
        let Ok(cfg) = parse_config(&text) else {
            // some random dinosaur specs are invalid; those must fail on both sides
            return Ok(());
        };
        let emitted = emit_config(&cfg);
        prop_assert_eq!(parse_config(&emitted).unwrap(), cfg);
    }
}
