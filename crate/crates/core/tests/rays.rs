mod common;

use endmodel::builders::{build_family, default_family, winding_loops, Family};
use endmodel::graph::surface_id;
use endmodel::ray::{
    classify, deficit_profile, fit_trend, horosphere, is_exiting, trace_ray, AmVerdict, Horosphere, Sample,
    Strategy, ThicknessVerdict, Trend,
};
use endmodel::{discretize, Error, MetricGraph, ModelEnd};

const C: f64 = 8.0;
const EPS: f64 = 0.1 * 0.006_737_946_999_085_467;

fn graph(f: Family) -> (ModelEnd, MetricGraph) {
    let m = build_family(f).unwrap();
    let g = discretize(&m).unwrap();
    (m, g)
}

fn sample(t: f64, delta: f64) -> Sample {
    Sample { level: 0, t, delta, inj: 0.1, depth: 0, segment_length: 1.0 }
}

#[test]
fn vertical_ray_on_bounded_geometry() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 60 });
    let ray = trace_ray(&g, &Strategy::Vertical { component: "s".into() }, 50).unwrap();
    assert_eq!(ray.checkpoints.len(), 50);
    for (level, &v) in ray.checkpoints.iter().enumerate() {
        assert_eq!(g.node(v).id, surface_id(level, &"s".into()));
        assert_eq!(g.injectivity_radius(v), 0.1);
    }
    let cls = classify(&g, &ray, C, EPS).unwrap();
    assert!(cls.profile.samples.iter().all(|s| s.delta == 0.0));
    assert_eq!(cls.profile.trend, Trend::Bounded { c_est: 0.0 });
    assert_eq!(cls.am_verdict, AmVerdict::AlmostMinimizing { c: 0.0 });
    assert_eq!(cls.thickness_verdict, ThicknessVerdict::Thick { inf_inj: 0.1 });
    assert_eq!(cls.verdict_line(), "AM, Thick, ProperlyEmbedded");
}

#[test]
fn winding_ray_enters_every_thin_block() {
    let (m, g) = graph(Family::ibounded_pow2(5));
    let loops = winding_loops(&m);
    let ray = trace_ray(&g, &Strategy::Winding { loops: loops.clone() }, 11).unwrap();
    let p = deficit_profile(&g, &ray).unwrap();
    for block in (1..10).step_by(2) {
        assert!(loops[block] > 0);
        assert!(p.samples[block + 1].depth >= 1, "block {block}");
    }
    for block in (0..10).step_by(2) {
        assert_eq!(p.samples[block + 1].depth, 0, "block {block}");
    }
}

#[test]
fn winding_deficit_grows_linearly() {
    let (m, g) = graph(Family::ibounded_pow2(12));
    let ray = trace_ray(&g, &Strategy::Winding { loops: winding_loops(&m) }, 24).unwrap();
    let cls = classify(&g, &ray, C, EPS).unwrap();
    assert!(matches!(cls.profile.trend, Trend::Linear { .. }), "{:?}", cls.profile.trend);
    assert!(cls.profile.satisfies_laws());
    assert_eq!(cls.verdict_line(), "NotAM(Linear), Thin, Dense");
}

#[test]
fn minimizing_deficit_is_small_on_every_family() {
    let families = [
        Family::BoundedGeometry { n_blocks: 24 },
        Family::Flute { n_necks: 24 },
        Family::ibounded_pow2(12),
        Family::amalg_growing(8, 16),
        Family::split_quadratic(24),
        Family::ThinAll { js: (60..84).collect(), d: 1.0, c: 8.0 },
    ];
    for f in families {
        let (m, g) = graph(f.clone());
        let ray = trace_ray(&g, &Strategy::Minimizing, g.level_count().min(25)).unwrap();
        let cls = classify(&g, &ray, C, EPS).unwrap();
        assert!(cls.profile.satisfies_laws(), "{}", f.name());
        assert!(cls.profile.max_delta() <= 2.0 * m.constants.diameter_bound, "{}: {}", f.name(), cls.profile.max_delta());
        assert!(cls.is_am(), "{}", f.name());
        assert!(cls.exiting, "{}", f.name());
    }
}

#[test]
fn report_verdicts() {
    let cases = [
        (Family::BoundedGeometry { n_blocks: 24 }, Strategy::Vertical { component: "s".into() }, "AM, Thick, ProperlyEmbedded"),
        (Family::split_quadratic(24), Strategy::Minimizing, "AM, Thin, Recurrent"),
        (default_family("ThinAll").unwrap(), Strategy::Minimizing, "AM, Thin, Recurrent"),
    ];
    for (f, s, want) in cases {
        let (_, g) = graph(f.clone());
        let ray = trace_ray(&g, &s, 20).unwrap();
        assert_eq!(classify(&g, &ray, C, EPS).unwrap().verdict_line(), want, "{}", f.name());
    }
}

#[test]
fn short_horizon_is_rejected() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 30 });
    let ray = trace_ray(&g, &Strategy::Minimizing, 19).unwrap();
    let err = classify(&g, &ray, C, EPS).unwrap_err();
    assert!(matches!(err, Error::HorizonTooShort { needed: 20, got: 19 }));
    assert!(trace_ray(&g, &Strategy::Minimizing, 0).is_err());
    assert!(trace_ray(&g, &Strategy::Minimizing, 32).is_err());
}

#[test]
fn winding_without_tube_is_rejected() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 30 });
    let err = trace_ray(&g, &Strategy::Winding { loops: vec![0, 0, 3] }, 20).unwrap_err();
    assert_eq!(err.to_string(), "no tube to wind at level 2");
}

#[test]
fn explicit_ray_errors() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 3 });
    assert!(trace_ray(&g, &Strategy::Explicit { nodes: vec![] }, 1).is_err());
    let err = trace_ray(&g, &Strategy::Explicit { nodes: vec!["s000000:s".into(), "bogus".into()] }, 1).unwrap_err();
    assert!(err.is_invalid_input());
}

#[test]
fn verdict_depends_on_tail_only() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 40 });
    let ids = |order: &[usize]| order.iter().map(|&l| surface_id(l, &"s".into())).collect::<Vec<_>>();
    let straight: Vec<usize> = (0..40).collect();
    let mut detour = straight.clone();
    detour.swap(1, 3);
    let a = trace_ray(&g, &Strategy::Explicit { nodes: ids(&straight) }, 0).unwrap();
    let b = trace_ray(&g, &Strategy::Explicit { nodes: ids(&detour) }, 0).unwrap();
    let (ca, cb) = (classify(&g, &a, C, EPS).unwrap(), classify(&g, &b, C, EPS).unwrap());
    assert_eq!(ca.is_am(), cb.is_am());
    assert_eq!(ca.profile.trend.name(), cb.profile.trend.name());
    assert!(cb.profile.max_delta() > 0.0);
}

#[test]
fn trend_fits() {
    let ts: Vec<f64> = (1..=40).map(|k| k as f64 * 3.0).collect();
    let flat: Vec<Sample> = ts.iter().map(|&t| sample(t, 2.0)).collect();
    assert_eq!(fit_trend(&flat), Trend::Bounded { c_est: 2.0 });
    let lin: Vec<Sample> = ts.iter().map(|&t| sample(t, 0.5 * t)).collect();
    assert!(matches!(fit_trend(&lin), Trend::Linear { b, .. } if (b - 0.5).abs() < 1e-9));
    let log: Vec<Sample> = ts.iter().map(|&t| sample(t, 4.0 * (1.0 + t).ln())).collect();
    assert!(matches!(fit_trend(&log), Trend::Logarithmic { b, .. } if (b - 4.0).abs() < 1e-9));
    let tiny: Vec<Sample> = ts.iter().map(|&t| sample(t, 1.0 + 1e-4 * t)).collect();
    assert!(matches!(fit_trend(&tiny), Trend::Bounded { .. }));
}

#[test]
fn exiting_and_horosphere_rules() {
    assert!(is_exiting(&(0..20).collect::<Vec<_>>()));
    assert!(!is_exiting(&[3; 20]));
    assert!(!is_exiting(&[0, 1, 2]));
    let mut stalls: Vec<usize> = (0..10).collect();
    stalls.extend([9; 10]);
    assert!(!is_exiting(&stalls));
    assert_eq!(horosphere(false, true), Horosphere::Dense);
    assert_eq!(horosphere(false, false), Horosphere::Dense);
    assert_eq!(horosphere(true, true), Horosphere::Recurrent);
    assert_eq!(horosphere(true, false), Horosphere::ProperlyEmbedded);
}

#[test]
fn non_exiting_ray_has_no_horosphere() {
    let (_, g) = graph(Family::BoundedGeometry { n_blocks: 5 });
    let nodes: Vec<String> = (0..24).map(|k| surface_id([0, 1, 2, 1][k % 4], &"s".into())).collect();
    let ray = trace_ray(&g, &Strategy::Explicit { nodes }, 0).unwrap();
    let cls = classify(&g, &ray, C, EPS).unwrap();
    assert!(!cls.exiting);
    assert_eq!(cls.horosphere, None);
    assert!(cls.verdict_line().ends_with("non-exiting"));
}
