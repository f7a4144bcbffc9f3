use endmodel::builders::{
    build_family, canonical_family_name, family_params, thin_all_condition, winding_loops, Family, FAMILY_NAMES,
};
use endmodel::graph::{core_id, Locus};
use endmodel::model::{BlockVariant, RegionParams};
use endmodel::{discretize, validate, Error};

#[test]
fn bounded_geometry_is_a_thick_chain() {
    let m = build_family(Family::BoundedGeometry { n_blocks: 10 }).unwrap();
    assert_eq!(m.blocks.len(), 10);
    assert!(m.blocks.iter().all(|b| matches!(b.variant, BlockVariant::Thick { .. })));
    assert_eq!(m.tubes().count(), 0);
    let g = discretize(&m).unwrap();
    assert_eq!(g.node_count(), 11);
    assert_eq!(g.edge_count(), 10);
    assert!(g.ladders().is_empty());
}

#[test]
fn every_default_family_builds_and_validates() {
    for name in FAMILY_NAMES {
        let p = family_params(name, None, 0).unwrap();
        let m = endmodel::builders::build(&p).unwrap();
        assert!(validate(&m).is_valid(), "{name}");
        assert_eq!(p.family.name(), name);
    }
}

#[test]
fn family_names_are_forgiving() {
    assert_eq!(canonical_family_name("split-counterexample"), Some("SplitCounterexample"));
    assert_eq!(canonical_family_name("thin_all"), Some("ThinAll"));
    assert_eq!(canonical_family_name("flute"), Some("Flute"));
    assert_eq!(canonical_family_name("torus"), None);
    assert!(matches!(family_params("torus", None, 0), Err(Error::InvalidParams(_))));
}

#[test]
fn overrides_replace_defaults() {
    let over = serde_json::json!({"n_blocks": 3, "family": "Flute", "seed": 9});
    let p = family_params("BoundedGeometry", over.as_object(), 4).unwrap();
    assert_eq!(p.family, Family::BoundedGeometry { n_blocks: 3 });
    assert_eq!(p.seed, 4);
    let bad = serde_json::json!({"n_blocks": "three"});
    assert!(matches!(family_params("BoundedGeometry", bad.as_object(), 0), Err(Error::InvalidParams(_))));
}

#[test]
fn flute_necks_shrink() {
    let m = build_family(Family::Flute { n_necks: 12 }).unwrap();
    let g = discretize(&m).unwrap();
    for (i, b) in m.blocks.iter().enumerate() {
        let t = &b.tubes()[0];
        let k = (i + 1) as f64;
        assert_eq!(t.core_length, 1.0 / k);
        assert!(t.separating);
        let core = g.index(&core_id(i, &t.id)).unwrap();
        assert_eq!(g.injectivity_radius(core), 1.0 / (2.0 * k));
    }
}

#[test]
fn ibounded_alternates_thick_and_thin() {
    let m = build_family(Family::IBounded { twists: vec![3, 5, 9] }).unwrap();
    assert_eq!(m.blocks.len(), 6);
    for (i, b) in m.blocks.iter().enumerate() {
        assert_eq!(matches!(b.variant, BlockVariant::Thin { .. }), i % 2 == 1, "block {i}");
    }
    assert_eq!(winding_loops(&m), [0, 3, 0, 5, 0, 9]);
    let twists: Vec<i64> = m.tubes().map(|(_, t)| t.twist).collect();
    assert_eq!(twists, [3, 5, 9]);
}

#[test]
fn amalgamated_thickness_grows() {
    let m = build_family(Family::amalg_growing(6, 0)).unwrap();
    let g = discretize(&m).unwrap();
    let mut last = 0.0;
    for i in 0..6 {
        let t = g.block_thickness(i).unwrap();
        assert!((t - 2.0 * (i + 1) as f64).abs() <= 2.0, "block {i}: {t}");
        assert!(t > last);
        last = t;
    }
}

#[test]
fn split_thickness_is_uniformly_bounded() {
    let small = discretize(&build_family(Family::split_pow2(3)).unwrap()).unwrap();
    let bound = (0..small.block_count()).map(|i| small.block_thickness(i).unwrap()).fold(0.0, f64::max);
    let family = Family::split_pow2(10);
    let Family::SplitCounterexample { regions } = &family else { unreachable!() };
    let g = discretize(&build_family(family.clone()).unwrap()).unwrap();
    for (i, r) in regions.iter().enumerate() {
        let t = g.block_thickness(i).unwrap();
        assert!(t <= bound, "block {i}: {t} > {bound}");
        assert!(t < r.n as f64);
    }
    for w in regions.windows(2) {
        assert!(1.0 + (2.0 * w[0].l as f64).ln() + 3.0 < w[1].m as f64);
    }
}

#[test]
fn thin_all_blocks_force_the_tube() {
    let js: Vec<u64> = vec![60, 75, 90, 120];
    let (d, c) = (1.0, 8.0);
    let m = build_family(Family::ThinAll { js: js.clone(), d, c }).unwrap();
    let g = discretize(&m).unwrap();
    for (i, &k) in js.iter().enumerate() {
        assert!(thin_all_condition(k, d, c));
        let shallow = |v| match &g.node(v).locus {
            Locus::TubeRung { depth, .. } => *depth == 0,
            Locus::TubeCore { .. } => false,
            _ => true,
        };
        let (avoid, _) = g.block_crossing(i, &shallow).unwrap();
        assert!(avoid >= k as f64 * d / 2.0, "block {i}: {avoid}");
        let (best, path) = g.block_crossing(i, &|_| true).unwrap();
        assert!(best <= 4.0 * (k as f64).ln() + c, "block {i}: {best}");
        assert!(path.iter().any(|&v| g.node(v).depth >= 1));
    }
}

#[test]
fn invalid_params_are_rejected() {
    let bad = [
        Family::BoundedGeometry { n_blocks: 0 },
        Family::Flute { n_necks: 0 },
        Family::IBounded { twists: vec![] },
        Family::IBounded { twists: vec![4, 0] },
        Family::AmalgCounterexample { blocks: vec![], pad: 1 },
        Family::AmalgCounterexample { blocks: vec![vec![]], pad: 1 },
        Family::SplitCounterexample { regions: vec![] },
        Family::SplitCounterexample { regions: vec![RegionParams { l: 4, m: 4, n: 6 }] },
        Family::SplitCounterexample { regions: vec![RegionParams { l: 0, m: 4, n: 6 }] },
        Family::ThinAll { js: vec![10], d: 1.0, c: 8.0 },
        Family::ThinAll { js: vec![], d: 1.0, c: 8.0 },
        Family::ThinAll { js: vec![100], d: 0.0, c: 8.0 },
    ];
    for f in bad {
        let err = build_family(f.clone()).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)), "{f:?}: {err}");
        assert!(err.is_invalid_input());
    }
    let err = build_family(Family::SplitCounterexample { regions: vec![RegionParams { l: 4, m: 4, n: 6 }] }).unwrap_err();
    assert!(err.to_string().contains("n_i ≥ l_i + m_i"), "{err}");
}
