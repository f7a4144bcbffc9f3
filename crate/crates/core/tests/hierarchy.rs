mod common;

use std::collections::BTreeMap;

use endmodel::builders::{build_family, Family};
use endmodel::hierarchy::{
    check_abut_bound, minsky_block_tally, tally_mismatches, tube_curve, validate_hierarchy, validate_resolution,
    HierarchyAnnotation, Segment, Side,
};
use endmodel::model::BlockVariant;
use endmodel::ModelEnd;
use proptest::prelude::*;

fn annotated() -> Vec<(Family, ModelEnd)> {
    [
        Family::Flute { n_necks: 6 },
        Family::ibounded_pow2(4),
        Family::amalg_growing(4, 1),
        Family::split_pow2(4),
    ]
    .into_iter()
    .map(|f| (f.clone(), build_family(f).unwrap()))
    .collect()
}

#[test]
fn builder_hierarchies_are_valid() {
    for (f, m) in annotated() {
        let h = m.hierarchy.as_ref().unwrap();
        assert!(validate_hierarchy(h).is_empty(), "{}: {:?}", f.name(), validate_hierarchy(h));
        let r = h.resolve();
        assert_eq!(r.slices.len(), h.path.len());
        assert!(validate_resolution(h, &r).is_empty(), "{}: {:?}", f.name(), validate_resolution(h, &r));
        for s in &r.slices {
            assert_eq!(s.pairs.iter().filter(|p| **p == s.bottom).count(), 1);
            assert_eq!(s.bottom.0, "g:main");
        }
        assert!(tally_mismatches(&m, h).is_empty(), "{}", f.name());
    }
}

#[test]
fn missing_boundary_breaks_the_interval() {
    let m = build_family(Family::split_pow2(3)).unwrap();
    let mut h = m.hierarchy.unwrap();
    let dom = h.domains.iter().find(|d| !d.boundary.is_empty()).unwrap().clone();
    let curve = dom.boundary.iter().next().unwrap().clone();
    let g = h.geodesics.iter().find(|g| g.domain == dom.id).unwrap().clone();
    let slot = h.path.iter().position(|rho| g.simplices[0].is_subset(rho)).unwrap();
    h.path[slot].remove(&curve);
    let v = validate_hierarchy(&h);
    assert!(v.iter().any(|x| x.message.starts_with(&format!("J_Y disconnected: boundary of {}", dom.id))), "{v:?}");
}

#[test]
fn abut_bound_is_vacuous_without_long_geodesics() {
    let m = common::thick_chain(2);
    let empty = HierarchyAnnotation::from_segments(6, BTreeMap::new(), &[]);
    assert!(check_abut_bound(&m, &empty, 0.0, 0).is_empty());
    assert!(validate_hierarchy(&empty).is_empty());

    let family = Family::split_pow2(5);
    let Family::SplitCounterexample { regions } = &family else { unreachable!() };
    let m = build_family(family.clone()).unwrap();
    let eps0 = m.constants.epsilon0;
    let n = regions.iter().map(|r| r.n).max().unwrap();
    assert!(check_abut_bound(&m, m.hierarchy.as_ref().unwrap(), eps0 / 2.0, n).is_empty());
}

#[test]
fn long_geodesic_next_to_thick_curve_is_flagged() {
    let family = Family::split_pow2(3);
    let Family::SplitCounterexample { regions } = &family else { unreachable!() };
    let m = build_family(family.clone()).unwrap();
    let n = regions.iter().map(|r| r.n).max().unwrap();
    let h = m.hierarchy.as_ref().unwrap();
    let segments = [Segment::new("long", n + 5).abut("wall", Side::Right)];
    let injected = HierarchyAnnotation::from_segments(5, h.tube_curves.clone(), &segments);
    let v = check_abut_bound(&m, &injected, m.constants.epsilon0 / 2.0, n);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].message, format!("geodesic g:long of length {} > {} abuts curve wall", n + 5, n));
    assert!(check_abut_bound(&m, &injected, m.constants.epsilon0, n).is_empty());
    assert!(check_abut_bound(&m, &injected, 0.0, n + 5).is_empty());
}

#[test]
fn tally_without_abutting_domains_is_zero() {
    let m = common::single_tube_model(7, 0.01);
    let h = HierarchyAnnotation::from_segments(6, BTreeMap::new(), &[Segment::new("free", 3)]);
    assert_eq!(minsky_block_tally(&m, &h)[&"T".into()], (0, 0));
    let v = tally_mismatches(&m, &h);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].message, "tube T: tally (0, 0) != stored (7, 0)");
}

#[test]
fn amalgamated_tally_sums_pairs() {
    let m = build_family(Family::amalg_growing(5, 0)).unwrap();
    let h = m.hierarchy.as_ref().unwrap();
    let tally = minsky_block_tally(&m, h);
    for b in &m.blocks {
        let BlockVariant::Amalgamated { tubes, amalgamation_params } = &b.variant else { continue };
        let side: u64 = amalgamation_params.iter().map(|p| p.m + p.n).sum();
        assert_eq!(tally[&tubes[0].id], (side, side));
    }
}

proptest! {
    #[test]
    fn tally_round_trips(left in prop::collection::vec(1u64..40, 0..5), right in prop::collection::vec(1u64..40, 0..5)) {
        let (l, r): (u64, u64) = (left.iter().sum(), right.iter().sum());
        prop_assume!(l + r > 0);
        let mut m = common::single_tube_model(l, 0.01);
        if let BlockVariant::Thin { tubes } = &mut m.blocks[0].variant {
            tubes[0].right_count = r;
        }
        let c = tube_curve(&"T".into());
        let mut segments = Vec::new();
        for (i, &len) in left.iter().enumerate() {
            segments.push(Segment::new(format!("L{i}"), len).abut(&c, Side::Left));
        }
        for (i, &len) in right.iter().enumerate() {
            segments.push(Segment::new(format!("R{i}"), len).abut(&c, Side::Right));
        }
        let h = HierarchyAnnotation::from_segments(6, BTreeMap::from([(c.clone(), "T".into())]), &segments);
        prop_assert!(validate_hierarchy(&h).is_empty());
        prop_assert_eq!(minsky_block_tally(&m, &h)[&"T".into()], (l, r));
        prop_assert!(tally_mismatches(&m, &h).is_empty());
        let generic = HierarchyAnnotation::generic(&m);
        prop_assert_eq!(minsky_block_tally(&m, &generic)[&"T".into()], (l, r));
    }
}
