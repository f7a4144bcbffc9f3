//! Parameterized example families.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{tube_curve, HierarchyAnnotation, Segment, Side};
use crate::model::{
    validate, AmalgamationPair, Block, BlockVariant, ComponentId, Constants, ModelEnd, ProductRoute,
    RegionParams, SplitSurfaceSpec, SurfaceComponent, SurfaceLink, Tube, TubeId, TubeKind,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Family {
    BoundedGeometry {
        n_blocks: usize,
    },
    Flute {
        n_necks: usize,
    },
    /// Thick blocks alternating with thin blocks of twist `twists[i]`.
    IBounded {
        twists: Vec<u64>,
    },
    /// One amalgamated block per entry, followed by `pad` thick blocks.
    AmalgCounterexample {
        blocks: Vec<Vec<AmalgamationPair>>,
        #[serde(default = "default_pad")]
        pad: usize,
    },
    SplitCounterexample {
        regions: Vec<RegionParams>,
    },
    /// Block `i` has `k_i = js[i]` and height `k_i * d`.
    ThinAll {
        js: Vec<u64>,
        #[serde(default = "default_d")]
        d: f64,
        #[serde(default = "default_c")]
        c: f64,
    },
}

fn default_pad() -> usize {
    2
}
fn default_d() -> f64 {
    1.0
}
fn default_c() -> f64 {
    8.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    #[serde(flatten)]
    pub family: Family,
    /// Recorded for reproducibility; every family is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::BoundedGeometry { .. } => "BoundedGeometry",
            Family::Flute { .. } => "Flute",
            Family::IBounded { .. } => "IBounded",
            Family::AmalgCounterexample { .. } => "AmalgCounterexample",
            Family::SplitCounterexample { .. } => "SplitCounterexample",
            Family::ThinAll { .. } => "ThinAll",
        }
    }

    /// Twists `2^i` for `i = 1..=count`.
    pub fn ibounded_pow2(count: u32) -> Self {
        Family::IBounded { twists: (1..=count).map(|i| 1u64 << i).collect() }
    }

    /// `m_j = 1`, `n_j = 8 * 2^j`; block `i` carries the pairs `j = 1..=i`.
    pub fn amalg_growing(count: usize, pad: usize) -> Self {
        let blocks = (1..=count)
            .map(|i| (1..=i).map(|j| AmalgamationPair { m: 1, n: 8 << j }).collect())
            .collect();
        Family::AmalgCounterexample { blocks, pad }
    }

    /// Every block has `Σ(m_j + 1) = d0` using pairs `(1, 64)`; `d0` even.
    pub fn amalg_bounded(d0: u64, count: usize) -> Self {
        let pairs = vec![AmalgamationPair { m: 1, n: 64 }; (d0 / 2) as usize];
        Family::AmalgCounterexample { blocks: vec![pairs; count], pad: 0 }
    }

    /// `l_i = m_i = 2^{i+2}`, `n_i = 2^{i+3}` for `i = 1..=count`.
    pub fn split_pow2(count: u32) -> Self {
        let regions = (1..=count)
            .map(|i| RegionParams { l: 1 << (i + 2), m: 1 << (i + 2), n: 1 << (i + 3) })
            .collect();
        Family::SplitCounterexample { regions }
    }

    /// `l_i = m_i = 2(i+2)^2`, `n_i = 4(i+2)^2`: polynomial growth, so long
    /// horizons stay small.
    pub fn split_quadratic(count: u64) -> Self {
        let regions = (1..=count)
            .map(|i| {
                let q = (i + 2) * (i + 2);
                RegionParams { l: 2 * q, m: 2 * q, n: 4 * q }
            })
            .collect();
        Family::SplitCounterexample { regions }
    }
}

/// Family names accepted on the command line, with desk-scale defaults.
pub const FAMILY_NAMES: [&str; 6] =
    ["BoundedGeometry", "Flute", "IBounded", "AmalgCounterexample", "SplitCounterexample", "ThinAll"];

/// Canonical name for `name`, ignoring case, `-` and `_`.
pub fn canonical_family_name(name: &str) -> Option<&'static str> {
    let key: String = name.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
    FAMILY_NAMES.iter().copied().find(|n| n.to_lowercase() == key)
}

pub fn default_family(name: &str) -> Option<Family> {
    Some(match canonical_family_name(name)? {
        "BoundedGeometry" => Family::BoundedGeometry { n_blocks: 50 },
        "Flute" => Family::Flute { n_necks: 100 },
        "IBounded" => Family::ibounded_pow2(12),
        "AmalgCounterexample" => Family::amalg_growing(8, 12),
        "SplitCounterexample" => Family::split_quadratic(20),
        _ => Family::ThinAll { js: (0..20).map(|i| 60 + 10 * i).collect(), d: 1.0, c: 8.0 },
    })
}

/// Defaults of family `name` with the fields of `overrides` replacing
/// those of the same name. A `family` key in `overrides` is ignored.
pub fn family_params(
    name: &str,
    overrides: Option<&serde_json::Map<String, serde_json::Value>>,
    seed: u64,
) -> Result<FamilyParams> {
    let family = default_family(name).ok_or_else(|| {
        Error::InvalidParams(format!("unknown family {} (expected one of {})", name, FAMILY_NAMES.join(", ")))
    })?;
    let mut value = serde_json::to_value(FamilyParams { family, seed })?;
    let obj = value.as_object_mut().expect("params serialize to an object");
    for (k, v) in overrides.into_iter().flatten() {
        if k != "family" && k != "seed" {
            obj.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidParams(e.to_string()))
}

pub fn build(params: &FamilyParams) -> Result<ModelEnd> {
    let model = match &params.family {
        Family::BoundedGeometry { n_blocks } => bounded_geometry(*n_blocks)?,
        Family::Flute { n_necks } => flute(*n_necks)?,
        Family::IBounded { twists } => i_bounded(twists)?,
        Family::AmalgCounterexample { blocks, pad } => amalgamated(blocks, *pad)?,
        Family::SplitCounterexample { regions } => split(regions)?,
        Family::ThinAll { js, d, c } => thin_all(js, *d, *c)?,
    };
    let report = validate(&model);
    if !report.is_valid() {
        return Err(Error::InvalidModel(report));
    }
    Ok(model)
}

pub fn build_family(family: Family) -> Result<ModelEnd> {
    build(&FamilyParams { family, seed: 0 })
}

/// Winding loop counts: `n_T` of the first tube of each block, 0 elsewhere.
pub fn winding_loops(model: &ModelEnd) -> Vec<u64> {
    model
        .blocks
        .iter()
        .map(|b| b.tubes().first().map(|t| t.total_count()).unwrap_or(0))
        .collect()
}

fn single_surface(level: usize, complexity: u32, tubes: &[&TubeId]) -> SplitSurfaceSpec {
    let mut s = SplitSurfaceSpec::single(level, "s", complexity);
    if !tubes.is_empty() {
        s.boundary_tubes.insert("s".into(), tubes.iter().map(|t| (*t).clone()).collect());
    }
    s
}

fn model(surface_complexity: u32, blocks: Vec<Block>, hierarchy: Option<HierarchyAnnotation>) -> ModelEnd {
    ModelEnd { surface_complexity, constants: Constants::default(), blocks, hierarchy }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}

fn thick_block(index: usize, bottom: SplitSurfaceSpec, top: SplitSurfaceSpec) -> Block {
    Block { index, variant: BlockVariant::Thick { bilipschitz_constant: 1.0 }, bottom, top, routes: Vec::new() }
}

fn bounded_geometry(n: usize) -> Result<ModelEnd> {
    require(n >= 1, || "n_blocks must be ≥ 1".into())?;
    let blocks = (0..n).map(|i| thick_block(i, single_surface(i, 6, &[]), single_surface(i + 1, 6, &[]))).collect();
    Ok(model(6, blocks, None))
}

/// Neck `k` (block `k - 1`) is a separating tube with core length `1/k`.
fn flute(n: usize) -> Result<ModelEnd> {
    require(n >= 1, || "n_necks must be ≥ 1".into())?;
    let ids: Vec<TubeId> = (1..=n).map(|k| TubeId::new(format!("neck{:04}", k))).collect();
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let mut tube = Tube::crossing(ids[i].as_str(), 1.0 / (i + 1) as f64, 1, 1);
        tube.separating = true;
        let below: Vec<&TubeId> = if i > 0 { vec![&ids[i - 1], &ids[i]] } else { vec![&ids[i]] };
        let above: Vec<&TubeId> = if i + 1 < n { vec![&ids[i], &ids[i + 1]] } else { vec![&ids[i]] };
        blocks.push(Block {
            index: i,
            variant: BlockVariant::Thin { tubes: vec![tube] },
            bottom: single_surface(i, 4, &below),
            top: single_surface(i + 1, 4, &above),
            routes: Vec::new(),
        });
    }
    let mut m = model(4, blocks, None);
    m.hierarchy = Some(HierarchyAnnotation::generic(&m));
    Ok(m)
}

fn i_bounded(twists: &[u64]) -> Result<ModelEnd> {
    require(!twists.is_empty(), || "twists must be non-empty".into())?;
    for (i, &t) in twists.iter().enumerate() {
        require(t >= 1, || format!("twist n_{} must be ≥ 1", i + 1))?;
    }
    let ids: Vec<TubeId> = (1..=twists.len()).map(|i| TubeId::new(format!("T{:04}", i))).collect();
    let mut blocks = Vec::new();
    for (i, &n) in twists.iter().enumerate() {
        let thick = 2 * i;
        let prev: Vec<&TubeId> = if i > 0 { vec![&ids[i - 1]] } else { vec![] };
        let own = [&ids[i]];
        blocks.push(thick_block(thick, single_surface(thick, 6, &prev), single_surface(thick + 1, 6, &own)));
        let tube = Tube {
            twist: n as i64,
            ..Tube::crossing(ids[i].as_str(), 1.0 / ((1 + n) * (1 + n)) as f64, n.div_ceil(2), n / 2)
        };
        blocks.push(Block {
            index: thick + 1,
            variant: BlockVariant::Thin { tubes: vec![tube] },
            bottom: single_surface(thick + 1, 6, &own),
            top: single_surface(thick + 2, 6, &own),
            routes: Vec::new(),
        });
    }
    let mut m = model(6, blocks, None);
    m.hierarchy = Some(HierarchyAnnotation::generic(&m));
    Ok(m)
}

fn amalgamated(lists: &[Vec<AmalgamationPair>], pad: usize) -> Result<ModelEnd> {
    require(!lists.is_empty(), || "at least one amalgamated block is required".into())?;
    let ids: Vec<TubeId> = (1..=lists.len()).map(|i| TubeId::new(format!("T{:04}", i))).collect();
    let mut blocks = Vec::new();
    let mut segments = Vec::new();
    let mut curves = BTreeMap::new();
    for (b, pairs) in lists.iter().enumerate() {
        require(!pairs.is_empty(), || format!("block {} has no (m_j, n_j) pairs", b))?;
        let side: u64 = pairs.iter().map(|p| p.m + p.n).sum();
        let tube = Tube::crossing(ids[b].as_str(), 1.0 / ((1 + 2 * side) as f64).powi(2), side, side);
        let prev: Vec<&TubeId> = if b > 0 { vec![&ids[b - 1], &ids[b]] } else { vec![&ids[b]] };
        let next: Vec<&TubeId> = if b + 1 < lists.len() { vec![&ids[b], &ids[b + 1]] } else { vec![&ids[b]] };
        blocks.push(Block {
            index: b,
            variant: BlockVariant::Amalgamated { tubes: vec![tube], amalgamation_params: pairs.clone() },
            bottom: single_surface(b, 5, &prev),
            top: single_surface(b + 1, 5, &next),
            routes: Vec::new(),
        });
        let v = tube_curve(&ids[b]);
        curves.insert(v.clone(), ids[b].clone());
        for (side, tag) in [(Side::Left, "L"), (Side::Right, "R")] {
            for (j, p) in pairs.iter().enumerate() {
                let w = format!("w:{}:{}", ids[b], j + 1);
                segments.push(Segment::new(format!("{}:{}:W{}", ids[b], tag, j + 1), p.n).abut(&v, side).bound(&w));
                segments.push(Segment::new(format!("{}:{}:K{}", ids[b], tag, j + 1), p.m).abut(&v, side));
            }
        }
    }
    let last = ids.last().expect("non-empty");
    for k in 0..pad {
        let i = lists.len() + k;
        let bottom: Vec<&TubeId> = if k == 0 { vec![last] } else { vec![] };
        blocks.push(thick_block(i, single_surface(i, 5, &bottom), single_surface(i + 1, 5, &[])));
    }
    let hierarchy = HierarchyAnnotation::from_segments(5, curves, &segments);
    Ok(model(5, blocks, Some(hierarchy)))
}

fn component(id: &str, complexity: u32) -> SurfaceComponent {
    SurfaceComponent { id: id.into(), complexity }
}

/// Level surface of the split family. `x` is the top of `A_{ℓ-1}`, `y` the
/// bottom of `A_ℓ`, `c` the rest; `x` and `y` meet only through the hanging
/// tube or a thick detour of length `m_ℓ`.
fn split_surface(level: usize, blocks: usize, regions: &[RegionParams], d: f64) -> SplitSurfaceSpec {
    let t = |b: usize| TubeId::new(format!("T{:04}", b));
    let h = |b: usize| TubeId::new(format!("H{:04}", b));
    let mut comps = Vec::new();
    let mut tubes = BTreeMap::new();
    let mut links = Vec::new();
    if level > 0 {
        comps.push(component("x", 3));
        let mut on_x = vec![t(level - 1)];
        if level < blocks {
            on_x.push(h(level - 1));
        }
        tubes.insert(ComponentId::new("x"), on_x.into_iter().collect::<BTreeSet<_>>());
        links.push(SurfaceLink { a: "x".into(), b: "c".into(), weight: Some(d) });
    }
    if level < blocks {
        comps.push(component("y", 3));
        let mut on_y = vec![t(level)];
        if level > 0 {
            on_y.push(h(level - 1));
            links.push(SurfaceLink { a: "x".into(), b: "y".into(), weight: Some(regions[level].m as f64) });
        } else {
            links.push(SurfaceLink { a: "y".into(), b: "c".into(), weight: Some(d) });
        }
        tubes.insert(ComponentId::new("y"), on_y.into_iter().collect::<BTreeSet<_>>());
    }
    comps.push(component("c", 4));
    SplitSurfaceSpec { level, components: comps, boundary_tubes: tubes, links }
}

fn split(regions: &[RegionParams]) -> Result<ModelEnd> {
    require(!regions.is_empty(), || "at least one split block is required".into())?;
    for (i, r) in regions.iter().enumerate() {
        require(r.n >= r.l + r.m, || {
            format!("n_i ≥ l_i + m_i fails at block {} ({} < {})", i, r.n, r.l + r.m)
        })?;
        require(r.l >= 1 && r.m >= 1, || format!("l_i, m_i must be ≥ 1 at block {}", i))?;
    }
    let constants = Constants::default();
    let count = regions.len();
    let mut blocks = Vec::with_capacity(count);
    let mut curves = BTreeMap::new();
    let mut segments = Vec::new();
    for (b, r) in regions.iter().enumerate() {
        let t_id = TubeId::new(format!("T{:04}", b));
        let h_id = TubeId::new(format!("H{:04}", b));
        let t = Tube::crossing(t_id.as_str(), 1.0 / ((2 + r.n) as f64).powi(2), 1, r.n);
        let mut hanging = Vec::new();
        let has_h = b + 1 < count;
        if has_h {
            hanging.push(Tube {
                kind: TubeKind::HangingUpper,
                vertical_extent: Some(constants.eta0),
                ..Tube::crossing(h_id.as_str(), 1.0 / ((1 + 2 * r.l) as f64).powi(2), r.l, r.l)
            });
        }
        blocks.push(Block {
            index: b,
            variant: BlockVariant::Split { tubes: vec![t], hanging_tubes: hanging, region_params: *r },
            bottom: split_surface(b, count, regions, constants.diameter_bound),
            top: split_surface(b + 1, count, regions, constants.diameter_bound),
            routes: vec![
                ProductRoute { name: "A".into(), from: "y".into(), to: "x".into(), height: 1.0 },
                ProductRoute { name: "C".into(), from: "c".into(), to: "c".into(), height: r.n as f64 },
            ],
        });

        let v = tube_curve(&t_id);
        let hv = tube_curve(&h_id);
        curves.insert(v.clone(), t_id.clone());
        if has_h {
            curves.insert(hv.clone(), h_id.clone());
        }
        let mut right = 0;
        if b > 0 {
            let prev_h = tube_curve(&TubeId::new(format!("H{:04}", b - 1)));
            segments.push(Segment::new(format!("{}:P5", t_id), r.m).abut(&v, Side::Right).bound(&prev_h));
            right += r.m;
        }
        let tail = if has_h { r.l } else { 0 };
        let a = r.n - right - tail;
        if a > 0 {
            segments.push(Segment::new(format!("{}:P1", t_id), a).abut(&v, Side::Right));
        }
        segments.push(Segment::new(format!("{}:P2", t_id), 1).abut(&v, Side::Left));
        if has_h {
            segments.push(Segment::new(format!("{}:P3", t_id), r.l).abut(&v, Side::Right).abut(&hv, Side::Left));
            segments.push(Segment::new(format!("{}:P4", h_id), r.l).abut(&hv, Side::Right));
        }
    }
    let hierarchy = HierarchyAnnotation::from_segments(5, curves, &segments);
    Ok(model(5, blocks, Some(hierarchy)))
}

/// `k·d/2 > 4 ln k + C`: a thick crossing of block `k` costs more than the
/// logarithmic tube shortcut plus `C`.
pub fn thin_all_condition(k: u64, d: f64, c: f64) -> bool {
    k as f64 * d / 2.0 > 4.0 * (k as f64).ln() + c
}

fn thin_all(js: &[u64], d: f64, c: f64) -> Result<ModelEnd> {
    require(!js.is_empty(), || "js must be non-empty".into())?;
    require(d > 0.0, || "d must be positive".into())?;
    let ids: Vec<TubeId> = (1..=js.len()).map(|i| TubeId::new(format!("T{:04}", i))).collect();
    let mut blocks = Vec::new();
    for (i, &k) in js.iter().enumerate() {
        require(thin_all_condition(k, d, c), || {
            format!("k·d/2 > 4 ln k + C fails for k = {} (d = {}, C = {})", k, d, c)
        })?;
        let tube = Tube::crossing(ids[i].as_str(), 1.0 / (k * k) as f64, k.div_ceil(2), k / 2);
        let below: Vec<&TubeId> = if i > 0 { vec![&ids[i - 1], &ids[i]] } else { vec![&ids[i]] };
        let above: Vec<&TubeId> = if i + 1 < js.len() { vec![&ids[i], &ids[i + 1]] } else { vec![&ids[i]] };
        blocks.push(Block {
            index: i,
            variant: BlockVariant::Thin { tubes: vec![tube] },
            bottom: single_surface(i, 6, &below),
            top: single_surface(i + 1, 6, &above),
            routes: vec![ProductRoute { name: "v".into(), from: "s".into(), to: "s".into(), height: k as f64 * d }],
        });
    }
    let mut m = model(6, blocks, None);
    m.hierarchy = Some(HierarchyAnnotation::generic(&m));
    Ok(m)
}
