//! Hierarchy bookkeeping: tight geodesics on component domains, hierarchy
//! paths, slices and resolutions, and Minsky-block tallies against tubes.
//!
//! Curves are opaque ids. Disjointness is assumed unless a pair is listed in
//! `intersecting`; no curve-complex distances are computed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{ModelEnd, TubeId, Violation};

pub type CurveId = String;
pub type Multicurve = BTreeSet<CurveId>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// An essential subsurface. `parent: None` marks the whole surface.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub complexity: u32,
    #[serde(default)]
    pub boundary: Multicurve,
    /// Which side of a tube curve the domain lies on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sides: BTreeMap<CurveId, Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightGeodesic {
    pub id: String,
    pub domain: String,
    pub simplices: Vec<Multicurve>,
    pub initial_marking: Multicurve,
    pub terminal_marking: Multicurve,
}

impl TightGeodesic {
    /// Number of edges, `simplices - 1`.
    pub fn length(&self) -> u64 {
        self.simplices.len().saturating_sub(1) as u64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyAnnotation {
    /// Core curve of each tube.
    #[serde(default)]
    pub tube_curves: BTreeMap<CurveId, TubeId>,
    pub domains: Vec<Domain>,
    pub geodesics: Vec<TightGeodesic>,
    /// Hierarchy path: one pants decomposition per slot.
    pub path: Vec<Multicurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intersecting: Vec<(CurveId, CurveId)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub pairs: Vec<(String, usize)>,
    pub bottom: (String, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub slices: Vec<Slice>,
}

/// One sub-geodesic of a recipe: a 4-domain bounded by `boundary`, lying on
/// the given side of each tube curve in `sides`, with a geodesic of `length`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub label: String,
    pub boundary: Multicurve,
    pub sides: BTreeMap<CurveId, Side>,
    pub length: u64,
}

impl Segment {
    pub fn new(label: impl Into<String>, length: u64) -> Self {
        Segment { label: label.into(), boundary: BTreeSet::new(), sides: BTreeMap::new(), length }
    }

    pub fn abut(mut self, curve: &str, side: Side) -> Self {
        self.boundary.insert(curve.to_owned());
        self.sides.insert(curve.to_owned(), side);
        self
    }

    pub fn bound(mut self, curve: &str) -> Self {
        self.boundary.insert(curve.to_owned());
        self
    }
}

pub fn tube_curve(tube: &TubeId) -> CurveId {
    format!("core:{}", tube)
}

fn violation(rule: &str, message: String) -> Violation {
    Violation { block: None, rule: rule.to_owned(), message }
}

impl HierarchyAnnotation {
    pub const MAIN: &'static str = "S";

    /// Sweeps the segments in order under one main geodesic on the whole
    /// surface. Each slot's pants decomposition is the segment boundary plus
    /// the current vertex of its sub-geodesic.
    pub fn from_segments(
        surface_complexity: u32,
        tube_curves: BTreeMap<CurveId, TubeId>,
        segments: &[Segment],
    ) -> Self {
        let mut domains = vec![Domain {
            id: Self::MAIN.to_owned(),
            complexity: surface_complexity,
            boundary: BTreeSet::new(),
            sides: BTreeMap::new(),
            parent: None,
        }];
        let mut geodesics = Vec::new();
        let mut main: Vec<Multicurve> = Vec::new();
        let mut path = Vec::new();
        for seg in segments {
            let dom = format!("Y:{}", seg.label);
            domains.push(Domain {
                id: dom.clone(),
                complexity: 4,
                boundary: seg.boundary.clone(),
                sides: seg.sides.clone(),
                parent: Some(Self::MAIN.to_owned()),
            });
            let simplices: Vec<Multicurve> =
                (0..=seg.length).map(|i| BTreeSet::from([format!("{}:{}", dom, i)])).collect();
            for s in &simplices {
                path.push(seg.boundary.union(s).cloned().collect());
            }
            geodesics.push(TightGeodesic {
                id: format!("g:{}", seg.label),
                domain: dom,
                initial_marking: simplices[0].clone(),
                terminal_marking: simplices[simplices.len() - 1].clone(),
                simplices,
            });
            if main.last() != Some(&seg.boundary) {
                main.push(seg.boundary.clone());
            }
        }
        if main.is_empty() {
            main.push(BTreeSet::new());
            path.push(BTreeSet::new());
        }
        geodesics.insert(
            0,
            TightGeodesic {
                id: "g:main".to_owned(),
                domain: Self::MAIN.to_owned(),
                initial_marking: main[0].clone(),
                terminal_marking: main[main.len() - 1].clone(),
                simplices: main,
            },
        );
        HierarchyAnnotation { tube_curves, domains, geodesics, path, intersecting: Vec::new() }
    }

    /// Default annotation: for every tube, one 4-geodesic on each side whose
    /// length is the stored abutment count.
    pub fn generic(model: &ModelEnd) -> Self {
        let mut curves = BTreeMap::new();
        let mut segments = Vec::new();
        for (_, tube) in model.tubes() {
            let c = tube_curve(&tube.id);
            curves.insert(c.clone(), tube.id.clone());
            for (side, count, tag) in [(Side::Left, tube.left_count, "L"), (Side::Right, tube.right_count, "R")] {
                if count > 0 {
                    segments.push(Segment::new(format!("{}:{}", tube.id, tag), count).abut(&c, side));
                }
            }
        }
        Self::from_segments(model.surface_complexity, curves, &segments)
    }

    pub fn domain(&self, id: &str) -> Option<&Domain> {
        self.domains.iter().find(|d| d.id == id)
    }

    pub fn geodesic(&self, id: &str) -> Option<&TightGeodesic> {
        self.geodesics.iter().find(|g| g.id == id)
    }

    fn intersect(&self, a: &Multicurve, b: &Multicurve) -> bool {
        self.intersecting
            .iter()
            .any(|(x, y)| (a.contains(x) && b.contains(y)) || (a.contains(y) && b.contains(x)))
    }

    /// Curve id to the sorted slots whose pants decomposition contains it.
    fn slot_index(&self) -> HashMap<&str, Vec<usize>> {
        let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
        for (j, rho) in self.path.iter().enumerate() {
            for c in rho {
                index.entry(c.as_str()).or_default().push(j);
            }
        }
        index
    }

    /// Slots `j` with `s ⊆ ρ(j)`, ascending.
    fn simplex_slots(&self, index: &HashMap<&str, Vec<usize>>, s: &Multicurve) -> Vec<usize> {
        let mut best: Option<&Vec<usize>> = None;
        for c in s {
            let Some(slots) = index.get(c.as_str()) else { return Vec::new() };
            if best.map_or(true, |b| slots.len() < b.len()) {
                best = Some(slots);
            }
        }
        match best {
            Some(slots) => slots.iter().copied().filter(|&j| s.is_subset(&self.path[j])).collect(),
            None => (0..self.path.len()).collect(),
        }
    }

    /// For each slot, the index of the simplex of `g` it carries: the
    /// largest one contained in `ρ(j)`, the last on ties.
    fn last_simplex_per_slot(&self, index: &HashMap<&str, Vec<usize>>, g: &TightGeodesic) -> BTreeMap<usize, usize> {
        let mut out: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, s) in g.simplices.iter().enumerate() {
            for j in self.simplex_slots(index, s) {
                let slot = out.entry(j).or_insert(i);
                if s.len() >= g.simplices[*slot].len() {
                    *slot = i;
                }
            }
        }
        out
    }

    /// The canonical resolution of the path: at each slot, every geodesic
    /// active there at its last realized simplex.
    pub fn resolve(&self) -> Resolution {
        let index = self.slot_index();
        let realized: Vec<BTreeMap<usize, usize>> =
            self.geodesics.iter().map(|g| self.last_simplex_per_slot(&index, g)).collect();
        let root = self
            .geodesics
            .iter()
            .position(|g| self.domain(&g.domain).is_some_and(|d| d.parent.is_none()));
        let mut slices: Vec<Slice> = (0..self.path.len()).map(|_| Slice::default()).collect();
        for (g, slots) in self.geodesics.iter().zip(&realized) {
            for (&j, &i) in slots {
                slices[j].pairs.push((g.id.clone(), i));
            }
        }
        for slice in &mut slices {
            slice.bottom = root
                .and_then(|r| slice.pairs.iter().find(|p| p.0 == self.geodesics[r].id).cloned())
                .or_else(|| slice.pairs.first().cloned())
                .unwrap_or_default();
        }
        Resolution { slices }
    }
}

/// Checks markings, domains, tightness where decidable and the interval
/// conditions of a hierarchy path.
pub fn validate_hierarchy(h: &HierarchyAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let index = h.slot_index();
    for g in &h.geodesics {
        if !seen.insert(&g.id) {
            out.push(violation("unique_geodesic", format!("geodesic {} declared twice", g.id)));
        }
        let Some(dom) = h.domain(&g.domain) else {
            out.push(violation("domain", format!("geodesic {} on unknown domain {}", g.id, g.domain)));
            continue;
        };
        if dom.complexity < 4 {
            out.push(violation(
                "domain",
                format!("domain {} has complexity {} < 4", dom.id, dom.complexity),
            ));
        }
        let (Some(first), Some(last)) = (g.simplices.first(), g.simplices.last()) else {
            out.push(violation("simplices", format!("geodesic {} has no simplices", g.id)));
            continue;
        };
        if !first.is_subset(&g.initial_marking) {
            out.push(violation("marking", format!("first simplex of {} not in initial marking", g.id)));
        }
        if !last.is_subset(&g.terminal_marking) {
            out.push(violation("marking", format!("last simplex of {} not in terminal marking", g.id)));
        }
        for (i, w) in g.simplices.windows(2).enumerate() {
            if w[0] == w[1] || h.intersect(&w[0], &w[1]) {
                out.push(violation(
                    "tight",
                    format!("simplices {} and {} of {} are not at distance 1", i, i + 1, g.id),
                ));
            }
        }
        if g.simplices.len() == 3 && !h.intersecting.is_empty() && !h.intersect(&g.simplices[0], &g.simplices[2]) {
            out.push(violation("tight", format!("endpoints of {} are not at distance 2", g.id)));
        }
        for s in &g.simplices {
            if let Some(c) = s.intersection(&dom.boundary).next() {
                out.push(violation("tight", format!("geodesic {} uses boundary curve {}", g.id, c)));
            }
        }

        let per_slot = h.last_simplex_per_slot(&index, g);
        let (Some(&lo), Some(&hi)) = (per_slot.keys().next(), per_slot.keys().next_back()) else {
            out.push(violation("path", format!("geodesic {} never realized in the path", g.id)));
            continue;
        };
        for j in lo..=hi {
            if !dom.boundary.is_subset(&h.path[j]) {
                out.push(violation(
                    "interval",
                    format!("J_Y disconnected: boundary of {} missing at slot {}", dom.id, j),
                ));
            } else if !per_slot.contains_key(&j) {
                out.push(violation(
                    "slot",
                    format!("slot {} carries no simplex of {}", j, g.id),
                ));
            }
        }
        for (i, s) in g.simplices.iter().enumerate() {
            if h.simplex_slots(&index, s).is_empty() {
                out.push(violation("path", format!("simplex {} of {} never appears", i, g.id)));
            }
        }
    }
    out
}

/// Checks a resolution against the hierarchy: one bottom pair, unique
/// geodesics, component-domain nesting, and vertex set equal to `ρ(i)`.
pub fn validate_resolution(h: &HierarchyAnnotation, r: &Resolution) -> Vec<Violation> {
    let mut out = Vec::new();
    if r.slices.len() != h.path.len() {
        out.push(violation(
            "resolution",
            format!("{} slices for a path of {} slots", r.slices.len(), h.path.len()),
        ));
    }
    for (j, slice) in r.slices.iter().enumerate() {
        let mut ids = BTreeSet::new();
        for (g, _) in &slice.pairs {
            if !ids.insert(g) {
                out.push(violation("slice", format!("slice {}: geodesic {} appears twice", j, g)));
            }
        }
        let bottoms = slice.pairs.iter().filter(|p| **p == slice.bottom).count();
        if bottoms != 1 {
            out.push(violation("slice", format!("slice {}: {} bottom pairs", j, bottoms)));
        }
        let mut vertices = BTreeSet::new();
        for (gid, i) in &slice.pairs {
            let Some(g) = h.geodesic(gid) else {
                out.push(violation("slice", format!("slice {}: unknown geodesic {}", j, gid)));
                continue;
            };
            let Some(simplex) = g.simplices.get(*i) else {
                out.push(violation("slice", format!("slice {}: {} has no simplex {}", j, gid, i)));
                continue;
            };
            vertices.extend(simplex.iter().cloned());
            if (gid, i) == (&slice.bottom.0, &slice.bottom.1) {
                continue;
            }
            let dom = h.domain(&g.domain);
            let nested = dom.is_some_and(|d| {
                slice.pairs.iter().any(|(pid, pi)| {
                    let Some(p) = h.geodesic(pid) else { return false };
                    let Some(ps) = p.simplices.get(*pi) else { return false };
                    let pdom = h.domain(&p.domain);
                    d.parent.as_deref() == Some(p.domain.as_str())
                        && pdom.is_some_and(|pd| d.boundary.difference(&pd.boundary).all(|c| ps.contains(c)))
                })
            });
            if !nested {
                out.push(violation(
                    "slice",
                    format!("slice {}: domain of {} is not a component domain of the slice", j, gid),
                ));
            }
        }
        if let Some(rho) = h.path.get(j) {
            if &vertices != rho {
                out.push(violation(
                    "resolution",
                    format!("slice {}: vertex set differs from the pants decomposition", j),
                ));
            }
        }
    }
    out
}

/// Sums the edges of every 4-geodesic abutting each tube, by side.
pub fn minsky_block_tally(model: &ModelEnd, h: &HierarchyAnnotation) -> BTreeMap<TubeId, (u64, u64)> {
    let mut tally: BTreeMap<TubeId, (u64, u64)> = model.tubes().map(|(_, t)| (t.id.clone(), (0, 0))).collect();
    for g in &h.geodesics {
        let Some(dom) = h.domain(&g.domain) else { continue };
        if dom.complexity != 4 {
            continue;
        }
        for (curve, side) in &dom.sides {
            if let Some(tube) = h.tube_curves.get(curve) {
                let entry = tally.entry(tube.clone()).or_default();
                match side {
                    Side::Left => entry.0 += g.length(),
                    Side::Right => entry.1 += g.length(),
                }
            }
        }
    }
    tally
}

/// Tubes whose tally disagrees with their stored `(left_count, right_count)`.
pub fn tally_mismatches(model: &ModelEnd, h: &HierarchyAnnotation) -> Vec<Violation> {
    let tally = minsky_block_tally(model, h);
    model
        .tubes()
        .filter_map(|(b, t)| {
            let got = tally.get(&t.id).copied().unwrap_or_default();
            (got != (t.left_count, t.right_count)).then(|| Violation {
                block: Some(b),
                rule: "tally".to_owned(),
                message: format!(
                    "tube {}: tally ({}, {}) != stored ({}, {})",
                    t.id, got.0, got.1, t.left_count, t.right_count
                ),
            })
        })
        .collect()
}

/// Length of a curve in the model: tube cores carry their core length, every
/// other curve the thick-part floor `ε₀`.
pub fn curve_length(model: &ModelEnd, h: &HierarchyAnnotation, curve: &str) -> f64 {
    h.tube_curves
        .get(curve)
        .and_then(|t| model.tube(t))
        .map(|(_, t)| t.core_length)
        .unwrap_or(model.constants.epsilon0)
}

/// Flags geodesics longer than `n` on domains abutting a curve of length
/// greater than `l`.
pub fn check_abut_bound(model: &ModelEnd, h: &HierarchyAnnotation, l: f64, n: u64) -> Vec<Violation> {
    let mut out = Vec::new();
    for g in &h.geodesics {
        let Some(dom) = h.domain(&g.domain) else { continue };
        if dom.parent.is_none() || g.length() <= n {
            continue;
        }
        if let Some(c) = dom.boundary.iter().find(|c| curve_length(model, h, c) > l) {
            out.push(violation(
                "abut_bound",
                format!("geodesic {} of length {} > {} abuts curve {}", g.id, g.length(), n, c),
            ));
        }
    }
    out
}
