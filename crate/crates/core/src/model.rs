//! Block, tube and split-surface vocabulary for model ends, plus validation.
//!
//! A [`ModelEnd`] is an ordered stack of blocks glued end to end. Each block
//! is homeomorphic to `S x [0, 1]`; its bottom and top are split surfaces
//! whose components are separated by the annuli of the tubes listed in
//! `boundary_tubes`. Validation never fails: violations are returned as data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::HierarchyAnnotation;

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(TubeId);
string_id!(ComponentId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeKind {
    Crossing,
    HangingUpper,
    HangingLower,
}

impl TubeKind {
    pub fn is_hanging(self) -> bool {
        !matches!(self, TubeKind::Crossing)
    }
}

/// A Margulis tube or hanging tube.
///
/// `left_count` / `right_count` are the numbers of Minsky blocks glued to the
/// left and right vertical boundary. Their sum sets the length of the tube's
/// vertical boundary in the metric graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub id: TubeId,
    pub core_length: f64,
    #[serde(default)]
    pub twist: i64,
    pub left_count: u64,
    pub right_count: u64,
    pub kind: TubeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_extent: Option<f64>,
    /// Collar of a separating short curve: every crossing passes the core.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub separating: bool,
}

impl Tube {
    pub fn crossing(id: impl Into<String>, core_length: f64, left: u64, right: u64) -> Self {
        Tube {
            id: TubeId::new(id),
            core_length,
            twist: 0,
            left_count: left,
            right_count: right,
            kind: TubeKind::Crossing,
            vertical_extent: None,
            separating: false,
        }
    }

    pub fn total_count(&self) -> u64 {
        self.left_count + self.right_count
    }

    /// `ln(1 + n_T)`: the modeled radius of the tube in ladder rungs.
    pub fn depth(&self) -> f64 {
        (1.0 + self.total_count() as f64).ln()
    }

    /// Number of rung levels below the boundary, `ceil(depth)`.
    pub fn max_rung(&self) -> u32 {
        self.depth().ceil() as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceComponent {
    pub id: ComponentId,
    /// `xi(S_{g,b}) = 3g + b`.
    pub complexity: u32,
}

/// A horizontal adjacency between two components of the same split surface.
/// `weight: None` means the diameter bound `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLink {
    pub a: ComponentId,
    pub b: ComponentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSurfaceSpec {
    pub level: usize,
    pub components: Vec<SurfaceComponent>,
    #[serde(default)]
    pub boundary_tubes: BTreeMap<ComponentId, BTreeSet<TubeId>>,
    /// Horizontal adjacencies. When empty, every pair of components is
    /// joined with weight `D`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<SurfaceLink>,
}

impl SplitSurfaceSpec {
    pub fn single(level: usize, component: &str, complexity: u32) -> Self {
        SplitSurfaceSpec {
            level,
            components: vec![SurfaceComponent { id: component.into(), complexity }],
            boundary_tubes: BTreeMap::new(),
            links: Vec::new(),
        }
    }

    pub fn component_ids(&self) -> impl Iterator<Item = &ComponentId> {
        self.components.iter().map(|c| &c.id)
    }

    pub fn has_component(&self, id: &ComponentId) -> bool {
        self.components.iter().any(|c| &c.id == id)
    }

    /// Components whose boundary includes an annulus of `tube`, in declaration order.
    pub fn components_bounding(&self, tube: &TubeId) -> Vec<&ComponentId> {
        self.components
            .iter()
            .map(|c| &c.id)
            .filter(|c| self.boundary_tubes.get(*c).is_some_and(|s| s.contains(tube)))
            .collect()
    }

    pub fn all_boundary_tubes(&self) -> BTreeSet<&TubeId> {
        self.boundary_tubes.values().flatten().collect()
    }

    /// Structural identity used for gluing: same component ids and tube sets.
    fn structure(&self) -> (BTreeSet<&ComponentId>, BTreeMap<&ComponentId, &BTreeSet<TubeId>>) {
        let comps = self.component_ids().collect();
        let tubes = self
            .boundary_tubes
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(c, s)| (c, s))
            .collect();
        (comps, tubes)
    }
}

/// A thick product region joining a bottom component to a top component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductRoute {
    pub name: String,
    pub from: ComponentId,
    pub to: ComponentId,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionParams {
    pub l: u64,
    pub m: u64,
    pub n: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamationPair {
    pub m: u64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockVariant {
    Thick {
        bilipschitz_constant: f64,
    },
    Thin {
        tubes: Vec<Tube>,
    },
    Amalgamated {
        tubes: Vec<Tube>,
        amalgamation_params: Vec<AmalgamationPair>,
    },
    Split {
        tubes: Vec<Tube>,
        hanging_tubes: Vec<Tube>,
        region_params: RegionParams,
    },
}

impl BlockVariant {
    pub fn name(&self) -> &'static str {
        match self {
            BlockVariant::Thick { .. } => "thick",
            BlockVariant::Thin { .. } => "thin",
            BlockVariant::Amalgamated { .. } => "amalgamated",
            BlockVariant::Split { .. } => "split",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub index: usize,
    pub variant: BlockVariant,
    pub bottom: SplitSurfaceSpec,
    pub top: SplitSurfaceSpec,
    /// Thick product regions. When empty, each component present on both
    /// boundaries gets a vertical route of the variant's nominal height
    /// (none when the block has a separating tube).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routes: Vec<ProductRoute>,
}

impl Block {
    /// All tubes owned by this block, hanging tubes last.
    pub fn tubes(&self) -> Vec<&Tube> {
        match &self.variant {
            BlockVariant::Thick { .. } => Vec::new(),
            BlockVariant::Thin { tubes } | BlockVariant::Amalgamated { tubes, .. } => {
                tubes.iter().collect()
            }
            BlockVariant::Split { tubes, hanging_tubes, .. } => {
                tubes.iter().chain(hanging_tubes.iter()).collect()
            }
        }
    }

    /// Nominal height of a default product route.
    pub fn nominal_height(&self, constants: &Constants) -> f64 {
        match &self.variant {
            BlockVariant::Thick { .. } => 1.0,
            BlockVariant::Thin { .. } => 3.0 * constants.bilipschitz,
            BlockVariant::Amalgamated { amalgamation_params, .. } => {
                amalgamation_params.iter().map(|p| (p.m + 1) as f64).sum::<f64>().max(1.0)
            }
            BlockVariant::Split { .. } => 1.0,
        }
    }

    pub fn effective_routes(&self, constants: &Constants) -> Vec<ProductRoute> {
        if !self.routes.is_empty() {
            return self.routes.clone();
        }
        // A separating neck cuts every product route.
        if self.tubes().iter().any(|t| t.separating) {
            return Vec::new();
        }
        let h = self.nominal_height(constants);
        self.bottom
            .component_ids()
            .filter(|c| self.top.has_component(c))
            .map(|c| ProductRoute {
                name: format!("v{}", c),
                from: c.clone(),
                to: c.clone(),
                height: h,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Uniform bilipschitz constant `L`; the metric realization uses `L = 1`.
    #[serde(default = "one")]
    pub bilipschitz: f64,
    #[serde(default = "default_eps0")]
    pub epsilon0: f64,
    #[serde(default = "default_diameter")]
    pub diameter_bound: f64,
    /// Additive constant relating the torus parameter to `(tw_T, n_T)`.
    #[serde(default = "default_c0")]
    pub meridian_slack: f64,
    /// Lower bound on the vertical extent of hanging tubes.
    #[serde(default = "one")]
    pub eta0: f64,
    /// Maximum number of consecutive blocks a crossing tube may span.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn one() -> f64 {
    1.0
}
fn default_eps0() -> f64 {
    0.1
}
fn default_diameter() -> f64 {
    2.0
}
fn default_c0() -> f64 {
    2.0
}
fn default_n_max() -> usize {
    16
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            bilipschitz: 1.0,
            epsilon0: default_eps0(),
            diameter_bound: default_diameter(),
            meridian_slack: default_c0(),
            eta0: 1.0,
            n_max: default_n_max(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEnd {
    #[serde(default)]
    pub surface_complexity: u32,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyAnnotation>,
}

impl ModelEnd {
    /// Parses a model document; an empty document is the empty model.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(serde_json::from_str("{}")?);
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn level_count(&self) -> usize {
        self.blocks.len() + 1
    }

    /// Surface at `level` (bottom of block `level`, or top of the last block).
    pub fn surface(&self, level: usize) -> Option<&SplitSurfaceSpec> {
        if level < self.blocks.len() {
            Some(&self.blocks[level].bottom)
        } else if level == self.blocks.len() && level > 0 {
            Some(&self.blocks[level - 1].top)
        } else {
            None
        }
    }

    /// Every tube with the index of its owning block.
    pub fn tubes(&self) -> impl Iterator<Item = (usize, &Tube)> {
        self.blocks.iter().flat_map(|b| b.tubes().into_iter().map(move |t| (b.index, t)))
    }

    pub fn tube(&self, id: &TubeId) -> Option<(usize, &Tube)> {
        self.tubes().find(|(_, t)| &t.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<usize>,
    pub rule: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block {
            Some(b) => write!(f, "block {}: [{}] {}", b, self.rule, self.message),
            None => write!(f, "[{}] {}", self.rule, self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, block: Option<usize>, rule: &str, message: impl Into<String>) {
        self.violations.push(Violation { block, rule: rule.to_owned(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&lines.join("; "))
    }
}

pub fn validate(model: &ModelEnd) -> ValidationReport {
    let mut report = ValidationReport::default();
    if model.blocks.is_empty() {
        report.push(None, "non_empty", "model must contain ≥1 block");
        return report;
    }
    check_constants(&model.constants, &mut report);

    let known: BTreeSet<&TubeId> = model.tubes().map(|(_, t)| &t.id).collect();
    let mut seen_owned: BTreeMap<&TubeId, usize> = BTreeMap::new();

    for (pos, block) in model.blocks.iter().enumerate() {
        let b = Some(block.index);
        if block.index != pos {
            report.push(b, "consecutive_index", format!("expected index {}, found {}", pos, block.index));
        }
        if block.bottom.level != pos || block.top.level != pos + 1 {
            report.push(
                b,
                "surface_level",
                format!(
                    "surfaces at levels ({}, {}), expected ({}, {})",
                    block.bottom.level,
                    block.top.level,
                    pos,
                    pos + 1
                ),
            );
        }
        for surface in [&block.bottom, &block.top] {
            check_surface(surface, &known, &model.constants, b, &mut report);
        }
        if let BlockVariant::Thick { bilipschitz_constant } = block.variant {
            if bilipschitz_constant < 1.0 {
                report.push(b, "bilipschitz", "thick block bilipschitz constant must be ≥ 1");
            }
        }
        let mut local = BTreeSet::new();
        for tube in block.tubes() {
            if !local.insert(&tube.id) {
                report.push(b, "unique_tube", format!("tube {} listed twice in block", tube.id));
            }
            if let Some(prev) = seen_owned.get(&tube.id) {
                if *prev + 1 != pos || tube.kind != TubeKind::Crossing {
                    report.push(
                        b,
                        "unique_tube",
                        format!("tube {} already owned by block {}", tube.id, prev),
                    );
                }
            }
            seen_owned.insert(&tube.id, pos);
            check_tube(tube, block, &model.constants, &mut report);
        }
        if let BlockVariant::Split { hanging_tubes, region_params, tubes } = &block.variant {
            let RegionParams { l, m, n } = *region_params;
            if n < l + m {
                report.push(
                    b,
                    "split_region",
                    format!("n_i ≥ l_i + m_i fails ({} < {})", n, l + m),
                );
            }
            for t in hanging_tubes {
                if !t.kind.is_hanging() {
                    report.push(b, "hanging_kind", format!("tube {} listed as hanging but is crossing", t.id));
                }
            }
            for t in tubes {
                if t.kind.is_hanging() {
                    report.push(b, "hanging_kind", format!("tube {} is hanging but listed as crossing", t.id));
                }
            }
        }
        check_routes(block, &mut report);
    }

    for pair in model.blocks.windows(2) {
        if pair[0].top.structure() != pair[1].bottom.structure() {
            report.push(
                Some(pair[1].index),
                "gluing",
                format!(
                    "top of block {} does not match bottom of block {}",
                    pair[0].index, pair[1].index
                ),
            );
        }
    }

    // Spans of crossing tubes re-listed in consecutive blocks.
    let mut run: BTreeMap<&TubeId, (usize, usize)> = BTreeMap::new();
    for block in &model.blocks {
        for t in block.tubes().into_iter().filter(|t| t.kind == TubeKind::Crossing) {
            let entry = run.entry(&t.id).or_insert((block.index, 0));
            if entry.0 + entry.1 == block.index {
                entry.1 += 1;
            }
            if entry.1 > model.constants.n_max {
                report.push(
                    Some(block.index),
                    "tube_span",
                    format!("tube {} spans more than {} blocks", t.id, model.constants.n_max),
                );
            }
        }
    }
    report
}

fn check_constants(c: &Constants, report: &mut ValidationReport) {
    if !(c.bilipschitz >= 1.0) {
        report.push(None, "constants", "L must be ≥ 1");
    }
    if !(c.epsilon0 > 0.0) {
        report.push(None, "constants", "ε₀ must be positive");
    }
    if !(c.diameter_bound > 0.0) {
        report.push(None, "constants", "diameter bound D must be positive");
    }
    if !(c.meridian_slack >= 0.0) {
        report.push(None, "constants", "C₀ must be non-negative");
    }
    if !(c.eta0 > 0.0) {
        report.push(None, "constants", "η₀ must be positive");
    }
}

fn check_surface(
    s: &SplitSurfaceSpec,
    known: &BTreeSet<&TubeId>,
    constants: &Constants,
    block: Option<usize>,
    report: &mut ValidationReport,
) {
    if s.components.is_empty() {
        report.push(block, "surface_components", format!("surface at level {} has no components", s.level));
    }
    let mut ids = BTreeSet::new();
    for c in &s.components {
        if !ids.insert(&c.id) {
            report.push(block, "surface_components", format!("duplicate component {}", c.id));
        }
        if c.complexity < 3 {
            report.push(
                block,
                "complexity",
                format!("component {} has complexity {} < 3", c.id, c.complexity),
            );
        }
    }
    for (comp, tubes) in &s.boundary_tubes {
        if !ids.contains(comp) {
            report.push(block, "boundary_tubes", format!("unknown component {} at level {}", comp, s.level));
        }
        for t in tubes {
            if !known.contains(t) {
                report.push(block, "unknown_tube", format!("tube {} at level {} does not exist", t, s.level));
            }
        }
    }
    for link in &s.links {
        if !ids.contains(&link.a) || !ids.contains(&link.b) {
            report.push(block, "links", format!("link {}-{} names an unknown component", link.a, link.b));
        }
        if let Some(w) = link.weight {
            if !(w > 0.0) {
                report.push(block, "links", format!("link {}-{} has non-positive weight", link.a, link.b));
            }
        }
    }
    let _ = constants;
}

fn check_tube(t: &Tube, block: &Block, c: &Constants, report: &mut ValidationReport) {
    let b = Some(block.index);
    if !(t.core_length > 0.0) {
        report.push(b, "core_length", format!("tube {} core length must be positive", t.id));
    }
    let in_bottom = block.bottom.all_boundary_tubes().contains(&t.id);
    let in_top = block.top.all_boundary_tubes().contains(&t.id);
    match t.kind {
        TubeKind::Crossing => {
            if t.total_count() < 1 {
                report.push(b, "crossing_count", format!("crossing tube {} needs n_T ≥ 1", t.id));
            }
            if !(in_bottom && in_top) {
                report.push(
                    b,
                    "crossing_boundary",
                    format!("crossing tube {} must bound components of both bottom and top", t.id),
                );
            }
        }
        TubeKind::HangingUpper | TubeKind::HangingLower => {
            match t.vertical_extent {
                Some(h) if h >= c.eta0 => {}
                Some(h) => report.push(
                    b,
                    "hanging_extent",
                    format!("hanging tube {} vertical extent {} < η₀ = {}", t.id, h, c.eta0),
                ),
                None => report.push(b, "hanging_extent", format!("hanging tube {} has no vertical extent", t.id)),
            }
            let (want, other) = if t.kind == TubeKind::HangingUpper {
                (in_top, in_bottom)
            } else {
                (in_bottom, in_top)
            };
            if !want || other {
                report.push(
                    b,
                    "hanging_boundary",
                    format!("hanging tube {} must meet exactly one horizontal boundary ({:?})", t.id, t.kind),
                );
            }
        }
    }
}

fn check_routes(block: &Block, report: &mut ValidationReport) {
    for r in &block.routes {
        if !block.bottom.has_component(&r.from) || !block.top.has_component(&r.to) {
            report.push(Some(block.index), "routes", format!("route {} names an unknown component", r.name));
        }
        if !(r.height > 0.0) {
            report.push(Some(block.index), "routes", format!("route {} has non-positive height", r.name));
        }
    }
}

/// `(tw_T, n_T)`; the torus parameter of the tube boundary lies within
/// `C₀` of `tw_T + i n_T`.
pub fn meridian_coefficient(tube: &Tube) -> Result<(f64, f64)> {
    if tube.kind != TubeKind::Crossing {
        return Err(Error::NotCrossing(tube.id.to_string()));
    }
    Ok((tube.twist as f64, tube.total_count() as f64))
}
