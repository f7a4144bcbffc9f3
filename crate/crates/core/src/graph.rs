//! Weighted-graph discretization of a model end.
//!
//! Each split surface component becomes one node. Thick product regions are
//! chains of unit-height edges. Every tube becomes a ladder: boundary
//! positions `0..=n_T` at rung depth 0, rung depths `0..=ceil(ln(1 + n_T))`,
//! vertical rung edges of weight 1 and horizontal edges of weight `e^{-k}` at
//! depth `k`, so a crossing with boundary offset `Δ` costs `2 ln Δ + O(1)`
//! instead of `Δ`. The deepest rung is joined to a core node.
//!
//! Node ids are zero-padded strings; node indices follow their lexicographic
//! order, so every tie-break on indices is a tie-break on ids.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate, ComponentId, ModelEnd, Tube, TubeId, TubeKind};

pub type NodeIdx = u32;
const NONE: NodeIdx = NodeIdx::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Locus {
    Surface { level: usize, component: ComponentId },
    /// Interior of a thick product region of `block`.
    Product { block: usize, route: String, step: usize },
    TubeRung { block: usize, tube: TubeId, depth: u32, position: u64 },
    TubeCore { block: usize, tube: TubeId },
}

#[derive(Clone, Debug, Serialize)]
pub struct Node {
    pub id: String,
    pub locus: Locus,
    /// Injectivity-radius proxy.
    pub inj: f64,
    /// Rung depth; the core sits one below the deepest rung.
    pub depth: u32,
}

impl Node {
    /// Level of a surface node, or the owning block for interior nodes.
    pub fn level(&self) -> usize {
        match &self.locus {
            Locus::Surface { level, .. } => *level,
            Locus::Product { block, .. }
            | Locus::TubeRung { block, .. }
            | Locus::TubeCore { block, .. } => *block,
        }
    }

    pub fn is_surface(&self) -> bool {
        matches!(self.locus, Locus::Surface { .. })
    }
}

pub fn surface_id(level: usize, component: &ComponentId) -> String {
    format!("s{:06}:{}", level, component)
}

pub fn product_id(block: usize, route: &str, step: usize) -> String {
    format!("p{:06}:{}:{:06}", block, route, step)
}

pub fn rung_id(block: usize, tube: &TubeId, depth: u32, position: u64) -> String {
    format!("r{:06}:{}:{:03}:{:09}", block, tube, depth, position)
}

pub fn core_id(block: usize, tube: &TubeId) -> String {
    format!("c{:06}:{}", block, tube)
}

/// `max(core/2, ε₀ e^{-k})` at rung depth `k`.
pub fn rung_inj(core_length: f64, eps0: f64, depth: u32) -> f64 {
    (core_length / 2.0).max(eps0 * (-(depth as f64)).exp())
}

/// Ladder geometry of one tube in one block.
#[derive(Clone, Debug, Serialize)]
pub struct LadderInfo {
    pub block: usize,
    pub tube: TubeId,
    pub kind: TubeKind,
    pub boundary_length: u64,
    pub max_rung: u32,
    pub core_length: f64,
}

#[derive(Clone, Debug)]
pub struct MetricGraph {
    nodes: Vec<Node>,
    offsets: Vec<usize>,
    targets: Vec<NodeIdx>,
    weights: Vec<f64>,
    edge_count: usize,
    level_index: BTreeMap<usize, Vec<NodeIdx>>,
    base: NodeIdx,
    block_count: usize,
    ladders: Vec<LadderInfo>,
    eps0: f64,
}

/// Edges refer to nodes by creation order until `assemble` sorts by id.
struct Builder {
    nodes: Vec<Node>,
    edges: Vec<(NodeIdx, NodeIdx, f64)>,
    surface: BTreeMap<(usize, ComponentId), NodeIdx>,
}

impl Builder {
    fn node(&mut self, id: String, locus: Locus, inj: f64, depth: u32) -> NodeIdx {
        self.nodes.push(Node { id, locus, inj, depth });
        (self.nodes.len() - 1) as NodeIdx
    }

    fn edge(&mut self, a: NodeIdx, b: NodeIdx, w: f64) {
        self.edges.push((a, b, w));
    }

    fn surface(&self, level: usize, comp: &ComponentId) -> NodeIdx {
        self.surface[&(level, comp.clone())]
    }
}

/// Discretizes a validated model.
pub fn discretize(model: &ModelEnd) -> Result<MetricGraph> {
    let report = validate(model);
    if !report.is_valid() {
        return Err(Error::InvalidModel(report));
    }
    let c = &model.constants;
    let eps0 = c.epsilon0;
    let mut b = Builder { nodes: Vec::new(), edges: Vec::new(), surface: BTreeMap::new() };

    for level in 0..model.level_count() {
        let s = model.surface(level).expect("level within model");
        for comp in &s.components {
            let v = b.node(
                surface_id(level, &comp.id),
                Locus::Surface { level, component: comp.id.clone() },
                eps0,
                0,
            );
            b.surface.insert((level, comp.id.clone()), v);
        }
        if s.links.is_empty() {
            for (i, x) in s.components.iter().enumerate() {
                for y in &s.components[i + 1..] {
                    let (u, v) = (b.surface(level, &x.id), b.surface(level, &y.id));
                    b.edge(u, v, c.diameter_bound);
                }
            }
        } else {
            for link in &s.links {
                let (u, v) = (b.surface(level, &link.a), b.surface(level, &link.b));
                b.edge(u, v, link.weight.unwrap_or(c.diameter_bound));
            }
        }
    }

    let mut ladders = Vec::new();
    for block in &model.blocks {
        let i = block.index;
        for route in block.effective_routes(c) {
            let steps = (route.height.ceil() as usize).max(1);
            let w = route.height / steps as f64;
            let mut prev = b.surface(i, &route.from);
            for step in 1..steps {
                let id = product_id(i, &route.name, step);
                let v = b.node(id, Locus::Product { block: i, route: route.name.clone(), step }, eps0, 0);
                b.edge(prev, v, w);
                prev = v;
            }
            let top = b.surface(i + 1, &route.to);
            b.edge(prev, top, w);
        }
        for tube in block.tubes() {
            let (info, first, last) = add_ladder(&mut b, i, tube, eps0);
            let attach = |b: &mut Builder, level: usize, comp: &ComponentId, rung: NodeIdx| {
                let s = b.surface(level, comp);
                b.edge(s, rung, 1.0);
            };
            match tube.kind {
                TubeKind::Crossing => {
                    for comp in block.bottom.components_bounding(&tube.id) {
                        attach(&mut b, i, comp, first);
                    }
                    for comp in block.top.components_bounding(&tube.id) {
                        attach(&mut b, i + 1, comp, last);
                    }
                }
                TubeKind::HangingUpper | TubeKind::HangingLower => {
                    let (level, surface) = if tube.kind == TubeKind::HangingUpper {
                        (i + 1, &block.top)
                    } else {
                        (i, &block.bottom)
                    };
                    let comps = surface.components_bounding(&tube.id);
                    if let (Some(lo), Some(hi)) = (comps.first(), comps.last()) {
                        attach(&mut b, level, lo, first);
                        attach(&mut b, level, hi, last);
                    }
                }
            }
            ladders.push(info);
        }
    }

    Ok(MetricGraph::assemble(b, model, ladders, eps0))
}

/// Adds the ladder of `tube`; returns its info and the depth-0 end rungs.
fn add_ladder(b: &mut Builder, block: usize, tube: &Tube, eps0: f64) -> (LadderInfo, NodeIdx, NodeIdx) {
    let n = tube.total_count();
    let k_max = tube.max_rung();
    let positions: Vec<u64> = if tube.separating { vec![0, n] } else { (0..=n).collect() };
    let width = positions.len() as NodeIdx;
    let base = b.nodes.len() as NodeIdx;
    for k in 0..=k_max {
        let inj = rung_inj(tube.core_length, eps0, k);
        let horizontal = (-(k as f64)).exp();
        for (j, &p) in positions.iter().enumerate() {
            let v = b.node(
                rung_id(block, &tube.id, k, p),
                Locus::TubeRung { block, tube: tube.id.clone(), depth: k, position: p },
                inj,
                k,
            );
            if k > 0 {
                b.edge(v - width, v, 1.0);
            }
            if j > 0 && !tube.separating {
                b.edge(v - 1, v, horizontal);
            }
        }
    }
    let core = b.node(
        core_id(block, &tube.id),
        Locus::TubeCore { block, tube: tube.id.clone() },
        tube.core_length / 2.0,
        k_max + 1,
    );
    let deepest = base + k_max * width;
    for j in 0..width {
        b.edge(deepest + j, core, 1.0);
    }
    let info = LadderInfo {
        block,
        tube: tube.id.clone(),
        kind: tube.kind,
        boundary_length: n,
        max_rung: k_max,
        core_length: tube.core_length,
    };
    (info, base, base + width - 1)
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: NodeIdx,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-query Dijkstra state.
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pred: Vec<NodeIdx>,
}

impl ShortestPaths {
    pub fn path_to(&self, target: NodeIdx) -> Option<Vec<NodeIdx>> {
        if !self.dist[target as usize].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur as usize] != NONE {
            cur = self.pred[cur as usize];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

impl MetricGraph {
    fn assemble(b: Builder, model: &ModelEnd, ladders: Vec<LadderInfo>, eps0: f64) -> Self {
        let mut order: Vec<NodeIdx> = (0..b.nodes.len() as NodeIdx).collect();
        order.sort_unstable_by(|&x, &y| b.nodes[x as usize].id.cmp(&b.nodes[y as usize].id));
        let mut rank = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old as usize] = new as NodeIdx;
        }
        let mut slots: Vec<Option<Node>> = b.nodes.into_iter().map(Some).collect();
        let nodes: Vec<Node> = order.iter().map(|&old| slots[old as usize].take().expect("each node once")).collect();
        let edges: Vec<(NodeIdx, NodeIdx, f64)> =
            b.edges.iter().map(|&(x, y, w)| (rank[x as usize], rank[y as usize], w)).collect();
        let mut graph = Self::from_parts(nodes, &edges, eps0);
        graph.block_count = model.blocks.len();
        graph.ladders = ladders;
        let first = &model.surface(0).expect("level 0").components[0].id;
        graph.base = graph.index(&surface_id(0, first)).expect("base node");
        graph
    }

    fn from_parts(nodes: Vec<Node>, edges: &[(NodeIdx, NodeIdx, f64)], eps0: f64) -> Self {
        let n = nodes.len();
        let mut degree = vec![0usize; n + 1];
        for &(a, b, _) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(a, b, w) in edges {
            for (x, y) in [(a, b), (b, a)] {
                let slot = fill[x as usize];
                targets[slot] = y;
                weights[slot] = w;
                fill[x as usize] += 1;
            }
        }
        let mut level_index: BTreeMap<usize, Vec<NodeIdx>> = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if let Locus::Surface { level, .. } = node.locus {
                level_index.entry(level).or_default().push(i as NodeIdx);
            }
        }
        MetricGraph {
            nodes,
            offsets,
            targets,
            weights,
            edge_count: edges.len(),
            level_index,
            base: 0,
            block_count: 0,
            ladders: Vec::new(),
            eps0,
        }
    }

    /// A bare weighted graph with surface nodes only (used for testing metric
    /// properties on arbitrary graphs).
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Self {
        let nodes = (0..node_count)
            .map(|i| Node {
                id: format!("n{:06}", i),
                locus: Locus::Surface { level: 0, component: ComponentId::new(format!("n{:06}", i)) },
                inj: 1.0,
                depth: 0,
            })
            .collect();
        let edges: Vec<_> = edges.iter().map(|&(a, b, w)| (a as NodeIdx, b as NodeIdx, w)).collect();
        Self::from_parts(nodes, &edges, 1.0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn level_count(&self) -> usize {
        self.level_index.len()
    }

    pub fn epsilon0(&self) -> f64 {
        self.eps0
    }

    pub fn base(&self) -> NodeIdx {
        self.base
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn ladders(&self) -> &[LadderInfo] {
        &self.ladders
    }

    pub fn ladder(&self, tube: &TubeId) -> Option<&LadderInfo> {
        self.ladders.iter().find(|l| &l.tube == tube)
    }

    pub fn index(&self, id: &str) -> Option<NodeIdx> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok().map(|i| i as NodeIdx)
    }

    pub fn require(&self, id: &str) -> Result<NodeIdx> {
        self.index(id).ok_or_else(|| Error::UnknownNode(id.to_owned()))
    }

    /// Surface nodes at `level`, in id order.
    pub fn level_nodes(&self, level: usize) -> &[NodeIdx] {
        self.level_index.get(&level).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn neighbors(&self, v: NodeIdx) -> impl Iterator<Item = (NodeIdx, f64)> + '_ {
        let (lo, hi) = (self.offsets[v as usize], self.offsets[v as usize + 1]);
        self.targets[lo..hi].iter().copied().zip(self.weights[lo..hi].iter().copied())
    }

    /// Undirected edge list `(a, b, w)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(NodeIdx, NodeIdx, f64)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for a in 0..self.nodes.len() as NodeIdx {
            for (b, w) in self.neighbors(a) {
                if a < b {
                    out.push((a, b, w));
                }
            }
        }
        out.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
        out
    }

    /// Whether `v` lies in the subgraph of block `i`: surfaces at levels `i`
    /// and `i + 1` plus the block's interior.
    pub fn in_block(&self, v: NodeIdx, i: usize) -> bool {
        match &self.nodes[v as usize].locus {
            Locus::Surface { level, .. } => *level == i || *level == i + 1,
            Locus::Product { block, .. } | Locus::TubeRung { block, .. } | Locus::TubeCore { block, .. } => {
                *block == i
            }
        }
    }

    /// Multi-source Dijkstra restricted to `allowed` nodes. Stops as soon as
    /// a node satisfying `stop` is settled and returns it. Ties on distance
    /// settle the smaller index first and keep the smaller predecessor.
    pub fn search(
        &self,
        sources: &[NodeIdx],
        allowed: &dyn Fn(NodeIdx) -> bool,
        stop: Option<&dyn Fn(NodeIdx) -> bool>,
    ) -> (ShortestPaths, Option<NodeIdx>) {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NONE; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if allowed(s) {
                dist[s as usize] = 0.0;
                heap.push(HeapItem { dist: 0.0, node: s });
            }
        }
        let mut hit = None;
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            if stop.is_some_and(|f| f(u)) {
                hit = Some(u);
                break;
            }
            for (v, w) in self.neighbors(u) {
                if done[v as usize] || !allowed(v) {
                    continue;
                }
                let nd = d + w;
                let slot = &mut dist[v as usize];
                if nd < *slot {
                    *slot = nd;
                    pred[v as usize] = u;
                    heap.push(HeapItem { dist: nd, node: v });
                } else if nd == *slot && u < pred[v as usize] {
                    pred[v as usize] = u;
                }
            }
        }
        (ShortestPaths { dist, pred }, hit)
    }

    /// Single-source distances to every node.
    pub fn distances_from(&self, source: NodeIdx) -> ShortestPaths {
        self.search(&[source], &|_| true, None).0
    }

    /// Shortest path between two nodes, optionally restricted. The search
    /// always runs from the smaller index so lengths are exactly symmetric.
    pub fn path_between(
        &self,
        a: NodeIdx,
        b: NodeIdx,
        allowed: &dyn Fn(NodeIdx) -> bool,
    ) -> Option<(f64, Vec<NodeIdx>)> {
        let (from, to) = if a <= b { (a, b) } else { (b, a) };
        let (sp, hit) = self.search(&[from], allowed, Some(&|v| v == to));
        hit?;
        let mut path = sp.path_to(to)?;
        if from != a {
            path.reverse();
        }
        Some((sp.dist[to as usize], path))
    }

    pub fn shortest_path(&self, a: NodeIdx, b: NodeIdx) -> Result<(f64, Vec<NodeIdx>)> {
        self.path_between(a, b, &|_| true).ok_or_else(|| {
            Error::Unreachable(self.node(a).id.clone(), self.node(b).id.clone())
        })
    }

    /// Exact shortest distance and path between two node ids.
    pub fn shortest_distance(&self, a: &str, b: &str) -> Result<(f64, Vec<String>)> {
        let (ia, ib) = (self.require(a)?, self.require(b)?);
        let (d, path) = self.shortest_path(ia, ib)?;
        Ok((d, path.into_iter().map(|v| self.node(v).id.clone()).collect()))
    }

    /// Shortest distance from the surface at level `i` to the surface at
    /// level `i + 1` through block `i` only.
    pub fn block_thickness(&self, i: usize) -> Result<f64> {
        if i >= self.block_count {
            return Err(Error::NoBlock(i));
        }
        Ok(self.block_crossing(i, &|_| true).map(|(d, _)| d).unwrap_or(f64::INFINITY))
    }

    /// Like [`block_thickness`](Self::block_thickness) with an extra node filter;
    /// returns the witnessing path.
    pub fn block_crossing(
        &self,
        i: usize,
        allowed: &dyn Fn(NodeIdx) -> bool,
    ) -> Option<(f64, Vec<NodeIdx>)> {
        let top = i + 1;
        let filter = |v: NodeIdx| self.in_block(v, i) && allowed(v);
        let stop = |v: NodeIdx| matches!(self.nodes[v as usize].locus, Locus::Surface { level, .. } if level == top);
        let (sp, hit) = self.search(self.level_nodes(i), &filter, Some(&stop));
        let hit = hit?;
        Some((sp.dist[hit as usize], sp.path_to(hit)?))
    }

    pub fn injectivity_radius(&self, v: NodeIdx) -> f64 {
        self.nodes[v as usize].inj
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph model {\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  \"{}\" [inj=\"{}\"];", n.id, sig9(n.inj));
        }
        for (a, b, w) in self.edges() {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [weight=\"{}\"];",
                self.nodes[a as usize].id,
                self.nodes[b as usize].id,
                sig9(w)
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id_a,node_id_b,weight\n");
        for (a, b, w) in self.edges() {
            let _ = writeln!(out, "{},{},{}", self.nodes[a as usize].id, self.nodes[b as usize].id, sig9(w));
        }
        out
    }
}

/// Decimal rendering with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", x);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    // Rounding can carry into a new digit (9.99999999995 -> 10.00000000).
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s.trim_start_matches('-').chars().take_while(|c| *c == '0' || *c == '.').filter(|c| *c == '0').count();
    if digits - leading_zeros > 9 && decimals > 0 {
        format!("{:.*}", decimals - 1, x)
    } else {
        s
    }
}
