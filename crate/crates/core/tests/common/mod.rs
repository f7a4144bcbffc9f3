//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use endmodel::graph::NodeIdx;
use endmodel::model::{Block, BlockVariant, Constants, ModelEnd, SplitSurfaceSpec, Tube};
use endmodel::MetricGraph;
use rand::Rng;

/// Minimum over all simple paths from `a` to `b`, each length folded from
/// `a`. A prefix is abandoned once it is no shorter than a complete path
/// already found, which cannot lose the minimum for positive weights.
pub fn simple_path_min(n: usize, edges: &[(usize, usize, f64)], a: usize, b: usize) -> Option<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(x, y, w) in edges {
        adj[x].push((y, w));
        adj[y].push((x, w));
    }
    fn go(adj: &[Vec<(usize, f64)>], v: usize, b: usize, len: f64, seen: &mut Vec<bool>, best: &mut Option<f64>) {
        if best.is_some_and(|x| len >= x) {
            return;
        }
        if v == b {
            *best = Some(len);
            return;
        }
        for &(u, w) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                go(adj, u, b, len + w, seen, best);
                seen[u] = false;
            }
        }
    }
    let mut seen = vec![false; n];
    seen[a] = true;
    let mut best = None;
    go(&adj, a, b, 0.0, &mut seen, &mut best);
    best
}

/// Simple-path minimum with branch-and-bound pruning, restricted to
/// `allowed` nodes of `g`. Still exhaustive: a prefix is dropped only once
/// it is no shorter than a complete path already found.
pub fn simple_path_min_in(g: &MetricGraph, a: NodeIdx, b: NodeIdx, allowed: &dyn Fn(NodeIdx) -> bool) -> Option<f64> {
    fn go(
        g: &MetricGraph,
        v: NodeIdx,
        b: NodeIdx,
        len: f64,
        allowed: &dyn Fn(NodeIdx) -> bool,
        seen: &mut BTreeSet<NodeIdx>,
        best: &mut Option<f64>,
    ) {
        if best.is_some_and(|x| len >= x) {
            return;
        }
        if v == b {
            *best = Some(len);
            return;
        }
        for (u, w) in g.neighbors(v) {
            if allowed(u) && seen.insert(u) {
                go(g, u, b, len + w, allowed, seen, best);
                seen.remove(&u);
            }
        }
    }
    let mut seen = BTreeSet::from([a]);
    let mut best = None;
    go(g, a, b, 0.0, allowed, &mut seen, &mut best);
    best
}

/// Textbook Dijkstra over `g.neighbors`, truncated at `radius`.
pub fn ball(g: &MetricGraph, src: NodeIdx, radius: f64) -> HashMap<NodeIdx, f64> {
    let mut dist: HashMap<NodeIdx, f64> = HashMap::from([(src, 0.0)]);
    let mut done: BTreeSet<NodeIdx> = BTreeSet::new();
    let mut frontier: BTreeMap<(u64, NodeIdx), ()> = BTreeMap::from([((0f64.to_bits(), src), ())]);
    while let Some(((bits, v), ())) = frontier.pop_first() {
        if !done.insert(v) {
            continue;
        }
        let d = f64::from_bits(bits);
        for (u, w) in g.neighbors(v) {
            let nd = d + w;
            if nd <= radius && dist.get(&u).map_or(true, |&x| nd < x) {
                dist.insert(u, nd);
                frontier.insert((nd.to_bits(), u), ());
            }
        }
    }
    dist
}

/// Connected random graph on `n` nodes: a random spanning tree plus extra
/// edges, weights in `(0, 10]`.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    let mut present = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
        edges.push((u, v, weight(rng)));
    }
    let extra = rng.gen_range(0..=n * (n - 1) / 4);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && present.insert((a, b)) {
            edges.push((a, b, weight(rng)));
        }
    }
    edges
}

fn weight(rng: &mut impl Rng) -> f64 {
    if rng.gen_bool(0.3) {
        rng.gen_range(1..=8) as f64 * 0.5
    } else {
        rng.gen_range(0.01..10.0)
    }
}

/// One thin block whose single crossing tube `T` has `n` Minsky blocks on
/// its left.
pub fn single_tube_model(n: u64, core_length: f64) -> ModelEnd {
    let surface = |level| {
        let mut s = SplitSurfaceSpec::single(level, "s", 6);
        s.boundary_tubes.insert("s".into(), BTreeSet::from(["T".into()]));
        s
    };
    ModelEnd {
        surface_complexity: 6,
        constants: Constants::default(),
        blocks: vec![Block {
            index: 0,
            variant: BlockVariant::Thin { tubes: vec![Tube::crossing("T", core_length, n, 0)] },
            bottom: surface(0),
            top: surface(1),
            routes: Vec::new(),
        }],
        hierarchy: None,
    }
}

/// `n` thick blocks over one component `s` of complexity 6.
pub fn thick_chain(n: usize) -> ModelEnd {
    ModelEnd {
        surface_complexity: 6,
        constants: Constants::default(),
        blocks: (0..n)
            .map(|i| Block {
                index: i,
                variant: BlockVariant::Thick { bilipschitz_constant: 1.0 },
                bottom: SplitSurfaceSpec::single(i, "s", 6),
                top: SplitSurfaceSpec::single(i + 1, "s", 6),
                routes: Vec::new(),
            })
            .collect(),
        hierarchy: None,
    }
}
