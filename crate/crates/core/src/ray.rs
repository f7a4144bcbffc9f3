//! Ray tracing through a metric graph, almost-minimizing deficits and the
//! thick/thin and horosphere verdicts.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Locus, MetricGraph, NodeIdx};
use crate::model::ComponentId;

/// Minimum number of checkpoints for trend classification.
pub const MIN_HORIZON: usize = 20;

/// Absolute rounding tolerance on deficits.
const ROUNDING: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Vertical { component: ComponentId },
    Minimizing,
    /// `loops[ℓ]` loops around a tube of block `ℓ` after checkpoint `ℓ`.
    Winding { loops: Vec<u64> },
    Explicit { nodes: Vec<String> },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Vertical { .. } => "Vertical",
            Strategy::Minimizing => "Minimizing",
            Strategy::Winding { .. } => "Winding",
            Strategy::Explicit { .. } => "Explicit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ray {
    pub strategy: Strategy,
    pub checkpoints: Vec<NodeIdx>,
    /// Extra nodes visited between checkpoint `k` and `k + 1`.
    pub waypoints: Vec<Vec<NodeIdx>>,
}

impl Ray {
    /// Levels of the checkpoints (the owning block for interior nodes).
    pub fn levels(&self, g: &MetricGraph) -> Vec<usize> {
        self.checkpoints.iter().map(|&v| g.node(v).level()).collect()
    }
}

pub fn trace_ray(g: &MetricGraph, strategy: &Strategy, horizon: usize) -> Result<Ray> {
    if let Strategy::Explicit { nodes } = strategy {
        if nodes.is_empty() {
            return Err(Error::InvalidRay("explicit ray needs at least one node".into()));
        }
        let checkpoints = nodes.iter().map(|id| g.require(id)).collect::<Result<Vec<_>>>()?;
        let waypoints = vec![Vec::new(); checkpoints.len()];
        return Ok(Ray { strategy: strategy.clone(), checkpoints, waypoints });
    }
    if horizon == 0 || horizon > g.level_count() {
        return Err(Error::InvalidRay(format!(
            "horizon {} outside 1..={} levels",
            horizon,
            g.level_count()
        )));
    }
    let mut checkpoints = Vec::with_capacity(horizon);
    let mut waypoints = vec![Vec::new(); horizon];
    match strategy {
        Strategy::Vertical { component } => {
            for level in 0..horizon {
                let found = g.level_nodes(level).iter().copied().find(|&v| {
                    matches!(&g.node(v).locus, Locus::Surface { component: c, .. } if c == component)
                });
                checkpoints.push(found.ok_or_else(|| {
                    Error::InvalidRay(format!("component {} absent at level {}", component, level))
                })?);
            }
        }
        Strategy::Minimizing => {
            let sp = g.distances_from(g.base());
            for level in 0..horizon {
                let best = g
                    .level_nodes(level)
                    .iter()
                    .copied()
                    .min_by(|&a, &b| sp.dist[a as usize].total_cmp(&sp.dist[b as usize]).then(a.cmp(&b)));
                checkpoints.push(best.ok_or_else(|| Error::InvalidRay(format!("level {} is empty", level)))?);
            }
        }
        Strategy::Winding { loops } => {
            for level in 0..horizon {
                checkpoints.push(g.level_nodes(level)[0]);
                let count = loops.get(level).copied().unwrap_or(0);
                if count == 0 {
                    continue;
                }
                let ladder = g
                    .ladders()
                    .iter()
                    .find(|l| l.block == level)
                    .ok_or(Error::NoTubeToWind(level))?;
                let mouth = g.require(&crate::graph::rung_id(level, &ladder.tube, 0, 0))?;
                let core = g.require(&crate::graph::core_id(level, &ladder.tube))?;
                for _ in 0..count {
                    waypoints[level].push(mouth);
                    waypoints[level].push(core);
                }
                waypoints[level].push(mouth);
            }
        }
        Strategy::Explicit { .. } => unreachable!(),
    }
    Ok(Ray { strategy: strategy.clone(), checkpoints, waypoints })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Trend {
    Bounded { c_est: f64 },
    Logarithmic { a: f64, b: f64 },
    Linear { a: f64, b: f64 },
}

impl Trend {
    pub fn name(&self) -> &'static str {
        match self {
            Trend::Bounded { .. } => "Bounded",
            Trend::Logarithmic { .. } => "Logarithmic",
            Trend::Linear { .. } => "Linear",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub level: usize,
    pub t: f64,
    pub delta: f64,
    /// Minimum injectivity radius on the segment ending at this checkpoint.
    pub inj: f64,
    /// Maximum rung depth on that segment.
    pub depth: u32,
    pub segment_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeficitProfile {
    pub samples: Vec<Sample>,
    pub trend: Trend,
}

impl DeficitProfile {
    pub fn max_delta(&self) -> f64 {
        self.samples.iter().map(|s| s.delta).fold(0.0, f64::max)
    }

    /// Whether `δ ≥ 0` and `δ` is non-decreasing.
    pub fn satisfies_laws(&self) -> bool {
        self.samples.iter().all(|s| s.delta >= 0.0)
            && self.samples.windows(2).all(|w| w[1].delta >= w[0].delta)
    }

    pub fn to_csv(&self) -> String {
        use crate::graph::sig9;
        let mut out = String::from("level,t,delta,inj,depth\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{},{}\n", s.level, sig9(s.t), sig9(s.delta), sig9(s.inj), s.depth));
        }
        out
    }
}

/// Nodes of the traced curve: shortest paths between consecutive waypoints.
pub fn traced_curve(g: &MetricGraph, ray: &Ray) -> Result<Vec<Vec<NodeIdx>>> {
    Ok(trace_segments(g, ray)?.into_iter().map(|(_, p)| p).collect())
}

/// Per checkpoint `k ≥ 1`, the length and nodes of the curve from
/// checkpoint `k - 1` to `k`. Entry 0 is the first checkpoint alone.
fn trace_segments(g: &MetricGraph, ray: &Ray) -> Result<Vec<(f64, Vec<NodeIdx>)>> {
    let mut memo: HashMap<(NodeIdx, NodeIdx), (f64, Vec<NodeIdx>)> = HashMap::new();
    let mut out = vec![(0.0, vec![ray.checkpoints[0]])];
    for k in 1..ray.checkpoints.len() {
        let stops = std::iter::once(ray.checkpoints[k - 1])
            .chain(ray.waypoints[k - 1].iter().copied())
            .chain(std::iter::once(ray.checkpoints[k]));
        let stops: Vec<NodeIdx> = stops.collect();
        let mut length = 0.0;
        let mut nodes = vec![stops[0]];
        for w in stops.windows(2) {
            let (d, path) = match memo.get(&(w[0], w[1])) {
                Some(hit) => hit,
                None => {
                    let found = g.shortest_path(w[0], w[1])?;
                    memo.entry((w[0], w[1])).or_insert(found)
                }
            };
            length += d;
            nodes.extend_from_slice(&path[1..]);
        }
        out.push((length, nodes));
    }
    Ok(out)
}

pub fn deficit_profile(g: &MetricGraph, ray: &Ray) -> Result<DeficitProfile> {
    let origin = ray.checkpoints[0];
    let from_origin = g.distances_from(origin);
    let segments = trace_segments(g, ray)?;
    let mut samples = Vec::with_capacity(segments.len());
    let mut t = 0.0;
    let mut prev_delta = 0.0f64;
    for (k, (length, nodes)) in segments.iter().enumerate() {
        t += length;
        let c = ray.checkpoints[k];
        let d = from_origin.dist[c as usize];
        if !d.is_finite() {
            return Err(Error::Unreachable(g.node(origin).id.clone(), g.node(c).id.clone()));
        }
        let mut delta = t - d;
        // Cancellation between two sums of the same weights.
        if delta < 0.0 && delta > -ROUNDING * t.max(1.0) {
            delta = 0.0;
        }
        if delta < prev_delta && prev_delta - delta <= ROUNDING * t.max(1.0) {
            delta = prev_delta;
        }
        prev_delta = delta;
        let inj = nodes.iter().map(|&v| g.injectivity_radius(v)).fold(f64::INFINITY, f64::min);
        let depth = nodes.iter().map(|&v| g.node(v).depth).max().unwrap_or(0);
        samples.push(Sample { level: g.node(c).level(), t, delta, inj, depth, segment_length: *length });
    }
    let trend = fit_trend(&samples);
    Ok(DeficitProfile { samples, trend })
}

/// Least-squares fit `y ≈ a + b x`; returns `(a, b, residual sum of squares)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    (a, b, rss)
}

/// Model selection on the second half of the samples: the best of
/// constant, `a + b ln(1 + t)` and `a + b t` wins if its residual norm is at
/// most half the runner-up's, otherwise the slower-growing of the two. A
/// growing fit whose rise over the sampled range is below 1 counts as
/// bounded.
pub fn fit_trend(samples: &[Sample]) -> Trend {
    let c_est = samples.iter().map(|s| s.delta).fold(0.0, f64::max);
    let bounded = Trend::Bounded { c_est };
    let tail = &samples[samples.len() / 2..];
    if tail.len() < 3 {
        return bounded;
    }
    let ts: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.delta).collect();
    let logs: Vec<f64> = ts.iter().map(|t| (1.0 + t).ln()).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let rss_const: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let (la, lb, rss_log) = fit_line(&logs, &ys);
    let (na, nb, rss_lin) = fit_line(&ts, &ys);

    // Ordered slowest-growing first; the stable sort keeps that order on ties.
    let mut fits = [
        (rss_const.sqrt(), 0usize),
        (rss_log.sqrt(), 1),
        (rss_lin.sqrt(), 2),
    ];
    fits.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (best, runner) = (fits[0], fits[1]);
    let pick = if best.0 <= 0.5 * runner.0 { best.1 } else { best.1.min(runner.1) };

    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    match pick {
        1 if lb > 0.0 && lb * ((1.0 + t1).ln() - (1.0 + t0).ln()) >= 1.0 => Trend::Logarithmic { a: la, b: lb },
        2 if nb > 0.0 && nb * (t1 - t0) >= 1.0 => Trend::Linear { a: na, b: nb },
        _ => bounded,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum AmVerdict {
    AlmostMinimizing { c: f64 },
    NotAm { trend: Trend },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum ThicknessVerdict {
    Thick { inf_inj: f64 },
    Thin { min_inj: f64, depth_slope: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Horosphere {
    Dense,
    Recurrent,
    ProperlyEmbedded,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayClassification {
    pub exiting: bool,
    pub am_verdict: AmVerdict,
    pub thickness_verdict: ThicknessVerdict,
    /// `None` for non-exiting rays.
    pub horosphere: Option<Horosphere>,
    pub profile: DeficitProfile,
}

impl RayClassification {
    pub fn is_am(&self) -> bool {
        matches!(self.am_verdict, AmVerdict::AlmostMinimizing { .. })
    }

    pub fn is_thin(&self) -> bool {
        matches!(self.thickness_verdict, ThicknessVerdict::Thin { .. })
    }

    /// `"AM, Thin, Recurrent"` and the like.
    pub fn verdict_line(&self) -> String {
        let am = match self.am_verdict {
            AmVerdict::AlmostMinimizing { .. } => "AM".to_owned(),
            AmVerdict::NotAm { trend } => format!("NotAM({})", trend.name()),
        };
        let thick = if self.is_thin() { "Thin" } else { "Thick" };
        let horo = match self.horosphere {
            Some(h) => format!("{:?}", h),
            None => "non-exiting".to_owned(),
        };
        format!("{}, {}, {}", am, thick, horo)
    }
}

/// Running maximum level rises within every quarter of the sequence.
pub fn is_exiting(levels: &[usize]) -> bool {
    if levels.len() < 4 {
        return false;
    }
    let q = levels.len() / 4;
    let mut prev = levels[0];
    let mut running = levels[0];
    for chunk in 0..4 {
        let end = if chunk == 3 { levels.len() } else { (chunk + 1) * q };
        let start = (chunk * q).max(1);
        for &l in &levels[start..end] {
            running = running.max(l);
        }
        if running <= prev {
            return false;
        }
        prev = running;
    }
    true
}

pub fn horosphere(am: bool, thin: bool) -> Horosphere {
    match (am, thin) {
        (false, _) => Horosphere::Dense,
        (true, true) => Horosphere::Recurrent,
        (true, false) => Horosphere::ProperlyEmbedded,
    }
}

fn thickness_verdict(samples: &[Sample], eps: f64) -> ThicknessVerdict {
    let seg = &samples[1..];
    let half = seg.len() / 2;
    let (head, tail) = seg.split_at(half);
    let min_inj = tail.iter().map(|s| s.inj).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = (0..seg.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = seg.iter().map(|s| s.depth as f64).collect();
    let (_, slope, _) = fit_line(&xs, &ys);
    let head_max = head.iter().map(|s| s.depth).max().unwrap_or(0);
    let tail_max = tail.iter().map(|s| s.depth).max().unwrap_or(0);
    let deepening = slope > 0.0 && tail_max >= head_max + 1;
    if min_inj < eps || deepening {
        ThicknessVerdict::Thin { min_inj, depth_slope: slope }
    } else {
        ThicknessVerdict::Thick { inf_inj: min_inj }
    }
}

pub fn classify(g: &MetricGraph, ray: &Ray, c: f64, eps: f64) -> Result<RayClassification> {
    if ray.checkpoints.len() < MIN_HORIZON {
        return Err(Error::HorizonTooShort { needed: MIN_HORIZON, got: ray.checkpoints.len() });
    }
    let profile = deficit_profile(g, ray)?;
    let exiting = is_exiting(&ray.levels(g));
    let am_verdict = match profile.trend {
        Trend::Bounded { c_est } if c_est <= c => AmVerdict::AlmostMinimizing { c: c_est },
        trend => AmVerdict::NotAm { trend },
    };
    let thickness_verdict = thickness_verdict(&profile.samples, eps);
    let am = matches!(am_verdict, AmVerdict::AlmostMinimizing { .. });
    let thin = matches!(thickness_verdict, ThicknessVerdict::Thin { .. });
    Ok(RayClassification {
        exiting,
        am_verdict,
        thickness_verdict,
        horosphere: exiting.then(|| horosphere(am, thin)),
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(deltas: &[f64], ts: &[f64]) -> Vec<Sample> {
        deltas
            .iter()
            .zip(ts)
            .enumerate()
            .map(|(k, (&delta, &t))| Sample { level: k, t, delta, inj: 0.1, depth: 0, segment_length: 1.0 })
            .collect()
    }

    #[test]
    fn zero_deficit_is_bounded() {
        let ts: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let s = samples(&vec![0.0; 30], &ts);
        assert_eq!(fit_trend(&s), Trend::Bounded { c_est: 0.0 });
    }

    #[test]
    fn linear_deficit_is_linear() {
        let ts: Vec<f64> = (0..30).map(|k| (k * k) as f64).collect();
        let ds: Vec<f64> = ts.iter().map(|t| 0.9 * t).collect();
        assert!(matches!(fit_trend(&samples(&ds, &ts)), Trend::Linear { .. }));
    }

    #[test]
    fn logarithmic_deficit_is_logarithmic() {
        let ts: Vec<f64> = (0..40).map(|k| 2f64.powi(k)).collect();
        let ds: Vec<f64> = ts.iter().map(|t| 3.0 * (1.0 + t).ln()).collect();
        assert!(matches!(fit_trend(&samples(&ds, &ts)), Trend::Logarithmic { .. }));
    }

    #[test]
    fn small_wobble_is_bounded() {
        let ts: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let ds: Vec<f64> = (0..30).map(|k| 1.0 + 0.01 * (k % 3) as f64).collect();
        assert!(matches!(fit_trend(&samples(&ds, &ts)), Trend::Bounded { .. }));
    }

    #[test]
    fn exiting_rule() {
        let up: Vec<usize> = (0..20).collect();
        assert!(is_exiting(&up));
        let bounded: Vec<usize> = (0..20).map(|k| k % 3).collect();
        assert!(!is_exiting(&bounded));
        let stalls: Vec<usize> = (0..20).map(|k| k.min(8)).collect();
        assert!(!is_exiting(&stalls));
    }

    #[test]
    fn horosphere_table_is_total_and_exclusive() {
        assert_eq!(horosphere(false, false), Horosphere::Dense);
        assert_eq!(horosphere(false, true), Horosphere::Dense);
        assert_eq!(horosphere(true, true), Horosphere::Recurrent);
        assert_eq!(horosphere(true, false), Horosphere::ProperlyEmbedded);
    }
}
