//! End-to-end report: thickness table, per-strategy verdicts and
//! consistency checks for one model.

use std::fmt::Write as _;

use serde::Serialize;

use crate::builders::winding_loops;
use crate::error::Result;
use crate::graph::{sig9, MetricGraph};
use crate::hierarchy::{tally_mismatches, validate_hierarchy, validate_resolution};
use crate::model::{validate, ModelEnd};
use crate::ray::{classify, trace_ray, horosphere, RayClassification, Strategy};

#[derive(Clone, Debug, Serialize)]
pub struct RayReport {
    pub strategy: String,
    pub outcome: std::result::Result<RayClassification, String>,
}

impl RayReport {
    pub fn verdict_line(&self) -> String {
        match &self.outcome {
            Ok(c) => format!("{}: {}", self.strategy, c.verdict_line()),
            Err(e) => format!("{}: error: {}", self.strategy, e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub thickness: Vec<f64>,
    pub rays: Vec<RayReport>,
    pub checks: Vec<Check>,
}

/// Strategies that apply to `model`: Vertical along the first component of
/// level 0 when it persists, Minimizing, and Winding when a block has a tube.
pub fn default_strategies(model: &ModelEnd, horizon: usize) -> Vec<Strategy> {
    let mut out = Vec::new();
    if let Some(first) = model.surface(0).map(|s| s.components[0].id.clone()) {
        let persists = (0..horizon.min(model.level_count()))
            .all(|l| model.surface(l).is_some_and(|s| s.has_component(&first)));
        if persists {
            out.push(Strategy::Vertical { component: first });
        }
    }
    out.push(Strategy::Minimizing);
    let loops = winding_loops(model);
    if loops.iter().any(|&n| n > 0) {
        out.push(Strategy::Winding { loops });
    }
    out
}

/// Classifies each strategy on its own thread.
pub fn run_rays(g: &MetricGraph, strategies: &[Strategy], horizon: usize, c: f64, eps: f64) -> Vec<RayReport> {
    let horizon = horizon.min(g.level_count());
    std::thread::scope(|scope| {
        let handles: Vec<_> = strategies
            .iter()
            .map(|s| {
                scope.spawn(move || {
                    let outcome = trace_ray(g, s, horizon)
                        .and_then(|ray| classify(g, &ray, c, eps))
                        .map_err(|e| e.to_string());
                    RayReport { strategy: s.name().to_owned(), outcome }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ray worker panicked")).collect()
    })
}

pub fn build_report(model: &ModelEnd, g: &MetricGraph, horizon: usize, c: f64, eps: f64) -> Result<Report> {
    let thickness = (0..g.block_count()).map(|i| g.block_thickness(i)).collect::<Result<Vec<_>>>()?;
    let rays = run_rays(g, &default_strategies(model, horizon), horizon, c, eps);
    let classified: Vec<&RayClassification> = rays.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();

    let mut checks = vec![
        Check { name: "model validates".into(), pass: validate(model).is_valid() },
        Check { name: "block thickness ≥ 1".into(), pass: thickness.iter().all(|&t| t >= 1.0) },
        Check {
            name: "deficit δ ≥ 0 and non-decreasing".into(),
            pass: classified.iter().all(|c| c.profile.satisfies_laws()),
        },
        Check {
            name: "horosphere verdict follows (AM, Thin) table".into(),
            pass: classified
                .iter()
                .all(|c| c.horosphere.map_or(true, |h| h == horosphere(c.is_am(), c.is_thin()))),
        },
    ];
    if let Some(h) = &model.hierarchy {
        checks.push(Check { name: "hierarchy path valid".into(), pass: validate_hierarchy(h).is_empty() });
        checks.push(Check { name: "hierarchy resolution valid".into(), pass: validate_resolution(h, &h.resolve()).is_empty() });
        checks.push(Check {
            name: "Minsky block tally matches tube counts".into(),
            pass: tally_mismatches(model, h).is_empty(),
        });
    }
    Ok(Report { thickness, rays, checks })
}

impl Report {
    pub fn thickness_csv(&self) -> String {
        let mut out = String::from("block,thickness\n");
        for (i, t) in self.thickness.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i, sig9(*t));
        }
        out
    }

    /// Plain-text rendering; `config` is embedded verbatim.
    pub fn render(&self, config: &str) -> String {
        let mut out = String::new();
        out.push_str("# config\n");
        out.push_str(config.trim_end());
        out.push_str("\n\n# thickness\n");
        out.push_str(&self.thickness_csv());
        out.push_str("\n# verdicts\n");
        for r in &self.rays {
            let _ = writeln!(out, "{}", r.verdict_line());
        }
        out.push_str("\n# checks\n");
        for c in &self.checks {
            let _ = writeln!(out, "{}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
        }
        out
    }
}
