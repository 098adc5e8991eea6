//! Trace, summary and aggregate files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cbo_core::cbo::{RunResult, SetState};
use cbo_core::graph::format_set;
use serde::Serialize;

pub const AGGREGATE_COLUMNS: &str = "cost,mean,se,n";

/// Best-so-far statistics across runs at one cumulative cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostStat {
    pub cost: f64,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// One run reduced to what aggregation needs: the best value before any
/// step and the `(cum_cost, best)` column pairs of its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub initial: Option<f64>,
    pub points: Vec<(f64, Option<f64>)>,
}

impl Curve {
    pub fn of(res: &RunResult) -> Curve {
        Curve {
            initial: res.initial_best.as_ref().map(|r| r.y),
            points: res.trace.rows.iter().map(|r| (r.cum_cost, r.best)).collect(),
        }
    }

    /// Same rule as `Trace::best_within`.
    pub fn best_within(&self, budget: f64) -> Option<f64> {
        let mut best = self.initial;
        for &(cost, b) in &self.points {
            if cost <= budget {
                best = b.or(best);
            }
        }
        best
    }
}

/// Mean and standard error of best-so-far at cost 0 and at every cumulative
/// cost reached by some run. Runs with no value yet at a level are left out
/// of that level.
pub fn aggregate(curves: &[Curve]) -> Vec<CostStat> {
    let mut levels: Vec<f64> = std::iter::once(0.0)
        .chain(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)))
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
        .into_iter()
        .filter_map(|cost| {
            let vals: Vec<f64> = curves.iter().filter_map(|c| c.best_within(cost)).collect();
            if vals.is_empty() {
                return None;
            }
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let se = if n > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            Some(CostStat { cost, mean, se, n })
        })
        .collect()
}

pub fn aggregate_csv(stats: &[CostStat], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{AGGREGATE_COLUMNS}");
    for s in stats {
        let _ = writeln!(out, "{},{},{},{}", s.cost, s.mean, s.se, s.n);
    }
    out
}

/// Reads the `(cum_cost, best)` columns and the `# initial_best=` comment
/// back from trace CSV text.
pub fn parse_trace_curve(text: &str) -> Result<Curve, String> {
    let mut initial = None;
    let mut points = Vec::new();
    let mut header = false;
    for line in text.lines() {
        if let Some(c) = line.strip_prefix("# ") {
            if let Some(v) = c.strip_prefix("initial_best=") {
                initial = Some(v.parse::<f64>().map_err(|e| format!("initial_best: {e}"))?);
            }
            continue;
        }
        if !header {
            header = true;
            continue;
        }
        // The set column may be quoted and contain commas; the tail is fixed.
        let fields: Vec<&str> = line.rsplitn(5, ',').collect();
        if fields.len() < 5 {
            return Err(format!("short trace row {line:?}"));
        }
        let (best, cum) = (fields[1], fields[3]);
        let cum = cum.parse::<f64>().map_err(|e| format!("cum_cost {cum:?}: {e}"))?;
        let best = if best.is_empty() {
            None
        } else {
            Some(best.parse::<f64>().map_err(|e| format!("best {best:?}: {e}"))?)
        };
        points.push((cum, best));
    }
    Ok(Curve { initial, points })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTuple {
    pub set: String,
    pub values: BTreeMap<String, f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub set: String,
    pub prior: &'static str,
    pub lengthscale: f64,
    pub variance: f64,
    pub noise: f64,
    pub jitter: f64,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl ModelSummary {
    fn of(st: &SetState) -> ModelSummary {
        let base = st.gp.kernel().base();
        ModelSummary {
            set: format_set(&st.set),
            prior: if st.surface.is_some() { "causal" } else { "standard" },
            lengthscale: base.lengthscale,
            variance: base.variance,
            noise: st.gp.noise(),
            jitter: st.gp.jitter(),
            xs: st.gp.inputs(),
            ys: st.gp.targets(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub result: Option<ResultTuple>,
    pub initial_best: Option<f64>,
    pub cumulative_cost: f64,
    pub steps: usize,
    pub observational_rows: usize,
    pub models: Vec<ModelSummary>,
}

impl RunSummary {
    pub fn of(seed: u64, res: &RunResult) -> RunSummary {
        RunSummary {
            seed,
            result: res.best.as_ref().map(|b| ResultTuple {
                set: format_set(&b.set),
                values: b.set.iter().map(|n| n.to_string()).zip(b.values.iter().copied()).collect(),
                value: b.y,
            }),
            initial_best: res.initial_best.as_ref().map(|r| r.y),
            cumulative_cost: res.cum_cost,
            steps: res.trace.rows.len(),
            observational_rows: res.observational_rows,
            models: res.sets.iter().map(ModelSummary::of).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub config_hash: String,
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub config: BTreeMap<String, String>,
    pub runs: Vec<RunSummary>,
    pub failed: Vec<SeedFailure>,
    pub best_by_cost: Vec<CostStat>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Text of `(set, (values), value)`.
pub fn format_result(r: &ResultTuple) -> String {
    let vals: Vec<String> = r.values.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
    format!("({}, ({}), {:.4})", r.set, vals.join(", "), r.value)
}

pub const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plots mean best-so-far against cumulative cost from aggregate.csv."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "aggregate.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
cost = [float(r["cost"]) for r in rows]
mean = [float(r["mean"]) for r in rows]
se = [float(r["se"]) for r in rows]
plt.step(cost, mean, where="post")
plt.fill_between(cost, [m - s for m, s in zip(mean, se)], [m + s for m, s in zip(mean, se)], step="post", alpha=0.3)
plt.xlabel("cumulative cost")
plt.ylabel("best so far")
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"##;

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(initial: Option<f64>, pts: &[(f64, Option<f64>)]) -> Curve {
        Curve {
            initial,
            points: pts.to_vec(),
        }
    }

    #[test]
    fn single_curve_aggregate_is_the_curve() {
        let c = curve(Some(1.0), &[(0.0, Some(1.0)), (1.0, Some(0.5)), (3.0, Some(0.2))]);
        let stats = aggregate(&[c]);
        let got: Vec<(f64, f64, f64, usize)> = stats.iter().map(|s| (s.cost, s.mean, s.se, s.n)).collect();
        assert_eq!(got, [(0.0, 1.0, 0.0, 1), (1.0, 0.5, 0.0, 1), (3.0, 0.2, 0.0, 1)]);
    }

    #[test]
    fn two_curves() {
        let a = curve(Some(2.0), &[(1.0, Some(1.0))]);
        let b = curve(Some(4.0), &[(2.0, Some(0.0))]);
        let stats = aggregate(&[a, b]);
        assert_eq!(stats.len(), 3);
        assert_eq!((stats[0].mean, stats[0].se), (3.0, 1.0));
        assert_eq!((stats[1].mean, stats[1].se), (2.5, 1.5));
        assert_eq!((stats[2].mean, stats[2].se), (0.5, 0.5));
    }

    #[test]
    fn runs_without_values_are_skipped() {
        let a = curve(None, &[(1.0, None), (2.0, Some(3.0))]);
        let stats = aggregate(&[a]);
        assert_eq!(stats.len(), 1);
        assert_eq!((stats[0].cost, stats[0].n), (2.0, 1));
    }

    #[test]
    fn trace_round_trip() {
        let text = "# initial_best=-1.5\nt,action,epsilon,set,values,step_cost,cum_cost,y_hat,best,wall_ms\n\
                    1,observe,0.5,,,0,0,,-1.5,0\n\
                    2,intervene,0.1,\"{B,D}\",1;2,2,2,-1.7,-1.75,0\n";
        let c = parse_trace_curve(text).unwrap();
        assert_eq!(c.initial, Some(-1.5));
        assert_eq!(c.points, [(0.0, Some(-1.5)), (2.0, Some(-1.75))]);
    }
}
