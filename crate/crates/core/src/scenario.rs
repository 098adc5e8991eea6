//! Bundled problems and user-defined ones.
//!
//! A scenario couples a SEM (the simulated system), an estimand registry (how
//! to estimate each interventional effect from observational data), the POMIS
//! list when one is known, and default experiment sizes.

use std::fmt::Write as _;

use thiserror::Error;

use crate::estimation::{parse_estimands, EstimandRegistry, EstimationError};
use crate::graph::{node_set, NodeSet, PomisRegistry, Role};
use crate::scm::{parse_sem, Sem, SemError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("SEM: {0}")]
    Sem(#[from] SemError),
    #[error("estimands: {0}")]
    Estimands(#[from] EstimationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Min => a < b,
            Direction::Max => a > b,
        }
    }

    /// The value every finite outcome improves on.
    pub fn worst(self) -> f64 {
        match self {
            Direction::Min => f64::INFINITY,
            Direction::Max => f64::NEG_INFINITY,
        }
    }
}

/// Experiment sizes used when a config does not override them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defaults {
    pub n: usize,
    pub n_max: usize,
    pub p: usize,
    pub t: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub sem: Sem,
    pub estimands: EstimandRegistry,
    pub pomis: PomisRegistry,
    pub defaults: Defaults,
}

const SOURCES: &[(&str, &str, &str)] = &[
    (
        "toy",
        include_str!("../scenarios/toy.sem"),
        include_str!("../scenarios/toy.estimands"),
    ),
    (
        "synthetic",
        include_str!("../scenarios/synthetic.sem"),
        include_str!("../scenarios/synthetic.estimands"),
    ),
    (
        "healthcare",
        include_str!("../scenarios/healthcare.sem"),
        include_str!("../scenarios/healthcare.estimands"),
    ),
    (
        "yield",
        include_str!("../scenarios/yield.sem"),
        include_str!("../scenarios/yield.estimands"),
    ),
];

/// Names of the bundled scenarios.
pub fn names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _, _)| *n).collect()
}

/// Source text `(sem, estimands)` of a bundled scenario.
pub fn sources(name: &str) -> Option<(&'static str, &'static str)> {
    SOURCES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, s, e)| (*s, *e))
}

fn pomis_list(name: &str) -> Option<Vec<NodeSet>> {
    let sets = match name {
        "toy" => vec![node_set(["Z"])],
        "synthetic" => vec![
            NodeSet::new(),
            node_set(["B"]),
            node_set(["D"]),
            node_set(["E"]),
            node_set(["B", "D"]),
            node_set(["D", "E"]),
        ],
        "healthcare" => vec![node_set(["aspirin", "statin"])],
        _ => return None,
    };
    Some(sets)
}

fn defaults(name: &str) -> Defaults {
    let (n, n_max, p) = match name {
        "toy" => (100, 200, 3),
        "synthetic" => (100, 200, 10),
        _ => (500, 1000, 3),
    };
    Defaults {
        n,
        n_max,
        p,
        t: 30,
        direction: Direction::Min,
    }
}

/// Loads a bundled scenario.
pub fn load(name: &str) -> Result<Scenario, ScenarioError> {
    let (sem, est) = sources(name).ok_or_else(|| ScenarioError::Unknown(name.to_string()))?;
    let mut sc = Scenario::from_sources(name, sem, Some(est))?;
    if let Some(sets) = pomis_list(name) {
        sc.pomis.register(sc.sem.graph(), sets);
    }
    sc.defaults = defaults(name);
    Ok(sc)
}

impl Scenario {
    /// Builds a scenario from SEM text and an optional estimand registry.
    /// Sets without an estimand fall back to a zero-mean prior in the loop.
    pub fn from_sources(
        name: &str,
        sem_text: &str,
        estimands_text: Option<&str>,
    ) -> Result<Scenario, ScenarioError> {
        let sem = parse_sem(sem_text)?;
        let estimands = match estimands_text {
            Some(t) => parse_estimands(t)?,
            None => EstimandRegistry::new(),
        };
        estimands.validate(sem.graph())?;
        Ok(Scenario {
            name: name.to_string(),
            sem,
            estimands,
            pomis: PomisRegistry::new(),
            defaults: Defaults {
                n: 500,
                n_max: 1000,
                p: 3,
                t: 30,
                direction: Direction::Min,
            },
        })
    }
}

/// A linear-Gaussian SEM described by weights: every node is its intercept
/// plus a weighted sum of its parents plus Gaussian noise; each confounder
/// pair shares a standard normal latent with the given loading on both ends.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearSemSpec {
    pub nodes: Vec<(String, Role)>,
    pub edges: Vec<(String, String, f64)>,
    pub intercepts: Vec<(String, f64)>,
    pub noise_std: Vec<(String, f64)>,
    pub confounders: Vec<(String, String, f64)>,
    pub domains: Vec<(String, f64, f64)>,
}

impl LinearSemSpec {
    /// Renders the model in the SEM file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let lookup = |list: &[(String, f64)], n: &str, default: f64| {
            list.iter()
                .find(|(k, _)| k == n)
                .map_or(default, |(_, v)| *v)
        };
        for (n, role) in &self.nodes {
            let _ = writeln!(out, "node {n} {role}");
        }
        for (a, b, _) in &self.edges {
            let _ = writeln!(out, "edge {a} -> {b}");
        }
        for (k, (a, b, _)) in self.confounders.iter().enumerate() {
            let _ = writeln!(out, "confounder {a} <-> {b}");
            let _ = writeln!(out, "latent L{k} ~ normal(0, 1)");
        }
        for (n, _) in &self.nodes {
            let mut terms = vec![format!("{:?}", lookup(&self.intercepts, n, 0.0))];
            for (a, b, w) in &self.edges {
                if b == n {
                    terms.push(format!("{w:?} * {a}"));
                }
            }
            for (k, (a, b, w)) in self.confounders.iter().enumerate() {
                if a == n || b == n {
                    terms.push(format!("{w:?} * L{k}"));
                }
            }
            let sd = lookup(&self.noise_std, n, 1.0);
            let _ = writeln!(
                out,
                "let {n} = {} + noise normal(0, {sd:?})",
                terms.join(" + ")
            );
        }
        for (n, lo, hi) in &self.domains {
            let _ = writeln!(out, "domain {n} = [{lo:?}, {hi:?}]");
        }
        out
    }

    pub fn build(&self) -> Result<Sem, SemError> {
        parse_sem(&self.to_text())
    }
}
