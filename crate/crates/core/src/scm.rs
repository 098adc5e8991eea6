//! Structural equation models: parsing, ancestral sampling under
//! interventions and the Monte Carlo ground-truth oracle.
//!
//! SEM files mix graph declarations with equations:
//!
//! ```text
//! node X treatment
//! node Z treatment
//! node Y target
//! edge X -> Z
//! edge Z -> Y
//! let X = noise normal(0, 1)
//! let Z = exp(-X) + noise normal(0, 1)
//! let Y = cos(Z) - exp(-Z / 20) + noise normal(0, 1)
//! latent U ~ normal(0, 1)
//! domain X = [-5, 5]
//! ```

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::expr::{parse_expr, Compiled, Expr, ExprError, Slot};
use crate::graph::{
    apply_graph_line, is_graph_line, strip_comment, CausalGraph, GraphError, NodeId, NodeMap,
    NodeSet, Role,
};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown function {name}")]
    UnknownFunction { line: usize, name: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("equation for {node} references {reference}, which is not a parent")]
    DependencyViolation { node: NodeId, reference: String },
    #[error("no equation for node {0}")]
    MissingEquation(NodeId),
    #[error("node {0} has two equations")]
    DuplicateEquation(NodeId),
    #[error("confounder {0} <-> {1} is not realized by a shared latent")]
    UnrealizedConfounder(NodeId, NodeId),
    #[error("latent {latent} is shared by {a} and {b} without a confounder edge")]
    UndeclaredConfounder { latent: String, a: NodeId, b: NodeId },
    #[error("latent {0} declared twice")]
    DuplicateLatent(String),
    #[error("invalid domain for {node}: [{lo}, {hi}]")]
    InvalidDomain { node: NodeId, lo: f64, hi: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("non-finite value produced at node {0}")]
    NumericOverflow(NodeId),
    #[error("sample size must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("value {value} for {node} is outside its domain [{lo}, {hi}]")]
    DomainViolation {
        node: NodeId,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cannot intervene on non-treatment node {0}")]
    NotTreatment(NodeId),
    #[error("datasets have different columns")]
    ColumnMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Normal { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
    None,
}

impl NoiseSpec {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseSpec::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            NoiseSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            NoiseSpec::None => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub expr: Expr,
    pub noise: NoiseSpec,
    compiled: Compiled,
}

/// A do-assignment, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Intervention {
    pub assignments: BTreeMap<NodeId, f64>,
}

impl Intervention {
    pub fn none() -> Self {
        Self::default()
    }

    /// Pairs the nodes of `set` (in set order) with `values`.
    pub fn from_set(set: &NodeSet, values: &[f64]) -> Self {
        assert_eq!(set.len(), values.len(), "one value per intervened node");
        Intervention {
            assignments: set.iter().cloned().zip(values.iter().copied()).collect(),
        }
    }

    pub fn set(&self) -> NodeSet {
        self.assignments.keys().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Observational,
    Interventional(Intervention),
}

/// Column-per-node table. Columns are ordered by node name.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<NodeId>,
    columns: Vec<Vec<f64>>,
    pub provenance: Provenance,
    /// Seeds of every sampling call that contributed rows, in order.
    pub seeds: Vec<u64>,
}

impl Dataset {
    pub fn new(names: Vec<NodeId>, columns: Vec<Vec<f64>>, provenance: Provenance) -> Self {
        assert_eq!(names.len(), columns.len());
        if let Some(first) = columns.first() {
            assert!(columns.iter().all(|c| c.len() == first.len()), "ragged columns");
        }
        Dataset {
            names,
            columns,
            provenance,
            seeds: Vec::new(),
        }
    }

    pub fn names(&self) -> &[NodeId] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n.as_str() == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn append(&mut self, other: &Dataset) -> Result<(), SemError> {
        if self.names != other.names {
            return Err(SemError::ColumnMismatch);
        }
        for (c, o) in self.columns.iter_mut().zip(&other.columns) {
            c.extend_from_slice(o);
        }
        self.seeds.extend_from_slice(&other.seeds);
        Ok(())
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct Sem {
    graph: CausalGraph,
    /// Indexed like `graph.nodes()`.
    equations: Vec<Equation>,
    /// Sorted by name; this is also the draw order.
    latents: Vec<(String, NoiseSpec)>,
    domains: NodeMap<(f64, f64)>,
    order: Vec<usize>,
    /// Graph node indices in name order; the dataset column order.
    by_name: Vec<usize>,
    target: usize,
}

impl Sem {
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn target(&self) -> &NodeId {
        &self.graph.nodes()[self.target]
    }

    pub fn equation(&self, node: &str) -> Option<&Equation> {
        self.graph.node_index(node).map(|i| &self.equations[i])
    }

    pub fn latents(&self) -> &[(String, NoiseSpec)] {
        &self.latents
    }

    pub fn domains(&self) -> &NodeMap<(f64, f64)> {
        &self.domains
    }

    pub fn domain(&self, node: &str) -> Option<(f64, f64)> {
        self.domains.get(node).copied()
    }

    pub fn set_domain(&mut self, node: &str, lo: f64, hi: f64) -> Result<(), SemError> {
        let id = NodeId::new(node)?;
        if !self.graph.contains(node) {
            return Err(SemError::UnknownNode(node.to_string()));
        }
        if !(lo < hi) {
            return Err(SemError::InvalidDomain { node: id, lo, hi });
        }
        self.domains.insert(id, (lo, hi));
        Ok(())
    }

    /// Copy with every noise term and latent fixed at zero.
    pub fn with_zero_noise(&self) -> Sem {
        let mut out = self.clone();
        for eq in &mut out.equations {
            eq.noise = NoiseSpec::None;
        }
        for (_, spec) in &mut out.latents {
            *spec = NoiseSpec::None;
        }
        out
    }

    fn column_names(&self) -> Vec<NodeId> {
        self.by_name
            .iter()
            .map(|&i| self.graph.nodes()[i].clone())
            .collect()
    }

    /// Checks an intervention and resolves it to `(node index, value)` pairs.
    pub fn check_intervention(&self, iv: &Intervention) -> Result<Vec<(usize, f64)>, SemError> {
        let mut out = Vec::with_capacity(iv.assignments.len());
        for (node, &value) in &iv.assignments {
            let i = self
                .graph
                .node_index(node.as_str())
                .ok_or_else(|| SemError::UnknownNode(node.to_string()))?;
            if self.graph.role(node.as_str()) != Some(Role::Treatment) {
                return Err(SemError::NotTreatment(node.clone()));
            }
            if let Some((lo, hi)) = self.domain(node.as_str()) {
                if !(lo..=hi).contains(&value) {
                    return Err(SemError::DomainViolation {
                        node: node.clone(),
                        value,
                        lo,
                        hi,
                    });
                }
            }
            out.push((i, value));
        }
        Ok(out)
    }

    /// Draws `n` rows, calling `sink` with the node values of each (graph
    /// index order). Latents are drawn first in name order, then each node's
    /// noise in topological order; intervened nodes still consume their noise
    /// draw so that streams stay aligned across interventions.
    fn simulate(
        &self,
        fixed: &[(usize, f64)],
        n: usize,
        seed: u64,
        mut sink: impl FnMut(&[f64]),
    ) -> Result<(), SemError> {
        let mut rng = rng_from(seed);
        let mut forced = vec![None; self.equations.len()];
        for &(i, v) in fixed {
            forced[i] = Some(v);
        }
        let mut latents = vec![0.0; self.latents.len()];
        let mut values = vec![0.0; self.equations.len()];
        for _ in 0..n {
            for (slot, (_, spec)) in latents.iter_mut().zip(&self.latents) {
                *slot = spec.draw(&mut rng);
            }
            for &i in &self.order {
                let eq = &self.equations[i];
                let noise = eq.noise.draw(&mut rng);
                let v = match forced[i] {
                    Some(v) => v,
                    None => eq.compiled.eval(&values, &latents, noise),
                };
                if !v.is_finite() {
                    return Err(SemError::NumericOverflow(self.graph.nodes()[i].clone()));
                }
                values[i] = v;
            }
            sink(&values);
        }
        Ok(())
    }

    fn collect(
        &self,
        fixed: &[(usize, f64)],
        n: usize,
        seed: u64,
        provenance: Provenance,
    ) -> Result<Dataset, SemError> {
        if n == 0 {
            return Err(SemError::TooFewSamples { min: 1, got: 0 });
        }
        let mut columns = vec![Vec::with_capacity(n); self.by_name.len()];
        self.simulate(fixed, n, seed, |row| {
            for (col, &i) in columns.iter_mut().zip(&self.by_name) {
                col.push(row[i]);
            }
        })?;
        let mut data = Dataset::new(self.column_names(), columns, provenance);
        data.seeds.push(seed);
        Ok(data)
    }

    pub fn sample_observational(&self, n: usize, seed: u64) -> Result<Dataset, SemError> {
        self.collect(&[], n, seed, Provenance::Observational)
    }

    pub fn sample_interventional(
        &self,
        iv: &Intervention,
        n: usize,
        seed: u64,
    ) -> Result<Dataset, SemError> {
        let fixed = self.check_intervention(iv)?;
        self.collect(&fixed, n, seed, Provenance::Interventional(iv.clone()))
    }

    /// Monte Carlo mean of the target under `iv`, with standard error
    /// `sd / sqrt(n)`.
    pub fn oracle_mean(&self, iv: &Intervention, n: usize, seed: u64) -> Result<Estimate, SemError> {
        if n < 2 {
            return Err(SemError::TooFewSamples { min: 2, got: n });
        }
        let fixed = self.check_intervention(iv)?;
        let (mut count, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        let t = self.target;
        self.simulate(&fixed, n, seed, |row| {
            count += 1.0;
            let d = row[t] - mean;
            mean += d / count;
            m2 += d * (row[t] - mean);
        })?;
        let var = m2 / (count - 1.0);
        Ok(Estimate {
            mean,
            se: (var / count).sqrt(),
        })
    }
}

fn syntax(line: usize, message: impl Into<String>) -> SemError {
    SemError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_interval(text: &str, line: usize) -> Result<(f64, f64), SemError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| syntax(line, format!("expected [lo, hi], got {t:?}")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo = lo.parse::<f64>().map_err(|_| syntax(line, "bad lower bound"))?;
            let hi = hi.parse::<f64>().map_err(|_| syntax(line, "bad upper bound"))?;
            Ok((lo, hi))
        }
        _ => Err(syntax(line, "expected [lo, hi]")),
    }
}

fn map_expr_err(e: ExprError, line: usize) -> SemError {
    match e {
        ExprError::UnknownFunction(name) => SemError::UnknownFunction { line, name },
        other => syntax(line, other.to_string()),
    }
}

/// Parses and validates a SEM file.
pub fn parse_sem(text: &str) -> Result<Sem, SemError> {
    let mut graph = CausalGraph::new();
    let mut raw_eqs: Vec<(String, Expr, NoiseSpec)> = Vec::new();
    let mut latents: BTreeMap<String, NoiseSpec> = BTreeMap::new();
    let mut latent_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut raw_domains: Vec<(usize, String, f64, f64)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if is_graph_line(line) {
            apply_graph_line(&mut graph, line, line_no)?;
        } else if let Some(rest) = line.strip_prefix("let ") {
            let (name, body) = rest
                .split_once('=')
                .ok_or_else(|| syntax(line_no, "expected let <node> = <expression>"))?;
            let (expr, noise) = parse_expr(body).map_err(|e| map_expr_err(e, line_no))?;
            raw_eqs.push((name.trim().to_string(), expr, noise.unwrap_or(NoiseSpec::None)));
        } else if let Some(rest) = line.strip_prefix("latent ") {
            let (name, body) = rest
                .split_once('~')
                .ok_or_else(|| syntax(line_no, "expected latent <name> ~ <distribution>"))?;
            let name = name.trim().to_string();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(syntax(line_no, format!("bad latent name {name:?}")));
            }
            let (expr, noise) =
                parse_expr(&format!("noise {}", body.trim())).map_err(|e| map_expr_err(e, line_no))?;
            let spec = match (expr, noise) {
                (Expr::Noise, Some(spec)) => spec,
                _ => return Err(syntax(line_no, "latent needs normal(m, s) or uniform(a, b)")),
            };
            latent_lines.insert(name.clone(), line_no);
            if latents.insert(name.clone(), spec).is_some() {
                return Err(SemError::DuplicateLatent(name));
            }
        } else if let Some(rest) = line.strip_prefix("domain ") {
            let (name, body) = rest
                .split_once('=')
                .ok_or_else(|| syntax(line_no, "expected domain <node> = [lo, hi]"))?;
            let (lo, hi) = parse_interval(body, line_no)?;
            raw_domains.push((line_no, name.trim().to_string(), lo, hi));
        } else {
            return Err(syntax(line_no, format!("cannot parse {line:?}")));
        }
    }

    graph.validate()?;
    for name in latents.keys() {
        if graph.contains(name) {
            return Err(syntax(
                latent_lines[name],
                format!("latent {name} clashes with a node name"),
            ));
        }
    }
    let latent_names: Vec<String> = latents.keys().cloned().collect();
    let latent_index = |name: &str| latent_names.iter().position(|l| l == name);

    let mut equations: Vec<Option<Equation>> = vec![None; graph.nodes().len()];
    // latent -> nodes whose equation reads it
    let mut latent_users: BTreeMap<String, BTreeSet<NodeId>> = BTreeMap::new();
    for (name, expr, noise) in raw_eqs {
        let i = graph
            .node_index(&name)
            .ok_or_else(|| SemError::UnknownNode(name.clone()))?;
        let node = graph.nodes()[i].clone();
        let parents = graph.parents(&name)?;
        for var in expr.vars() {
            if latent_index(var).is_some() {
                latent_users
                    .entry(var.to_string())
                    .or_default()
                    .insert(node.clone());
            } else if graph.contains(var) {
                if !parents.contains(var) {
                    return Err(SemError::DependencyViolation {
                        node,
                        reference: var.to_string(),
                    });
                }
            } else {
                return Err(SemError::UnknownNode(var.to_string()));
            }
        }
        let compiled = expr
            .compile(&|v| {
                latent_index(v)
                    .map(Slot::Latent)
                    .or_else(|| graph.node_index(v).map(Slot::Node))
            })
            .map_err(SemError::UnknownNode)?;
        if equations[i].is_some() {
            return Err(SemError::DuplicateEquation(node));
        }
        equations[i] = Some(Equation {
            expr,
            noise,
            compiled,
        });
    }
    let equations: Vec<Equation> = equations
        .into_iter()
        .enumerate()
        .map(|(i, eq)| eq.ok_or_else(|| SemError::MissingEquation(graph.nodes()[i].clone())))
        .collect::<Result<_, _>>()?;

    for (a, b) in graph.bidirected_edges() {
        let realized = latent_users
            .values()
            .any(|users| users.contains(&a) && users.contains(&b));
        if !realized {
            return Err(SemError::UnrealizedConfounder(a, b));
        }
    }
    for (latent, users) in &latent_users {
        let users: Vec<&NodeId> = users.iter().collect();
        for (x, a) in users.iter().enumerate() {
            for b in &users[x + 1..] {
                if !graph.has_confounder(a.as_str(), b.as_str()) {
                    return Err(SemError::UndeclaredConfounder {
                        latent: latent.clone(),
                        a: (*a).clone(),
                        b: (*b).clone(),
                    });
                }
            }
        }
    }

    let order = graph.topological_order()?;
    let mut by_name: Vec<usize> = (0..graph.nodes().len()).collect();
    by_name.sort_by(|&a, &b| graph.nodes()[a].cmp(&graph.nodes()[b]));
    let target = graph
        .target()
        .and_then(|t| graph.node_index(t.as_str()))
        .ok_or(GraphError::NoTarget)?;
    let mut sem = Sem {
        graph,
        equations,
        latents: latents.into_iter().collect(),
        domains: NodeMap::new(),
        order,
        by_name,
        target,
    };
    for (line_no, name, lo, hi) in raw_domains {
        sem.set_domain(&name, lo, hi).map_err(|e| match e {
            SemError::InvalidDomain { .. } => syntax(line_no, e.to_string()),
            other => other,
        })?;
    }
    Ok(sem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;

    const TOY: &str = "\
node X treatment
node Z treatment
node Y target
edge X -> Z
edge Z -> Y
let X = noise normal(0, 1)
let Z = exp(-X) + noise normal(0, 1)
let Y = cos(Z) - exp(-Z / 20) + noise normal(0, 1)
domain X = [-5, 5]
domain Z = [-5, 20]
";

    fn toy() -> Sem {
        parse_sem(TOY).unwrap()
    }

    fn iv(pairs: &[(&str, f64)]) -> Intervention {
        Intervention {
            assignments: pairs
                .iter()
                .map(|(k, v)| (NodeId::new(*k).unwrap(), *v))
                .collect(),
        }
    }

    #[test]
    fn parses_toy() {
        let sem = toy();
        assert_eq!(sem.graph().nodes().len(), 3);
        assert_eq!(sem.target().as_str(), "Y");
        assert_eq!(sem.domain("Z"), Some((-5.0, 20.0)));
    }

    #[test]
    fn zero_noise_row() {
        let sem = toy().with_zero_noise();
        let d = sem.sample_observational(4, 1).unwrap();
        let expected = 1f64.cos() - (-1.0f64 / 20.0).exp();
        for k in 0..4 {
            assert_eq!(d.column("X").unwrap()[k], 0.0);
            assert_eq!(d.column("Z").unwrap()[k], 1.0);
            assert!((d.column("Y").unwrap()[k] - expected).abs() < 1e-12);
        }
        assert!((expected - (-0.4109)).abs() < 1e-4);
        let d = sem.sample_interventional(&iv(&[("Z", 0.0)]), 3, 1).unwrap();
        assert!(d.column("Y").unwrap().iter().all(|&y| y.abs() < 1e-15));
    }

    #[test]
    fn sampling_contracts() {
        let sem = toy();
        assert!(matches!(
            sem.sample_observational(0, 1),
            Err(SemError::TooFewSamples { .. })
        ));
        let a = sem.sample_observational(50, 9).unwrap();
        assert_eq!(a, sem.sample_observational(50, 9).unwrap());
        assert_ne!(a, sem.sample_observational(50, 10).unwrap());
        let b = sem.sample_interventional(&Intervention::none(), 50, 9).unwrap();
        assert_eq!(a.column("Y"), b.column("Y"));
        assert_eq!(a.seeds, vec![9]);
    }

    #[test]
    fn intervention_checks() {
        let sem = toy();
        assert!(matches!(
            sem.sample_interventional(&iv(&[("Z", 25.0)]), 5, 1),
            Err(SemError::DomainViolation { .. })
        ));
        assert!(matches!(
            sem.sample_interventional(&iv(&[("Y", 0.0)]), 5, 1),
            Err(SemError::NotTreatment(_))
        ));
        assert!(matches!(
            sem.oracle_mean(&iv(&[("Q", 0.0)]), 5, 1),
            Err(SemError::UnknownNode(_))
        ));
    }

    #[test]
    fn oracle_matches_analytic() {
        let sem = toy();
        let pi = std::f64::consts::PI;
        let est = sem.oracle_mean(&iv(&[("Z", pi)]), 1_000_000, 3).unwrap();
        let truth = pi.cos() - (-pi / 20.0).exp();
        assert!((truth - (-1.8546)).abs() < 1e-4);
        assert!((est.mean - truth).abs() < 3.0 * est.se, "{est:?} vs {truth}");
        let small = sem.oracle_mean(&Intervention::none(), 2, 3).unwrap();
        assert!(small.mean.is_finite() && small.se.is_finite());
        assert!(sem.oracle_mean(&Intervention::none(), 1, 3).is_err());
    }

    #[test]
    fn declaration_order_does_not_matter() {
        let permuted = "\
let Y = cos(Z) - exp(-Z / 20) + noise normal(0, 1)
node Y target
let Z = exp(-X) + noise normal(0, 1)
node Z treatment
node X treatment
edge Z -> Y
edge X -> Z
let X = noise normal(0, 1)
";
        // Graph lines must precede their use in equations only at validation
        // time, so any order works.
        let a = toy().sample_observational(20, 5).unwrap();
        let b = parse_sem(permuted).unwrap().sample_observational(20, 5).unwrap();
        assert_eq!(a.names(), b.names());
        for name in ["X", "Y", "Z"] {
            assert_eq!(a.column(name), b.column(name));
        }
    }

    #[test]
    fn parse_errors() {
        let base = "node X treatment\nnode Y target\nedge X -> Y\nlet X = noise normal(0,1)\n";
        let err = parse_sem(&format!("{base}let Y = Q + 1\n")).unwrap_err();
        assert_eq!(err, SemError::UnknownNode("Q".into()));
        let err = parse_sem(&format!("{base}let Y = tanh(X)\n")).unwrap_err();
        assert!(matches!(err, SemError::UnknownFunction { line: 5, .. }));
        let err = parse_sem(&format!("{base}let Y = X +\n")).unwrap_err();
        assert!(matches!(err, SemError::Syntax { line: 5, .. }));
        let err = parse_sem(base).unwrap_err();
        assert_eq!(err, SemError::MissingEquation(NodeId::new("Y").unwrap()));
        let err = parse_sem(
            "node X treatment\nnode Y target\nlet X = noise normal(0,1)\nlet Y = X\n",
        )
        .unwrap_err();
        assert!(matches!(err, SemError::DependencyViolation { .. }));
        let err = parse_sem(&format!("{base}let Y = X\nbogus line\n")).unwrap_err();
        assert!(matches!(err, SemError::Syntax { line: 6, .. }));
    }

    #[test]
    fn confounders_must_match_latents() {
        let head = "node X treatment\nnode Y target\nedge X -> Y\nlatent U ~ normal(0, 1)\n";
        let ok = format!("{head}confounder X <-> Y\nlet X = U\nlet Y = X + U\n");
        parse_sem(&ok).unwrap();
        let unrealized = format!("{head}confounder X <-> Y\nlet X = 1\nlet Y = X + U\n");
        assert!(matches!(
            parse_sem(&unrealized),
            Err(SemError::UnrealizedConfounder(..))
        ));
        let undeclared = format!("{head}let X = U\nlet Y = X + U\n");
        assert!(matches!(
            parse_sem(&undeclared),
            Err(SemError::UndeclaredConfounder { .. })
        ));
    }

    #[test]
    fn dataset_append() {
        let sem = toy();
        let mut a = sem.sample_observational(5, 1).unwrap();
        let b = sem.sample_observational(3, 2).unwrap();
        a.append(&b).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a.seeds, vec![1, 2]);
        assert_eq!(&a.column("X").unwrap()[5..], b.column("X").unwrap());
    }

    #[test]
    fn intervention_from_set() {
        let i = Intervention::from_set(&node_set(["D", "B"]), &[1.0, 2.0]);
        assert_eq!(i.assignments[&NodeId::new("B").unwrap()], 1.0);
        assert_eq!(i.assignments[&NodeId::new("D").unwrap()], 2.0);
    }
}
