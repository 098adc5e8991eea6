//! Interventional effect estimation from observational data.
//!
//! An [`Estimand`] maps an intervention set to a [`Plan`]: a small program of
//! regressions and Monte Carlo averages that evaluates an adjustment formula.
//! Plans are written in a prefix notation, one per line:
//!
//! ```text
//! do() := reg(Y)
//! do(B=b) := avg(bp ~ marg(B), c ~ cond(C | B=b)) { reg(Y | B=bp, C=c) }
//! do(B=b, D=d, E=e) := same do(D=d, E=e)
//! ```
//!
//! `marg(V, ..)` draws whole rows of the listed columns from the empirical
//! joint distribution, `cond(V, .. | W=w, ..)` draws them from the rows whose
//! `W` values are nearest the query, and `reg(Y | W=w, ..)` is a kernel
//! regression of `Y` (and of `Y²`) on the listed columns. A [`DoEffectSurface`]
//! evaluates a plan on a dataset and returns the interventional mean and
//! variance.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::{format_set, CausalGraph, NodeId, NodeSet};
use crate::rng::{derive_seed, rng_from};
use crate::scm::Dataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("column {0} has zero variance")]
    DegenerateColumn(NodeId),
    #[error("dataset has no column {0}")]
    MissingColumn(NodeId),
    #[error("plan for {expected} evaluated with values for {got}")]
    PlanMismatch { expected: String, got: String },
    #[error("no estimand registered for {0}")]
    NoEstimand(String),
    #[error("conditional resampling found no rows")]
    NoNeighbors,
    #[error("variable {0} is used before it is bound")]
    UnboundVariable(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Regression estimator used for `reg(..)` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorKind {
    /// Nadaraya-Watson with a squared-exponential kernel.
    Kernel,
    /// Average over the ⌈√N⌉ nearest rows.
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub kind: RegressorKind,
    /// Pseudo-count of the plan's unconditional value, weighed against the
    /// kernel mass of the data at the intervention values. The mean reverts
    /// to that value away from observed treatment levels instead of copying
    /// the nearest edge of the data. With 0 the mean is the plain plan value.
    pub support_weight: f64,
    /// Pseudo-count of the global moments used for the variance. Where the
    /// kernel mass is small the variance reverts to the marginal variance of
    /// the target instead of collapsing onto the nearest rows.
    pub variance_weight: f64,
    /// Bandwidth multiplier on the median-heuristic scale.
    pub bandwidth_scale: f64,
    /// Outer Monte Carlo sample count is `min(N, max_samples)`.
    pub max_samples: usize,
    /// Kernel rows are cached per source row while `N` is at most this.
    pub cache_limit: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            kind: RegressorKind::Kernel,
            support_weight: 1.0,
            variance_weight: 1.0,
            bandwidth_scale: 1.0,
            max_samples: 1000,
            cache_limit: 2000,
        }
    }
}

pub const MIN_ROWS: usize = 5;

fn column<'a>(data: &'a Dataset, node: &NodeId) -> Result<&'a [f64], EstimationError> {
    data.column(node.as_str())
        .ok_or_else(|| EstimationError::MissingColumn(node.clone()))
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Median of |x_i − x_j| over pairs of an evenly strided subsample.
fn median_abs_diff(xs: &[f64]) -> f64 {
    let stride = xs.len().div_ceil(400).max(1);
    let sub: Vec<f64> = xs.iter().step_by(stride).copied().collect();
    let mut diffs = Vec::with_capacity(sub.len() * sub.len() / 2);
    for (i, a) in sub.iter().enumerate() {
        for b in &sub[i + 1..] {
            diffs.push((a - b).abs());
        }
    }
    if diffs.is_empty() {
        return 0.0;
    }
    let mid = diffs.len() / 2;
    *diffs.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// Median-heuristic bandwidth times `factor`, and the column's standard
/// deviation.
fn bandwidth_of(col: &[f64], node: &NodeId, factor: f64) -> Result<(f64, f64), EstimationError> {
    let sd = std_dev(col);
    if sd <= 0.0 || !sd.is_finite() {
        return Err(EstimationError::DegenerateColumn(node.clone()));
    }
    let mut spread = median_abs_diff(col);
    if spread <= 0.0 {
        spread = sd;
    }
    Ok((factor * spread, sd))
}

/// Kernel mass of the observed treatment levels around a query.
#[derive(Debug)]
struct Support {
    cols: Vec<Vec<f64>>,
    coef: Vec<f64>,
    weight: f64,
}

impl Support {
    fn new(data: &Dataset, query: &[NodeId], opts: &EstimatorOptions) -> Result<Support, EstimationError> {
        let shrink = (data.len() as f64).powf(-1.0 / (query.len() as f64 + 4.0));
        let mut cols = Vec::with_capacity(query.len());
        let mut coef = Vec::with_capacity(query.len());
        for q in query {
            let col = column(data, q)?;
            let (bw, _) = bandwidth_of(col, q, shrink * opts.bandwidth_scale)?;
            coef.push(-0.5 / (bw * bw));
            cols.push(col.to_vec());
        }
        Ok(Support {
            cols,
            coef,
            weight: opts.support_weight,
        })
    }

    /// `Σ_i K(xs − x_i)` over data rows.
    fn mass(&self, xs: &[f64]) -> f64 {
        let n = self.cols.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                let e: f64 = self
                    .cols
                    .iter()
                    .zip(&self.coef)
                    .zip(xs)
                    .map(|((c, k), v)| k * (v - c[i]) * (v - c[i]))
                    .sum();
                e.exp()
            })
            .sum()
    }
}

/// Conditional first and second moments of one column given others.
#[derive(Debug, Clone)]
pub struct ConditionalRegressor {
    pub target: NodeId,
    pub givens: Vec<NodeId>,
    pub kind: RegressorKind,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y2: Vec<f64>,
    bandwidth: Vec<f64>,
    /// Column standard deviations, used by kNN.
    scale: Vec<f64>,
    k: usize,
    variance_weight: f64,
    mean_y: f64,
    mean_y2: f64,
}

/// First and second moments of a kernel estimate. `mean` is the point
/// estimate; `shrunk_mean` and `second` carry the variance pseudo-count, so
/// the variance is `second − shrunk_mean²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub shrunk_mean: f64,
    pub second: f64,
}

impl Moments {
    fn constant(mean: f64, second: f64) -> Moments {
        Moments {
            mean,
            shrunk_mean: mean,
            second,
        }
    }

    pub fn variance(&self) -> f64 {
        (self.second - self.shrunk_mean * self.shrunk_mean).max(0.0)
    }
}

impl ConditionalRegressor {
    pub fn fit(
        data: &Dataset,
        target: &NodeId,
        givens: &[NodeId],
        opts: &EstimatorOptions,
    ) -> Result<Self, EstimationError> {
        let n = data.len();
        if n < MIN_ROWS {
            return Err(EstimationError::InsufficientData {
                needed: MIN_ROWS,
                got: n,
            });
        }
        let y = column(data, target)?.to_vec();
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        let d = givens.len() as f64;
        let shrink = (n as f64).powf(-1.0 / (d + 4.0));
        let mut x = Vec::with_capacity(givens.len());
        let mut bandwidth = Vec::with_capacity(givens.len());
        let mut scale = Vec::with_capacity(givens.len());
        for g in givens {
            let col = column(data, g)?;
            let (bw, sd) = bandwidth_of(col, g, shrink * opts.bandwidth_scale)?;
            bandwidth.push(bw);
            scale.push(sd);
            x.push(col.to_vec());
        }
        let mean_y = y.iter().sum::<f64>() / n as f64;
        let mean_y2 = y2.iter().sum::<f64>() / n as f64;
        Ok(ConditionalRegressor {
            target: target.clone(),
            givens: givens.to_vec(),
            kind: opts.kind,
            x,
            y,
            y2,
            bandwidth,
            scale,
            k: (n as f64).sqrt().ceil() as usize,
            variance_weight: opts.variance_weight,
            mean_y,
            mean_y2,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidth
    }

    /// Kernel factor of given `k` between `value` and every training row.
    fn kernel_row(&self, k: usize, value: f64, out: &mut [f64]) {
        let c = -0.5 / (self.bandwidth[k] * self.bandwidth[k]);
        for (o, xi) in out.iter_mut().zip(&self.x[k]) {
            let d = value - xi;
            *o = (c * d * d).exp();
        }
    }

    fn combine(&self, sw: f64, swy: f64, swy2: f64) -> Moments {
        let shrink = |lam: f64, s: f64, prior: f64| {
            let denom = sw + lam;
            if denom > 0.0 {
                (s + lam * prior) / denom
            } else {
                prior
            }
        };
        let lam = self.variance_weight;
        Moments {
            mean: shrink(0.0, swy, self.mean_y),
            shrunk_mean: shrink(lam, swy, self.mean_y),
            second: shrink(lam, swy2, self.mean_y2),
        }
    }

    fn weighted(&self, w: &[f64]) -> Moments {
        // Four independent lanes so the sums vectorize.
        let (mut sw, mut swy, mut swy2) = ([0.0; 4], [0.0; 4], [0.0; 4]);
        let (wc, yc, y2c) = (w.chunks_exact(4), self.y.chunks_exact(4), self.y2.chunks_exact(4));
        let tail = (wc.remainder(), yc.remainder(), y2c.remainder());
        for ((wi, yi), y2i) in wc.zip(yc).zip(y2c) {
            for l in 0..4 {
                sw[l] += wi[l];
                swy[l] += wi[l] * yi[l];
                swy2[l] += wi[l] * y2i[l];
            }
        }
        for ((wi, yi), y2i) in tail.0.iter().zip(tail.1).zip(tail.2) {
            sw[0] += wi;
            swy[0] += wi * yi;
            swy2[0] += wi * y2i;
        }
        let sum = |a: [f64; 4]| (a[0] + a[1]) + (a[2] + a[3]);
        self.combine(sum(sw), sum(swy), sum(swy2))
    }

    /// [`Self::weighted`] with weights `a ∘ b ∘ c`, without materializing them.
    fn weighted3(&self, a: &[f64], b: &[f64], c: &[f64]) -> Moments {
        let (mut sw, mut swy, mut swy2) = ([0.0; 4], [0.0; 4], [0.0; 4]);
        let n = self.y.len();
        let full = n - n % 4;
        for i in (0..full).step_by(4) {
            for l in 0..4 {
                let w = a[i + l] * b[i + l] * c[i + l];
                sw[l] += w;
                swy[l] += w * self.y[i + l];
                swy2[l] += w * self.y2[i + l];
            }
        }
        for i in full..n {
            let w = a[i] * b[i] * c[i];
            sw[0] += w;
            swy[0] += w * self.y[i];
            swy2[0] += w * self.y2[i];
        }
        let sum = |a: [f64; 4]| (a[0] + a[1]) + (a[2] + a[3]);
        self.combine(sum(sw), sum(swy), sum(swy2))
    }

    fn knn(&self, x: &[f64]) -> Moments {
        let rows = nearest_rows(&self.x, &self.scale, x, self.k);
        let k = rows.len() as f64;
        let m1 = rows.iter().map(|&i| self.y[i]).sum::<f64>() / k;
        let m2 = rows.iter().map(|&i| self.y2[i]).sum::<f64>() / k;
        Moments::constant(m1, m2)
    }

    /// Estimates of `E[target | givens = x]` and `E[target² | givens = x]`.
    pub fn predict(&self, x: &[f64]) -> Moments {
        assert_eq!(x.len(), self.givens.len(), "query dimension");
        if self.givens.is_empty() {
            return Moments::constant(self.mean_y, self.mean_y2);
        }
        match self.kind {
            RegressorKind::Knn => self.knn(x),
            RegressorKind::Kernel => {
                let mut w = vec![1.0; self.len()];
                let mut f = vec![0.0; self.len()];
                for (k, &v) in x.iter().enumerate() {
                    self.kernel_row(k, v, &mut f);
                    for (wi, fi) in w.iter_mut().zip(&f) {
                        *wi *= fi;
                    }
                }
                self.weighted(&w)
            }
        }
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.predict(x).mean
    }
}

/// Indices of the `k` rows nearest to `q` in scaled Euclidean distance; ties
/// broken by row index.
fn nearest_rows(cols: &[Vec<f64>], scale: &[f64], q: &[f64], k: usize) -> Vec<usize> {
    let n = cols.first().map_or(0, Vec::len);
    let mut dist: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let d = cols
                .iter()
                .zip(scale)
                .zip(q)
                .map(|((c, s), v)| ((c[i] - v) / s).powi(2))
                .sum::<f64>();
            (d, i)
        })
        .collect();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < n {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_by(cmp);
    dist.into_iter().map(|(_, i)| i).collect()
}

pub fn fit_regressor(
    data: &Dataset,
    target: &NodeId,
    givens: &[NodeId],
) -> Result<ConditionalRegressor, EstimationError> {
    ConditionalRegressor::fit(data, target, givens, &EstimatorOptions::default())
}

/// `vars ~ marg(nodes)` or `vars ~ cond(nodes | given)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub vars: Vec<String>,
    pub nodes: Vec<NodeId>,
    /// `None` for a marginal draw.
    pub given: Option<Vec<(NodeId, String)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    /// Regression of `target` on the listed columns, each set to a variable.
    Reg {
        target: NodeId,
        args: Vec<(NodeId, String)>,
    },
    /// Monte Carlo average of `body` over draws from the binders, which are
    /// sampled left to right.
    Avg { binders: Vec<Binder>, body: Box<Plan> },
    /// Product of independent factors; first and second moments multiply.
    Prod(Vec<Plan>),
}

impl Plan {
    /// Variables used but not bound inside the plan, in first-use order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let note = |v: &String, bound: &Vec<String>, out: &mut Vec<String>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Plan::Reg { args, .. } => {
                for (_, v) in args {
                    note(v, bound, out);
                }
            }
            Plan::Avg { binders, body } => {
                let depth = bound.len();
                for b in binders {
                    for (_, v) in b.given.iter().flatten() {
                        note(v, bound, out);
                    }
                    bound.extend(b.vars.iter().cloned());
                }
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
            Plan::Prod(parts) => {
                for p in parts {
                    p.collect_free(bound, out);
                }
            }
        }
    }

    fn nodes(&self, out: &mut Vec<NodeId>) {
        match self {
            Plan::Reg { target, args } => {
                out.push(target.clone());
                out.extend(args.iter().map(|(n, _)| n.clone()));
            }
            Plan::Avg { binders, body } => {
                for b in binders {
                    out.extend(b.nodes.iter().cloned());
                    out.extend(b.given.iter().flatten().map(|(n, _)| n.clone()));
                }
                body.nodes(out);
            }
            Plan::Prod(parts) => parts.iter().for_each(|p| p.nodes(out)),
        }
    }
}

/// Back-door plan: `avg(z ~ marg(Z)) { reg(Y | X=x, Z=z) }`. The free
/// variables are the lowercase node names of `set`.
pub fn backdoor_plan(target: &NodeId, set: &NodeSet, adjust: &NodeSet) -> Plan {
    let mut args: Vec<(NodeId, String)> = set.iter().map(|n| (n.clone(), free_var(n))).collect();
    let vars: Vec<String> = adjust.iter().map(|n| format!("adj_{n}")).collect();
    args.extend(adjust.iter().cloned().zip(vars.iter().cloned()));
    let reg = Plan::Reg {
        target: target.clone(),
        args,
    };
    if adjust.is_empty() {
        reg
    } else {
        Plan::Avg {
            binders: vec![Binder {
                vars,
                nodes: adjust.iter().cloned().collect(),
                given: None,
            }],
            body: Box::new(reg),
        }
    }
}

/// Front-door plan: `avg(m ~ cond(M | X=x), x' ~ marg(X)) { reg(Y | M=m, X=x') }`.
pub fn frontdoor_plan(target: &NodeId, set: &NodeSet, mediators: &NodeSet) -> Plan {
    let given: Vec<(NodeId, String)> = set.iter().map(|n| (n.clone(), free_var(n))).collect();
    let med_vars: Vec<String> = mediators.iter().map(|n| format!("med_{n}")).collect();
    let alt_vars: Vec<String> = set.iter().map(|n| format!("alt_{n}")).collect();
    let mut args: Vec<(NodeId, String)> =
        mediators.iter().cloned().zip(med_vars.iter().cloned()).collect();
    args.extend(set.iter().cloned().zip(alt_vars.iter().cloned()));
    Plan::Avg {
        binders: vec![
            Binder {
                vars: med_vars,
                nodes: mediators.iter().cloned().collect(),
                given: Some(given),
            },
            Binder {
                vars: alt_vars,
                nodes: set.iter().cloned().collect(),
                given: None,
            },
        ],
        body: Box::new(Plan::Reg {
            target: target.clone(),
            args,
        }),
    }
}

fn free_var(n: &NodeId) -> String {
    format!("do_{n}")
}

/// Head of an estimand: which node each free variable stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimand {
    pub set: NodeSet,
    pub head: Vec<(NodeId, String)>,
    pub plan: Arc<Plan>,
    /// Set whose plan this one reuses, if declared with `same`.
    pub shared_with: Option<NodeSet>,
}

impl Estimand {
    /// Estimand whose free variables are named by [`backdoor_plan`] and
    /// [`frontdoor_plan`].
    pub fn from_plan(set: NodeSet, plan: Plan) -> Estimand {
        Estimand {
            head: set.iter().map(|n| (n.clone(), free_var(n))).collect(),
            set,
            plan: Arc::new(plan),
            shared_with: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EstimandRegistry {
    entries: Vec<Estimand>,
}

impl EstimandRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, est: Estimand) {
        self.entries.retain(|e| e.set != est.set);
        self.entries.push(est);
    }

    pub fn get(&self, set: &NodeSet) -> Option<&Estimand> {
        self.entries.iter().find(|e| &e.set == set)
    }

    pub fn sets(&self) -> Vec<NodeSet> {
        self.entries.iter().map(|e| e.set.clone()).collect()
    }

    /// Checks that every node named by a plan exists in `graph`.
    pub fn validate(&self, graph: &CausalGraph) -> Result<(), EstimationError> {
        for e in &self.entries {
            let mut nodes: Vec<NodeId> = e.set.iter().cloned().collect();
            e.plan.nodes(&mut nodes);
            if let Some(bad) = nodes.into_iter().find(|n| !graph.contains(n.as_str())) {
                return Err(EstimationError::MissingColumn(bad));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Registry parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>, EstimationError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if c == ':' && chars.get(i + 1) == Some(&'=') {
            out.push(Tok::Sym(":="));
            i += 2;
        } else {
            let sym = match c {
                '(' => "(",
                ')' => ")",
                '{' => "{",
                '}' => "}",
                ',' => ",",
                '|' => "|",
                '=' => "=",
                '~' => "~",
                _ => {
                    return Err(EstimationError::Parse {
                        line: line_no,
                        message: format!("unexpected character {c:?}"),
                    })
                }
            };
            out.push(Tok::Sym(sym));
            i += 1;
        }
    }
    Ok(out)
}

struct PlanParser {
    toks: Vec<Tok>,
    pos: usize,
    line: usize,
}

impl PlanParser {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, EstimationError> {
        Err(EstimationError::Parse {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek_sym(&self, s: &str) -> bool {
        matches!(self.toks.get(self.pos), Some(Tok::Sym(t)) if *t == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), EstimationError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected {s:?}"))
        }
    }

    fn ident(&mut self) -> Result<String, EstimationError> {
        match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => self.err("expected a name"),
        }
    }

    fn node(&mut self) -> Result<NodeId, EstimationError> {
        let name = self.ident()?;
        NodeId::new(name).or_else(|e| self.err(e.to_string()))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), EstimationError> {
        match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected {kw}")),
        }
    }

    /// `NODE=var, NODE=var` up to (not including) `close`.
    fn assignments(&mut self, close: &str) -> Result<Vec<(NodeId, String)>, EstimationError> {
        let mut out = Vec::new();
        if self.peek_sym(close) {
            return Ok(out);
        }
        loop {
            let n = self.node()?;
            self.expect("=")?;
            out.push((n, self.ident()?));
            if !self.eat(",") {
                return Ok(out);
            }
        }
    }

    fn head(&mut self) -> Result<Vec<(NodeId, String)>, EstimationError> {
        self.keyword("do")?;
        self.expect("(")?;
        let a = self.assignments(")")?;
        self.expect(")")?;
        Ok(a)
    }

    fn nodes_until(&mut self) -> Result<Vec<NodeId>, EstimationError> {
        let mut out = vec![self.node()?];
        while self.eat(",") {
            out.push(self.node()?);
        }
        Ok(out)
    }

    fn binder(&mut self) -> Result<Binder, EstimationError> {
        let mut vars = vec![self.ident()?];
        while self.eat(",") {
            vars.push(self.ident()?);
        }
        self.expect("~")?;
        let kind = self.ident()?;
        self.expect("(")?;
        let nodes = self.nodes_until()?;
        let given = match kind.as_str() {
            "marg" => None,
            "cond" => {
                self.expect("|")?;
                Some(self.assignments(")")?)
            }
            other => return self.err(format!("unknown sampler {other:?}")),
        };
        self.expect(")")?;
        if vars.len() != nodes.len() {
            return self.err("binder needs one variable per node");
        }
        Ok(Binder { vars, nodes, given })
    }

    fn plan(&mut self) -> Result<Plan, EstimationError> {
        match self.ident()?.as_str() {
            "reg" => {
                self.expect("(")?;
                let target = self.node()?;
                let args = if self.eat("|") {
                    self.assignments(")")?
                } else {
                    Vec::new()
                };
                self.expect(")")?;
                Ok(Plan::Reg { target, args })
            }
            "avg" => {
                self.expect("(")?;
                let mut binders = vec![self.binder()?];
                while self.eat(",") {
                    binders.push(self.binder()?);
                }
                self.expect(")")?;
                self.expect("{")?;
                let body = self.plan()?;
                self.expect("}")?;
                Ok(Plan::Avg {
                    binders,
                    body: Box::new(body),
                })
            }
            "prod" => {
                self.expect("(")?;
                let mut parts = vec![self.plan()?];
                while self.eat(",") {
                    parts.push(self.plan()?);
                }
                self.expect(")")?;
                Ok(Plan::Prod(parts))
            }
            other => self.err(format!("unknown plan term {other:?}")),
        }
    }
}

fn head_set(head: &[(NodeId, String)]) -> NodeSet {
    head.iter().map(|(n, _)| n.clone()).collect()
}

/// Parses an estimand registry file. Blank lines and `#` comments are
/// ignored.
pub fn parse_estimands(text: &str) -> Result<EstimandRegistry, EstimationError> {
    let mut reg = EstimandRegistry::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = match raw.find('#') {
            Some(p) => raw[..p].trim(),
            None => raw.trim(),
        };
        if line.is_empty() {
            continue;
        }
        let mut p = PlanParser {
            toks: tokenize(line, line_no)?,
            pos: 0,
            line: line_no,
        };
        let head = p.head()?;
        let set = head_set(&head);
        if set.len() != head.len() {
            return p.err("node repeated in do(..)");
        }
        p.expect(":=")?;
        let est = if matches!(p.toks.get(p.pos), Some(Tok::Ident(s)) if s == "same") {
            p.pos += 1;
            let other = head_set(&p.head()?);
            let base = match reg.get(&other) {
                Some(b) => b,
                None => return p.err(format!("{} is not defined yet", format_set(&other))),
            };
            if !other.is_subset(&set) {
                return p.err("a shared estimand must intervene on a subset");
            }
            Estimand {
                set,
                head: base.head.clone(),
                plan: Arc::clone(&base.plan),
                shared_with: Some(other),
            }
        } else {
            let plan = p.plan()?;
            let mut free = plan.free_vars();
            free.sort();
            let mut declared: Vec<String> = head.iter().map(|(_, v)| v.clone()).collect();
            declared.sort();
            if free != declared {
                if let Some(v) = free.iter().find(|v| !declared.contains(v)) {
                    return Err(EstimationError::UnboundVariable(v.clone()));
                }
                return p.err("every intervened variable must be used by the plan");
            }
            Estimand {
                set,
                head,
                plan: Arc::new(plan),
                shared_with: None,
            }
        };
        if p.pos != p.toks.len() {
            return p.err("unexpected trailing input");
        }
        reg.insert(est);
    }
    Ok(reg)
}

// ---------------------------------------------------------------------------
// Evaluation

#[derive(Debug, Clone, Copy)]
enum Term {
    Free(usize),
    Slot(usize),
}

#[derive(Debug)]
enum Node {
    Reg { reg: usize, args: Vec<Term> },
    Avg { binders: Vec<usize>, body: Box<Node> },
    Prod(Vec<Node>),
}

#[derive(Debug)]
enum Sampler {
    Marg { perm: Vec<usize> },
    Cond { given_cols: Vec<usize>, given: Vec<Term>, scale: Vec<f64> },
}

#[derive(Debug)]
struct CBinder {
    cols: Vec<usize>,
    slots: Vec<usize>,
    sampler: Sampler,
}

#[derive(Debug)]
struct RegSlot {
    reg: ConditionalRegressor,
    /// Dataset column of each regression argument.
    arg_cols: Vec<usize>,
    /// Cached kernel rows per argument, indexed by source data row.
    rows: Vec<Vec<OnceLock<Box<[f64]>>>>,
}

/// A bound slot value: the number and the data cell it came from.
#[derive(Debug, Clone, Copy, Default)]
struct Bound {
    value: f64,
    col: usize,
    row: usize,
}

/// A plan compiled against one dataset.
#[derive(Debug)]
pub struct PlanEvaluator {
    query: Vec<NodeId>,
    root: Node,
    regs: Vec<RegSlot>,
    binders: Vec<CBinder>,
    n_slots: usize,
    samples: usize,
    k: usize,
    columns: Vec<Vec<f64>>,
    seed: u64,
    support: Support,
    /// Plan value when every regression returns its unconditional mean.
    baseline: f64,
}

struct Compiler<'a> {
    data: &'a Dataset,
    opts: &'a EstimatorOptions,
    seed: u64,
    free: HashMap<String, usize>,
    scope: Vec<(String, usize)>,
    regs: Vec<RegSlot>,
    binders: Vec<CBinder>,
    n_slots: usize,
    samples: usize,
}

impl Compiler<'_> {
    fn col(&self, node: &NodeId) -> Result<usize, EstimationError> {
        self.data
            .names()
            .iter()
            .position(|n| n == node)
            .ok_or_else(|| EstimationError::MissingColumn(node.clone()))
    }

    fn term(&self, var: &str) -> Result<Term, EstimationError> {
        if let Some((_, s)) = self.scope.iter().rev().find(|(v, _)| v == var) {
            return Ok(Term::Slot(*s));
        }
        self.free
            .get(var)
            .map(|&i| Term::Free(i))
            .ok_or_else(|| EstimationError::UnboundVariable(var.to_string()))
    }

    fn compile(&mut self, plan: &Plan) -> Result<Node, EstimationError> {
        match plan {
            Plan::Reg { target, args } => {
                let givens: Vec<NodeId> = args.iter().map(|(n, _)| n.clone()).collect();
                let reg = ConditionalRegressor::fit(self.data, target, &givens, self.opts)?;
                let arg_cols = givens.iter().map(|g| self.col(g)).collect::<Result<Vec<_>, _>>()?;
                let terms = args
                    .iter()
                    .map(|(_, v)| self.term(v))
                    .collect::<Result<Vec<_>, _>>()?;
                let n = self.data.len();
                let cache = self.opts.kind == RegressorKind::Kernel && n <= self.opts.cache_limit;
                let rows = terms
                    .iter()
                    .map(|t| match t {
                        Term::Slot(_) if cache => (0..n).map(|_| OnceLock::new()).collect(),
                        _ => Vec::new(),
                    })
                    .collect();
                self.regs.push(RegSlot {
                    reg,
                    arg_cols,
                    rows,
                });
                Ok(Node::Reg {
                    reg: self.regs.len() - 1,
                    args: terms,
                })
            }
            Plan::Avg { binders, body } => {
                let depth = self.scope.len();
                let mut ids = Vec::with_capacity(binders.len());
                for b in binders {
                    let cols = b.nodes.iter().map(|n| self.col(n)).collect::<Result<Vec<_>, _>>()?;
                    let sampler = match &b.given {
                        None => {
                            let mut perm: Vec<usize> = (0..self.data.len()).collect();
                            let mut rng =
                                rng_from(derive_seed(self.seed, &[0x6d61_7267, self.binders.len() as u64]));
                            perm.shuffle(&mut rng);
                            perm.truncate(self.samples);
                            Sampler::Marg { perm }
                        }
                        Some(given) => {
                            let given_cols = given
                                .iter()
                                .map(|(n, _)| self.col(n))
                                .collect::<Result<Vec<_>, _>>()?;
                            let terms = given
                                .iter()
                                .map(|(_, v)| self.term(v))
                                .collect::<Result<Vec<_>, _>>()?;
                            let mut scale = Vec::with_capacity(given_cols.len());
                            for (n, _) in given {
                                let sd = std_dev(column(self.data, n)?);
                                if sd <= 0.0 || !sd.is_finite() {
                                    return Err(EstimationError::DegenerateColumn(n.clone()));
                                }
                                scale.push(sd);
                            }
                            Sampler::Cond {
                                given_cols,
                                given: terms,
                                scale,
                            }
                        }
                    };
                    let slots: Vec<usize> = (0..b.vars.len()).map(|k| self.n_slots + k).collect();
                    self.n_slots += b.vars.len();
                    for (v, &s) in b.vars.iter().zip(&slots) {
                        self.scope.push((v.clone(), s));
                    }
                    self.binders.push(CBinder {
                        cols,
                        slots,
                        sampler,
                    });
                    ids.push(self.binders.len() - 1);
                }
                let body = self.compile(body)?;
                self.scope.truncate(depth);
                Ok(Node::Avg {
                    binders: ids,
                    body: Box::new(body),
                })
            }
            Plan::Prod(parts) => Ok(Node::Prod(
                parts.iter().map(|p| self.compile(p)).collect::<Result<_, _>>()?,
            )),
        }
    }
}

fn baseline(node: &Node, regs: &[RegSlot]) -> f64 {
    match node {
        Node::Reg { reg, .. } => regs[*reg].reg.mean_y,
        Node::Avg { body, .. } => baseline(body, regs),
        Node::Prod(parts) => parts.iter().map(|p| baseline(p, regs)).product(),
    }
}

/// Per-query scratch state.
struct Ctx<'a> {
    xs: &'a [f64],
    slots: Vec<Bound>,
    rng: rand_chacha::ChaCha8Rng,
    free_factor: Vec<Option<Option<Vec<f64>>>>,
    reg_result: Vec<Option<Moments>>,
    neighbors: HashMap<(usize, Vec<u64>), Arc<Vec<usize>>>,
}

impl PlanEvaluator {
    /// Compiles `est` against `data`. Query values are passed in the order of
    /// `query` (normally the intervention set in name order).
    pub fn new(
        est: &Estimand,
        query: &[NodeId],
        data: &Dataset,
        seed: u64,
        opts: &EstimatorOptions,
    ) -> Result<Self, EstimationError> {
        let n = data.len();
        if n < MIN_ROWS {
            return Err(EstimationError::InsufficientData {
                needed: MIN_ROWS,
                got: n,
            });
        }
        let mut free = HashMap::new();
        for (node, var) in &est.head {
            let pos = query.iter().position(|q| q == node).ok_or_else(|| {
                EstimationError::PlanMismatch {
                    expected: format_set(&est.set),
                    got: format_set(&query.iter().cloned().collect()),
                }
            })?;
            free.insert(var.clone(), pos);
        }
        let samples = n.min(opts.max_samples);
        let mut c = Compiler {
            data,
            opts,
            seed,
            free,
            scope: Vec::new(),
            regs: Vec::new(),
            binders: Vec::new(),
            n_slots: 0,
            samples,
        };
        let root = c.compile(&est.plan)?;
        let columns = data
            .names()
            .iter()
            .map(|nm| data.column(nm.as_str()).map(<[f64]>::to_vec).unwrap_or_default())
            .collect();
        let support = Support::new(data, query, opts)?;
        let baseline = baseline(&root, &c.regs);
        Ok(PlanEvaluator {
            support,
            baseline,
            query: query.to_vec(),
            root,
            regs: c.regs,
            binders: c.binders,
            n_slots: c.n_slots,
            samples,
            k: (n as f64).sqrt().ceil() as usize,
            columns,
            seed,
        })
    }

    pub fn query_nodes(&self) -> &[NodeId] {
        &self.query
    }

    /// Monte Carlo sample count of each average.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Moments of `Y` under `do(xs)`. Deterministic: the conditional
    /// resampling stream restarts from the plan seed on every call.
    pub fn evaluate(&self, xs: &[f64]) -> Result<Moments, EstimationError> {
        if xs.len() != self.query.len() {
            return Err(EstimationError::PlanMismatch {
                expected: format!("{} values", self.query.len()),
                got: format!("{} values", xs.len()),
            });
        }
        let mut ctx = Ctx {
            xs,
            slots: vec![Bound::default(); self.n_slots],
            rng: rng_from(derive_seed(self.seed, &[0x636f_6e64])),
            free_factor: vec![None; self.regs.len()],
            reg_result: vec![None; self.regs.len()],
            neighbors: HashMap::new(),
        };
        self.eval(&self.root, &mut ctx)
    }

    /// [`Self::evaluate`] with the mean pulled towards the plan's
    /// unconditional value where few observed treatment levels lie near
    /// `xs` (see [`EstimatorOptions::support_weight`]).
    pub fn evaluate_supported(&self, xs: &[f64]) -> Result<Moments, EstimationError> {
        let mut m = self.evaluate(xs)?;
        if self.support.weight > 0.0 && !xs.is_empty() {
            let mass = self.support.mass(xs);
            let lam = self.support.weight;
            m.mean = (mass * m.mean + lam * self.baseline) / (mass + lam);
        }
        Ok(m)
    }

    fn term_value(&self, t: Term, ctx: &Ctx) -> f64 {
        match t {
            Term::Free(i) => ctx.xs[i],
            Term::Slot(s) => ctx.slots[s].value,
        }
    }

    fn eval(&self, node: &Node, ctx: &mut Ctx) -> Result<Moments, EstimationError> {
        match node {
            Node::Reg { reg, args } => self.eval_reg(*reg, args, ctx),
            Node::Prod(parts) => {
                let mut acc = Moments::constant(1.0, 1.0);
                for p in parts {
                    let m = self.eval(p, ctx)?;
                    acc.mean *= m.mean;
                    acc.shrunk_mean *= m.shrunk_mean;
                    acc.second *= m.second;
                }
                Ok(acc)
            }
            Node::Avg { binders, body } => {
                let mut acc = Moments::constant(0.0, 0.0);
                for j in 0..self.samples {
                    for &b in binders {
                        self.bind(b, j, ctx)?;
                    }
                    let m = self.eval(body, ctx)?;
                    acc.mean += m.mean;
                    acc.shrunk_mean += m.shrunk_mean;
                    acc.second += m.second;
                }
                let n = self.samples as f64;
                Ok(Moments {
                    mean: acc.mean / n,
                    shrunk_mean: acc.shrunk_mean / n,
                    second: acc.second / n,
                })
            }
        }
    }

    fn bind(&self, b: usize, j: usize, ctx: &mut Ctx) -> Result<(), EstimationError> {
        let binder = &self.binders[b];
        let row = match &binder.sampler {
            Sampler::Marg { perm } => perm[j % perm.len()],
            Sampler::Cond {
                given_cols,
                given,
                scale,
            } => {
                let q: Vec<f64> = given.iter().map(|&t| self.term_value(t, ctx)).collect();
                let key = (b, q.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                let rows = match ctx.neighbors.get(&key) {
                    Some(r) => Arc::clone(r),
                    None => {
                        let cols: Vec<Vec<f64>> =
                            given_cols.iter().map(|&c| self.columns[c].clone()).collect();
                        let r = Arc::new(nearest_rows(&cols, scale, &q, self.k));
                        ctx.neighbors.insert(key, Arc::clone(&r));
                        r
                    }
                };
                if rows.is_empty() {
                    return Err(EstimationError::NoNeighbors);
                }
                rows[ctx.rng.random_range(0..rows.len())]
            }
        };
        for (&col, &slot) in binder.cols.iter().zip(&binder.slots) {
            ctx.slots[slot] = Bound {
                value: self.columns[col][row],
                col,
                row,
            };
        }
        Ok(())
    }

    fn eval_reg(&self, r: usize, args: &[Term], ctx: &mut Ctx) -> Result<Moments, EstimationError> {
        let slot = &self.regs[r];
        let reg = &slot.reg;
        if args.is_empty() {
            return Ok(reg.predict(&[]));
        }
        if reg.kind == RegressorKind::Knn {
            let q: Vec<f64> = args.iter().map(|&t| self.term_value(t, ctx)).collect();
            return Ok(reg.predict(&q));
        }
        if let Some(res) = ctx.reg_result[r] {
            return Ok(res);
        }
        if ctx.free_factor[r].is_none() {
            let n = reg.len();
            let mut factor: Option<Vec<f64>> = None;
            let mut tmp = vec![0.0; n];
            for (k, t) in args.iter().enumerate() {
                if let Term::Free(i) = t {
                    reg.kernel_row(k, ctx.xs[*i], &mut tmp);
                    match &mut factor {
                        None => factor = Some(tmp.clone()),
                        Some(f) => f.iter_mut().zip(&tmp).for_each(|(a, b)| *a *= b),
                    }
                }
            }
            ctx.free_factor[r] = Some(factor);
        }
        let free = ctx.free_factor[r].as_ref().and_then(Option::as_ref);
        let bound: Vec<(usize, Bound)> = args
            .iter()
            .enumerate()
            .filter_map(|(k, t)| match t {
                Term::Slot(s) => Some((k, ctx.slots[*s])),
                Term::Free(_) => None,
            })
            .collect();
        if bound.is_empty() {
            let res = reg.weighted(free.expect("free arguments"));
            ctx.reg_result[r] = Some(res);
            return Ok(res);
        }
        // Kernel factors that can come from the per-row cache.
        let mut cached: Vec<&[f64]> = Vec::new();
        let mut direct: Vec<(usize, f64)> = Vec::new();
        for &(k, b) in &bound {
            if !slot.rows[k].is_empty() && b.col == slot.arg_cols[k] {
                let row = slot.rows[k][b.row].get_or_init(|| {
                    let mut out = vec![0.0; reg.len()];
                    reg.kernel_row(k, b.value, &mut out);
                    out.into_boxed_slice()
                });
                cached.push(row);
            } else {
                direct.push((k, b.value));
            }
        }
        if let (Some(f), [a, b], []) = (free, cached.as_slice(), direct.as_slice()) {
            return Ok(reg.weighted3(f, a, b));
        }
        let mut w = match free {
            Some(f) => f.to_vec(),
            None => vec![1.0; reg.len()],
        };
        for row in &cached {
            w.iter_mut().zip(row.iter()).for_each(|(a, b)| *a *= b);
        }
        for &(k, v) in &direct {
            let c = -0.5 / (reg.bandwidth[k] * reg.bandwidth[k]);
            w.iter_mut().zip(&reg.x[k]).for_each(|(a, xi)| *a *= (c * (v - xi) * (v - xi)).exp());
        }
        Ok(reg.weighted(&w))
    }
}

/// Interventional mean and variance of the target as functions of the
/// intervention values.
#[derive(Debug)]
pub struct DoEffectSurface {
    pub set: NodeSet,
    pub shared_with: Option<NodeSet>,
    evaluator: Arc<PlanEvaluator>,
    /// Position in `set` order of each value the evaluator takes.
    project: Vec<usize>,
    n: usize,
    last: Mutex<Option<(Vec<f64>, (f64, f64))>>,
}

impl DoEffectSurface {
    /// Observational sample size the surface was built from.
    pub fn data_len(&self) -> usize {
        self.n
    }

    /// `(mean, variance)` at `xs` (values in set order); variance is clamped
    /// at zero.
    pub fn moments(&self, xs: &[f64]) -> Result<(f64, f64), EstimationError> {
        if xs.len() != self.set.len() {
            return Err(EstimationError::PlanMismatch {
                expected: format!("{} values", self.set.len()),
                got: format!("{} values", xs.len()),
            });
        }
        if let Some((q, res)) = self.last.lock().expect("surface memo").as_ref() {
            if q.as_slice() == xs {
                return Ok(*res);
            }
        }
        let projected: Vec<f64> = self.project.iter().map(|&i| xs[i]).collect();
        let m = self.evaluator.evaluate_supported(&projected)?;
        let res = (m.mean, m.variance());
        *self.last.lock().expect("surface memo") = Some((xs.to_vec(), res));
        Ok(res)
    }

    pub fn mean(&self, xs: &[f64]) -> Result<f64, EstimationError> {
        self.moments(xs).map(|m| m.0)
    }

    pub fn var(&self, xs: &[f64]) -> Result<f64, EstimationError> {
        self.moments(xs).map(|m| m.1)
    }

    /// True when both surfaces evaluate the same compiled plan.
    pub fn shares_plan_with(&self, other: &DoEffectSurface) -> bool {
        Arc::ptr_eq(&self.evaluator, &other.evaluator)
    }
}

fn surface_from(
    est: &Estimand,
    set: &NodeSet,
    evaluator: Arc<PlanEvaluator>,
    n: usize,
) -> DoEffectSurface {
    let project = evaluator
        .query_nodes()
        .iter()
        .map(|q| set.iter().position(|s| s == q).expect("shared set is a subset"))
        .collect();
    DoEffectSurface {
        set: set.clone(),
        shared_with: est.shared_with.clone(),
        evaluator,
        project,
        n,
        last: Mutex::new(None),
    }
}

/// Builds the surface for `set` from its registered estimand. A set declared
/// with `same` compiles the plan of the set it shares, with that set's seed,
/// so the two surfaces agree pointwise.
pub fn build_surface(
    registry: &EstimandRegistry,
    data: &Dataset,
    set: &NodeSet,
    seed: u64,
    opts: &EstimatorOptions,
) -> Result<DoEffectSurface, EstimationError> {
    let est = registry
        .get(set)
        .ok_or_else(|| EstimationError::NoEstimand(format_set(set)))?;
    let canonical = est.shared_with.as_ref().unwrap_or(set);
    let query: Vec<NodeId> = canonical.iter().cloned().collect();
    let evaluator = PlanEvaluator::new(est, &query, data, surface_seed(seed, canonical), opts)?;
    Ok(surface_from(est, set, Arc::new(evaluator), data.len()))
}

/// Builds surfaces for several sets. A set declared `same` as an earlier set
/// in the list reuses that set's compiled plan.
pub fn build_surfaces(
    registry: &EstimandRegistry,
    data: &Dataset,
    sets: &[NodeSet],
    seed: u64,
    opts: &EstimatorOptions,
) -> Vec<Result<DoEffectSurface, EstimationError>> {
    let mut out: Vec<Result<DoEffectSurface, EstimationError>> = Vec::with_capacity(sets.len());
    for set in sets {
        let reuse = registry.get(set).and_then(|est| {
            let other = est.shared_with.as_ref()?;
            let pos = sets.iter().position(|s| s == other)?;
            let base = out.get(pos)?.as_ref().ok()?;
            Some(surface_from(est, set, Arc::clone(&base.evaluator), data.len()))
        });
        out.push(match reuse {
            Some(s) => Ok(s),
            None => build_surface(registry, data, set, seed, opts),
        });
    }
    out
}

fn surface_seed(seed: u64, set: &NodeSet) -> u64 {
    let tags: Vec<u64> = set.iter().map(|n| crate::rng::tag(n.as_str())).collect();
    derive_seed(seed, &[0x7375_7266, tags.len() as u64])
        ^ tags.iter().fold(0, |acc, t| crate::rng::splitmix64(acc ^ t))
}

/// Evaluates `est` on `data` at the assignment `xs` (keyed by node) with
/// default options.
pub fn evaluate_plan(
    est: &Estimand,
    data: &Dataset,
    xs: &[(NodeId, f64)],
    seed: u64,
) -> Result<Moments, EstimationError> {
    let got: NodeSet = xs.iter().map(|(n, _)| n.clone()).collect();
    if got != est.set {
        return Err(EstimationError::PlanMismatch {
            expected: format_set(&est.set),
            got: format_set(&got),
        });
    }
    let query: Vec<NodeId> = xs.iter().map(|(n, _)| n.clone()).collect();
    let values: Vec<f64> = xs.iter().map(|(_, v)| *v).collect();
    PlanEvaluator::new(est, &query, data, seed, &EstimatorOptions::default())?.evaluate(&values)
}

/// Back-door estimate of `E[Y | do(set = xs)]` adjusting for `adjust`.
pub fn backdoor_mean(
    data: &Dataset,
    target: &NodeId,
    set: &NodeSet,
    xs: &[f64],
    adjust: &NodeSet,
) -> Result<f64, EstimationError> {
    let est = Estimand::from_plan(set.clone(), backdoor_plan(target, set, adjust));
    let query: Vec<NodeId> = set.iter().cloned().collect();
    PlanEvaluator::new(&est, &query, data, 0, &EstimatorOptions::default())?
        .evaluate(xs)
        .map(|m| m.mean)
}

/// Front-door estimate of `E[Y | do(set = xs)]` through `mediators`.
pub fn frontdoor_mean(
    data: &Dataset,
    target: &NodeId,
    set: &NodeSet,
    xs: &[f64],
    mediators: &NodeSet,
    seed: u64,
) -> Result<f64, EstimationError> {
    let est = Estimand::from_plan(set.clone(), frontdoor_plan(target, set, mediators));
    let query: Vec<NodeId> = set.iter().cloned().collect();
    PlanEvaluator::new(&est, &query, data, seed, &EstimatorOptions::default())?
        .evaluate(xs)
        .map(|m| m.mean)
}
