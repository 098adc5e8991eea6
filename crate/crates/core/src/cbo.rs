//! The optimization loop: initial data, then a sequence of observe or
//! intervene steps until the intervention budget is spent.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::estimation::{build_surfaces, DoEffectSurface, EstimationError, EstimatorOptions};
use crate::gp::{
    causal_prior, GpError, GpModel, HyperGrid, Kernel, MeanFunction, Rbf, DEFAULT_NOISE,
};
use crate::graph::{format_set, sort_sets, ExplorationSetKind, GraphError, NodeId, NodeSet};
use crate::policy::{epsilon_estimate, latin_hypercube, optimize_acquisition, CostModel, PolicyError, SearchOptions};
use crate::rng::{derive_seed, rng_from, tag};
use crate::scenario::{Direction, Scenario};
use crate::scm::{Dataset, Intervention, SemError};

#[derive(Debug, Error)]
pub enum CboError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("SEM: {0}")]
    Sem(#[from] SemError),
    #[error("estimation: {0}")]
    Estimation(#[from] EstimationError),
    #[error("GP: {0}")]
    Gp(#[from] GpError),
    #[error("policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("every exploration set failed at step {0}")]
    NoCandidate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    /// Do-calculus mean and variance-inflated kernel.
    Causal,
    /// Zero mean, plain RBF.
    Standard,
}

/// How the observe/intervene probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonMode {
    /// Hull-volume ratio times `N / N_max`.
    Hull,
    /// A constant, e.g. 0 to always intervene.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct CboConfig {
    pub es: ExplorationSetKind,
    pub direction: Direction,
    /// Intervention steps.
    pub t: usize,
    /// Initial observational sample size.
    pub n: usize,
    pub n_max: usize,
    /// Initial interventional points per set.
    pub p: usize,
    /// Rows drawn per observe step.
    pub batch: usize,
    pub prior: PriorKind,
    pub seed: u64,
    /// Domain overrides; other treatments use the SEM's domains.
    pub domains: BTreeMap<NodeId, (f64, f64)>,
    pub cost: CostModel,
    /// Samples behind every system query.
    pub eval_samples: usize,
    pub epsilon: EpsilonMode,
    pub fit_hyperparameters: bool,
    pub hyper_grid: HyperGrid,
    pub estimator: EstimatorOptions,
    pub search: SearchOptions,
    /// Record wall-clock time per step. Off by default so traces are
    /// byte-reproducible.
    pub record_time: bool,
}

impl CboConfig {
    /// Scenario defaults: MIS, causal prior, unit costs.
    pub fn for_scenario(sc: &Scenario, seed: u64) -> CboConfig {
        let d = sc.defaults;
        CboConfig {
            es: ExplorationSetKind::Mis,
            direction: d.direction,
            t: d.t,
            n: d.n,
            n_max: d.n_max,
            p: d.p,
            batch: 20,
            prior: PriorKind::Causal,
            seed,
            domains: BTreeMap::new(),
            cost: CostModel::unit(sc.sem.graph()),
            eval_samples: 10_000,
            epsilon: EpsilonMode::Hull,
            fit_hyperparameters: true,
            hyper_grid: HyperGrid::default(),
            estimator: EstimatorOptions::default(),
            search: SearchOptions::default(),
            record_time: false,
        }
    }

    /// Standard BO on all treatments: zero-mean prior, never observes.
    pub fn bo_baseline(&self) -> CboConfig {
        CboConfig {
            es: ExplorationSetKind::Bo,
            prior: PriorKind::Standard,
            epsilon: EpsilonMode::Fixed(0.0),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CboError> {
        let bad = |m: &str| Err(CboError::InvalidConfig(m.to_string()));
        if self.t == 0 {
            return bad("T must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch size must be at least 1");
        }
        if self.eval_samples < 100 {
            return bad("eval samples must be at least 100");
        }
        if self.n_max == 0 || self.n > self.n_max {
            return bad("need 0 < N <= N_max");
        }
        if let EpsilonMode::Fixed(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return bad("fixed epsilon must lie in [0, 1]");
            }
        }
        for (node, (lo, hi)) in &self.domains {
            if !(lo < hi) {
                return Err(CboError::InvalidConfig(format!("empty domain for {node}")));
            }
        }
        Ok(())
    }
}

/// One interventional result.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub set: NodeSet,
    pub values: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Observe,
    Intervene,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Observe => "observe",
            Action::Intervene => "intervene",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub action: Action,
    pub epsilon: f64,
    /// Standard error of ε when the hull volume was estimated by sampling.
    pub epsilon_se: Option<f64>,
    /// Intervened set; `None` for observe steps.
    pub set: Option<NodeSet>,
    pub values: Vec<f64>,
    pub step_cost: f64,
    pub cum_cost: f64,
    pub y_hat: Option<f64>,
    pub best: Option<f64>,
    pub wall_ms: u64,
    /// Sets skipped this step because their GP failed.
    pub skipped: Vec<(NodeSet, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_COLUMNS: &str = "t,action,epsilon,set,values,step_cost,cum_cost,y_hat,best,wall_ms";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

impl Trace {
    /// CSV text. `comments` become leading `# ` lines; skipped sets are
    /// reported as `#` lines before their row.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{TRACE_COLUMNS}");
        for r in &self.rows {
            if let Some(se) = r.epsilon_se {
                let _ = writeln!(out, "# t={} epsilon_se={se}", r.t);
            }
            for (set, why) in &r.skipped {
                let _ = writeln!(out, "# t={} skipped {}: {why}", r.t, format_set(set));
            }
            let values: Vec<String> = r.values.iter().map(f64::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.action.as_str(),
                r.epsilon,
                csv_field(&r.set.as_ref().map_or_else(String::new, format_set)),
                values.join(";"),
                r.step_cost,
                r.cum_cost,
                opt(r.y_hat),
                opt(r.best),
                r.wall_ms
            );
        }
        out
    }

    pub fn write_csv(&self, w: &mut impl io::Write, comments: &[String]) -> io::Result<()> {
        w.write_all(self.to_csv(comments).as_bytes())
    }

    /// Best-so-far among interventions whose cumulative cost is at most
    /// `budget`, falling back to the initial best.
    pub fn best_within(&self, budget: f64, initial: Option<f64>) -> Option<f64> {
        let mut best = initial;
        for r in &self.rows {
            if r.cum_cost <= budget {
                best = r.best.or(best);
            }
        }
        best
    }
}

/// Per-set optimizer state.
#[derive(Debug, Clone)]
pub struct SetState {
    pub set: NodeSet,
    pub bounds: Vec<(f64, f64)>,
    pub gp: GpModel,
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
    pub surface: Option<Arc<DoEffectSurface>>,
}

#[derive(Debug, Clone)]
pub struct CboState {
    pub observational: Dataset,
    pub sets: Vec<SetState>,
    /// Best initial result, before any step.
    pub initial_best: Option<Record>,
    pub best: Option<Record>,
    pub cum_cost: f64,
    pub interventions: usize,
    pub iteration: usize,
    rng: ChaCha8Rng,
}

pub struct Cbo<'a> {
    pub scenario: &'a Scenario,
    pub config: CboConfig,
    treatments: Vec<NodeId>,
    treatment_bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    pub best: Option<Record>,
    pub initial_best: Option<Record>,
    pub cum_cost: f64,
    pub observational_rows: usize,
    /// Final per-set models and data.
    pub sets: Vec<SetState>,
}

fn set_tag(set: &NodeSet) -> u64 {
    set.iter().fold(0x0073_6574_u64, |acc, n| derive_seed(acc, &[tag(n.as_str())]))
}

impl<'a> Cbo<'a> {
    pub fn new(scenario: &'a Scenario, config: CboConfig) -> Result<Cbo<'a>, CboError> {
        config.validate()?;
        let treatments = scenario.sem.graph().treatments();
        let mut treatment_bounds = Vec::with_capacity(treatments.len());
        for t in &treatments {
            let b = config
                .domains
                .get(t)
                .copied()
                .or_else(|| scenario.sem.domain(t.as_str()))
                .ok_or_else(|| CboError::InvalidConfig(format!("no domain for treatment {t}")))?;
            treatment_bounds.push(b);
        }
        Ok(Cbo {
            scenario,
            config,
            treatments,
            treatment_bounds,
        })
    }

    fn bounds_of(&self, set: &NodeSet) -> Vec<(f64, f64)> {
        set.iter()
            .map(|n| {
                let i = self.treatments.iter().position(|t| t == n).expect("set of treatments");
                self.treatment_bounds[i]
            })
            .collect()
    }

    /// Exploration sets in size-then-name order, duplicates removed.
    pub fn exploration_sets(&self) -> Result<Vec<NodeSet>, CboError> {
        let g = self.scenario.sem.graph();
        let mut sets = g.exploration_set(&self.config.es, &self.scenario.pomis)?;
        sort_sets(&mut sets);
        sets.dedup();
        Ok(sets)
    }

    /// Every query in a run reuses one noise stream, so the system behaves
    /// as a fixed smooth function of the intervention values.
    fn query_system(&self, set: &NodeSet, values: &[f64]) -> Result<f64, CboError> {
        let iv = Intervention::from_set(set, values);
        let seed = derive_seed(self.config.seed, &[tag("system")]);
        Ok(self
            .scenario
            .sem
            .oracle_mean(&iv, self.config.eval_samples, seed)?
            .mean)
    }

    fn surfaces(&self, data: &Dataset, sets: &[NodeSet]) -> Vec<Option<Arc<DoEffectSurface>>> {
        if self.config.prior == PriorKind::Standard {
            return vec![None; sets.len()];
        }
        let seed = derive_seed(self.config.seed, &[tag("surface")]);
        build_surfaces(&self.scenario.estimands, data, sets, seed, &self.config.estimator)
            .into_iter()
            .zip(sets)
            .map(|(r, set)| match r {
                Ok(s) => Some(Arc::new(s)),
                Err(e) => {
                    log::info!("{}: zero-mean prior ({e})", format_set(set));
                    None
                }
            })
            .collect()
    }

    fn prior(surface: Option<&Arc<DoEffectSurface>>) -> (MeanFunction, Kernel) {
        match surface {
            Some(s) => causal_prior(Arc::clone(s), Rbf::default()),
            None => (MeanFunction::Zero, Kernel::Rbf(Rbf::default())),
        }
    }

    /// Conditions a set's GP on its data, refitting hyperparameters when
    /// enabled and there are at least two points.
    fn condition(&self, st: &SetState, mean: MeanFunction, kernel: Kernel) -> Result<GpModel, GpError> {
        let base = GpModel::new(&st.bounds, mean, kernel.with_base(Rbf::default()), DEFAULT_NOISE);
        let gp = base.with_data(&st.xs, &st.ys)?;
        if self.config.fit_hyperparameters && st.xs.len() >= 2 {
            gp.fit_hyperparameters(&self.config.hyper_grid)
        } else {
            Ok(gp)
        }
    }

    fn better(&self, a: f64, b: Option<&Record>) -> bool {
        b.is_none_or(|r| self.config.direction.better(a, r.y))
    }

    pub fn initialize(&self) -> Result<CboState, CboError> {
        let cfg = &self.config;
        let sets = self.exploration_sets()?;
        cfg.cost.validate(&sets)?;
        let observational = self
            .scenario
            .sem
            .sample_observational(cfg.n, derive_seed(cfg.seed, &[tag("observe"), 0]))?;
        let surfaces = self.surfaces(&observational, &sets);
        let mut best: Option<Record> = None;
        let mut states = Vec::with_capacity(sets.len());
        for (set, surface) in sets.into_iter().zip(surfaces) {
            let bounds = self.bounds_of(&set);
            let mut rng = rng_from(derive_seed(cfg.seed, &[tag("design"), set_tag(&set)]));
            let xs: Vec<Vec<f64>> = if set.is_empty() {
                vec![Vec::new(); cfg.p.min(1)]
            } else {
                latin_hypercube(cfg.p, &bounds, &mut rng)
            };
            let mut ys = Vec::with_capacity(xs.len());
            for x in &xs {
                let y = self.query_system(&set, x)?;
                if self.better(y, best.as_ref()) {
                    best = Some(Record {
                        set: set.clone(),
                        values: x.clone(),
                        y,
                    });
                }
                ys.push(y);
            }
            let mut st = SetState {
                set,
                bounds,
                gp: GpModel::new(&[], MeanFunction::Zero, Kernel::Rbf(Rbf::default()), 0.0),
                xs,
                ys,
                surface,
            };
            let (mean, kernel) = Self::prior(st.surface.as_ref());
            st.gp = self.condition(&st, mean, kernel)?;
            states.push(st);
        }
        Ok(CboState {
            observational,
            sets: states,
            initial_best: best.clone(),
            best,
            cum_cost: 0.0,
            interventions: 0,
            iteration: 0,
            rng: rng_from(derive_seed(cfg.seed, &[tag("coin")])),
        })
    }

    /// ε for the current observational data, with its standard error when
    /// the hull volume is a Monte Carlo estimate.
    pub fn epsilon(&self, state: &CboState) -> (f64, Option<f64>) {
        match self.config.epsilon {
            EpsilonMode::Fixed(e) => (e, None),
            EpsilonMode::Hull => {
                let cols: Vec<&[f64]> = self
                    .treatments
                    .iter()
                    .map(|t| state.observational.column(t.as_str()).expect("treatment column"))
                    .collect();
                let pts: Vec<Vec<f64>> = (0..state.observational.len())
                    .map(|i| cols.iter().map(|c| c[i]).collect())
                    .collect();
                epsilon_estimate(
                    &pts,
                    &self.treatment_bounds,
                    state.observational.len(),
                    self.config.n_max,
                    derive_seed(self.config.seed, &[tag("hull"), state.iteration as u64]),
                )
            }
        }
    }

    /// One observe or intervene step.
    pub fn step(&self, state: &mut CboState) -> Result<TraceRow, CboError> {
        let started = Instant::now();
        let cfg = &self.config;
        state.iteration += 1;
        let (eps, eps_se) = self.epsilon(state);
        let u: f64 = state.rng.random();
        let room = cfg.n_max.saturating_sub(state.observational.len());
        let mut row = TraceRow {
            t: state.iteration,
            action: Action::Observe,
            epsilon: eps,
            epsilon_se: eps_se,
            set: None,
            values: Vec::new(),
            step_cost: 0.0,
            cum_cost: state.cum_cost,
            y_hat: None,
            best: state.best.as_ref().map(|r| r.y),
            wall_ms: 0,
            skipped: Vec::new(),
        };
        if eps > u && room > 0 {
            let batch = cfg.batch.min(room);
            let more = self.scenario.sem.sample_observational(
                batch,
                derive_seed(cfg.seed, &[tag("observe"), state.iteration as u64]),
            )?;
            state.observational.append(&more)?;
            let sets: Vec<NodeSet> = state.sets.iter().map(|s| s.set.clone()).collect();
            let surfaces = self.surfaces(&state.observational, &sets);
            for (st, surface) in state.sets.iter_mut().zip(surfaces) {
                st.surface = surface;
            }
            for i in 0..state.sets.len() {
                let (mean, kernel) = Self::prior(state.sets[i].surface.as_ref());
                match self.condition(&state.sets[i], mean, kernel) {
                    Ok(gp) => state.sets[i].gp = gp,
                    Err(e) => row.skipped.push((state.sets[i].set.clone(), e.to_string())),
                }
            }
        } else {
            row.action = Action::Intervene;
            let y_star = state.best.as_ref().map_or(cfg.direction.worst(), |r| r.y);
            let mut choice: Option<(usize, Vec<f64>, f64)> = None;
            for (i, st) in state.sets.iter().enumerate() {
                let seed = derive_seed(cfg.seed, &[tag("acquire"), state.iteration as u64, i as u64]);
                match optimize_acquisition(
                    &st.gp,
                    &st.set,
                    &st.bounds,
                    &cfg.cost,
                    y_star,
                    cfg.direction,
                    seed,
                    &cfg.search,
                ) {
                    // Sets are in tie-break order, so only a strictly larger
                    // value displaces the current choice.
                    Ok((x, a)) => {
                        if choice.as_ref().is_none_or(|c| a > c.2) {
                            choice = Some((i, x, a));
                        }
                    }
                    Err(PolicyError::Gp(e)) => row.skipped.push((st.set.clone(), e.to_string())),
                    Err(e) => return Err(e.into()),
                }
            }
            let (i, x, _) = choice.ok_or(CboError::NoCandidate(state.iteration))?;
            let set = state.sets[i].set.clone();
            let y = self.query_system(&set, &x)?;
            let cost = cfg.cost.intervention_cost(&set, &x)?;
            state.interventions += 1;
            state.cum_cost += cost;
            if self.better(y, state.best.as_ref()) {
                state.best = Some(Record {
                    set: set.clone(),
                    values: x.clone(),
                    y,
                });
            }
            let st = &mut state.sets[i];
            st.xs.push(x.clone());
            st.ys.push(y);
            let (mean, kernel) = Self::prior(st.surface.as_ref());
            let st = &state.sets[i];
            match self.condition(st, mean, kernel) {
                Ok(gp) => state.sets[i].gp = gp,
                Err(e) => row.skipped.push((set.clone(), e.to_string())),
            }
            row.set = Some(set);
            row.values = x;
            row.step_cost = cost;
            row.cum_cost = state.cum_cost;
            row.y_hat = Some(y);
            row.best = state.best.as_ref().map(|r| r.y);
        }
        if cfg.record_time {
            row.wall_ms = started.elapsed().as_millis() as u64;
        }
        log::debug!(
            "t={} {} eps={:.3} set={} best={:?}",
            row.t,
            row.action.as_str(),
            row.epsilon,
            row.set.as_ref().map_or_else(String::new, format_set),
            row.best
        );
        Ok(row)
    }

    /// Initializes, then steps until `T` interventions have been made.
    pub fn run(&self) -> Result<RunResult, CboError> {
        let mut state = self.initialize()?;
        let mut trace = Trace::default();
        while state.interventions < self.config.t {
            trace.rows.push(self.step(&mut state)?);
        }
        Ok(RunResult {
            trace,
            best: state.best,
            initial_best: state.initial_best,
            cum_cost: state.cum_cost,
            observational_rows: state.observational.len(),
            sets: state.sets,
        })
    }
}

/// Convenience wrapper around [`Cbo::run`].
pub fn run(scenario: &Scenario, config: CboConfig) -> Result<RunResult, CboError> {
    Cbo::new(scenario, config)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario;

    fn quick(sc: &Scenario, seed: u64) -> CboConfig {
        let mut c = CboConfig::for_scenario(sc, seed);
        c.t = 3;
        c.eval_samples = 500;
        c.search = SearchOptions {
            seeds: 8,
            starts: 2,
            iterations: 8,
        };
        c
    }

    #[test]
    fn toy_initial_design() {
        let sc = scenario::load("toy").unwrap();
        let cbo = Cbo::new(&sc, quick(&sc, 1)).unwrap();
        let st = cbo.initialize().unwrap();
        let sizes: Vec<(String, usize)> = st.sets.iter().map(|s| (format_set(&s.set), s.xs.len())).collect();
        assert_eq!(
            sizes,
            vec![("∅".to_string(), 1), ("{X}".to_string(), 3), ("{Z}".to_string(), 3)]
        );
        assert_eq!(st.observational.len(), 100);
        let best = st.best.as_ref().unwrap().y;
        let all = st.sets.iter().flat_map(|s| s.ys.iter().copied());
        assert_eq!(all.fold(f64::INFINITY, f64::min), best);
    }

    #[test]
    fn no_initial_points() {
        let sc = scenario::load("toy").unwrap();
        let mut c = quick(&sc, 2);
        c.p = 0;
        let cbo = Cbo::new(&sc, c).unwrap();
        let mut st = cbo.initialize().unwrap();
        assert!(st.best.is_none());
        assert!(st.sets.iter().all(|s| s.xs.is_empty()));
        let row = loop {
            let r = cbo.step(&mut st).unwrap();
            if r.action == Action::Intervene {
                break r;
            }
        };
        assert_eq!(row.best, row.y_hat);
    }

    #[test]
    fn forced_epsilon() {
        let sc = scenario::load("toy").unwrap();
        let mut c = quick(&sc, 3);
        c.epsilon = EpsilonMode::Fixed(1.0);
        let cbo = Cbo::new(&sc, c.clone()).unwrap();
        let mut st = cbo.initialize().unwrap();
        let row = cbo.step(&mut st).unwrap();
        assert_eq!(row.action, Action::Observe);
        assert_eq!(row.cum_cost, 0.0);
        assert_eq!(st.observational.len(), 120);

        c.epsilon = EpsilonMode::Fixed(0.0);
        let cbo = Cbo::new(&sc, c).unwrap();
        let mut st = cbo.initialize().unwrap();
        let row = cbo.step(&mut st).unwrap();
        assert_eq!(row.action, Action::Intervene);
        assert_eq!(row.step_cost, 1.0);
    }

    #[test]
    fn observing_stops_at_budget() {
        let sc = scenario::load("toy").unwrap();
        let mut c = quick(&sc, 4);
        c.epsilon = EpsilonMode::Fixed(1.0);
        c.n_max = 130;
        let cbo = Cbo::new(&sc, c).unwrap();
        let res = cbo.run().unwrap();
        assert_eq!(res.observational_rows, 130);
        let observes = res.trace.rows.iter().filter(|r| r.action == Action::Observe).count();
        assert_eq!(observes, 2);
    }

    #[test]
    fn invalid_configs() {
        let sc = scenario::load("toy").unwrap();
        let base = quick(&sc, 0);
        for f in [
            |c: &mut CboConfig| c.t = 0,
            |c: &mut CboConfig| c.batch = 0,
            |c: &mut CboConfig| c.eval_samples = 10,
            |c: &mut CboConfig| c.n = c.n_max + 1,
            |c: &mut CboConfig| c.epsilon = EpsilonMode::Fixed(2.0),
        ] {
            let mut c = base.clone();
            f(&mut c);
            assert!(matches!(Cbo::new(&sc, c), Err(CboError::InvalidConfig(_))));
        }
    }

    #[test]
    fn csv_quotes_sets() {
        let trace = Trace {
            rows: vec![TraceRow {
                t: 1,
                action: Action::Intervene,
                epsilon: 0.25,
                epsilon_se: None,
                set: Some(crate::graph::node_set(["B", "D"])),
                values: vec![0.5, -1.0],
                step_cost: 2.0,
                cum_cost: 2.0,
                y_hat: Some(-0.5),
                best: Some(-0.5),
                wall_ms: 0,
                skipped: vec![],
            }],
        };
        let csv = trace.to_csv(&["seed=1".to_string()]);
        assert_eq!(
            csv,
            format!("# seed=1\n{TRACE_COLUMNS}\n1,intervene,0.25,\"{{B,D}}\",0.5;-1,2,2,-0.5,-0.5,0\n")
        );
    }
}
