//! Subcommand definitions and their implementations.

use std::fs;
use std::path::{Path, PathBuf};

use cbo_core::cbo::{run, CboConfig, RunResult};
use cbo_core::estimation::{build_surface, EstimationError, EstimatorOptions};
use cbo_core::graph::{format_set, parse_graph, parse_set, CausalGraph, ExplorationSetKind, NodeSet, PomisRegistry};
use cbo_core::rng::{derive_seed, tag};
use cbo_core::scenario::{self, Scenario};
use cbo_core::scm::{parse_sem, Intervention};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::config::{load_named, load_scenario_arg, parse_prior, EsSpec, Resolved, RunConfig};
use crate::report::{aggregate, aggregate_csv, format_result, Curve, RunSummary, SeedFailure, Summary, PLOT_SCRIPT};
use crate::{output_err, CliError};

#[derive(Debug, Parser)]
#[command(name = "cbo", version, about = "Causal Bayesian optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimization and write trace.csv and summary.json.
    Run(RunArgs),
    /// Run several seeds and aggregate best-so-far against cost.
    Sweep(SweepArgs),
    /// List the exploration sets of a graph, one per line.
    EnumerateSets(EnumerateArgs),
    /// Estimate E[Y|do(set=values)] from observational data.
    Estimate(EstimateArgs),
    /// Monte Carlo mean of the simulator under an intervention.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Exploration sets: mis, pomis, bo or custom:<file>.
    #[arg(long)]
    pub es: Option<String>,
    /// GP prior: causal or standard.
    #[arg(long)]
    pub prior: Option<String>,
    /// Output directory (default: the config's [output] dir, else ./out).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated seeds or ranges, e.g. `0..10` or `1,4,9..=12`.
    #[arg(long)]
    pub seeds: String,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SetKind {
    Mis,
    Pomis,
    Bo,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Graph file; `.sem` files are read as full models.
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub graph: Option<PathBuf>,
    /// Bundled scenario name or path to a `.sem` file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum, default_value = "mis")]
    pub kind: SetKind,
}

#[derive(Debug, Args)]
pub struct InterventionArgs {
    /// Bundled scenario name or path to a `.sem` file.
    #[arg(long)]
    pub scenario: String,
    /// Intervened set, e.g. `{D,E}`.
    #[arg(long)]
    pub set: String,
    /// Comma-separated values in the set's (alphabetical) node order.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    pub values: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub target: InterventionArgs,
    /// Observational sample size.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Also print the simulator's mean.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 100_000)]
    pub oracle_n: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub target: InterventionArgs,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::EnumerateSets(a) => cmd_enumerate(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

fn load_config(path: &Path, o: &Overrides) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(es) = &o.es {
        cfg.es = Some(EsSpec::parse(es, Path::new(".")).map_err(CliError::Usage)?);
    }
    if let Some(p) = &o.prior {
        cfg.prior = Some(parse_prior(p).map_err(CliError::Usage)?);
    }
    let out = o
        .output
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| output_err(path, e))
}

fn trace_comments(r: &Resolved, seed: u64, res: &RunResult) -> Vec<String> {
    let mut c = vec![
        format!("config_hash={}", r.hash),
        format!("seed={seed}"),
        format!("scenario={}", r.scenario.name),
    ];
    if let Some(b) = &res.initial_best {
        c.push(format!("initial_best={}", b.y));
    }
    c
}

fn summary(r: &Resolved, seeds: Vec<u64>, runs: &[(u64, &RunResult)], failed: Vec<SeedFailure>) -> Summary {
    let curves: Vec<Curve> = runs.iter().map(|(_, res)| Curve::of(res)).collect();
    Summary {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: r.hash.clone(),
        scenario: r.scenario.name.clone(),
        seeds,
        config: r.echo.clone(),
        runs: runs.iter().map(|(s, res)| RunSummary::of(*s, res)).collect(),
        failed,
        best_by_cost: aggregate(&curves),
    }
}

/// Runs one seed and writes its trace and summary into `dir`.
fn run_seed(r: &Resolved, seed: u64, dir: &Path) -> Result<RunResult, CliError> {
    let config = CboConfig {
        seed,
        ..r.config.clone()
    };
    let res = run(&r.scenario, config)?;
    write(&dir.join("trace.csv"), &res.trace.to_csv(&trace_comments(r, seed, &res)))?;
    Ok(res)
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let (cfg, out) = load_config(&a.config, &a.overrides)?;
    let r = cfg.resolve()?;
    let seed = a.seed.unwrap_or(r.config.seed);
    create_dir(&out)?;
    let res = run_seed(&r, seed, &out)?;
    let s = summary(&r, vec![seed], &[(seed, &res)], Vec::new());
    write(&out.join("summary.json"), &s.to_json())?;
    match &s.runs[0].result {
        Some(t) => println!("{}", format_result(t)),
        None => println!("no intervention result"),
    }
    println!("cumulative cost {}", res.cum_cost);
    Ok(())
}

/// Parses `0..10`, `3..=5` and single seeds, comma separated.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = |p: &str| CliError::Usage(format!("cannot parse seeds {p:?}"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|_| bad(part))?;
            let (hi, inclusive) = match hi.strip_prefix('=') {
                Some(h) => (h, true),
                None => (hi, false),
            };
            let hi: u64 = hi.trim().parse().map_err(|_| bad(part))?;
            let end = if inclusive { hi.checked_add(1).ok_or_else(|| bad(part))? } else { hi };
            seeds.extend(lo..end);
        } else {
            seeds.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Usage("no seeds given".into()));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Usage(format!("duplicate seed {}", w[0])));
    }
    Ok(seeds)
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let seeds = parse_seeds(&a.seeds)?;
    let (cfg, out) = load_config(&a.config, &a.overrides)?;
    let r = cfg.resolve()?;
    create_dir(&out)?;
    let outcomes: Vec<(u64, Result<RunResult, CliError>)> = seeds
        .par_iter()
        .map(|&seed| {
            let dir = out.join(format!("seed-{seed}"));
            let res = create_dir(&dir).and_then(|_| run_seed(&r, seed, &dir)).and_then(|res| {
                let s = summary(&r, vec![seed], &[(seed, &res)], Vec::new());
                write(&dir.join("summary.json"), &s.to_json())?;
                Ok(res)
            });
            (seed, res)
        })
        .collect();
    finish_sweep(&r, &out, seeds, outcomes)
}

fn finish_sweep(
    r: &Resolved,
    out: &Path,
    seeds: Vec<u64>,
    outcomes: Vec<(u64, Result<RunResult, CliError>)>,
) -> Result<(), CliError> {
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (seed, res) in outcomes {
        match res {
            Ok(res) => runs.push((seed, res)),
            Err(e @ CliError::Output(_)) => return Err(e),
            Err(e) => {
                log::error!("seed {seed}: {e}");
                failed.push(SeedFailure {
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    let refs: Vec<(u64, &RunResult)> = runs.iter().map(|(s, res)| (*s, res)).collect();
    let s = summary(r, seeds.clone(), &refs, failed);
    let seed_list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let comments = [
        format!("config_hash={}", r.hash),
        format!("seeds={}", seed_list.join(";")),
        format!("scenario={}", r.scenario.name),
    ];
    write(&out.join("aggregate.csv"), &aggregate_csv(&s.best_by_cost, &comments))?;
    write(&out.join("summary.json"), &s.to_json())?;
    write(&out.join("plot.py"), PLOT_SCRIPT)?;
    for run in &s.runs {
        if let Some(t) = &run.result {
            println!("seed {}: {}", run.seed, format_result(t));
        }
    }
    if s.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SeedsFailed {
            failed: s.failed.len(),
            total: seeds.len(),
        })
    }
}

fn read_graph(path: &Path) -> Result<CausalGraph, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let graph = if path.extension().is_some_and(|e| e == "sem") {
        parse_sem(&text)?.graph().clone()
    } else {
        parse_graph(&text)?
    };
    graph.validate()?;
    Ok(graph)
}

fn cmd_enumerate(a: &EnumerateArgs) -> Result<(), CliError> {
    let (graph, pomis) = match (&a.graph, &a.scenario) {
        (Some(p), _) => {
            let graph = read_graph(p)?;
            // Bundled POMIS lists apply when the graph matches a scenario.
            let mut registry = PomisRegistry::new();
            for name in scenario::names() {
                let sc = load_named(name)?;
                if let Some(sets) = sc.pomis.lookup(&graph) {
                    registry.register(&graph, sets.to_vec());
                }
            }
            (graph, registry)
        }
        (None, Some(name)) => {
            let sc = load_scenario_arg(name)?;
            (sc.sem.graph().clone(), sc.pomis)
        }
        (None, None) => return Err(CliError::Usage("give --graph or --scenario".into())),
    };
    let kind = match a.kind {
        SetKind::Mis => ExplorationSetKind::Mis,
        SetKind::Pomis => ExplorationSetKind::Pomis,
        SetKind::Bo => ExplorationSetKind::Bo,
    };
    for set in graph.exploration_set(&kind, &pomis)? {
        println!("{}", format_set(&set));
    }
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::Usage(format!("cannot parse value {v:?}"))))
        .collect()
}

/// Loads the scenario and checks the intervention against its domains.
fn intervention(a: &InterventionArgs) -> Result<(Scenario, NodeSet, Vec<f64>), CliError> {
    let sc = load_scenario_arg(&a.scenario)?;
    let set = parse_set(&a.set)?;
    let values = parse_values(&a.values)?;
    if values.len() != set.len() {
        return Err(CliError::Usage(format!(
            "{} takes {} values, got {}",
            format_set(&set),
            set.len(),
            values.len()
        )));
    }
    sc.sem.check_intervention(&Intervention::from_set(&set, &values))?;
    Ok((sc, set, values))
}

fn print_oracle(sc: &Scenario, set: &NodeSet, values: &[f64], n: usize, seed: u64) -> Result<(), CliError> {
    let est = sc
        .sem
        .oracle_mean(&Intervention::from_set(set, values), n, derive_seed(seed, &[tag("oracle")]))?;
    println!("oracle {} ± {}", est.mean, est.se);
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let (sc, set, values) = intervention(&a.target)?;
    let seed = a.target.seed;
    let est = sc
        .estimands
        .get(&set)
        .ok_or_else(|| EstimationError::NoEstimand(format_set(&set)))?;
    if let Some(other) = &est.shared_with {
        println!("estimand shared with {}", format_set(other));
    }
    let data = sc.sem.sample_observational(a.n, derive_seed(seed, &[tag("observe"), 0]))?;
    let surface = build_surface(
        &sc.estimands,
        &data,
        &set,
        derive_seed(seed, &[tag("surface")]),
        &EstimatorOptions::default(),
    )?;
    let (mean, var) = surface.moments(&values)?;
    println!("mean {mean}");
    println!("variance {var}");
    if a.oracle {
        print_oracle(&sc, &set, &values, a.oracle_n, seed)?;
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<(), CliError> {
    let (sc, set, values) = intervention(&a.target)?;
    print_oracle(&sc, &set, &values, a.n, a.target.seed)
}
