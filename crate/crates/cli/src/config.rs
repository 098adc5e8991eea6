//! Run configuration files: `[section]` headers followed by `key = value`
//! lines. `#` starts a comment.
//!
//! ```text
//! [scenario]
//! name = toy
//!
//! [cbo]
//! T = 30
//! N = 100
//! es = mis
//!
//! [domains]
//! Z = [-5, 20]
//!
//! [cost]
//! preset = unit
//! Z.fixed = 2
//!
//! [output]
//! dir = out/toy
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use cbo_core::cbo::{CboConfig, EpsilonMode, PriorKind};
use cbo_core::graph::{format_set, parse_set, ExplorationSetKind, NodeId, NodeSet};
use cbo_core::policy::CostModel;
use cbo_core::scenario::{self, Direction, Scenario};
use sha2::{Digest, Sha256};

use crate::CliError;

const SECTIONS: &[(&str, &[&str])] = &[
    ("scenario", &["name", "sem", "estimands"]),
    (
        "cbo",
        &[
            "t",
            "n",
            "n_max",
            "p",
            "seed",
            "prior",
            "es",
            "direction",
            "batch",
            "eval_samples",
            "epsilon",
        ],
    ),
    ("domains", &[]),
    ("cost", &[]),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum EsSpec {
    Mis,
    Pomis,
    Bo,
    /// One set per line in the named file.
    Custom(PathBuf),
}

impl EsSpec {
    /// Parses `mis`, `pomis`, `bo` or `custom:<file>`; relative files are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<EsSpec, String> {
        match text.trim() {
            "mis" => Ok(EsSpec::Mis),
            "pomis" => Ok(EsSpec::Pomis),
            "bo" => Ok(EsSpec::Bo),
            t => match t.strip_prefix("custom:") {
                Some(p) if !p.trim().is_empty() => Ok(EsSpec::Custom(base.join(p.trim()))),
                _ => Err(format!("unknown exploration set {t:?} (mis, pomis, bo, custom:<file>)")),
            },
        }
    }

    fn label(&self) -> String {
        match self {
            EsSpec::Mis => "mis".into(),
            EsSpec::Pomis => "pomis".into(),
            EsSpec::Bo => "bo".into(),
            EsSpec::Custom(p) => format!("custom:{}", p.display()),
        }
    }
}

pub fn parse_prior(text: &str) -> Result<PriorKind, String> {
    match text.trim() {
        "causal" => Ok(PriorKind::Causal),
        "standard" => Ok(PriorKind::Standard),
        t => Err(format!("unknown prior {t:?} (causal, standard)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioRef {
    Named(String),
    Files { sem: PathBuf, estimands: Option<PathBuf> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostOverride {
    pub fixed: Option<f64>,
    pub variable: Option<bool>,
}

/// A parsed but unresolved configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioRef,
    pub t: Option<usize>,
    pub n: Option<usize>,
    pub n_max: Option<usize>,
    pub p: Option<usize>,
    pub seed: Option<u64>,
    pub prior: Option<PriorKind>,
    pub es: Option<EsSpec>,
    pub direction: Option<Direction>,
    pub batch: Option<usize>,
    pub eval_samples: Option<usize>,
    pub epsilon: Option<EpsilonMode>,
    pub domains: BTreeMap<String, (f64, f64)>,
    pub cost_preset: Option<String>,
    pub costs: BTreeMap<String, CostOverride>,
    pub output: Option<PathBuf>,
}

/// A configuration bound to a loaded scenario.
pub struct Resolved {
    pub scenario: Scenario,
    pub config: CboConfig,
    /// Effective settings, seed and output excluded.
    pub echo: BTreeMap<String, String>,
    pub hash: String,
}

fn config_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config(format!("line {line}: {}", message.into()))
}

fn parse_num<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| config_err(line, format!("{key}: cannot parse {v:?}")))
}

pub fn parse_interval(v: &str) -> Option<(f64, f64)> {
    let inner = v.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (lo, hi) = inner.split_once(',')?;
    Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, CliError> {
        let mut entries: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .map(|(s, _)| *s)
                        .find(|s| *s == name)
                        .ok_or_else(|| config_err(line, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let sec = section.ok_or_else(|| config_err(line, "key outside any section"))?;
            let (key, value) = t
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected key = value, got {t:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = match sec {
                "domains" => key.to_string(),
                "cost" => key.strip_prefix("cost.").unwrap_or(key).to_string(),
                _ => key.to_ascii_lowercase(),
            };
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let known = match sec {
                "domains" => !key.is_empty(),
                "cost" => key == "preset" || key.ends_with(".fixed") || key.ends_with(".variable"),
                _ => allowed.contains(&key.as_str()),
            };
            if !known {
                return Err(config_err(line, format!("unknown key {key:?} in [{sec}]")));
            }
            if entries
                .insert((sec.to_string(), key.clone()), (line, value.to_string()))
                .is_some()
            {
                return Err(config_err(line, format!("duplicate key {key:?} in [{sec}]")));
            }
        }
        let get = |s: &str, k: &str| entries.get(&(s.to_string(), k.to_string())).cloned();

        let scenario = match (get("scenario", "name"), get("scenario", "sem")) {
            (Some((_, name)), None) => ScenarioRef::Named(name),
            (None, Some((_, sem))) => ScenarioRef::Files {
                sem: base.join(sem),
                estimands: get("scenario", "estimands").map(|(_, e)| base.join(e)),
            },
            (Some((line, _)), Some(_)) => {
                return Err(config_err(line, "give either [scenario] name or sem, not both"))
            }
            (None, None) => return Err(CliError::Config("[scenario] needs name or sem".into())),
        };

        let mut cfg = RunConfig {
            scenario,
            t: None,
            n: None,
            n_max: None,
            p: None,
            seed: None,
            prior: None,
            es: None,
            direction: None,
            batch: None,
            eval_samples: None,
            epsilon: None,
            domains: BTreeMap::new(),
            cost_preset: None,
            costs: BTreeMap::new(),
            output: get("output", "dir").map(|(_, d)| base.join(d)),
        };
        for ((sec, key), (line, value)) in &entries {
            let (line, v) = (*line, value.as_str());
            match (sec.as_str(), key.as_str()) {
                ("cbo", "t") => cfg.t = Some(parse_num(v, line, key)?),
                ("cbo", "n") => cfg.n = Some(parse_num(v, line, key)?),
                ("cbo", "n_max") => cfg.n_max = Some(parse_num(v, line, key)?),
                ("cbo", "p") => cfg.p = Some(parse_num(v, line, key)?),
                ("cbo", "seed") => cfg.seed = Some(parse_num(v, line, key)?),
                ("cbo", "batch") => cfg.batch = Some(parse_num(v, line, key)?),
                ("cbo", "eval_samples") => cfg.eval_samples = Some(parse_num(v, line, key)?),
                ("cbo", "prior") => cfg.prior = Some(parse_prior(v).map_err(|m| config_err(line, m))?),
                ("cbo", "es") => cfg.es = Some(EsSpec::parse(v, base).map_err(|m| config_err(line, m))?),
                ("cbo", "direction") => {
                    cfg.direction = Some(match v {
                        "min" => Direction::Min,
                        "max" => Direction::Max,
                        _ => return Err(config_err(line, format!("direction must be min or max, got {v:?}"))),
                    })
                }
                ("cbo", "epsilon") => {
                    cfg.epsilon = Some(if v == "hull" {
                        EpsilonMode::Hull
                    } else {
                        EpsilonMode::Fixed(parse_num(v, line, key)?)
                    })
                }
                ("domains", node) => {
                    let iv = parse_interval(v)
                        .ok_or_else(|| config_err(line, format!("{node}: expected [lo, hi], got {v:?}")))?;
                    cfg.domains.insert(node.to_string(), iv);
                }
                ("cost", "preset") => cfg.cost_preset = Some(v.to_string()),
                ("cost", k) => {
                    let (node, field) = k.rsplit_once('.').expect("checked above");
                    let entry = cfg.costs.entry(node.to_string()).or_default();
                    if field == "fixed" {
                        entry.fixed = Some(parse_num(v, line, k)?);
                    } else {
                        entry.variable = Some(match v {
                            "true" => true,
                            "false" => false,
                            _ => return Err(config_err(line, format!("{k} must be true or false"))),
                        });
                    }
                }
                _ => {}
            }
        }
        Ok(cfg)
    }

    fn load_scenario(&self) -> Result<Scenario, CliError> {
        match &self.scenario {
            ScenarioRef::Named(name) => load_named(name),
            ScenarioRef::Files { sem, estimands } => load_files(sem, estimands.as_deref()),
        }
    }

    /// Loads the scenario and builds the loop configuration. Settings left
    /// unset take the scenario defaults, each logged.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut sc = self.load_scenario()?;
        let mut c = CboConfig::for_scenario(&sc, 0);
        let mut echo = BTreeMap::new();
        echo.insert(
            "scenario".to_string(),
            match &self.scenario {
                ScenarioRef::Named(n) => n.clone(),
                ScenarioRef::Files { sem, .. } => sem.display().to_string(),
            },
        );
        fn pick<T: Clone + std::fmt::Debug>(key: &str, set: Option<T>, default: T) -> T {
            set.unwrap_or_else(|| {
                log::info!("config: {key} not set, using {default:?}");
                default
            })
        }
        c.t = pick("T", self.t, c.t);
        c.n = pick("N", self.n, c.n);
        c.n_max = pick("N_max", self.n_max, c.n_max);
        c.p = pick("P", self.p, c.p);
        c.seed = pick("seed", self.seed, 0);
        c.prior = pick("prior", self.prior, c.prior);
        c.direction = pick("direction", self.direction, c.direction);
        c.batch = pick("batch", self.batch, c.batch);
        c.eval_samples = pick("eval_samples", self.eval_samples, c.eval_samples);
        c.epsilon = pick("epsilon", self.epsilon, c.epsilon);
        let es = pick("es", self.es.clone(), EsSpec::Mis);
        c.es = match &es {
            EsSpec::Mis => ExplorationSetKind::Mis,
            EsSpec::Pomis => ExplorationSetKind::Pomis,
            EsSpec::Bo => ExplorationSetKind::Bo,
            EsSpec::Custom(p) => ExplorationSetKind::Custom(read_sets(p)?),
        };

        for (node, &(lo, hi)) in &self.domains {
            sc.sem
                .set_domain(node, lo, hi)
                .map_err(|e| CliError::Config(format!("[domains] {node}: {e}")))?;
            let id = NodeId::new(node.as_str()).map_err(|e| CliError::Config(e.to_string()))?;
            c.domains.insert(id, (lo, hi));
            echo.insert(format!("domains.{node}"), format!("[{lo}, {hi}]"));
        }

        let preset = pick("cost.preset", self.cost_preset.clone(), "unit".to_string());
        let mut cost = CostModel::preset(&preset, sc.sem.graph())
            .map_err(|e| CliError::Config(format!("[cost] {e}")))?;
        for (node, o) in &self.costs {
            if !sc.sem.graph().contains(node) {
                return Err(CliError::Config(format!("[cost] unknown node {node}")));
            }
            let base = cost.get(node).map_or((1.0, false), |c| (c.fixed, c.variable));
            let id = NodeId::new(node.as_str()).map_err(|e| CliError::Config(e.to_string()))?;
            cost.set(id, o.fixed.unwrap_or(base.0), o.variable.unwrap_or(base.1));
        }
        for node in sc.sem.graph().treatments() {
            if let Some(nc) = cost.get(node.as_str()) {
                echo.insert(format!("cost.{node}"), format!("{}{}", nc.fixed, if nc.variable { "+|x|" } else { "" }));
            }
        }
        c.cost = cost;

        echo.insert("T".into(), c.t.to_string());
        echo.insert("N".into(), c.n.to_string());
        echo.insert("N_max".into(), c.n_max.to_string());
        echo.insert("P".into(), c.p.to_string());
        echo.insert("batch".into(), c.batch.to_string());
        echo.insert("eval_samples".into(), c.eval_samples.to_string());
        echo.insert(
            "prior".into(),
            match c.prior {
                PriorKind::Causal => "causal",
                PriorKind::Standard => "standard",
            }
            .into(),
        );
        echo.insert(
            "direction".into(),
            match c.direction {
                Direction::Min => "min",
                Direction::Max => "max",
            }
            .into(),
        );
        echo.insert(
            "epsilon".into(),
            match c.epsilon {
                EpsilonMode::Hull => "hull".to_string(),
                EpsilonMode::Fixed(e) => e.to_string(),
            },
        );
        echo.insert("es".into(), es.label());
        if let ExplorationSetKind::Custom(sets) = &c.es {
            let list: Vec<String> = sets.iter().map(format_set).collect();
            echo.insert("es.sets".into(), list.join(" "));
        }
        let hash = config_hash(&echo);
        Ok(Resolved {
            scenario: sc,
            config: c,
            echo,
            hash,
        })
    }
}

pub fn load_named(name: &str) -> Result<Scenario, CliError> {
    scenario::load(name).map_err(|e| match e {
        scenario::ScenarioError::Unknown(n) => CliError::UnknownScenario(n),
        other => CliError::Scenario(other),
    })
}

/// Builds a scenario from a SEM file and an optional estimand file.
pub fn load_files(sem: &Path, estimands: Option<&Path>) -> Result<Scenario, CliError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
    };
    let sem_text = read(sem)?;
    let est_text = estimands.map(read).transpose()?;
    let name = sem.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned());
    Scenario::from_sources(&name, &sem_text, est_text.as_deref()).map_err(CliError::Scenario)
}

/// A bundled name, or a `.sem` path whose sibling `.estimands` file is used
/// when present.
pub fn load_scenario_arg(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "sem") {
        let est = path.with_extension("estimands");
        load_files(path, est.exists().then_some(est.as_path()))
    } else {
        load_named(arg)
    }
}

/// Reads one set per non-empty line (`#` comments allowed).
pub fn read_sets(path: &Path) -> Result<Vec<NodeSet>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_set(l).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))))
        .collect()
}

/// Hex SHA-256 of the `key=value` lines of `echo`.
pub fn config_hash(echo: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    for (k, v) in echo {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn full_config() {
        let cfg = parse(
            "# toy run\n[scenario]\nname = toy\n\n[cbo]\nT = 12\nN = 50 # fewer\nN_max = 80\nP = 2\nseed = 4\n\
             prior = standard\nes = custom:sets.txt\ndirection = max\nbatch = 5\neval_samples = 500\nepsilon = 0.25\n\
             [domains]\nZ = [-5, 10]\n[cost]\npreset = unit\ncost.Z.fixed = 2.5\nX.variable = true\n[output]\ndir = out\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, ScenarioRef::Named("toy".into()));
        assert_eq!((cfg.t, cfg.n, cfg.n_max, cfg.p), (Some(12), Some(50), Some(80), Some(2)));
        assert_eq!(cfg.seed, Some(4));
        assert_eq!(cfg.prior, Some(PriorKind::Standard));
        assert_eq!(cfg.es, Some(EsSpec::Custom(PathBuf::from("/cfg/sets.txt"))));
        assert_eq!(cfg.direction, Some(Direction::Max));
        assert_eq!(cfg.epsilon, Some(EpsilonMode::Fixed(0.25)));
        assert_eq!(cfg.domains["Z"], (-5.0, 10.0));
        assert_eq!(cfg.costs["Z"].fixed, Some(2.5));
        assert_eq!(cfg.costs["X"].variable, Some(true));
        assert_eq!(cfg.output, Some(PathBuf::from("/cfg/out")));
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        for text in [
            "[scenario]\nname = toy\n[cbo]\ntemperature = 3\n",
            "[scenario]\nname = toy\n[extra]\n",
            "[scenario]\nname = toy\ncolour = red\n",
            "[scenario]\nname = toy\n[cost]\nB.price = 3\n",
            "name = toy\n",
            "[scenario]\nname = toy\n[cbo]\nT = 3\nT = 4\n",
            "[scenario]\nname = toy\n[cbo]\nT = three\n",
            "[scenario]\nname = toy\n[domains]\nX = 1, 2\n",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_))), "{text:?}");
        }
        let Err(CliError::Config(m)) = parse("[scenario]\nname = toy\n[cbo]\ntemperature = 3\n") else {
            panic!()
        };
        assert!(m.starts_with("line 4:"), "{m}");
    }

    #[test]
    fn defaults_come_from_the_scenario() {
        let r = parse("[scenario]\nname = toy\n").unwrap().resolve().unwrap();
        assert_eq!((r.config.t, r.config.n, r.config.n_max, r.config.p), (30, 100, 200, 3));
        assert_eq!(r.config.es, ExplorationSetKind::Mis);
        assert_eq!(r.echo["cost.X"], "1");
    }

    #[test]
    fn cost_overrides_apply_on_top_of_presets() {
        let r = parse("[scenario]\nname = synthetic\n[cost]\npreset = fixed\nD.variable = true\nE.fixed = 4\n")
            .unwrap()
            .resolve()
            .unwrap();
        let cost = &r.config.cost;
        let set = cbo_core::graph::node_set(["B", "D", "E"]);
        assert_eq!(cost.intervention_cost(&set, &[1.0, -2.0, 3.0]).unwrap(), 10.0 + 7.0 + 4.0);
    }

    #[test]
    fn hash_ignores_seed_but_not_settings() {
        let a = parse("[scenario]\nname = toy\n[cbo]\nseed = 1\n").unwrap().resolve().unwrap();
        let b = parse("[scenario]\nname = toy\n[cbo]\nseed = 2\n").unwrap().resolve().unwrap();
        let c = parse("[scenario]\nname = toy\n[cbo]\nT = 5\n").unwrap().resolve().unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 64);
    }

    #[test]
    fn unknown_scenario() {
        let r = parse("[scenario]\nname = nowhere\n").unwrap().resolve();
        assert!(matches!(r, Err(CliError::UnknownScenario(_))));
    }

    #[test]
    fn domain_overrides_reach_the_simulator() {
        let r = parse("[scenario]\nname = toy\n[domains]\nZ = [-8, 25]\n").unwrap().resolve().unwrap();
        assert_eq!(r.scenario.sem.domain("Z"), Some((-8.0, 25.0)));
        assert_eq!(r.config.domains.len(), 1);
    }
}
