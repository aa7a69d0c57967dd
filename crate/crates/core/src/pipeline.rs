//! End-to-end runs: analyze, lock and re-evaluate, with reproducible reports.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchmarks;
use crate::costsel::{estimate_cost, select, Candidate, CostEstimate, CostModel, DEFAULT_EPSILON};
use crate::entropy::{make_wrong_keys, EntropyReport, WrongKeySet};
use crate::error::{Error, Result};
use crate::evaluate::Evaluator;
use crate::explore::{DseConfig, Full, Ga, GenerationStats, RandomSearch, SearchEngine, Tao};
use crate::key::LockingKey;
use crate::locker::{KeySlice, LockedProgram};
use crate::lockpoints::{find_points, space_size, Constraints, ObfuscationPoint, PointsSummary, SolutionVector};
use crate::minic::{emit_source, parse, Program};
use crate::sim::{random_inputs, InputVector};

pub const DEFAULT_TESTS: usize = 100;
pub const DEFAULT_WRONG_KEYS: usize = 100;
pub const KEY_FRACTIONS: [u32; 4] = [25, 50, 75, 100];
/// Keys up to this length may be enumerated as the wrong-key set.
const EXHAUSTIVE_KEY_BITS: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    #[default]
    Ga,
    Random,
    Tao,
    Full,
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ga" => Ok(EngineKind::Ga),
            "random" => Ok(EngineKind::Random),
            "tao" => Ok(EngineKind::Tao),
            "full" => Ok(EngineKind::Full),
            _ => Err(Error::Config(format!("unknown engine `{s}` (expected ga, random, tao or full)"))),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EngineKind::Ga => "ga",
            EngineKind::Random => "random",
            EngineKind::Tao => "tao",
            EngineKind::Full => "full",
        };
        f.write_str(s)
    }
}

/// Everything that determines a run. Unset seeds and specs are derived
/// from `seed` and written back, so the echoed config replays the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// MiniC file path, or `bench:<name>` for a bundled program.
    pub src: String,
    pub top: Option<String>,
    /// Hex string or `random:<bits>:<seed>`.
    pub key: Option<String>,
    /// Key length as a percentage of the full budget.
    pub key_frac: Option<u32>,
    /// JSON file of input vectors, or `random:<T>:<seed>`.
    pub tests: Option<String>,
    pub wrong_keys: usize,
    pub wrong_key_seed: Option<u64>,
    pub engine: EngineKind,
    /// Sample count for the random engine.
    pub random_budget: usize,
    pub search_seed: Option<u64>,
    pub ga: DseConfig,
    pub epsilon: f64,
    pub cost_model: Option<String>,
    pub seed: u64,
    pub step_budget: Option<u64>,
    pub constraints: Constraints,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            src: String::new(),
            top: None,
            key: None,
            key_frac: None,
            tests: None,
            wrong_keys: DEFAULT_WRONG_KEYS,
            wrong_key_seed: None,
            engine: EngineKind::Ga,
            random_budget: 1000,
            search_seed: None,
            ga: DseConfig::default(),
            epsilon: DEFAULT_EPSILON,
            cost_model: None,
            seed: 0,
            step_budget: None,
            constraints: Constraints::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn load_program(src: &str, top: Option<&str>) -> Result<Program> {
    if let Some(name) = src.strip_prefix("bench:") {
        let b = benchmarks::get(name)?;
        return Ok(parse(b.source, Some(top.unwrap_or(b.name)))?);
    }
    let text = std::fs::read_to_string(src).map_err(|e| Error::Io(format!("{src}: {e}")))?;
    Ok(parse(&text, top)?)
}

fn read_json_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

/// Seeds actually used; `None` where the input came from a file or literal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Seeds {
    pub key: Option<u64>,
    pub tests: Option<u64>,
    pub wrong_keys: u64,
    pub search: u64,
}

fn spec_seed(spec: &str) -> Option<u64> {
    spec.strip_prefix("random:")?.rsplit(':').next()?.parse().ok()
}

/// A config with every derived field filled in, plus the materialised inputs.
pub struct Resolved {
    pub config: RunConfig,
    pub seeds: Seeds,
    pub key: LockingKey,
    pub tests: Vec<InputVector>,
    pub wrong_keys: WrongKeySet,
    pub model: CostModel,
}

pub fn resolve(cfg: &RunConfig, program: &Program, points: &[ObfuscationPoint]) -> Result<Resolved> {
    let mut c = cfg.clone();
    c.top = Some(program.top_name.clone());
    let full = PointsSummary::of(points).bits;

    if let Some(f) = c.key_frac {
        if !KEY_FRACTIONS.contains(&f) {
            return Err(Error::Config(format!("key fraction {f} is not one of 25, 50, 75, 100")));
        }
    }
    let target = (full * c.key_frac.unwrap_or(100) as usize).div_ceil(100);
    let spec = c.key.clone().unwrap_or_else(|| format!("random:{target}:{}", c.seed));
    let mut key = LockingKey::parse_spec(&spec)?;
    if c.key_frac.is_some() {
        if key.len() < target {
            return Err(Error::Key(format!("key has {} bits, key fraction needs {target}", key.len())));
        }
        key = key.truncated(target);
    }
    if key.is_empty() {
        return Err(Error::Key("the key must have at least one bit".into()));
    }
    c.key = Some(spec);

    let tests_spec = c.tests.clone().unwrap_or_else(|| format!("random:{DEFAULT_TESTS}:{}", c.seed.wrapping_add(1)));
    let tests = if let Some(rest) = tests_spec.strip_prefix("random:") {
        let bad = || Error::Config(format!("bad test spec `{tests_spec}`"));
        let (n, seed) = rest.split_once(':').ok_or_else(bad)?;
        random_inputs(program, n.parse().map_err(|_| bad())?, seed.parse().map_err(|_| bad())?)
    } else {
        let tests: Vec<InputVector> = serde_json::from_str(&read_json_file(&tests_spec)?)
            .map_err(|e| Error::Io(format!("{tests_spec}: {e}")))?;
        tests
    };
    c.tests = Some(tests_spec);

    let wk_seed = *c.wrong_key_seed.get_or_insert(c.seed.wrapping_add(2));
    let wrong_keys = if key.len() <= EXHAUSTIVE_KEY_BITS && c.wrong_keys as u64 >= (1u64 << key.len()) - 1 {
        WrongKeySet::exhaustive(&key)?
    } else {
        make_wrong_keys(&key, c.wrong_keys, wk_seed)?
    };

    let search = *c.search_seed.get_or_insert(c.seed.wrapping_add(3));
    c.ga.seed = search;

    let model = match &c.cost_model {
        Some(path) => CostModel::from_json(&read_json_file(path)?)?,
        None => CostModel::default(),
    };

    let seeds = Seeds {
        key: c.key.as_deref().and_then(spec_seed),
        tests: c.tests.as_deref().and_then(spec_seed),
        wrong_keys: wk_seed,
        search,
    };
    Ok(Resolved { config: c, seeds, key, tests, wrong_keys, model })
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub top: String,
    pub summary: PointsSummary,
    /// Design-space size as a decimal string.
    pub space_size: String,
    pub output_bits: usize,
    pub points: Vec<ObfuscationPoint>,
}

pub fn analyze(src: &str, top: Option<&str>, constraints: &Constraints) -> Result<AnalyzeReport> {
    let program = load_program(src, top)?;
    let points = find_points(&program, constraints)?;
    Ok(AnalyzeReport {
        top: program.top_name.clone(),
        summary: PointsSummary::of(&points),
        space_size: space_size(&points).to_string(),
        output_bits: program.output_bits(),
        points,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WrongKeyInfo {
    pub count: usize,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProgramInfo {
    pub top: String,
    pub points: PointsSummary,
    pub space_size: String,
    pub output_bits: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchInfo {
    pub engine: EngineKind,
    pub evaluations: usize,
    pub best: SolutionVector,
    #[serde(rename = "best_H")]
    pub best_h: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectedInfo {
    pub vector: SolutionVector,
    pub key_bits: usize,
    pub active_points: usize,
    /// Candidates inside the epsilon band.
    pub band: usize,
    pub alloc: BTreeMap<usize, KeySlice>,
    pub entropy: EntropyReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub program: ProgramInfo,
    pub key_length: usize,
    pub tests: usize,
    pub wrong_keys: WrongKeyInfo,
    pub step_budget: u64,
    pub search: SearchInfo,
    pub selected: SelectedInfo,
    pub cost: CostEstimate,
    pub trace: Vec<GenerationStats>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub struct LockOutcome {
    pub report: RunReport,
    pub locked: LockedProgram,
    pub locked_source: String,
    pub trace_csv: String,
    pub seconds: f64,
}

impl LockOutcome {
    /// Writes `locked.c`, `report.json`, `trace.csv` and `timing.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("locked.c"), &self.locked_source).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.report.to_json()).map_err(io)?;
        std::fs::write(dir.join("trace.csv"), &self.trace_csv).map_err(io)?;
        let timing = serde_json::json!({ "wall_seconds": self.seconds });
        std::fs::write(dir.join("timing.json"), format!("{timing:#}\n")).map_err(io)?;
        Ok(())
    }
}

struct Prepared {
    ev: Evaluator,
    res: Resolved,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(Error::Config(format!("epsilon {} outside [0, 1]", cfg.epsilon)));
    }
    let program = load_program(&cfg.src, cfg.top.as_deref())?;
    let points = find_points(&program, &cfg.constraints)?;
    let res = resolve(cfg, &program, &points)?;
    let ev = Evaluator::new(
        program,
        points,
        res.key.clone(),
        res.tests.clone(),
        res.wrong_keys.clone(),
        cfg.step_budget,
    )?;
    Ok(Prepared { ev, res })
}

fn engine(c: &RunConfig) -> Box<dyn SearchEngine> {
    match c.engine {
        EngineKind::Ga => Box::new(Ga(c.ga.clone())),
        EngineKind::Random => Box::new(RandomSearch {
            budget: c.random_budget,
            seed: c.search_seed.expect("resolved config has a search seed"),
        }),
        EngineKind::Tao => Box::new(Tao),
        EngineKind::Full => Box::new(Full),
    }
}

/// Explores, selects the cheapest near-best solution and locks it.
pub fn lock(cfg: &RunConfig) -> Result<LockOutcome> {
    let start = Instant::now();
    let Prepared { ev, res } = prepare(cfg)?;
    let result = engine(&res.config).search(&ev)?;

    let candidates = result
        .near_best(res.config.epsilon, &ev.points)
        .into_iter()
        .map(|(solution, h)| Ok(Candidate { locked: ev.lock(&solution)?, solution, h }))
        .collect::<Result<Vec<_>>>()?;
    let sel = select(&candidates, res.config.epsilon, &res.model)?;
    let locked = candidates[sel.index].locked.clone();
    let entropy = ev.evaluate_locked(&locked)?;

    let report = RunReport {
        tool: "lockopt",
        version: env!("CARGO_PKG_VERSION"),
        program: ProgramInfo {
            top: ev.program.top_name.clone(),
            points: PointsSummary::of(&ev.points),
            space_size: space_size(&ev.points).to_string(),
            output_bits: ev.program.output_bits(),
        },
        key_length: ev.key_len(),
        tests: ev.tests.len(),
        wrong_keys: WrongKeyInfo { count: ev.wrong_keys.len(), exhaustive: ev.wrong_keys.seed.is_none() },
        step_budget: ev.step_budget,
        search: SearchInfo {
            engine: res.config.engine,
            evaluations: result.evaluated.len(),
            best: result.best.clone(),
            best_h: result.best_h,
        },
        selected: SelectedInfo {
            vector: sel.solution.clone(),
            key_bits: sel.cost.key_bits,
            active_points: sel.solution.active(),
            band: sel.band,
            alloc: locked.alloc.clone(),
            entropy,
        },
        cost: sel.cost,
        trace: result.trace.generations.clone(),
        config: res.config,
        seeds: res.seeds,
    };
    Ok(LockOutcome {
        locked_source: emit_source(&locked.ast),
        trace_csv: result.trace.to_csv(),
        report,
        locked,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub seeds: Seeds,
    pub solution: SolutionVector,
    pub key_length: usize,
    pub entropy: EntropyReport,
    pub cost: CostEstimate,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Scores a given solution under the same inputs a `lock` run would use.
pub fn evaluate(cfg: &RunConfig, solution: &SolutionVector) -> Result<EvalReport> {
    let Prepared { ev, res } = prepare(cfg)?;
    let locked = ev.lock(solution)?;
    let entropy = ev.evaluate_locked(&locked)?;
    let cost = estimate_cost(&locked, &res.model)?;
    Ok(EvalReport {
        config: res.config,
        seeds: res.seeds,
        solution: solution.clone(),
        key_length: ev.key_len(),
        entropy,
        cost,
    })
}

/// Reads a solution from `[1,0,2]`, `1,0,2`, or a JSON file holding either
/// an array or a run report.
pub fn parse_solution(text: &str) -> Result<SolutionVector> {
    let t = text.trim();
    if t.starts_with('[') {
        return serde_json::from_str(t).map_err(|e| Error::Input(format!("bad solution vector: {e}")));
    }
    if t.is_empty() || t.split(',').all(|x| x.trim().parse::<u32>().is_ok()) {
        let v = t.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse().unwrap());
        return Ok(SolutionVector(v.collect()));
    }
    let body = read_json_file(t)?;
    let v: serde_json::Value = serde_json::from_str(&body)?;
    let vec = if v.is_array() { &v } else { &v["selected"]["vector"] };
    serde_json::from_value(vec.clone()).map_err(|e| Error::Input(format!("{t}: no solution vector ({e})")))
}
