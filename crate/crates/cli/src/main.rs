use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lockopt::lockpoints::Constraints;
use lockopt::pipeline::{self, EngineKind, RunConfig};

#[derive(Parser)]
#[command(name = "lockopt", version, about = "Metric-driven behavioral logic locking for MiniC programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List obfuscation points and the full key budget.
    Analyze {
        #[command(flatten)]
        src: SrcArgs,
        /// Print the full point list as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Explore, select and write the locked program with its reports.
    Lock {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long, default_value = "lockopt-out")]
        out: PathBuf,
    },
    /// Score one solution vector.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// `[1,0,2]`, `1,0,2`, or a JSON file with an array or a run report.
        #[arg(long)]
        solution: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SrcArgs {
    /// MiniC source file, or `bench:<name>` for a bundled benchmark.
    #[arg(long)]
    src: Option<String>,
    #[arg(long)]
    top: Option<String>,
    /// Function whose points are never locked (repeatable).
    #[arg(long = "exclude", value_name = "FUNC")]
    exclude: Vec<String>,
    /// Point id that must be locked (repeatable).
    #[arg(long = "force", value_name = "ID")]
    force: Vec<usize>,
    /// Key bits per locked constant (1..=32).
    #[arg(long)]
    bc: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    src: SrcArgs,
    /// JSON run config; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hex key or `random:<bits>:<seed>`.
    #[arg(long)]
    key: Option<String>,
    #[arg(long, value_parser = ["25", "50", "75", "100"])]
    key_frac: Option<String>,
    /// JSON file of input vectors, or `random:<T>:<seed>`.
    #[arg(long)]
    tests: Option<String>,
    #[arg(long)]
    wrong_keys: Option<usize>,
    #[arg(long)]
    wrong_key_seed: Option<u64>,
    /// ga, random, tao or full.
    #[arg(long)]
    engine: Option<EngineKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    search_seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// JSON table of per-category cost units.
    #[arg(long)]
    cost_model: Option<String>,
    /// Steps per simulation run; derived from the golden runs when omitted.
    #[arg(long)]
    step_budget: Option<u64>,
    /// Worker threads for fitness evaluation; does not affect results.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    stagnation: Option<usize>,
    #[arg(long)]
    crossover: Option<f64>,
    #[arg(long)]
    mutation: Option<f64>,
    #[arg(long)]
    gene_mutation: Option<f64>,
    #[arg(long)]
    elite: Option<usize>,
    #[arg(long)]
    tournament: Option<usize>,
    /// Samples drawn by the random engine.
    #[arg(long)]
    random_budget: Option<usize>,
}

fn constraints(base: Constraints, a: &SrcArgs) -> Constraints {
    let mut c = base;
    if !a.exclude.is_empty() {
        c.excluded_functions = a.exclude.clone();
    }
    if !a.force.is_empty() {
        c.forced_points = a.force.clone();
    }
    if let Some(b) = a.bc {
        c.const_bits = b;
    }
    c
}

fn config(a: &RunArgs) -> Result<RunConfig> {
    let mut c = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:expr),* $(,)?) => {
            $(if let Some(v) = a.$flag.clone() { $field = v; })*
        };
    }
    set! {
        wrong_keys => c.wrong_keys,
        engine => c.engine,
        seed => c.seed,
        epsilon => c.epsilon,
        population => c.ga.population,
        generations => c.ga.max_generations,
        stagnation => c.ga.stagnation_limit,
        crossover => c.ga.crossover_prob,
        mutation => c.ga.mutation_prob,
        gene_mutation => c.ga.gene_mutation_prob,
        elite => c.ga.elite,
        tournament => c.ga.tournament,
        random_budget => c.random_budget,
    }
    if let Some(s) = &a.src.src {
        c.src = s.clone();
    }
    if a.src.top.is_some() {
        c.top = a.src.top.clone();
    }
    if a.key.is_some() {
        c.key = a.key.clone();
    }
    if let Some(f) = &a.key_frac {
        c.key_frac = Some(f.parse()?);
    }
    if a.tests.is_some() {
        c.tests = a.tests.clone();
    }
    if a.wrong_key_seed.is_some() {
        c.wrong_key_seed = a.wrong_key_seed;
    }
    if a.search_seed.is_some() {
        c.search_seed = a.search_seed;
    }
    if a.cost_model.is_some() {
        c.cost_model = a.cost_model.clone();
    }
    if a.step_budget.is_some() {
        c.step_budget = a.step_budget;
    }
    c.constraints = constraints(c.constraints, &a.src);
    if c.src.is_empty() {
        anyhow::bail!("no source given (use --src or a config with `src`)");
    }
    Ok(c)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Analyze { src, json } => {
            let path = src.src.clone().context("--src is required")?;
            let r = pipeline::analyze(&path, src.top.as_deref(), &constraints(Constraints::default(), &src))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("{}: {}", r.top, r.summary);
                println!("design space: {} solutions, {} output bits", r.space_size, r.output_bits);
            }
        }
        Cmd::Lock { run, out } => {
            let cfg = config(&run)?;
            let o = with_jobs(run.jobs, || pipeline::lock(&cfg))??;
            o.write(&out)?;
            let r = &o.report;
            println!("{}: {}", r.program.top, r.program.points);
            println!(
                "{} engine: {} evaluations, best H {:.6}",
                r.search.engine, r.search.evaluations, r.search.best_h
            );
            println!(
                "selected {} (H {:.6}, {} key bits of {}, cost {})",
                r.selected.vector, r.selected.entropy.h, r.selected.key_bits, r.key_length, r.cost.total
            );
            println!("wrote {}", out.display());
        }
        Cmd::Eval { run, solution, json } => {
            let cfg = config(&run)?;
            let s = pipeline::parse_solution(&solution)?;
            let r = with_jobs(run.jobs, || pipeline::evaluate(&cfg, &s))??;
            if json {
                print!("{}", r.to_json());
            } else {
                println!("H {:.12}", r.entropy.h);
                println!("NH {:.6}", r.entropy.nh);
                println!("cost {} (overhead {})", r.cost.total, r.cost.overhead);
                let p: Vec<String> = r.entropy.p.iter().map(|p| format!("{p:.4}")).collect();
                println!("P {}", p.join(" "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
