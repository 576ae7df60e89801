use std::fs;
use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use mimalloc::MiMalloc;
use serde::Serialize;
use stowage_bench::compare::{compare_variants, render_table, write_comparison};
use stowage_bench::output::{emit_outputs, plotdata_from_dir};
use stowage_bench::runner::{load_runs, run_experiment, worker_count, write_traces};
use stowage_bench::{ExperimentConfig, ScenarioRef};
use stowage_core::baselines::{
    brute_force_min_makespan_guarded, brute_force_min_shifters_guarded, greedy_min_shifter_policy,
    OracleResult, MAX_MAKESPAN_ORACLE_CONTAINERS, MAX_MAKESPAN_ORACLE_CRANES,
    MAX_SHIFTER_ORACLE_CONTAINERS,
};
use stowage_core::{EnvConfig, EnvKind, EpisodeKpis, ProblemInstance, TimeModel};
use stowage_rl::Algo;

// glibc's heap fragments badly under the matrix churn of training; mimalloc keeps
// resident memory flat.
#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

#[derive(Parser)]
#[command(name = "stowage-bench", version, about = "Container stowage RL benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate agents, then write curves.csv, finals.csv and plotdata/.
    Run(RunArgs),
    /// Exhaustive optimum for a serialized problem instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Defaults to shifters for one crane and makespan otherwise.
        #[arg(long, value_enum)]
        objective: Option<Objective>,
        /// Raise the container guard of the enumeration.
        #[arg(long)]
        max_containers: Option<usize>,
    },
    /// Compare the final KPIs of two output directories with Welch t-tests.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild plot bands from an output directory's curves.csv.
    Plotdata {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an experiment config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Objective {
    Shifters,
    Makespan,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<u8>,
    /// One or more algorithms, comma separated.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algo>,
    #[arg(long, value_parser = parse_env)]
    env: Option<EnvKind>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    timesteps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Also write a greedy episode trace per run to traces/.
    #[arg(long)]
    trace: bool,
}

fn parse_env(s: &str) -> Result<EnvKind, String> {
    EnvKind::ALL
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown env '{s}'; expected spge, spge-mc or spaec"))
}

fn experiment_configs(args: &RunArgs) -> anyhow::Result<Vec<ExperimentConfig>> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        None => None,
    };
    let algos: Vec<Option<Algo>> = if args.algo.is_empty() {
        vec![None]
    } else {
        args.algo.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for algo in algos {
        let mut cfg = match (&base, args.scenario, algo) {
            (Some(b), _, _) => b.clone(),
            (None, Some(s), Some(a)) => ExperimentConfig::new(ScenarioRef::Id(s), a),
            (None, None, _) => bail!("run needs --scenario or --config"),
            (None, _, None) => bail!("run needs --algo or --config"),
        };
        if let Some(s) = args.scenario {
            cfg.scenario = ScenarioRef::Id(s);
        }
        if let Some(a) = algo {
            cfg.algo = a;
        }
        if args.env.is_some() {
            cfg.env = args.env;
        }
        if args.reps.is_some() {
            cfg.repetitions = args.reps;
        }
        if let Some(t) = args.timesteps {
            cfg.total_timesteps = t;
        }
        if let Some(s) = args.seed {
            cfg.base_seed = s;
        }
        if let Some(o) = &args.out {
            cfg.out_dir = o.clone();
        }
        if args.eval_every.is_some() {
            cfg.eval_every = args.eval_every;
        }
        if let Some(e) = args.eval_episodes {
            cfg.eval_episodes = e;
        }
        cfg.trace |= args.trace;
        cfg.validate()?;
        out.push(cfg);
    }
    Ok(out)
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let configs = experiment_configs(&args)?;
    let workers = worker_count()?;
    for cfg in &configs {
        eprintln!(
            "scenario {} {} {}: {} run(s) x {} steps",
            cfg.scenario.label(),
            cfg.variant().name(),
            cfg.algo,
            cfg.repetitions(),
            cfg.total_timesteps
        );
        run_experiment(cfg, workers)?;
    }
    let mut dirs: Vec<&PathBuf> = configs.iter().map(|c| &c.out_dir).collect();
    dirs.dedup();
    for dir in dirs {
        let entries = load_runs(dir)?;
        emit_outputs(&entries, dir)?;
        write_traces(&entries, dir)?;
        eprintln!("wrote {} ({} runs)", dir.display(), entries.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    objective: Objective,
    num_containers: usize,
    num_cranes: usize,
    oracle: OracleResult,
    greedy: EpisodeKpis,
}

fn oracle(path: PathBuf, objective: Option<Objective>, max_containers: Option<usize>) -> anyhow::Result<()> {
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let instance = ProblemInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let k = instance.num_cranes();
    let objective = objective.unwrap_or(if k > 1 { Objective::Makespan } else { Objective::Shifters });
    let time = TimeModel::default();
    let (result, kind) = match objective {
        Objective::Shifters => (
            brute_force_min_shifters_guarded(
                &instance,
                max_containers.unwrap_or(MAX_SHIFTER_ORACLE_CONTAINERS),
            )?,
            EnvKind::Spge,
        ),
        Objective::Makespan => (
            brute_force_min_makespan_guarded(
                &instance,
                time,
                max_containers.unwrap_or(MAX_MAKESPAN_ORACLE_CONTAINERS),
                MAX_MAKESPAN_ORACLE_CRANES,
            )?,
            EnvKind::SpgeMc,
        ),
    };
    let mut env = kind.make(
        instance.clone(),
        EnvConfig {
            time_model: time,
            ..EnvConfig::default()
        },
    )?;
    let greedy = greedy_min_shifter_policy(env.as_mut())?;
    let report = OracleReport {
        objective,
        num_containers: instance.num_containers(),
        num_cranes: k,
        oracle: result,
        greedy,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Oracle {
            instance,
            objective,
            max_containers,
        } => oracle(instance, objective, max_containers),
        Command::Compare { a, b, out } => {
            let rows = compare_variants(&a, &b)?;
            write_comparison(&rows, &out)?;
            print!("{}", render_table(&rows, std::io::stdout().is_terminal()));
            Ok(())
        }
        Command::Plotdata { input, out } => {
            for name in plotdata_from_dir(&input, &out)? {
                println!("{}", out.join(name).display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            cfg.validate()?;
            println!(
                "ok: scenario {} {} {}, {} run(s), {} steps",
                cfg.scenario.label(),
                cfg.variant().name(),
                cfg.algo,
                cfg.repetitions(),
                cfg.total_timesteps
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
