//! `rk`: particle runs, jump-process samples, Duhamel solves and sweeps.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use rk_core::dynamics::{run, SimConfig};
use rk_core::sampling::stream_rng;
use rk_core::solver::{DiscreteGain, DuhamelSolver, JumpSampler};
use rk_core::trees::{classify, default_good_params, read_tree_records};
use rk_core::{
    estimate_tv, run_experiment, BackgroundLaw, ExperimentConfig, GoodTreeReport, Histogram, InitialLaw, KineticDensity,
    VelocityGrid,
};

#[derive(Parser, Debug)]
#[command(name = "rk", version, about = "Rayleigh-gas particle dynamics against the linear Boltzmann limit")]
struct Cli {
    /// JSON file with `f0` and `g0` laws (an experiment config also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "RK_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "RK_WORKERS")]
    workers: Option<usize>,
    /// Output directory; results go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tagged-particle runs, written as JSON-lines trees.
    Simulate(SimulateArgs),
    /// Jump-process trajectories, written as JSON lines.
    Jump(JumpArgs),
    /// Duhamel series on a velocity grid, written as a density CSV.
    Solve(SolveArgs),
    /// Collision-tree tools.
    Trees {
        #[command(subcommand)]
        command: TreesCommand,
    },
    /// Total-variation distance between two histogram files.
    Compare { a: PathBuf, b: PathBuf },
    /// Full ε sweep from an experiment config.
    Experiment,
}

#[derive(Subcommand, Debug)]
enum TreesCommand {
    /// Good-tree CSV for a JSON-lines tree file.
    Classify {
        file: PathBuf,
        /// Used for records that do not carry their own ε.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct HistogramArgs {
    /// Also write a velocity histogram with this many bins per axis.
    #[arg(long)]
    hist_bins: Option<usize>,
    #[arg(long, default_value_t = 6.0)]
    hist_v_max: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    n_runs: u64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Absorb the tagged particle at its first collision.
    #[arg(long)]
    no_gain: bool,
    #[command(flatten)]
    hist: HistogramArgs,
}

#[derive(Args, Debug)]
struct JumpArgs {
    #[arg(long, default_value_t = 1000)]
    n_samples: u64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Stop at the first jump instead of taking it.
    #[arg(long)]
    no_jumps: bool,
    #[command(flatten)]
    hist: HistogramArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 12)]
    j_max: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 3.0)]
    v_max: f64,
    #[arg(long, default_value_t = 32)]
    time_steps: usize,
    #[command(flatten)]
    hist: HistogramArgs,
}

#[derive(Deserialize, Default)]
struct Laws {
    #[serde(default)]
    f0: InitialLaw,
    #[serde(default)]
    g0: BackgroundLaw,
}

fn read_laws(path: Option<&Path>) -> Result<Laws> {
    let Some(path) = path else { return Ok(Laws::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let laws: Laws = serde_json::from_str(&text).with_context(|| format!("parsing laws in {}", path.display()))?;
    laws.f0.validate()?;
    laws.g0.validate()?;
    Ok(laws)
}

/// Writes `name` under `--out`, or to stdout without one.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text).with_context(|| format!("writing {name}"))?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_histogram(out: Option<&Path>, name: &str, h: &Histogram) -> Result<()> {
    let Some(dir) = out else { bail!("--hist-bins needs --out") };
    fs::create_dir_all(dir)?;
    h.write(&dir.join(name))?;
    Ok(())
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(1).max(1)).build()?)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let laws = read_laws(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(0);
    let cfg = SimConfig::boltzmann_grad(args.epsilon, args.t_end, seed)?.with_gain(!args.no_gain);
    let outcomes = pool(cli.workers)?.install(|| {
        (0..args.n_runs)
            .into_par_iter()
            .map(|i| run(&cfg, &laws.f0, &laws.g0, &mut stream_rng(seed, i)))
            .collect::<rk_core::Result<Vec<_>>>()
    })?;
    let mut lines = String::new();
    for o in &outcomes {
        lines.push_str(&o.record(args.epsilon, args.t_end).to_json_line()?);
        lines.push('\n');
    }
    emit(cli.out.as_deref(), "trees.jsonl", &lines)?;
    if let Some(bins) = args.hist.hist_bins {
        let mut h = Histogram::new(VelocityGrid::new(bins, args.hist.hist_v_max)?);
        for o in outcomes.iter().filter(|o| o.completed()) {
            if o.absorbed_at.is_some() { h.add_absorbed() } else { h.add(o.final_state.v) }
        }
        write_histogram(cli.out.as_deref(), "simulate.hist", &h)?;
    }
    Ok(())
}

fn jump(cli: &Cli, args: &JumpArgs) -> Result<()> {
    let laws = read_laws(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(0);
    let sampler = JumpSampler::new(&laws.f0, &laws.g0, args.t_end)?.with_jumps(!args.no_jumps);
    let trajectories = pool(cli.workers)?.install(|| {
        (0..args.n_samples)
            .into_par_iter()
            .map(|i| sampler.sample(&mut stream_rng(seed, i)))
            .collect::<rk_core::Result<Vec<_>>>()
    })?;
    let mut lines = String::new();
    for t in &trajectories {
        lines.push_str(&t.to_json_line()?);
        lines.push('\n');
    }
    emit(cli.out.as_deref(), "jumps.jsonl", &lines)?;
    if let Some(bins) = args.hist.hist_bins {
        let mut h = Histogram::new(VelocityGrid::new(bins, args.hist.hist_v_max)?);
        for t in &trajectories {
            if t.survived(args.t_end) { h.add(t.final_state().v) } else { h.add_absorbed() }
        }
        write_histogram(cli.out.as_deref(), "jump.hist", &h)?;
    }
    Ok(())
}

fn solve(cli: &Cli, args: &SolveArgs) -> Result<()> {
    let laws = read_laws(cli.config.as_deref())?;
    let grid = VelocityGrid::new(args.bins, args.v_max)?;
    let f0 = KineticDensity::from_velocity_law(grid, &laws.f0.velocity)?;
    let mut solver = DuhamelSolver::new(pool(cli.workers)?.install(|| DiscreteGain::build(grid, &laws.g0))?);
    solver.time_steps = args.time_steps;
    let sol = solver.solve(&f0, args.t, args.j_max)?;
    if let Some(w) = &sol.warning {
        eprintln!("warning: {w}");
    }
    eprintln!("mass {:.6}, series remainder {:.3e}", sol.density.mass(), sol.remainder);
    emit(cli.out.as_deref(), "density.csv", &sol.density.to_csv()?)?;
    if let Some(bins) = args.hist.hist_bins {
        let h = Histogram::from_density(&sol.density, &VelocityGrid::new(bins, args.hist.hist_v_max)?, 1.0)?;
        write_histogram(cli.out.as_deref(), "solve.hist", &h)?;
    }
    Ok(())
}

fn classify_trees(cli: &Cli, file: &Path, epsilon: Option<f64>) -> Result<()> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let mut csv = format!("{}\n", GoodTreeReport::CSV_HEADER);
    for (k, rec) in read_tree_records(&text)?.iter().enumerate() {
        let Some(eps) = rec.epsilon.or(epsilon) else {
            bail!("record {k} carries no epsilon; pass --epsilon");
        };
        let report = classify(&rec.tree(), &default_good_params(eps)?)?;
        csv.push_str(&report.csv_row(eps));
        csv.push('\n');
    }
    emit(cli.out.as_deref(), "good_trees.csv", &csv)
}

fn compare(a: &Path, b: &Path) -> Result<()> {
    let read = |p: &Path| Histogram::read(p).with_context(|| format!("reading {}", p.display()));
    println!("{:?}", estimate_tv(&read(a)?, &read(b)?)?);
    Ok(())
}

fn experiment(cli: &Cli) -> Result<()> {
    let Some(path) = cli.config.as_deref() else { bail!("experiment needs --config FILE") };
    let mut cfg = ExperimentConfig::read(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    cfg.validate().with_context(|| format!("invalid config {}", path.display()))?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let outcome = run_experiment(&cfg, Some(&out))?;
    print!("{}", outcome.report.to_csv());
    for m in &outcome.messages {
        eprintln!("invalid: {m}");
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(&cli, a),
        Command::Jump(a) => jump(&cli, a),
        Command::Solve(a) => solve(&cli, a),
        Command::Trees { command: TreesCommand::Classify { file, epsilon } } => classify_trees(&cli, file, *epsilon),
        Command::Compare { a, b } => compare(a, b),
        Command::Experiment => experiment(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
