//! Boltzmann-Grad sweeps: particle dynamics against the jump process.
//!
//! For each ε the harness runs `M` tagged-particle realizations and compares
//! their velocity histograms at the evaluation times with a reference of
//! `M' ≥ 10 M` jump-process samples. A loss-only pass (no gain in either
//! system) runs first and gates the validity of the full rows.

pub mod plot;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::histogram::{bootstrap_tv, estimate_tv, Histogram};
use crate::laws::{check_admissibility, BackgroundLaw, InitialLaw, VelocityLaw};
use crate::sampling::{boltzmann_grad_n, stream_rng, zeta};
use crate::solver::density::VelocityGrid;
use crate::solver::jump::JumpSampler;
use crate::solver::rates::loss_rate;
use crate::trees::{classify, default_good_params, SimStatus, TreeRecord};
use plot::{line_chart, Series};

/// Abort fraction above which an experiment is flagged invalid.
pub const MAX_ABORT_FRACTION: f64 = 0.05;
/// Loss-only rows must agree within this many bootstrap errors.
pub const LOSS_ONLY_SIGMAS: f64 = 3.0;
/// Largest ε at which the loss-only check gates validity.
pub const LOSS_ONLY_GATE_EPSILON: f64 = 0.1;

pub const REPORT_HEADER: &str = "epsilon,N,t,tv_empirical_vs_ideal,tv_mc_error,good_tree_fraction,mean_collisions,zeta_theoretical,zeta_empirical,aborted_runs";
pub const LOSS_ONLY_HEADER: &str = "epsilon,N,t,tv,tv_mc_error,survival_particle,survival_jump,survival_exact,passed";

fn default_workers() -> usize {
    1
}
fn default_reference_factor() -> usize {
    10
}
fn default_resamples() -> usize {
    200
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub realizations_per_eps: usize,
    pub t_eval: Vec<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub f0: InitialLaw,
    pub g0: BackgroundLaw,
    pub bins_per_axis: usize,
    pub v_max: f64,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// `M' / M` for the jump-process reference.
    #[serde(default = "default_reference_factor")]
    pub reference_factor: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_true")]
    pub loss_only_check: bool,
    #[serde(default = "default_true")]
    pub plots: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// `RK_SEED` and `RK_WORKERS` override the file values.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var("RK_SEED") {
            self.seed = s.trim().parse().map_err(|e| Error::Parse(format!("RK_SEED='{s}': {e}")))?;
        }
        if let Ok(s) = std::env::var("RK_WORKERS") {
            self.workers = s.trim().parse().map_err(|e| Error::Parse(format!("RK_WORKERS='{s}': {e}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.epsilons.is_empty() {
            return bad("epsilons must not be empty".into());
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("epsilons must be strictly decreasing, got {:?}", self.epsilons));
        }
        if self.realizations_per_eps < 100 {
            return bad(format!("realizations_per_eps must be at least 100, got {}", self.realizations_per_eps));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("T must be positive, got {}", self.horizon));
        }
        if self.t_eval.is_empty() || self.t_eval.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
            return bad(format!("t_eval must be non-empty with entries in (0, T], got {:?}", self.t_eval));
        }
        if self.bins_per_axis == 0 || self.workers == 0 {
            return bad("bins_per_axis and workers must be positive".into());
        }
        if self.reference_factor < 10 {
            return bad(format!("reference_factor must be at least 10, got {}", self.reference_factor));
        }
        if self.bootstrap_resamples < 2 {
            return bad("bootstrap_resamples must be at least 2".into());
        }
        VelocityGrid::new(self.bins_per_axis, self.v_max)?;
        for &eps in &self.epsilons {
            SimConfig::boltzmann_grad(eps, self.horizon, self.seed)?.validate()?;
        }
        check_admissibility(&self.f0, &self.g0)?;
        Ok(())
    }

    fn grid(&self) -> VelocityGrid {
        VelocityGrid::new(self.bins_per_axis, self.v_max).expect("validated grid")
    }

    fn times(&self) -> Vec<f64> {
        let mut t = self.t_eval.clone();
        t.sort_by(f64::total_cmp);
        t
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub tv_empirical_vs_ideal: f64,
    pub tv_mc_error: f64,
    pub good_tree_fraction: f64,
    pub mean_collisions: f64,
    pub zeta_theoretical: f64,
    pub zeta_empirical: f64,
    pub aborted_runs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.n,
                r.t,
                r.tv_empirical_vs_ideal,
                r.tv_mc_error,
                r.good_tree_fraction,
                r.mean_collisions,
                r.zeta_theoretical,
                r.zeta_empirical,
                r.aborted_runs
            )
            .unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossOnlyRow {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub tv: f64,
    pub tv_mc_error: f64,
    pub survival_particle: f64,
    pub survival_jump: f64,
    /// `exp(-t λ(v0))` when the initial velocity is deterministic.
    pub survival_exact: Option<f64>,
    pub passed: bool,
}

impl LossOnlyRow {
    fn csv(&self) -> String {
        let exact = self.survival_exact.map_or(String::new(), |s| s.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epsilon,
            self.n,
            self.t,
            self.tv,
            self.tv_mc_error,
            self.survival_particle,
            self.survival_jump,
            exact,
            self.passed
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub n: usize,
    pub completed: usize,
    pub aborted_simultaneous: usize,
    pub aborted_event_cap: usize,
    pub abort_fraction: f64,
    pub repeated_partner_runs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub loss_only: Vec<LossOnlyRow>,
    pub per_epsilon: Vec<EpsilonSummary>,
    pub valid: bool,
    pub messages: Vec<String>,
}

/// RNG stream of one realization: ε index, purpose and run index.
fn stream_id(eps_index: usize, kind: u64, run: usize) -> u64 {
    ((eps_index as u64) << 48) | (kind << 40) | run as u64
}

const KIND_PARTICLE: u64 = 0;
const KIND_JUMP: u64 = 1;
const KIND_LOSS_PARTICLE: u64 = 2;
const KIND_LOSS_JUMP: u64 = 3;
const KIND_BOOTSTRAP: u64 = 4;
const KIND_LOSS_BOOTSTRAP: u64 = 5;
/// ε index used for streams shared by all ε.
const SHARED: usize = 0xFFFF;

struct ParticleRun {
    status: SimStatus,
    collisions: usize,
    good: bool,
    attempts: u64,
    repeated_partner: bool,
    /// Velocity at each evaluation time, `None` when absorbed.
    velocities: Vec<Option<Vec3>>,
    record: TreeRecord,
}

fn particle_run(cfg: &ExperimentConfig, eps: f64, seed_stream: u64, gain: bool, times: &[f64]) -> Result<ParticleRun> {
    let sim = SimConfig::boltzmann_grad(eps, cfg.horizon, cfg.seed)?.with_gain(gain);
    let mut rng = stream_rng(cfg.seed, seed_stream);
    let out = run(&sim, &cfg.f0, &cfg.g0, &mut rng)?;
    let params = default_good_params(eps)?;
    let good = out.completed() && classify(&out.tree, &params)?.good;
    let velocities = if out.completed() {
        times
            .iter()
            .map(|&t| match out.absorbed_at {
                Some(a) if a <= t => Ok(None),
                _ => out.tree.state_at(t).map(|s| Some(s.v)),
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(ParticleRun {
        status: out.status,
        collisions: out.tree.n(),
        good,
        attempts: out.attempts,
        repeated_partner: out.repeated_partner(),
        velocities,
        record: out.record(eps, cfg.horizon),
    })
}

fn jump_velocities(sampler: &JumpSampler, seed: u64, stream: u64, times: &[f64]) -> Result<Vec<Option<Vec3>>> {
    let mut rng = stream_rng(seed, stream);
    let traj = sampler.sample(&mut rng)?;
    times
        .iter()
        .map(|&t| if traj.survived(t) { traj.state_at(t).map(|s| Some(s.v)) } else { Ok(None) })
        .collect()
}

fn histogram_at(grid: VelocityGrid, samples: &[Vec<Option<Vec3>>], k: usize) -> Histogram {
    let mut h = Histogram::new(grid);
    for s in samples.iter().filter(|s| !s.is_empty()) {
        match s[k] {
            Some(v) => h.add(v),
            None => h.add_absorbed(),
        }
    }
    h
}

fn reference_samples(cfg: &ExperimentConfig, jumps: bool, kind: u64, times: &[f64]) -> Result<Vec<Vec<Option<Vec3>>>> {
    let sampler = JumpSampler::new(&cfg.f0, &cfg.g0, cfg.horizon)?.with_jumps(jumps);
    let count = cfg.reference_factor * cfg.realizations_per_eps;
    (0..count)
        .into_par_iter()
        .map(|i| jump_velocities(&sampler, cfg.seed, stream_id(SHARED, kind, i), times))
        .collect()
}

fn survival_fraction(h: &Histogram) -> f64 {
    1.0 - h.absorbed / h.total()
}

/// Runs the full sweep; writes reports into `out` when given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| sweep(cfg, out))?;
    if let Some(dir) = out {
        write_outputs(cfg, &outcome, dir)?;
    }
    Ok(outcome)
}

fn sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    let grid = cfg.grid();
    let times = cfg.times();
    let m = cfg.realizations_per_eps;
    let mut messages = Vec::new();
    let mut valid = true;

    // loss-only gate
    let mut loss_only = Vec::new();
    if cfg.loss_only_check {
        let reference = reference_samples(cfg, false, KIND_LOSS_JUMP, &times)?;
        let exact_rate = match &cfg.f0.velocity {
            VelocityLaw::PointMass { v } => Some(loss_rate(*v, &cfg.g0)?),
            _ => None,
        };
        for (ei, &eps) in cfg.epsilons.iter().enumerate() {
            let n = boltzmann_grad_n(eps)?;
            let runs: Vec<ParticleRun> = (0..m)
                .into_par_iter()
                .map(|i| particle_run(cfg, eps, stream_id(ei, KIND_LOSS_PARTICLE, i), false, &times))
                .collect::<Result<_>>()?;
            let samples: Vec<_> = runs.into_iter().map(|r| r.velocities).collect();
            for (k, &t) in times.iter().enumerate() {
                let (a, b) = (histogram_at(grid, &samples, k), histogram_at(grid, &reference, k));
                let tv = estimate_tv(&a, &b)?;
                let mut rng = stream_rng(cfg.seed, stream_id(ei, KIND_LOSS_BOOTSTRAP, k));
                let err = bootstrap_tv(&a, &b, cfg.bootstrap_resamples, &mut rng)?;
                let passed = tv <= LOSS_ONLY_SIGMAS * err;
                if !passed && eps <= LOSS_ONLY_GATE_EPSILON + 1e-12 {
                    valid = false;
                    messages.push(format!("loss-only check failed at ε={eps}, t={t}: TV {tv:.4} > {LOSS_ONLY_SIGMAS}·{err:.4}"));
                }
                loss_only.push(LossOnlyRow {
                    epsilon: eps,
                    n,
                    t,
                    tv,
                    tv_mc_error: err,
                    survival_particle: survival_fraction(&a),
                    survival_jump: survival_fraction(&b),
                    survival_exact: exact_rate.map(|l| (-t * l).exp()),
                    passed,
                });
            }
        }
    }

    let reference = reference_samples(cfg, true, KIND_JUMP, &times)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for (k, &t) in times.iter().enumerate() {
            histogram_at(grid, &reference, k).write(&dir.join(format!("hist_reference_t{t}.hist")))?;
        }
    }
    let mut report = ExperimentReport::default();
    let mut per_epsilon = Vec::new();
    for (ei, &eps) in cfg.epsilons.iter().enumerate() {
        let n = boltzmann_grad_n(eps)?;
        let runs: Vec<ParticleRun> = (0..m)
            .into_par_iter()
            .map(|i| particle_run(cfg, eps, stream_id(ei, KIND_PARTICLE, i), true, &times))
            .collect::<Result<_>>()?;
        let completed: Vec<&ParticleRun> = runs.iter().filter(|r| r.status == SimStatus::Completed).collect();
        let simultaneous = runs.iter().filter(|r| r.status == SimStatus::AbortedSimultaneous).count();
        let capped = runs.iter().filter(|r| r.status == SimStatus::AbortedEventCap).count();
        let aborted = simultaneous + capped;
        let abort_fraction = aborted as f64 / m as f64;
        if abort_fraction > MAX_ABORT_FRACTION {
            valid = false;
            messages.push(format!("abort fraction {abort_fraction:.4} at ε={eps} exceeds {MAX_ABORT_FRACTION}"));
        }
        if completed.is_empty() {
            return Err(Error::InvalidParameter(format!("every realization aborted at ε={eps}")));
        }
        // aborted runs are degenerate configurations and count as not good
        let good_fraction = runs.iter().filter(|r| r.good).count() as f64 / m as f64;
        let mean_collisions = completed.iter().map(|r| r.collisions as f64).sum::<f64>() / completed.len() as f64;
        let total_attempts: u64 = runs.iter().map(|r| r.attempts).sum();
        let zeta_empirical = m as f64 / total_attempts as f64;
        let zeta_theoretical = zeta(eps, n)?;
        let samples: Vec<_> = completed.iter().map(|r| r.velocities.clone()).collect();
        for (k, &t) in times.iter().enumerate() {
            let (a, b) = (histogram_at(grid, &samples, k), histogram_at(grid, &reference, k));
            let tv = estimate_tv(&a, &b)?;
            let mut rng = stream_rng(cfg.seed, stream_id(ei, KIND_BOOTSTRAP, k));
            let err = bootstrap_tv(&a, &b, cfg.bootstrap_resamples, &mut rng)?;
            if let Some(dir) = out {
                a.write(&dir.join(format!("hist_particle_eps{eps}_t{t}.hist")))?;
            }
            report.rows.push(ExperimentRow {
                epsilon: eps,
                n,
                t,
                tv_empirical_vs_ideal: tv,
                tv_mc_error: err,
                good_tree_fraction: good_fraction,
                mean_collisions,
                zeta_theoretical,
                zeta_empirical,
                aborted_runs: aborted,
            });
        }
        if let Some(dir) = out {
            let mut lines = String::new();
            for r in &runs {
                lines.push_str(&r.record.to_json_line()?);
                lines.push('\n');
            }
            fs::write(dir.join(format!("trees_eps{eps}.jsonl")), lines)?;
        }
        per_epsilon.push(EpsilonSummary {
            epsilon: eps,
            n,
            completed: completed.len(),
            aborted_simultaneous: simultaneous,
            aborted_event_cap: capped,
            abort_fraction,
            repeated_partner_runs: runs.iter().filter(|r| r.repeated_partner).count(),
        });
    }
    Ok(ExperimentOutcome { report, loss_only, per_epsilon, valid, messages })
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.csv"), outcome.report.to_csv())?;
    let mut loss = String::from(LOSS_ONLY_HEADER);
    loss.push('\n');
    for r in &outcome.loss_only {
        loss.push_str(&r.csv());
        loss.push('\n');
    }
    fs::write(dir.join("loss_only.csv"), loss)?;
    let summary = serde_json::json!({
        "valid": outcome.valid,
        "messages": outcome.messages,
        "per_epsilon": outcome.per_epsilon,
        "config": cfg,
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if cfg.plots {
        let times = cfg.times();
        let by_t = |f: &dyn Fn(&ExperimentRow) -> (f64, f64)| -> Vec<Series> {
            times
                .iter()
                .map(|&t| Series {
                    name: format!("t={t}"),
                    points: outcome
                        .report
                        .rows
                        .iter()
                        .filter(|r| r.t == t)
                        .map(|r| {
                            let (y, e) = f(r);
                            (r.epsilon, y, e)
                        })
                        .collect(),
                })
                .collect()
        };
        let tv = by_t(&|r| (r.tv_empirical_vs_ideal, r.tv_mc_error));
        fs::write(dir.join("tv_vs_epsilon.svg"), line_chart("TV to the jump-process law", "epsilon", "TV", &tv, true))?;
        let good: Vec<Series> = by_t(&|r| (r.good_tree_fraction, 0.0)).into_iter().take(1).collect();
        fs::write(
            dir.join("good_fraction_vs_epsilon.svg"),
            line_chart("Good-tree fraction", "epsilon", "fraction", &good, true),
        )?;
    }
    Ok(())
}
