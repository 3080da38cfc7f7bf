//! Argument parsing and the subcommands of the `swcodes` binary.
//!
//! Every subcommand writes one data file (CSV or JSON) to `--out`, or to
//! standard output when `--out` is absent. File outputs get a
//! `<out>.manifest.json` sidecar recording the parameters, seed, tool
//! version and wall time. The data files themselves carry no timestamps, so
//! reruns with the same manifest are byte-identical.

pub mod io;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use swcodes::de::{acpr_sweep, symmetric_threshold, uniform_grid, DeOptions, DeState, JointDe, LdgmSystem, LdpcSystem};
use swcodes::degree::{build_capacity_ensemble, design_rate, EnsembleSpec};
use swcodes::optimize::{diff_evolution, DeParams, LambdaPolicy, Objective, OptProblem};
use swcodes::region::{sw_boundary_with_breakpoints, CorrelationModel};
use swcodes::sim::{run_trials, CodeFamily, TrialConfig, TrialRecord, RNG_NAME};
use swcodes::stagger::{block_chain_decode, joint_block_decode, stagger_region_bounds, JointDecodeOptions, StaggerConfig};

use crate::io::{RunManifest, ACPR_HEADER, HISTORY_HEADER, REGION_HEADER, STAGGER_HEADER};

/// Density evolution, staggered codes and peeling simulation for two
/// correlated sources sent over erasure channels.
#[derive(Debug, Parser)]
#[command(name = "swcodes", version)]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads [default: all cores]
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Output file; a manifest is written next to it as <out>.manifest.json
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary of the Slepian-Wolf channel region (CSV: eps1, eps2_boundary)
    Region(RegionArgs),
    /// Build the capacity-achieving LDGM ensemble (JSON)
    Ensemble(EnsembleArgs),
    /// Symmetric density-evolution threshold of an ensemble (JSON)
    Threshold(ThresholdArgs),
    /// Density-evolution achievable region of an ensemble (CSV: eps1, eps2_max)
    Acpr(AcprArgs),
    /// Decodability of staggered block codes over a grid (CSV: eps1, eps2, decodable)
    Stagger(StaggerArgs),
    /// Finite-length peeling simulation (JSON)
    Simulate(SimulateArgs),
    /// Differential-evolution search over check profiles (JSON plus history CSV)
    Optimize(OptimizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Erasure,
    Bsc,
}

#[derive(Debug, Args, Serialize)]
pub struct RegionArgs {
    /// Correlation model between the sources
    #[arg(long, value_enum, default_value_t = Model::Erasure)]
    pub model: Model,
    /// Correlation parameter
    #[arg(long, value_parser = probability)]
    pub p: f64,
    /// Symmetric code rate R
    #[arg(long, value_parser = positive)]
    pub rate: f64,
    /// Number of uniformly spaced eps1 values
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Correlation parameter
    #[arg(long, value_parser = probability)]
    pub p: f64,
    /// Design erasure rate
    #[arg(long, value_parser = probability)]
    pub eps: f64,
    /// Mass of degree-one generator nodes
    #[arg(long, value_parser = non_negative)]
    pub mu: f64,
    /// Truncation degree of the check profile
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    #[serde(rename = "N")]
    pub n: u64,
}

/// Density-evolution settings shared by the threshold searches.
#[derive(Debug, Args, Serialize)]
pub struct DeFlags {
    /// Residual at which DE counts as converged [default: 1/N for truncated
    /// ensembles, 1e-6 otherwise]
    #[arg(long, value_parser = positive)]
    pub target: Option<f64>,
    /// Iteration cap per DE run
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    /// Bisection tolerance in erasure probability
    #[arg(long, default_value_t = swcodes::de::DEFAULT_BISECT_TOL, value_parser = positive)]
    pub bisect_tol: f64,
}

impl DeFlags {
    fn options(&self, ens: Option<&EnsembleSpec>) -> DeOptions {
        let base = ens.map(DeOptions::for_ensemble).unwrap_or_default();
        DeOptions { max_iter: self.max_iter as usize, target_residual: self.target.unwrap_or(base.target_residual), ..base }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    /// Ensemble JSON file
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Correlation parameter [default: the ensemble's]
    #[arg(long, value_parser = probability)]
    pub p: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub de: DeFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct AcprArgs {
    /// Ensemble JSON file
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Correlation parameter [default: the ensemble's]
    #[arg(long, value_parser = probability)]
    pub p: Option<f64>,
    /// Number of uniformly spaced eps1 values
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub de: DeFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockDecoder {
    /// Block-by-block wave starting at source 1's first block
    Chain,
    /// Fixed point using every block and both paddings
    Joint,
}

#[derive(Debug, Args, Serialize)]
pub struct StaggerArgs {
    /// Symmetric code rate R
    #[arg(long, value_parser = positive)]
    pub rate: f64,
    /// Correlation parameter
    #[arg(long, value_parser = probability)]
    pub p: f64,
    /// Staggering fraction
    #[arg(long, value_parser = probability)]
    pub beta: f64,
    /// Blocks per source
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub blocks: u64,
    /// Points per axis of the (eps1, eps2) grid
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u64).range(2..))]
    pub grid: u64,
    #[arg(long, value_enum, default_value_t = BlockDecoder::Chain)]
    pub decoder: BlockDecoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ldgm,
    Ldpc,
    Staggered,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Ensemble JSON file
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Code family [default: ldgm for Poisson ensembles, ldpc otherwise]
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Source bits per block
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Number of independent trials
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Erasure rate of channel 1
    #[arg(long, value_parser = probability)]
    pub eps1: f64,
    /// Erasure rate of channel 2
    #[arg(long, value_parser = probability)]
    pub eps2: f64,
    /// Correlation parameter [default: the ensemble's]
    #[arg(long, value_parser = probability)]
    pub p: Option<f64>,
    /// Staggering fraction (staggered family)
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    pub beta: f64,
    /// Blocks per source (staggered family)
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub blocks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    SymThreshold,
    AcprArea,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    /// Correlation parameter
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::SymThreshold)]
    pub objective: ObjectiveArg,
    /// ACPR sample points for the acpr-area objective
    #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(2..))]
    pub acpr_grid: u64,
    /// Maximum check degree D
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    pub max_degree: u64,
    /// Design rate for Poisson variable degrees (LDGM)
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    pub rate: f64,
    /// Keep this ensemble's variable profile fixed and search punctured LDPC codes
    #[arg(long)]
    pub lambda_from: Option<PathBuf>,
    /// Unpunctured rate to hold candidates to (with --lambda-from)
    #[arg(long, value_parser = probability, requires = "lambda_from")]
    pub r_prime: Option<f64>,
    /// Population size [default: 10 D]
    #[arg(long, value_parser = clap::value_parser!(u64).range(4..))]
    pub pop: Option<u64>,
    /// Differential weight F
    #[arg(long, default_value_t = 0.5, value_parser = probability)]
    pub f: f64,
    /// Crossover probability CR
    #[arg(long, default_value_t = 0.9, value_parser = probability)]
    pub cr: f64,
    #[arg(long, default_value_t = 200)]
    pub generations: u64,
    /// History CSV [default: <out> with extension history.csv]
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub de: DeFlags,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))
}

/// Accepts reals in `[0, 1]`.
pub fn probability(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a finite non-negative number"))
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a finite positive number"))
    }
}

impl Cli {
    /// Cross-argument checks clap cannot express; failures are usage errors.
    pub fn check(&self) -> std::result::Result<(), clap::Error> {
        if matches!(self.command, Command::Optimize(_)) && self.out.is_none() {
            return Err(Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, "optimize writes two files and needs --out"));
        }
        Ok(())
    }
}

/// Tracks one invocation so its outputs can be written with a manifest.
struct Run {
    subcommand: &'static str,
    params: Value,
    seed: u64,
    out: Option<PathBuf>,
    start: Instant,
}

impl Run {
    fn manifest(&self, extra: Value) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.to_owned(),
            params: self.params.clone(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            extra,
        }
    }

    fn csv(&self, header: &[&str], rows: &[Vec<f64>], extra: Value) -> Result<()> {
        match &self.out {
            Some(path) => {
                io::write_csv(path, header, rows)?;
                io::write_manifest(path, &self.manifest(extra))
            }
            None => io::write_csv_to(std::io::stdout().lock(), header, rows),
        }
    }

    fn json<T: Serialize>(&self, value: &T, extra: Value) -> Result<()> {
        match &self.out {
            Some(path) => {
                io::write_json(path, value)?;
                io::write_manifest(path, &self.manifest(extra))
            }
            None => {
                println!("{}", serde_json::to_string_pretty(value)?);
                Ok(())
            }
        }
    }
}

/// Result of the `threshold` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutput {
    pub family: String,
    pub p: f64,
    pub threshold: f64,
    pub target_residual: f64,
    pub bisect_tol: f64,
}

/// Result of the `simulate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub config: TrialConfig,
    pub ber1: f64,
    pub ber2: f64,
    pub ci: [f64; 2],
    pub seed: u64,
    pub rng_name: String,
    pub per_trial: Vec<TrialRecord>,
}

/// The DE system an ensemble file describes: LDGM when it carries a Poisson
/// mean, punctured LDPC with `sys_frac = R'` otherwise.
enum System {
    Ldgm(LdgmSystem),
    Ldpc(LdpcSystem),
}

impl System {
    fn for_ensemble(ens: &EnsembleSpec, p: f64) -> Result<Self> {
        if ens.m.is_some() {
            return Ok(System::Ldgm(LdgmSystem::new(ens, p)));
        }
        let r_prime = 1.0 - ens.rho.integral() / ens.lambda.integral();
        if !(r_prime > 0.0 && r_prime < 1.0) {
            bail!("ensemble has unpunctured rate {r_prime}, outside (0, 1)");
        }
        Ok(System::Ldpc(LdpcSystem::new(ens.lambda.clone(), ens.rho.clone(), r_prime, p)))
    }

    fn family(&self) -> &'static str {
        match self {
            System::Ldgm(_) => "ldgm",
            System::Ldpc(_) => "ldpc",
        }
    }
}

impl JointDe for System {
    fn step(&self, s: DeState, eps1: f64, eps2: f64) -> DeState {
        match self {
            System::Ldgm(sys) => sys.step(s, eps1, eps2),
            System::Ldpc(sys) => sys.step(s, eps1, eps2),
        }
    }

    fn bit_erasure(&self, s: DeState, eps1: f64, eps2: f64) -> (f64, f64) {
        match self {
            System::Ldgm(sys) => sys.bit_erasure(s, eps1, eps2),
            System::Ldpc(sys) => sys.bit_erasure(s, eps1, eps2),
        }
    }
}

pub fn load_ensemble(path: &Path) -> Result<EnsembleSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading ensemble {}", path.display()))?;
    EnsembleSpec::from_json(&text).with_context(|| format!("parsing ensemble {}", path.display()))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global().context("configuring worker threads")?;
    }
    let (subcommand, params) = match &cli.command {
        Command::Region(a) => ("region", serde_json::to_value(a)?),
        Command::Ensemble(a) => ("ensemble", serde_json::to_value(a)?),
        Command::Threshold(a) => ("threshold", serde_json::to_value(a)?),
        Command::Acpr(a) => ("acpr", serde_json::to_value(a)?),
        Command::Stagger(a) => ("stagger", serde_json::to_value(a)?),
        Command::Simulate(a) => ("simulate", serde_json::to_value(a)?),
        Command::Optimize(a) => ("optimize", serde_json::to_value(a)?),
    };
    let ctx = Run { subcommand, params, seed: cli.seed, out: cli.out.clone(), start: Instant::now() };
    match &cli.command {
        Command::Region(a) => region(&ctx, a),
        Command::Ensemble(a) => ensemble(&ctx, a),
        Command::Threshold(a) => threshold(&ctx, a),
        Command::Acpr(a) => acpr(&ctx, a),
        Command::Stagger(a) => stagger(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Optimize(a) => optimize(&ctx, a),
    }
}

fn region(ctx: &Run, a: &RegionArgs) -> Result<()> {
    let model = match a.model {
        Model::Erasure => CorrelationModel::erasure(a.p),
        Model::Bsc => CorrelationModel::bsc(a.p),
    };
    let rows: Vec<Vec<f64>> = sw_boundary_with_breakpoints(model, a.rate, a.grid as usize).into_iter().map(|pt| vec![pt.eps1, pt.eps2]).collect();
    ctx.csv(&REGION_HEADER, &rows, json!({ "points": rows.len() }))
}

fn ensemble(ctx: &Run, a: &EnsembleArgs) -> Result<()> {
    let ens = build_capacity_ensemble(a.p, a.eps, a.mu, a.n as usize)?;
    ctx.json(&ens, json!({ "design_rate": design_rate(&ens), "m": ens.m }))
}

fn threshold(ctx: &Run, a: &ThresholdArgs) -> Result<()> {
    let ens = load_ensemble(&a.ensemble)?;
    let p = a.p.unwrap_or(ens.p);
    let opts = a.de.options(Some(&ens));
    let system = System::for_ensemble(&ens, p)?;
    let t = symmetric_threshold(&system, &opts, a.de.bisect_tol)?;
    let out = ThresholdOutput { family: system.family().to_owned(), p, threshold: t, target_residual: opts.target_residual, bisect_tol: a.de.bisect_tol };
    ctx.json(&out, json!({ "de_options": opts }))
}

fn acpr(ctx: &Run, a: &AcprArgs) -> Result<()> {
    let ens = load_ensemble(&a.ensemble)?;
    let p = a.p.unwrap_or(ens.p);
    let opts = a.de.options(Some(&ens));
    let system = System::for_ensemble(&ens, p)?;
    let curve = acpr_sweep(&system, &uniform_grid(a.grid as usize), &opts, a.de.bisect_tol)?;
    let rows: Vec<Vec<f64>> = curve.points.iter().map(|pt| vec![pt.eps1, pt.eps2_max.unwrap_or(f64::NAN)]).collect();
    ctx.csv(&ACPR_HEADER, &rows, json!({ "family": system.family(), "de_options": opts, "area": curve.area(), "diagonal_crossing": curve.diagonal_crossing() }))
}

fn stagger(ctx: &Run, a: &StaggerArgs) -> Result<()> {
    let cfg = StaggerConfig { beta: a.beta, blocks: a.blocks as usize, rate: a.rate, p: a.p };
    let n = a.grid as usize;
    let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut rows = Vec::with_capacity(n * n);
    for &e1 in &axis {
        for &e2 in &axis {
            let status = match a.decoder {
                BlockDecoder::Chain => block_chain_decode(&cfg, e1, e2),
                BlockDecoder::Joint => joint_block_decode(&cfg, e1, e2, &JointDecodeOptions::default()),
            };
            rows.push(vec![e1, e2, if status.all_decoded() { 1.0 } else { 0.0 }]);
        }
    }
    let (b1, b2) = stagger_region_bounds(a.rate, a.p, a.beta);
    let extra = json!({
        "eps1_bound": b1,
        "eps2_bound": b2,
        "r_prime": cfg.r_prime(),
        "padding_rate_loss": cfg.padding_rate_loss(),
    });
    ctx.csv(&STAGGER_HEADER, &rows, extra)
}

fn simulate(ctx: &Run, a: &SimulateArgs) -> Result<()> {
    let ens = load_ensemble(&a.ensemble)?;
    let family = match a.family.unwrap_or(if ens.m.is_some() { Family::Ldgm } else { Family::Ldpc }) {
        Family::Ldgm => CodeFamily::Ldgm,
        Family::Ldpc => CodeFamily::Ldpc,
        Family::Staggered => CodeFamily::Staggered { beta: a.beta, blocks: a.blocks as usize },
    };
    let p = a.p.unwrap_or(ens.p);
    let config = TrialConfig { ensemble: ens, family, k: a.k as usize, p, eps1: a.eps1, eps2: a.eps2, trials: a.trials as usize, seed: ctx.seed };
    let res = run_trials(&config)?;
    let out = SimulationOutput {
        config,
        ber1: res.ber1,
        ber2: res.ber2,
        ci: res.ci,
        seed: ctx.seed,
        rng_name: RNG_NAME.to_owned(),
        per_trial: res.per_trial,
    };
    ctx.json(&out, Value::Null)
}

/// Where `optimize` writes its history when `--history` is not given.
pub fn default_history_path(out: &Path) -> PathBuf {
    out.with_extension("history.csv")
}

fn optimize(ctx: &Run, a: &OptimizeArgs) -> Result<()> {
    let out = ctx.out.as_deref().context("optimize needs --out")?;
    let policy = match &a.lambda_from {
        Some(path) => LambdaPolicy::Fixed { lambda: load_ensemble(path)?.lambda, r_prime: a.r_prime },
        None => LambdaPolicy::PoissonRate { rate: a.rate },
    };
    let objective = match a.objective {
        ObjectiveArg::SymThreshold => Objective::SymThreshold,
        ObjectiveArg::AcprArea => Objective::AcprArea { grid: a.acpr_grid as usize },
    };
    let dim = a.max_degree as usize;
    let prob = OptProblem { objective, p: a.p, policy, max_degree: dim, de_options: a.de.options(None), bisect_tol: a.de.bisect_tol };
    let defaults = DeParams::defaults_for(dim, ctx.seed);
    let params = DeParams { pop: a.pop.map_or(defaults.pop, |n| n as usize), f: a.f, cr: a.cr, generations: a.generations as usize, seed: ctx.seed };
    let res = diff_evolution(&prob, &params)?;

    let history_path = a.history.clone().unwrap_or_else(|| default_history_path(out));
    let rows: Vec<Vec<f64>> = res.history.iter().enumerate().map(|(g, &s)| vec![g as f64, s]).collect();
    io::write_csv(&history_path, &HISTORY_HEADER, &rows)?;
    let extra = json!({
        "best_score": res.best_score,
        "check_profile": res.best.coefficients,
        "sys_frac": res.best.sys_frac,
        "history": history_path,
        "de_params": params,
        "problem": prob,
    });
    ctx.json(&res.best.ensemble, extra)
}
