//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid input or parameters outside the
//! fault tolerance region, 3 when the inverse depth search finds no depth
//! within its ceiling.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{
    bounds_report, min_depth_for_risk, sweep, thm2_lower, thm2_upper, BoundKind, BoundsReport,
    DepthSearch, DEFAULT_K_MAX,
};
use crate::error::Error;
use crate::model::{ConfirmationDepth, ProtocolParams};
use crate::sim::{estimate, full_sim_estimate, EstimateMode, FullSimConfig};

use config::ConfigFile;
use output::{emit, Format, Inputs, OutputRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_REACHABLE: i32 = 3;

/// Horizon-halted fraction above which a simulation result is flagged.
const HORIZON_WARN_FRACTION: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "nakamoto-bounds",
    version,
    about = "Safety-violation bounds for longest-chain consensus and a private-mining attack simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate all four bounds at one confirmation depth.
    Bound(BoundArgs),
    /// Evaluate all four bounds over a range of depths.
    Sweep(SweepArgs),
    /// Smallest depth whose selected bound meets a target probability.
    Depth(DepthArgs),
    /// Monte Carlo estimate of the attack success probability.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// lambda = 1/600 blocks per second, delta = 10 s
    Bitcoin,
    /// lambda = 1/13 blocks per second, delta = 2 s
    Ethereum,
}

impl Preset {
    pub fn lambda(self) -> f64 {
        match self {
            Preset::Bitcoin => 1.0 / 600.0,
            Preset::Ethereum => 1.0 / 13.0,
        }
    }

    pub fn delta(self) -> f64 {
        match self {
            Preset::Bitcoin => 10.0,
            Preset::Ethereum => 2.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Bitcoin => "bitcoin",
            Preset::Ethereum => "ethereum",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Network preset supplying lambda and delta.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Total mining rate, blocks per second.
    #[arg(long, conflicts_with = "block_interval")]
    pub lambda: Option<f64>,
    /// Mean block interval, seconds per block (reciprocal of lambda).
    #[arg(long)]
    pub block_interval: Option<f64>,
    /// Fraction of mining power that is honest.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Propagation delay bound, seconds.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Flat key = value file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Confirmation depth.
    #[arg(long)]
    pub k: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub k_min: Option<u64>,
    #[arg(long)]
    pub k_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Thm1u,
    Thm1l,
    Thm2u,
    Thm2l,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Thm1u => BoundKind::Thm1Upper,
            BoundArg::Thm1l => BoundKind::Thm1Lower,
            BoundArg::Thm2u => BoundKind::Thm2Upper,
            BoundArg::Thm2l => BoundKind::Thm2Lower,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Target safety-violation probability.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, value_enum)]
    pub bound: Option<BoundArg>,
    /// Search ceiling.
    #[arg(long)]
    pub k_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    /// Reduced sampler, rigged-model event (compare with thm2_upper).
    ReducedUpper,
    /// Reduced sampler, zero-delay exact event (compare with thm2_lower).
    ReducedLower,
    /// Sample-path simulation of the private-mining attack.
    Full,
}

impl SimMode {
    fn name(self) -> &'static str {
        match self {
            SimMode::ReducedUpper => "reduced-upper",
            SimMode::ReducedLower => "reduced-lower",
            SimMode::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub mode: Option<SimMode>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Expected blocks mined before the target transaction (full mode).
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Residual success probability below which a race is abandoned.
    #[arg(long)]
    pub epsilon_halt: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Failure that ends a command before any record is written.
#[derive(Debug)]
enum Failure {
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(match e {
            Error::FaultToleranceExceeded { p } => {
                format!("p = {p} ≤ 1/2: fault tolerance requires p = rho*exp(-lambda*delta) > 1/2")
            }
            other => other.to_string(),
        })
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        Failure::Invalid(msg)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

struct Resolved {
    params: ProtocolParams,
    inputs: Inputs,
    format: Format,
    file: ConfigFile,
}

fn resolve(args: &ParamArgs) -> Result<Resolved, Failure> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path).map_err(Failure::Invalid)?,
        None => ConfigFile::default(),
    };
    let preset = match args.preset {
        Some(p) => Some(p),
        None => file
            .get_str("preset")?
            .map(|s| {
                Preset::from_str(&s, true)
                    .map_err(|_| Failure::Invalid(format!("unknown preset {s:?}")))
            })
            .transpose()?,
    };
    let lambda_flag = args.lambda.or(args.block_interval.map(|b| 1.0 / b));
    if args.block_interval == Some(0.0) {
        return Err(Failure::Invalid("block-interval must be > 0".into()));
    }
    let lambda = match lambda_flag {
        Some(l) => Some(l),
        None => {
            let from_file = file.get_f64("lambda")?;
            let interval = file.get_f64("block-interval")?;
            if from_file.is_some() && interval.is_some() {
                return Err(Failure::Invalid(
                    "config sets both lambda and block-interval".into(),
                ));
            }
            from_file.or(interval.map(|b| 1.0 / b))
        }
    }
    .or(preset.map(Preset::lambda))
    .ok_or_else(|| Failure::Invalid("missing --lambda, --block-interval or --preset".into()))?;
    let delta = args
        .delta
        .map(Ok)
        .or_else(|| file.get_f64("delta").transpose())
        .transpose()?
        .or(preset.map(Preset::delta))
        .ok_or_else(|| Failure::Invalid("missing --delta or --preset".into()))?;
    let rho = args
        .rho
        .map(Ok)
        .or_else(|| file.get_f64("rho").transpose())
        .transpose()?
        .ok_or_else(|| Failure::Invalid("missing --rho".into()))?;
    let format = match args.format {
        Some(f) => f,
        None => file
            .get_str("format")?
            .map(|s| {
                Format::from_str(&s, true)
                    .map_err(|_| Failure::Invalid(format!("unknown format {s:?}")))
            })
            .transpose()?
            .unwrap_or_default(),
    };
    let params = ProtocolParams::new(lambda, rho, delta)?;
    Ok(Resolved {
        params,
        inputs: Inputs {
            lambda,
            rho,
            delta,
            preset: preset.map(|p| p.name().to_string()),
            ..Inputs::default()
        },
        format,
        file,
    })
}

fn pick_u64(flag: Option<u64>, file: &ConfigFile, key: &str) -> Result<Option<u64>, Failure> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(file.get_u64(key)?),
    }
}

fn pick_f64(flag: Option<f64>, file: &ConfigFile, key: &str) -> Result<Option<f64>, Failure> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(file.get_f64(key)?),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Invalid(format!("missing --{flag}")))
}

fn depth(k: u64) -> Result<ConfirmationDepth, Failure> {
    Ok(ConfirmationDepth::new(k)?)
}

const BOUND_COLUMNS: [&str; 9] = [
    "k",
    "thm1_lower",
    "thm2_lower",
    "thm2_upper",
    "thm1_upper",
    "thm1_lower_clamped",
    "thm2_lower_clamped",
    "thm2_upper_clamped",
    "thm1_upper_clamped",
];

fn report_record(command: &str, inputs: Inputs, report: &BoundsReport) -> OutputRecord {
    let mut rec = OutputRecord::new(command, inputs);
    rec.put_u64("k", report.k.get());
    for kind in BoundKind::ALL {
        let name = kind.name();
        match (report.raw(kind), report.clamped(kind)) {
            (Some(raw), Some(clamped)) => {
                rec.put_f64(name, raw);
                rec.put_f64(&format!("{name}_clamped"), clamped);
                if raw > 1.0 {
                    rec.warnings.push(format!(
                        "{name} raw value {raw:e} exceeds 1 at k = {}; clamped view is 1",
                        report.k
                    ));
                }
            }
            _ => {
                rec.put_null(name);
                rec.put_null(&format!("{name}_clamped"));
                rec.warnings.push(format!(
                    "{name} is undefined at p = 1 (sqrt(p/(1-p)) diverges)"
                ));
            }
        }
    }
    rec.warnings.extend(report.ordering_notes());
    rec
}

fn cmd_bound<W: Write>(args: &BoundArgs, out: &mut W) -> Result<i32, Failure> {
    let r = resolve(&args.params)?;
    let k = required(pick_u64(args.k, &r.file, "k")?, "k")?;
    let report = bounds_report(depth(k)?, &r.params)?;
    let inputs = Inputs {
        k: Some(k),
        ..r.inputs
    };
    let rec = report_record("bound", inputs, &report);
    emit(out, r.format, &[rec], &BOUND_COLUMNS)?;
    Ok(EXIT_OK)
}

fn cmd_sweep<W: Write>(args: &SweepArgs, out: &mut W) -> Result<i32, Failure> {
    let r = resolve(&args.params)?;
    let k_min = required(pick_u64(args.k_min, &r.file, "k-min")?, "k-min")?;
    let k_max = required(pick_u64(args.k_max, &r.file, "k-max")?, "k-max")?;
    let table = sweep(&r.params, k_min, k_max)?;
    let inputs = Inputs {
        k_min: Some(k_min),
        k_max: Some(k_max),
        ..r.inputs
    };
    let records: Vec<_> = table
        .rows
        .iter()
        .map(|row| report_record("sweep", inputs.clone(), row))
        .collect();
    emit(out, r.format, &records, &BOUND_COLUMNS)?;
    Ok(EXIT_OK)
}

fn cmd_depth<W: Write>(args: &DepthArgs, out: &mut W) -> Result<i32, Failure> {
    let r = resolve(&args.params)?;
    let target = required(pick_f64(args.target, &r.file, "target")?, "target")?;
    let kind: BoundKind = match args.bound {
        Some(b) => b.into(),
        None => match r.file.get_str("bound")? {
            Some(s) => BoundArg::from_str(&s, true)
                .map_err(|_| Failure::Invalid(format!("unknown bound {s:?}")))?
                .into(),
            None => BoundKind::Thm2Upper,
        },
    };
    let k_max = pick_u64(args.k_max, &r.file, "k-max")?.unwrap_or(DEFAULT_K_MAX);
    let search = min_depth_for_risk(&r.params, target, kind, k_max)?;
    let inputs = Inputs {
        target: Some(target),
        bound: Some(kind),
        k_max: Some(k_max),
        ..r.inputs
    };
    let mut rec = OutputRecord::new("depth", inputs);
    rec.put_str("bound", kind.name());
    let code = match search {
        DepthSearch::Found { k, value } => {
            rec.put_str("status", "found");
            rec.put_u64("k", k.get());
            rec.put_f64("value", value);
            EXIT_OK
        }
        DepthSearch::NotReachable { k_max } => {
            rec.put_str("status", "not_reachable");
            rec.put_null("k");
            rec.put_null("value");
            rec.warnings.push(format!(
                "no depth up to k_max = {k_max} meets target {target:e}"
            ));
            EXIT_NOT_REACHABLE
        }
    };
    emit(out, r.format, &[rec], &["status", "bound", "k", "value"])?;
    Ok(code)
}

fn cmd_simulate<W: Write>(args: &SimulateArgs, out: &mut W) -> Result<i32, Failure> {
    let r = resolve(&args.params)?;
    let f = &r.file;
    let mode = match args.mode {
        Some(m) => m,
        None => match f.get_str("mode")? {
            Some(s) => SimMode::from_str(&s, true)
                .map_err(|_| Failure::Invalid(format!("unknown mode {s:?}")))?,
            None => SimMode::ReducedUpper,
        },
    };
    let k = required(pick_u64(args.k, f, "k")?, "k")?;
    let k_depth = depth(k)?;
    let trials = pick_u64(args.trials, f, "trials")?.unwrap_or(1_000_000);
    let seed = pick_u64(args.seed, f, "seed")?.unwrap_or(0);
    let epsilon_halt = pick_f64(args.epsilon_halt, f, "epsilon-halt")?.unwrap_or(1e-12);
    let burn_in = pick_f64(args.burn_in, f, "burn-in")?;
    let threads = match args.threads {
        Some(t) => Some(t),
        None => f.get_u64("threads")?.map(|t| t as usize),
    };
    let params = r.params;

    let mut inputs = Inputs {
        k: Some(k),
        mode: Some(mode.name().to_string()),
        trials: Some(trials),
        seed: Some(seed),
        ..r.inputs
    };
    let mut rec;
    match mode {
        SimMode::ReducedUpper | SimMode::ReducedLower => {
            let (est_mode, name, bound) = if mode == SimMode::ReducedUpper {
                (
                    EstimateMode::RiggedUpper,
                    "thm2_upper",
                    thm2_upper(k_depth, &params)?,
                )
            } else {
                (
                    EstimateMode::Delta0Exact,
                    "thm2_lower",
                    thm2_lower(k_depth, params.rho())?,
                )
            };
            let e = estimate(est_mode, k_depth, &params, trials, seed, threads)?;
            rec = OutputRecord::new("simulate", inputs);
            put_estimate(&mut rec, &e);
            rec.put_f64(name, bound);
            rec.put_str("comparison_bound", name);
            rec.results.insert(
                "within_3sigma".into(),
                serde_json::Value::Bool(e.within_3sigma_of(bound)),
            );
        }
        SimMode::Full => {
            let config = FullSimConfig {
                burn_in_blocks: burn_in,
                epsilon_halt,
            };
            inputs.burn_in = Some(config.burn_in_for(params.p()));
            inputs.epsilon_halt = Some(epsilon_halt);
            let full = full_sim_estimate(&params, k_depth, trials, &config, seed, threads)?;
            rec = OutputRecord::new("simulate", inputs);
            put_estimate(&mut rec, &full.estimate);
            rec.put_u64("horizon_halted", full.horizon_halted);
            rec.put_f64("horizon_fraction", full.horizon_fraction());
            rec.put_f64("tau", full.tau);
            rec.put_f64("duration", full.duration);
            let lower = thm2_lower(k_depth, params.rho())?;
            let upper = thm2_upper(k_depth, &params)?;
            rec.put_f64("thm2_lower", lower);
            rec.put_f64("thm2_upper", upper);
            let e = full.estimate;
            let consistent = if params.delta() == 0.0 {
                e.within_3sigma_of(lower)
            } else {
                e.point >= lower - e.ci_halfwidth_3sigma && e.point <= upper + e.ci_halfwidth_3sigma
            };
            rec.results
                .insert("consistent".into(), serde_json::Value::Bool(consistent));
            if full.horizon_fraction() > HORIZON_WARN_FRACTION {
                rec.warnings.push(format!(
                    "{} of {} trials ran out of path before the attack was decided",
                    full.horizon_halted, trials
                ));
            }
        }
    }
    emit(
        out,
        r.format,
        std::slice::from_ref(&rec),
        &[
            "trials",
            "successes",
            "point",
            "ci_halfwidth_3sigma",
            "thm2_lower",
            "thm2_upper",
        ],
    )?;
    Ok(EXIT_OK)
}

fn put_estimate(rec: &mut OutputRecord, e: &crate::sim::Estimate) {
    rec.put_u64("trials", e.trials);
    rec.put_u64("successes", e.successes);
    rec.put_f64("point", e.point);
    rec.put_f64("ci_halfwidth_3sigma", e.ci_halfwidth_3sigma);
}

/// Runs a parsed command, writing records to `out` and diagnostics to stderr.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> i32 {
    let result = match &cli.command {
        Command::Bound(a) => cmd_bound(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Depth(a) => cmd_depth(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            code
        }
    }
}
