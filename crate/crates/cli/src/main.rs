//! `hetnet`: analytic CDF export, KS validation, KPI sweeps, grid
//! optimization and raw drop export for the cell-on-edge HetNet model.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coe_hetnet::analytic::{AnalyticModel, Metric};
use coe_hetnet::config::NoiseBandwidthMode;
use coe_hetnet::evaluation::{
    eta_sweep, ks_campaign, optimize_with, write_sweep_csv, CampaignOptions, KsReport, Objective, TrialMode,
};
use coe_hetnet::simulator::{EmpiricalCdf, Simulator};
use coe_hetnet::ScenarioConfig;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "hetnet",
    version,
    about = "Rate, SE and EE distributions of a two-tier cell-on-edge HetNet"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

/// Scenario overrides and output options shared by every command.
/// Precedence is flag, then config file, then built-in default.
#[derive(Args, Debug)]
struct Common {
    /// JSON scenario file; missing keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// RNG seed for drops and KS trials
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// CRE bias (dB).
    #[arg(long, global = true, value_name = "DB", allow_negative_numbers = true)]
    bias: Option<f64>,

    /// Fraction of users dropped inside direct micro coverage
    #[arg(long = "w-micro", global = true, value_name = "F", allow_negative_numbers = true)]
    w_micro: Option<f64>,

    /// Time fraction given to CRE users.
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    eta: Option<f64>,

    /// Band fraction given to macro users.
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    rho: Option<f64>,

    #[arg(long = "noise-bandwidth-mode", global = true, value_enum)]
    noise_bandwidth_mode: Option<NoiseBandwidthArg>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Worker thread cap; defaults to one per core.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Export the analytic mixture CDF and the pooled simulated CDF.
    Cdf {
        #[arg(long, value_enum, default_value = "rate")]
        metric: MetricArg,
        /// Points on the analytic grid, endpoints included.
        #[arg(long, default_value_t = 1000)]
        grid_size: usize,
        /// Drops pooled into the empirical CDF; 0 skips the simulation.
        #[arg(long, default_value_t = 400)]
        drops: u64,
    },
    /// Kolmogorov-Smirnov campaign against the analytic mixture.
    Validate {
        #[arg(long, value_enum, default_value = "rate")]
        metric: MetricArg,
        #[arg(long, default_value_t = 400)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        subsample: usize,
        /// Minimum pass ratio for a zero exit status.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Draw the samples from the analytic CDF itself.
        #[arg(long, conflicts_with = "single_drop")]
        self_test: bool,
        /// Subsample every trial from the same drop.
        #[arg(long)]
        single_drop: bool,
    },
    /// Exhaustive (eta, rho) grid search for one objective.
    Optimize {
        #[arg(long, value_enum, default_value = "r10")]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// KPIs along an eta sweep at the configured rho.
    Sweep {
        /// Objectives to emit; all of them when omitted.
        #[arg(long = "objective", value_enum, num_args = 1..)]
        objectives: Vec<ObjectiveArg>,
        #[arg(long, default_value_t = 0.0)]
        eta_start: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_stop: f64,
        #[arg(long, default_value_t = 0.01)]
        eta_step: f64,
    },
    /// Raw per-user records of simulated drops, one CSV per drop.
    Simulate {
        #[arg(long, default_value_t = 1)]
        drops: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Rate,
    Se,
    Ee,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Rate => Metric::Rate,
            MetricArg::Se => Metric::Se,
            MetricArg::Ee => Metric::Ee,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    R10,
    Se10,
    Ee10,
    Theta10,
    Theta50,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::R10 => Objective::R10,
            ObjectiveArg::Se10 => Objective::Se10,
            ObjectiveArg::Ee10 => Objective::Ee10,
            ObjectiveArg::Theta10 => Objective::Theta10,
            ObjectiveArg::Theta50 => Objective::Theta50,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum NoiseBandwidthArg {
    FullBand,
    Allocation,
}

impl From<NoiseBandwidthArg> for NoiseBandwidthMode {
    fn from(m: NoiseBandwidthArg) -> Self {
        match m {
            NoiseBandwidthArg::FullBand => NoiseBandwidthMode::FullBand,
            NoiseBandwidthArg::Allocation => NoiseBandwidthMode::Allocation,
        }
    }
}

/// Any problem with the configuration: unreadable file, bad JSON or a field
/// out of range. Maps to exit status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// The campaign ran but its pass ratio fell below the threshold.
#[derive(Debug)]
struct ValidationFailed {
    pass_ratio: f64,
    threshold: f64,
}

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "pass ratio {:.4} is below the threshold {}",
            self.pass_ratio, self.threshold
        )
    }
}

impl std::error::Error for ValidationFailed {}

fn load_config(common: &Common) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            ScenarioConfig::parse_json(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(v) = common.seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = common.bias {
        cfg.bias = v;
    }
    if let Some(v) = common.w_micro {
        cfg.w_micro = v;
    }
    if let Some(v) = common.eta {
        cfg.eta = v;
    }
    if let Some(v) = common.rho {
        cfg.rho = v;
    }
    if let Some(v) = common.noise_bandwidth_mode {
        cfg.noise_bandwidth_mode = v.into();
    }
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    args: Vec<String>,
    tool_version: &'static str,
    seed: u64,
    config_hash: String,
    config: &'a ScenarioConfig,
    files: Vec<String>,
    duration_s: f64,
}

/// Collects the files of one run; each is written to a temporary name and
/// renamed into place so readers never see a partial file.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        write_atomic(&self.dir.join(name), &buf)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    fn finish(self, command: &str, cfg: &ScenarioConfig, started: Instant) -> Result<()> {
        let manifest = RunManifest {
            command,
            args: std::env::args().skip(1).collect(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: cfg.rng_seed,
            config_hash: cfg.digest(),
            config: cfg,
            files: self.files,
            duration_s: started.elapsed().as_secs_f64(),
        };
        let mut buf = serde_json::to_vec_pretty(&manifest)?;
        buf.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &buf)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn cmd_cdf(cfg: &ScenarioConfig, out: &mut Output, metric: Metric, grid_size: usize, drops: u64) -> Result<()> {
    if grid_size < 2 {
        anyhow::bail!(ConfigError(format!("grid_size must be at least 2, got {grid_size}")));
    }
    let model = AnalyticModel::new(cfg)?;
    let cdf = model.mixture_cdf(metric, cfg.eta, cfg.rho)?;
    let grid = cdf.grid(grid_size);
    out.write(&format!("cdf_{}_analytic.csv", metric.label()), |buf| {
        Ok(cdf.write_csv(metric.column(), &grid, buf)?)
    })?;
    if drops > 0 {
        let pooled = Simulator::new(cfg)?.pooled(metric, drops);
        let emp = EmpiricalCdf::new(pooled)?;
        out.write(&format!("cdf_{}_empirical.csv", metric.label()), |buf| {
            Ok(emp.write_csv(metric.column(), buf)?)
        })?;
        println!("{} users pooled from {drops} drops", emp.len());
    }
    println!(
        "{} CDF support [{:.6e}, {:.6e}], atom at zero {:.4}",
        metric.label(),
        cdf.support.0,
        cdf.support.1,
        cdf.atom_at_zero + 0.0
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ValidateSummary {
    bias: f64,
    w_micro: f64,
    eta: f64,
    rho: f64,
    mode: TrialMode,
    threshold: f64,
    passed: bool,
    report: KsReport,
}

fn cmd_validate(
    cfg: &ScenarioConfig,
    out: &mut Output,
    metric: Metric,
    opts: CampaignOptions,
    threshold: f64,
) -> Result<Option<ValidationFailed>> {
    if !(0.0..=1.0).contains(&threshold) {
        anyhow::bail!(ConfigError(format!("threshold {threshold} is outside [0, 1]")));
    }
    let report = ks_campaign(cfg, metric, &opts)?;
    let passed = report.pass_ratio >= threshold;
    println!(
        "{:<8} {:>6} {:>10} {:>10} {:>10} {:>8}",
        "metric", "trials", "mean_p", "pass", "mean_D", "status"
    );
    println!(
        "{:<8} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>8}",
        metric.label(),
        report.n_trials,
        report.mean_significance,
        report.pass_ratio,
        report.mean_statistic,
        if passed { "PASS" } else { "FAIL" }
    );
    out.write_json(
        &format!("ks_{}.json", metric.label()),
        &ValidateSummary {
            bias: cfg.bias,
            w_micro: cfg.w_micro,
            eta: cfg.eta,
            rho: cfg.rho,
            mode: opts.mode,
            threshold,
            passed,
            report,
        },
    )?;
    Ok((!passed).then_some(ValidationFailed {
        pass_ratio: report.pass_ratio,
        threshold,
    }))
}

#[derive(Debug, Serialize)]
struct OptimizeSummary {
    objective: Objective,
    bias: f64,
    w_micro: f64,
    eta: f64,
    rho: f64,
    value: f64,
    unit: &'static str,
    /// `value` in Mbit/s for the rate objective, identical otherwise.
    display_value: f64,
    display_unit: &'static str,
    step: f64,
    noise_bandwidth_mode: NoiseBandwidthMode,
}

fn unit_of(o: Objective) -> &'static str {
    match o {
        Objective::R10 => "bit/s",
        Objective::Se10 => "bit/s/Hz",
        Objective::Ee10 => "bit/J",
        Objective::Theta10 | Objective::Theta50 => "bit/s/Hz*bit/J",
    }
}

fn cmd_optimize(cfg: &ScenarioConfig, out: &mut Output, objective: Objective, step: f64) -> Result<()> {
    if !(step > 0.0 && step <= 0.5) {
        anyhow::bail!(ConfigError(format!("step {step} must lie in (0, 0.5]")));
    }
    let model = AnalyticModel::new(cfg)?;
    let opt = optimize_with(&model, objective, step)?;
    let (display_value, display_unit) = match objective {
        Objective::R10 => (opt.value / 1e6, "Mbit/s"),
        o => (opt.value, unit_of(o)),
    };
    let summary = OptimizeSummary {
        objective,
        bias: opt.bias,
        w_micro: opt.w_micro,
        eta: opt.eta,
        rho: opt.rho,
        value: opt.value,
        unit: unit_of(objective),
        display_value,
        display_unit,
        step,
        noise_bandwidth_mode: cfg.noise_bandwidth_mode,
    };
    println!(
        "{} at B={} dB, W_micro={:.4}: eta*={:.2} rho*={:.2} value={:.6} {}",
        objective.label(),
        opt.bias,
        opt.w_micro,
        opt.eta,
        opt.rho,
        display_value,
        display_unit
    );
    out.write(&format!("surface_{}.csv", objective.label()), |buf| {
        Ok(opt.write_surface_csv(buf)?)
    })?;
    out.write_json(&format!("optimize_{}.json", objective.label()), &summary)
}

fn cmd_sweep(
    cfg: &ScenarioConfig,
    out: &mut Output,
    objectives: &[Objective],
    start: f64,
    stop: f64,
    step: f64,
) -> Result<()> {
    if !(step > 0.0 && (0.0..=1.0).contains(&start) && (start..=1.0).contains(&stop)) {
        anyhow::bail!(ConfigError(format!(
            "eta range {start}..{stop} step {step} must satisfy 0 <= start <= stop <= 1, step > 0"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let etas: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
    let model = AnalyticModel::new(cfg)?;
    let rows = eta_sweep(&model, cfg.rho, &etas)?;
    out.write("sweep_eta.csv", |buf| Ok(write_sweep_csv(&rows, objectives, buf)?))?;
    println!(
        "{} eta points at rho={}, {} objectives",
        rows.len(),
        cfg.rho,
        objectives.len()
    );
    Ok(())
}

fn cmd_simulate(cfg: &ScenarioConfig, out: &mut Output, drops: u64) -> Result<()> {
    let sim = Simulator::new(cfg)?;
    for d in sim.run_drops(drops) {
        let counts = d.type_counts();
        out.write(&format!("drop_{:04}.csv", d.drop_index), |buf| Ok(d.write_csv(buf)?))?;
        println!(
            "drop {}: {} macro, {} direct micro, {} CRE users",
            d.drop_index, counts[0], counts[1], counts[2]
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Option<ValidationFailed>> {
    let started = Instant::now();
    let cfg = load_config(&cli.common)?;
    if let Some(n) = cli.common.threads {
        if n == 0 {
            anyhow::bail!(ConfigError("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut out = Output::new(&cli.common.out)?;
    let mut failure = None;
    let name = match cli.command {
        Command::Cdf {
            metric,
            grid_size,
            drops,
        } => {
            cmd_cdf(&cfg, &mut out, metric.into(), grid_size, drops)?;
            "cdf"
        }
        Command::Validate {
            metric,
            trials,
            subsample,
            threshold,
            self_test,
            single_drop,
        } => {
            let mode = if self_test {
                TrialMode::SelfTest
            } else if single_drop {
                TrialMode::SingleDrop
            } else {
                TrialMode::FreshDrop
            };
            let opts = CampaignOptions {
                n_trials: trials,
                subsample,
                mode,
            };
            failure = cmd_validate(&cfg, &mut out, metric.into(), opts, threshold)?;
            "validate"
        }
        Command::Optimize { objective, step } => {
            cmd_optimize(&cfg, &mut out, objective.into(), step)?;
            "optimize"
        }
        Command::Sweep {
            objectives,
            eta_start,
            eta_stop,
            eta_step,
        } => {
            let objectives: Vec<Objective> = if objectives.is_empty() {
                Objective::ALL.to_vec()
            } else {
                objectives.into_iter().map(Into::into).collect()
            };
            cmd_sweep(&cfg, &mut out, &objectives, eta_start, eta_stop, eta_step)?;
            "sweep"
        }
        Command::Simulate { drops } => {
            cmd_simulate(&cfg, &mut out, drops)?;
            "simulate"
        }
    };
    out.finish(name, &cfg, started)?;
    Ok(failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failed)) => {
            eprintln!("validation failed: {failed}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
