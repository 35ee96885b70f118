//! Kolmogorov-Smirnov validation of the analytic CDFs against simulated
//! drops, percentile KPIs, and the `(eta, rho)` grid search.

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticCdf, AnalyticModel, Metric};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::scenario::stream_rng;
use crate::simulator::Simulator;

/// Smallest sample for which the asymptotic p-value is used.
pub const KS_MIN_SAMPLES: usize = 8;

/// Significance level at which a KS trial counts as passed.
pub const KS_ALPHA: f64 = 0.05;

// Keeps the subsampling streams apart from the drop streams of the same seed.
const SUBSAMPLE_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form; the alternating series converges slowly here.
        let x = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * x).map(f64::exp).sum();
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * 2.0 * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

/// `sup |F_n - F|` over the real line. Handles ties and atoms of `F` by
/// checking both one-sided limits at every sample value.
pub fn ks_statistic(samples: &[f64], cdf: &AnalyticCdf) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let below = i as f64 / n;
        let after = j as f64 / n;
        d = d.max((after - cdf.eval(xs[i])).abs());
        d = d.max((below - cdf.left_limit(xs[i])).abs());
        i = j;
    }
    d
}

/// One-sample KS test. Returns `(D, p)` with the asymptotic p-value
/// `Q((sqrt(n) + 0.12 + 0.11/sqrt(n)) D)`.
pub fn ks_test(samples: &[f64], cdf: &AnalyticCdf) -> Result<(f64, f64)> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            n: samples.len(),
            min: KS_MIN_SAMPLES,
        });
    }
    let d = ks_statistic(samples, cdf);
    let sn = (samples.len() as f64).sqrt();
    Ok((d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)))
}

/// Where each KS trial takes its samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialMode {
    /// A new drop per trial.
    FreshDrop,
    /// Every trial subsamples drop 0.
    SingleDrop,
    /// Samples drawn from the analytic CDF itself; calibrates the test.
    SelfTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub n_trials: usize,
    pub subsample: usize,
    pub mode: TrialMode,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            n_trials: 400,
            subsample: 100,
            mode: TrialMode::FreshDrop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub metric: Metric,
    /// Mean p-value over the trials.
    pub mean_significance: f64,
    /// Fraction of trials with p-value at least [`KS_ALPHA`].
    pub pass_ratio: f64,
    pub mean_statistic: f64,
    pub n_trials: usize,
    pub sample_size: usize,
}

/// Repeated KS tests of subsampled users against the analytic mixture CDF at
/// the configuration's bias and `(eta, rho)`.
pub fn ks_campaign(cfg: &ScenarioConfig, metric: Metric, opts: &CampaignOptions) -> Result<KsReport> {
    if opts.n_trials == 0 {
        return Err(Error::InvalidConfig {
            field: "n_trials",
            reason: "at least one trial is required".into(),
        });
    }
    let model = AnalyticModel::new(cfg)?;
    let cdf = model.mixture_cdf(metric, cfg.eta, cfg.rho)?;
    let sim = Simulator::new(cfg)?;
    let single = match opts.mode {
        TrialMode::SingleDrop => Some(sim.run_drop(0)),
        _ => None,
    };

    let results: Vec<(f64, f64)> = (0..opts.n_trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(cfg.rng_seed.wrapping_add(SUBSAMPLE_SEED_OFFSET), t);
            let values: Vec<f64> = match opts.mode {
                TrialMode::SelfTest => (0..opts.subsample)
                    .map(|_| {
                        let u: f64 = rng.random();
                        cdf.percentile(u).unwrap_or(cdf.support.1)
                    })
                    .collect(),
                TrialMode::FreshDrop | TrialMode::SingleDrop => {
                    let fresh;
                    let drop = match &single {
                        Some(d) => d,
                        None => {
                            fresh = sim.run_drop(t);
                            &fresh
                        }
                    };
                    let n = drop.users.len();
                    index::sample(&mut rng, n, opts.subsample.min(n))
                        .into_iter()
                        .map(|k| drop.users[k].metric(metric))
                        .collect()
                }
            };
            ks_test(&values, &cdf)
        })
        .collect::<Result<_>>()?;

    let n = results.len() as f64;
    Ok(KsReport {
        metric,
        mean_significance: results.iter().map(|r| r.1).sum::<f64>() / n,
        pass_ratio: results.iter().filter(|r| r.1 >= KS_ALPHA).count() as f64 / n,
        mean_statistic: results.iter().map(|r| r.0).sum::<f64>() / n,
        n_trials: results.len(),
        sample_size: opts.subsample,
    })
}

/// Percentile KPIs of the population. Rates in bit/s, SE in bit/s/Hz, EE in
/// bit/J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiResult {
    pub r10: f64,
    pub se10: f64,
    pub se50: f64,
    pub ee10: f64,
    pub ee50: f64,
    pub theta10: f64,
    pub theta50: f64,
}

pub fn kpis_for(model: &AnalyticModel, eta: f64, rho: f64) -> Result<KpiResult> {
    let rate = model.mixture_cdf(Metric::Rate, eta, rho)?;
    let se = model.mixture_cdf(Metric::Se, eta, rho)?;
    let ee = model.mixture_cdf(Metric::Ee, eta, rho)?;
    let (se10, se50) = (se.percentile(0.1)?, se.percentile(0.5)?);
    let (ee10, ee50) = (ee.percentile(0.1)?, ee.percentile(0.5)?);
    Ok(KpiResult {
        r10: rate.percentile(0.1)?,
        se10,
        se50,
        ee10,
        ee50,
        theta10: se10 * ee10,
        theta50: se50 * ee50,
    })
}

pub fn kpis(bias_db: f64, eta: f64, rho: f64, cfg: &ScenarioConfig) -> Result<KpiResult> {
    kpis_for(&AnalyticModel::new(&cfg.with_bias(bias_db))?, eta, rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    R10,
    Se10,
    Ee10,
    Theta10,
    Theta50,
}

impl Objective {
    pub const ALL: [Objective; 5] = [
        Objective::R10,
        Objective::Se10,
        Objective::Ee10,
        Objective::Theta10,
        Objective::Theta50,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Objective::R10 => "r10",
            Objective::Se10 => "se10",
            Objective::Ee10 => "ee10",
            Objective::Theta10 => "theta10",
            Objective::Theta50 => "theta50",
        }
    }

    /// Value of the objective, computing only the percentiles it needs.
    pub fn evaluate(self, model: &AnalyticModel, eta: f64, rho: f64) -> Result<f64> {
        let pct = |metric, q| model.mixture_cdf(metric, eta, rho)?.percentile(q);
        match self {
            Objective::R10 => pct(Metric::Rate, 0.1),
            Objective::Se10 => pct(Metric::Se, 0.1),
            Objective::Ee10 => pct(Metric::Ee, 0.1),
            Objective::Theta10 => Ok(pct(Metric::Se, 0.1)? * pct(Metric::Ee, 0.1)?),
            Objective::Theta50 => Ok(pct(Metric::Se, 0.5)? * pct(Metric::Ee, 0.5)?),
        }
    }

    /// Column name carrying the unit of the objective's raw value.
    pub fn column(self) -> &'static str {
        match self {
            Objective::R10 => "r10_bit_per_s",
            Objective::Se10 => "se10_bit_per_s_per_hz",
            Objective::Ee10 => "ee10_bit_per_joule",
            Objective::Theta10 => "theta10_bit2_per_s_per_hz_per_joule",
            Objective::Theta50 => "theta50_bit2_per_s_per_hz_per_joule",
        }
    }

    pub fn of(self, k: &KpiResult) -> f64 {
        match self {
            Objective::R10 => k.r10,
            Objective::Se10 => k.se10,
            Objective::Ee10 => k.ee10,
            Objective::Theta10 => k.theta10,
            Objective::Theta50 => k.theta50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eta: f64,
    pub rho: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptimum {
    pub objective: Objective,
    pub bias: f64,
    pub w_micro: f64,
    pub eta: f64,
    pub rho: f64,
    pub value: f64,
    /// Every evaluated cell, `eta` major.
    pub surface: Vec<GridPoint>,
}

impl GridOptimum {
    pub fn write_surface_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eta", "rho", self.objective.column()])?;
        for p in &self.surface {
            w.write_record([p.eta.to_string(), p.rho.to_string(), p.value.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `{0, step, 2 step, ...}` up to 1. When `1/step` is an integer the points
/// are formed as `k/n` so that e.g. 0.15 is the nearest double to 0.15.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::InvalidConfig {
            field: "step",
            reason: format!("{step} must lie in (0, 0.5]"),
        });
    }
    let inv = 1.0 / step;
    if (inv - inv.round()).abs() < 1e-9 {
        let n = inv.round() as usize;
        Ok((0..=n).map(|k| k as f64 / n as f64).collect())
    } else {
        let n = (inv + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| k as f64 * step).collect())
    }
}

/// Exhaustive search over `eta, rho` on the unit grid. The first maximum in
/// `eta`-major order wins, so ties go to the smaller `eta`, then `rho`.
pub fn optimize_with(model: &AnalyticModel, objective: Objective, step: f64) -> Result<GridOptimum> {
    let axis = unit_grid(step)?;
    let cells: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&eta| axis.iter().map(move |&rho| (eta, rho)))
        .collect();
    let surface: Vec<GridPoint> = cells
        .par_iter()
        .map(|&(eta, rho)| {
            Ok(GridPoint {
                eta,
                rho,
                value: objective.evaluate(model, eta, rho)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = surface[0];
    for p in &surface[1..] {
        if p.value > best.value {
            best = *p;
        }
    }
    Ok(GridOptimum {
        objective,
        bias: model.config().bias,
        w_micro: model.config().w_micro,
        eta: best.eta,
        rho: best.rho,
        value: best.value,
        surface,
    })
}

pub fn optimize_grid(bias_db: f64, cfg: &ScenarioConfig, objective: Objective, step: f64) -> Result<GridOptimum> {
    optimize_with(&AnalyticModel::new(&cfg.with_bias(bias_db))?, objective, step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub rho: f64,
    pub kpis: KpiResult,
}

/// KPIs along `etas` at fixed `rho`.
pub fn eta_sweep(model: &AnalyticModel, rho: f64, etas: &[f64]) -> Result<Vec<SweepRow>> {
    etas.par_iter()
        .map(|&eta| {
            Ok(SweepRow {
                eta,
                rho,
                kpis: kpis_for(model, eta, rho)?,
            })
        })
        .collect()
}

/// `eta` of the first row maximizing `f`.
pub fn argmax_eta(rows: &[SweepRow], f: impl Fn(&KpiResult) -> f64) -> f64 {
    let mut best = &rows[0];
    for r in &rows[1..] {
        if f(&r.kpis) > f(&best.kpis) {
            best = r;
        }
    }
    best.eta
}

/// One row per sweep point and objective: `eta,rho,objective,value`.
/// Rates are written in Mbit/s.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], objectives: &[Objective], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "rho", "objective", "value", "unit"])?;
    for r in rows {
        for &o in objectives {
            let (value, unit) = match o {
                Objective::R10 => (o.of(&r.kpis) / 1e6, "Mbit/s"),
                Objective::Se10 => (o.of(&r.kpis), "bit/s/Hz"),
                Objective::Ee10 => (o.of(&r.kpis), "bit/J"),
                Objective::Theta10 | Objective::Theta50 => (o.of(&r.kpis), "bit/s/Hz*bit/J"),
            };
            w.write_record([
                r.eta.to_string(),
                r.rho.to_string(),
                o.label().to_string(),
                value.to_string(),
                unit.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
