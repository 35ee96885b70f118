//! Closed-form CDF engine of the circular coverage model.
//!
//! The distance from a user to its serving BS has, for each user type, a CDF
//! given by the ratio of two areas: the part of the type's region within
//! distance `d` of the BS, over the whole region. Received power is a
//! monotone function of distance, and rate, SE and EE are monotone functions
//! of received power, so every per-type CDF is a composition
//! `F(v) = 1 - F_D(d(sigma^2 (2^(k v) - 1)))` with a metric-specific scale
//! `k`. The population CDF mixes the three types with their expected shares.

use std::f64::consts::LN_2;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{CoverageGeometry, RegionAreas};
use crate::radio::{total_network_power, LinkBudget};
use crate::scenario::UserType;

/// Points in each tabulated distance CDF.
pub const TABLE_POINTS: usize = 4096;

/// Closest a user is assumed to get to its serving BS (m). Bounds the
/// largest received power, hence the support of every metric CDF.
pub const MIN_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rate,
    Se,
    Ee,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rate, Metric::Se, Metric::Ee];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Rate => "rate",
            Metric::Se => "se",
            Metric::Ee => "ee",
        }
    }

    /// CSV column name carrying the unit.
    pub fn column(self) -> &'static str {
        match self {
            Metric::Rate => "rate_bit_per_s",
            Metric::Se => "se_bit_per_s_per_hz",
            Metric::Ee => "ee_bit_per_joule",
        }
    }
}

/// A CDF on `[0, inf)` that may carry an atom at zero and is continuous
/// elsewhere.
#[derive(Clone)]
pub struct AnalyticCdf {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `[lower, upper]` bracketing all mass: the CDF reaches at least
    /// `1 - 1e-9` at `upper`.
    pub support: (f64, f64),
    pub atom_at_zero: f64,
}

impl fmt::Debug for AnalyticCdf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticCdf")
            .field("support", &self.support)
            .field("atom_at_zero", &self.atom_at_zero)
            .finish_non_exhaustive()
    }
}

impl AnalyticCdf {
    /// `f` must be nondecreasing and continuous on `(0, inf)`.
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, support: (f64, f64), atom_at_zero: f64) -> Self {
        Self {
            evaluator: Arc::new(f),
            support,
            atom_at_zero,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (self.evaluator)(x).clamp(0.0, 1.0)
        }
    }

    /// `lim F(y)` as `y` approaches `x` from below.
    pub fn left_limit(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.eval(x)
        }
    }

    /// Smallest `v` with `F(v) >= q`, by bisection over the support.
    pub fn percentile(&self, q: f64) -> Result<f64> {
        let (lower, upper) = self.support;
        if q <= self.atom_at_zero {
            return Ok(0.0);
        }
        if q.is_nan() || q >= 1.0 || self.eval(upper) < q {
            return Err(Error::NotBracketed { q, lower, upper });
        }
        let (mut lo, mut hi) = (lower, upper);
        for _ in 0..400 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `n >= 2` evenly spaced points from the lower to the upper support bound.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.support;
        let n = n.max(2);
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Piecewise-linear copy sampled at `n` points, for repeated queries.
    pub fn tabulated(&self, n: usize) -> AnalyticCdf {
        let xs = self.grid(n);
        let mut ys: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        for k in 1..ys.len() {
            ys[k] = ys[k].max(ys[k - 1]);
        }
        let (lo, hi) = self.support;
        let step = (hi - lo) / (xs.len() - 1) as f64;
        let last = ys.len() - 1;
        let tail = self.clone();
        AnalyticCdf::new(
            move |x| {
                if x >= hi || step <= 0.0 {
                    return tail.eval(x);
                }
                let t = ((x - lo) / step).max(0.0);
                let k = (t.floor() as usize).min(last - 1);
                let frac = t - k as f64;
                ys[k] + frac * (ys[k + 1] - ys[k])
            },
            self.support,
            self.atom_at_zero,
        )
    }

    /// Writes `value,probability` rows at the given points.
    pub fn write_csv<W: Write>(&self, value_column: &str, grid: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([value_column, "probability"])?;
        for &x in grid {
            w.write_record([x.to_string(), self.eval(x).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expected composition of the user population at one bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMixture {
    /// Probability that a user is of each type.
    pub weights: [f64; 3],
    /// Expected number of users of each type.
    pub expected_counts: [f64; 3],
    /// Expected number of users of each type per serving BS.
    pub per_bs_counts: [f64; 3],
}

impl TypeMixture {
    pub fn from_areas(areas: &RegionAreas, cfg: &ScenarioConfig) -> Self {
        let w = cfg.w_micro;
        let spread = 1.0 - w;
        let weights = [
            spread * areas.s_macro / areas.s_tot,
            w + spread * areas.s_dir / areas.s_tot,
            spread * areas.s_cre / areas.s_tot,
        ];
        let n = cfg.n_ue as f64;
        let expected_counts = weights.map(|p| n * p);
        let per_bs_counts = [
            expected_counts[0],
            expected_counts[1] / cfg.n_micro as f64,
            expected_counts[2] / cfg.n_micro as f64,
        ];
        Self {
            weights,
            expected_counts,
            per_bs_counts,
        }
    }

    pub fn weight(&self, zeta: UserType) -> f64 {
        self.weights[zeta.index()]
    }
}

pub fn type_mixture(bias_db: f64, cfg: &ScenarioConfig) -> Result<TypeMixture> {
    let g = CoverageGeometry::new(bias_db, cfg)?;
    Ok(TypeMixture::from_areas(&g.areas, cfg))
}

/// Exact distance CDF of one type from the region areas.
fn exact_distance_cdf(g: &CoverageGeometry, zeta: UserType, d: f64) -> f64 {
    let total = g.areas.of(zeta);
    if d <= 0.0 {
        return 0.0;
    }
    if total <= 0.0 || d >= g.max_distance(zeta) {
        return 1.0;
    }
    (g.region_cdf_area(zeta, d) / total).clamp(0.0, 1.0)
}

/// Distance CDF tabulated uniformly in `d^2`, where the small-distance
/// behaviour (area growing like `pi d^2`) is linear.
#[derive(Debug, Clone)]
struct DistanceTable {
    u_max: f64,
    values: Vec<f64>,
}

impl DistanceTable {
    fn build(g: &CoverageGeometry, zeta: UserType, n: usize) -> Self {
        let r = g.max_distance(zeta);
        let u_max = r * r;
        let mut values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let u = u_max * k as f64 / (n - 1) as f64;
                exact_distance_cdf(g, zeta, u.sqrt())
            })
            .collect();
        for k in 1..n {
            values[k] = values[k].max(values[k - 1]);
        }
        values[n - 1] = 1.0;
        Self { u_max, values }
    }

    fn eval(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let u = d * d;
        if u >= self.u_max {
            return 1.0;
        }
        let x = u / self.u_max * (self.values.len() - 1) as f64;
        let k = x.floor() as usize;
        let t = x - k as f64;
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }
}

/// Per-type map `v -> F_Pr(sigma^2 (2^(scale v) - 1))`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    zeta: UserType,
    served: bool,
    sigma2: f64,
    scale: f64,
    p_t: f64,
    gamma: f64,
}

impl Kernel {
    fn received_power_cdf(&self, table: &DistanceTable, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        1.0 - table.eval((self.p_t / p).powf(1.0 / self.gamma))
    }

    fn eval(&self, table: &DistanceTable, v: f64) -> f64 {
        if v < 0.0 {
            0.0
        } else if !self.served {
            1.0
        } else {
            let p = self.sigma2 * (self.scale * v * LN_2).exp_m1();
            self.received_power_cdf(table, p)
        }
    }

    fn upper(&self) -> f64 {
        if !self.served {
            return 0.0;
        }
        let p_max = self.p_t / MIN_DISTANCE.powf(self.gamma);
        (p_max / self.sigma2).ln_1p() / LN_2 / self.scale
    }
}

/// Analytic model at one bias: coverage geometry, tabulated distance CDFs and
/// the expected type mixture. Metric CDFs for any `(eta, rho)` are built from
/// it cheaply.
#[derive(Debug, Clone)]
pub struct AnalyticModel {
    cfg: ScenarioConfig,
    geometry: CoverageGeometry,
    tables: Arc<[DistanceTable; 3]>,
    mixture: TypeMixture,
}

impl AnalyticModel {
    /// Uses `cfg.bias`; `cfg.eta` and `cfg.rho` are ignored in favour of the
    /// values passed per query.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let geometry = CoverageGeometry::new(cfg.bias, cfg)?;
        let tables = UserType::ALL.map(|z| DistanceTable::build(&geometry, z, TABLE_POINTS));
        let mixture = TypeMixture::from_areas(&geometry.areas, cfg);
        Ok(Self {
            cfg: cfg.clone(),
            geometry,
            tables: Arc::new(tables),
            mixture,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn geometry(&self) -> &CoverageGeometry {
        &self.geometry
    }

    pub fn mixture(&self) -> &TypeMixture {
        &self.mixture
    }

    /// Tabulated distance CDF.
    pub fn distance_cdf(&self, zeta: UserType, d: f64) -> f64 {
        self.tables[zeta.index()].eval(d)
    }

    pub fn distance_cdf_exact(&self, zeta: UserType, d: f64) -> f64 {
        exact_distance_cdf(&self.geometry, zeta, d)
    }

    fn tier(&self, zeta: UserType) -> (f64, f64) {
        match zeta {
            UserType::Macro => (self.cfg.macro_power_w(), self.cfg.alpha1),
            _ => (self.cfg.micro_power_w(), self.cfg.alpha2),
        }
    }

    /// `1 - F_D((P_t / p)^(1/gamma))` with the serving tier's parameters.
    pub fn received_power_cdf(&self, zeta: UserType, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let (p_t, gamma) = self.tier(zeta);
        1.0 - self.distance_cdf(zeta, (p_t / p).powf(1.0 / gamma))
    }

    pub fn link_budget(&self, eta: f64, rho: f64) -> LinkBudget {
        LinkBudget::new(&self.cfg.with_resource_split(eta, rho))
    }

    fn kernel(&self, metric: Metric, zeta: UserType, eta: f64, rho: f64, p_tot: f64) -> Kernel {
        let link = self.link_budget(eta, rho);
        let (p_t, gamma) = self.tier(zeta);
        let eta_z = link.time_share(zeta);
        let rho_z = link.band_share(zeta);
        let n_bs = self.mixture.per_bs_counts[zeta.index()];
        let rate_scale = n_bs / (eta_z * self.cfg.total_bandwidth * rho_z);
        let (served, scale) = match metric {
            Metric::Se => (link.is_served(zeta), 1.0 / eta_z),
            Metric::Rate => (link.is_served(zeta) && rho_z > 0.0 && n_bs > 0.0, rate_scale),
            Metric::Ee => (link.is_served(zeta) && rho_z > 0.0 && n_bs > 0.0, rate_scale * p_tot),
        };
        Kernel {
            zeta,
            served,
            sigma2: link.sigma2(zeta),
            scale,
            p_t,
            gamma,
        }
    }

    fn assemble(&self, kernels: Vec<(f64, Kernel)>) -> AnalyticCdf {
        let atom: f64 = kernels.iter().filter(|(_, k)| !k.served).map(|(w, _)| w).sum();
        let upper = kernels.iter().map(|(_, k)| k.upper()).fold(0.0, f64::max);
        let tables = Arc::clone(&self.tables);
        AnalyticCdf::new(
            move |v| {
                kernels
                    .iter()
                    .map(|(w, k)| w * k.eval(&tables[k.zeta.index()], v))
                    .sum()
            },
            (0.0, upper),
            atom,
        )
    }

    /// CDF of `metric` for users of type `zeta`.
    pub fn type_cdf(&self, metric: Metric, zeta: UserType, eta: f64, rho: f64) -> Result<AnalyticCdf> {
        let p_tot = total_network_power(eta, &self.cfg)?;
        Ok(self.assemble(vec![(1.0, self.kernel(metric, zeta, eta, rho, p_tot))]))
    }

    /// Population CDF of `metric`, mixing the types with explicit weights.
    /// Types of zero weight are left out.
    pub fn weighted_cdf(&self, metric: Metric, eta: f64, rho: f64, weights: [f64; 3]) -> Result<AnalyticCdf> {
        let p_tot = total_network_power(eta, &self.cfg)?;
        let kernels = UserType::ALL
            .into_iter()
            .filter(|z| weights[z.index()] > 0.0)
            .map(|z| (weights[z.index()], self.kernel(metric, z, eta, rho, p_tot)))
            .collect();
        Ok(self.assemble(kernels))
    }

    /// Population CDF of `metric` with the expected type shares.
    pub fn mixture_cdf(&self, metric: Metric, eta: f64, rho: f64) -> Result<AnalyticCdf> {
        self.weighted_cdf(metric, eta, rho, self.mixture.weights)
    }
}

pub fn distance_cdf(zeta: UserType, bias_db: f64, d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    let g = CoverageGeometry::new(bias_db, cfg)?;
    Ok(exact_distance_cdf(&g, zeta, d))
}

pub fn received_power_cdf(zeta: UserType, bias_db: f64, p: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if p <= 0.0 {
        return Ok(0.0);
    }
    let g = CoverageGeometry::new(bias_db, cfg)?;
    let (p_t, gamma) = match zeta {
        UserType::Macro => (cfg.macro_power_w(), cfg.alpha1),
        _ => (cfg.micro_power_w(), cfg.alpha2),
    };
    Ok(1.0 - exact_distance_cdf(&g, zeta, (p_t / p).powf(1.0 / gamma)))
}

pub fn rate_cdf_per_type(
    zeta: UserType,
    bias_db: f64,
    eta: f64,
    rho: f64,
    c: f64,
    cfg: &ScenarioConfig,
) -> Result<f64> {
    let model = AnalyticModel::new(&cfg.with_bias(bias_db))?;
    Ok(model.type_cdf(Metric::Rate, zeta, eta, rho)?.eval(c))
}

pub fn mixture_cdf(bias_db: f64, eta: f64, rho: f64, cfg: &ScenarioConfig, metric: Metric) -> Result<AnalyticCdf> {
    AnalyticModel::new(&cfg.with_bias(bias_db))?.mixture_cdf(metric, eta, rho)
}

pub fn percentile(cdf: &AnalyticCdf, q: f64) -> Result<f64> {
    cdf.percentile(q)
}
