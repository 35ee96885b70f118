//! Monte Carlo drops: users are placed at random, associated by biased
//! received power, and given rate, SE and EE under the time/frequency split.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{Metric, TypeMixture};
use crate::config::{InterferenceMode, ScenarioConfig, SharingMode};
use crate::error::{Error, Result};
use crate::geometry::{Circle, CoverageGeometry, Point};
use crate::radio::{noise_bandwidth, noise_power, total_network_power, LinkBudget};
use crate::scenario::{build_scenario, stream_rng, Drop, Layout, UserType};

/// One simulated user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub bs_index: usize,
    pub user_type: UserType,
    /// Received power from the serving BS (W).
    pub p_r_w: f64,
    pub sinr: f64,
    /// Users of the same type sharing the serving BS's resources.
    pub n_shared: f64,
    pub rate_bit_per_s: f64,
    pub se_bit_per_s_per_hz: f64,
    pub ee_bit_per_joule: f64,
}

impl UserRecord {
    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rate => self.rate_bit_per_s,
            Metric::Se => self.se_bit_per_s_per_hz,
            Metric::Ee => self.ee_bit_per_joule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSample {
    pub seed: u64,
    pub drop_index: u64,
    pub config_hash: String,
    pub users: Vec<UserRecord>,
}

impl DropSample {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.users.iter().map(|u| u.metric(metric)).collect()
    }

    pub fn type_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for u in &self.users {
            counts[u.user_type.index()] += 1;
        }
        counts
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records(self.users.iter(), out)
    }
}

/// Writes user records, one row each, with a header naming columns and units.
pub fn write_records<'a, W: Write>(records: impl Iterator<Item = &'a UserRecord>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Drop engine for one configuration. Holds everything that does not change
/// between drops.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: ScenarioConfig,
    layout: Layout,
    direct: Vec<Circle>,
    link: LinkBudget,
    p_tot: f64,
    mixture: TypeMixture,
    config_hash: String,
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let geometry = CoverageGeometry::new(cfg.bias, cfg)?;
        Ok(Self {
            cfg: cfg.clone(),
            layout: build_scenario(cfg),
            direct: geometry.direct.clone(),
            link: LinkBudget::new(cfg),
            p_tot: total_network_power(cfg.eta, cfg)?,
            mixture: TypeMixture::from_areas(&geometry.areas, cfg),
            config_hash: cfg.digest(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn link_budget(&self) -> &LinkBudget {
        &self.link
    }

    /// Noise-plus-interference for one user from the actual interferer
    /// distances: every other micro for direct users, micros sharing the
    /// serving micro's half band for CRE users, none for macro users.
    fn exact_sigma2(&self, zeta: UserType, serving: usize, user: Point) -> f64 {
        let noise = noise_power(&self.cfg, noise_bandwidth(zeta, &self.cfg));
        if zeta == UserType::Macro {
            return noise;
        }
        let interference: f64 = (1..self.layout.stations.len())
            .filter(|&j| j != serving)
            .filter(|&j| zeta == UserType::DirectMicro || (j + serving).is_multiple_of(2))
            .map(|j| self.layout.stations[j].power_at(user))
            .sum();
        noise + interference
    }

    /// Places users, associates them and computes every per-user metric.
    /// Drop `drop_index` always uses RNG stream `drop_index` of the seed.
    pub fn run_drop(&self, drop_index: u64) -> DropSample {
        let mut rng = stream_rng(self.cfg.rng_seed, drop_index);
        let drop = Drop::generate(&self.cfg, &self.layout, &self.direct, &mut rng);
        self.evaluate_drop(&drop, drop_index)
    }

    pub fn evaluate_drop(&self, drop: &Drop, drop_index: u64) -> DropSample {
        let mut load: HashMap<(usize, UserType), usize> = HashMap::new();
        for a in &drop.associations {
            *load.entry((a.bs_index, a.user_type)).or_default() += 1;
        }
        let users = drop
            .user_positions
            .iter()
            .zip(&drop.associations)
            .map(|(&pos, a)| {
                let zeta = a.user_type;
                let bs = &self.layout.stations[a.bs_index];
                let d = pos.dist(bs.position).max(crate::analytic::MIN_DISTANCE);
                let p_r = bs.tx_power / d.powf(bs.exponent);
                let sigma2 = match self.cfg.interference_mode {
                    InterferenceMode::PerType => self.link.sigma2(zeta),
                    InterferenceMode::Exact => self.exact_sigma2(zeta, a.bs_index, pos),
                };
                let sinr = p_r / sigma2;
                let n_shared = match self.cfg.sharing {
                    SharingMode::Realized => load[&(a.bs_index, zeta)] as f64,
                    SharingMode::Expected => self.mixture.per_bs_counts[zeta.index()],
                };
                let se = self.link.se_from_sinr(zeta, sinr);
                let rate = self.link.rate_from_sinr(zeta, sinr, n_shared);
                UserRecord {
                    x_m: pos.x,
                    y_m: pos.y,
                    bs_index: a.bs_index,
                    user_type: zeta,
                    p_r_w: p_r,
                    sinr,
                    n_shared,
                    rate_bit_per_s: rate,
                    se_bit_per_s_per_hz: se,
                    ee_bit_per_joule: rate / self.p_tot,
                }
            })
            .collect();
        DropSample {
            seed: self.cfg.rng_seed,
            drop_index,
            config_hash: self.config_hash.clone(),
            users,
        }
    }

    /// Drops `0..n_drops`, run in parallel and returned in index order.
    pub fn run_drops(&self, n_drops: u64) -> Vec<DropSample> {
        (0..n_drops).into_par_iter().map(|k| self.run_drop(k)).collect()
    }

    /// All users' values of `metric` over drops `0..n_drops`.
    pub fn pooled(&self, metric: Metric, n_drops: u64) -> Vec<f64> {
        self.run_drops(n_drops).iter().flat_map(|d| d.values(metric)).collect()
    }
}

pub fn run_drop(cfg: &ScenarioConfig, drop_index: u64) -> Result<DropSample> {
    Ok(Simulator::new(cfg)?.run_drop(drop_index))
}

/// Right-continuous step CDF of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `v` with `F(v) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }

    /// Writes the distinct sample values and the CDF after each.
    pub fn write_csv<W: Write>(&self, value_column: &str, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([value_column, "probability"])?;
        let n = self.sorted.len();
        for (i, &x) in self.sorted.iter().enumerate() {
            if i + 1 < n && self.sorted[i + 1] == x {
                continue;
            }
            w.write_record([x.to_string(), ((i + 1) as f64 / n as f64).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn empirical_cdf(samples: Vec<f64>) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_cdf_values() {
        let f = empirical_cdf(vec![3.0, 1.0, 2.0]).unwrap();
        assert_relative_eq!(f.eval(2.0), 2.0 / 3.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(3.0), 1.0);
        assert_eq!(f.eval(10.0), 1.0);
        assert_eq!(f.quantile(0.5), 2.0);
        assert!(matches!(empirical_cdf(vec![]), Err(Error::EmptySample)));
    }

    #[test]
    fn zero_bias_drop_has_no_cre_users() {
        let cfg = ScenarioConfig {
            bias: 0.0,
            ..ScenarioConfig::default()
        };
        let d = run_drop(&cfg, 0).unwrap();
        assert_eq!(d.type_counts()[2], 0);
        assert_eq!(d.users.len(), 1000);
    }

    #[test]
    fn no_cre_time_means_zero_cre_rate() {
        let cfg = ScenarioConfig {
            eta: 0.0,
            ..ScenarioConfig::default()
        };
        let d = run_drop(&cfg, 4).unwrap();
        let cre: Vec<_> = d.users.iter().filter(|u| u.user_type == UserType::Cre).collect();
        assert!(!cre.is_empty());
        assert!(cre.iter().all(|u| u.rate_bit_per_s == 0.0));
    }

    #[test]
    fn record_identities() {
        let cfg = ScenarioConfig::default();
        let sim = Simulator::new(&cfg).unwrap();
        let link = sim.link_budget();
        let p_tot = total_network_power(cfg.eta, &cfg).unwrap();
        for u in sim.run_drop(2).users {
            let z = u.user_type;
            let expected =
                link.time_share(z) / u.n_shared * cfg.total_bandwidth * link.band_share(z) * (1.0 + u.sinr).log2();
            assert_relative_eq!(u.rate_bit_per_s, expected, max_relative = 1e-12);
            assert_relative_eq!(
                u.rate_bit_per_s,
                u.se_bit_per_s_per_hz * cfg.total_bandwidth * link.band_share(z) / u.n_shared,
                max_relative = 1e-12
            );
            assert_relative_eq!(u.ee_bit_per_joule, u.rate_bit_per_s / p_tot, max_relative = 1e-12);
        }
    }

    #[test]
    fn realized_shares_fill_each_allocation() {
        let cfg = ScenarioConfig::default();
        let sim = Simulator::new(&cfg).unwrap();
        let link = sim.link_budget();
        let drop = sim.run_drop(7);
        let mut used: HashMap<(usize, UserType), f64> = HashMap::new();
        for u in &drop.users {
            *used.entry((u.bs_index, u.user_type)).or_default() += 1.0 / u.n_shared;
        }
        for ((_, z), share) in used {
            let budget = link.time_share(z) * link.band_share(z) * cfg.total_bandwidth;
            assert_relative_eq!(share * budget, budget, max_relative = 1e-12);
        }
    }

    #[test]
    fn drops_are_deterministic() {
        let sim = Simulator::new(&ScenarioConfig::default()).unwrap();
        assert_eq!(sim.run_drop(3), sim.run_drop(3));
        assert_ne!(sim.run_drop(3).users, sim.run_drop(4).users);
        let a = sim.run_drops(4);
        let b = sim.run_drops(4);
        assert_eq!(a, b);
        assert_eq!(a[2], sim.run_drop(2));
    }

    #[test]
    fn exact_interference_is_at_least_noise() {
        let cfg = ScenarioConfig {
            interference_mode: InterferenceMode::Exact,
            ..ScenarioConfig::default()
        };
        let sim = Simulator::new(&cfg).unwrap();
        let noise = noise_power(&cfg, cfg.total_bandwidth);
        for u in sim.run_drop(0).users {
            assert!(u.p_r_w / u.sinr >= noise * (1.0 - 1e-12));
        }
    }

    #[test]
    fn csv_round_trip_columns() {
        let cfg = ScenarioConfig {
            n_ue: 10,
            ..ScenarioConfig::default()
        };
        let d = run_drop(&cfg, 0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x_m,y_m,bs_index,user_type,p_r_w,sinr,n_shared,rate_bit_per_s"));
        assert_eq!(text.lines().count(), 11);
    }
}
