//! Link-level quantities: path-loss power, per-type noise-plus-interference,
//! rates under the time/frequency split, SE, EE and BS power consumption.

use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, NoiseBandwidthMode, PowerModelParams, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scenario::{build_scenario, BaseStation, BsClass, Layout, UserType};

pub fn received_power(bs: &BaseStation, user: Point) -> Result<f64> {
    let d = user.dist(bs.position);
    if d == 0.0 {
        return Err(Error::DegenerateDistance);
    }
    Ok(bs.tx_power / d.powf(bs.exponent))
}

/// Thermal noise power (W) over `bandwidth` Hz.
pub fn noise_power(cfg: &ScenarioConfig, bandwidth: f64) -> f64 {
    db_to_linear(cfg.noise_psd + cfg.noise_figure) * cfg.noise_psd_unit.scale() * bandwidth
}

/// Time share of a user type: `1 - eta` for macro and direct users, `eta`
/// for CRE users.
pub fn time_share(zeta: UserType, eta: f64) -> f64 {
    match zeta {
        UserType::Macro | UserType::DirectMicro => 1.0 - eta,
        UserType::Cre => eta,
    }
}

/// Band share of a user type: `rho` for macro, `1 - rho` for direct, one half
/// for CRE users (adjacent micros alternate halves).
pub fn band_share(zeta: UserType, rho: f64) -> f64 {
    match zeta {
        UserType::Macro => rho,
        UserType::DirectMicro => 1.0 - rho,
        UserType::Cre => 0.5,
    }
}

/// Micros (by index into `layout.micros()`) that interfere with a user of
/// type `zeta` served by micro 0.
fn interferers(zeta: UserType, layout: &Layout) -> impl Iterator<Item = usize> + '_ {
    (1..layout.n_micro()).filter(move |&j| match zeta {
        UserType::Macro => false,
        UserType::DirectMicro => true,
        UserType::Cre => j % 2 == 0,
    })
}

/// Co-channel interference power at the serving micro's location, summed
/// over the micros sharing the type's band.
pub fn interference_power(zeta: UserType, layout: &Layout) -> f64 {
    let micros = layout.micros();
    interferers(zeta, layout)
        .map(|j| {
            let l = micros[0].position.dist(micros[j].position);
            micros[j].tx_power / l.powf(micros[j].exponent)
        })
        .sum()
}

pub fn interferer_count(zeta: UserType, layout: &Layout) -> usize {
    interferers(zeta, layout).count()
}

/// Bandwidth over which noise is integrated for type `zeta`.
pub fn noise_bandwidth(zeta: UserType, cfg: &ScenarioConfig) -> f64 {
    match cfg.noise_bandwidth_mode {
        NoiseBandwidthMode::FullBand => cfg.total_bandwidth,
        NoiseBandwidthMode::Allocation => band_share(zeta, cfg.rho) * cfg.total_bandwidth,
    }
}

pub fn interference_variance(zeta: UserType, layout: &Layout, cfg: &ScenarioConfig) -> f64 {
    noise_power(cfg, noise_bandwidth(zeta, cfg)) + interference_power(zeta, layout)
}

/// Noise-plus-interference power per user type, identical for every user of
/// a type by the ring symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceProfile {
    pub sigma2: [f64; 3],
}

impl InterferenceProfile {
    pub fn new(layout: &Layout, cfg: &ScenarioConfig) -> Self {
        Self {
            sigma2: UserType::ALL.map(|z| interference_variance(z, layout, cfg)),
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self::new(&build_scenario(cfg), cfg)
    }

    pub fn get(&self, zeta: UserType) -> f64 {
        self.sigma2[zeta.index()]
    }
}

/// Resource split `(eta, rho)` together with the noise accounting that decides
/// whether a type with zero band is served at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub profile: InterferenceProfile,
    pub eta: f64,
    pub rho: f64,
    pub bandwidth: f64,
    pub mode: NoiseBandwidthMode,
}

impl LinkBudget {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            profile: InterferenceProfile::from_config(cfg),
            eta: cfg.eta,
            rho: cfg.rho,
            bandwidth: cfg.total_bandwidth,
            mode: cfg.noise_bandwidth_mode,
        }
    }

    pub fn sigma2(&self, zeta: UserType) -> f64 {
        self.profile.get(zeta)
    }

    pub fn time_share(&self, zeta: UserType) -> f64 {
        time_share(zeta, self.eta)
    }

    pub fn band_share(&self, zeta: UserType) -> f64 {
        band_share(zeta, self.rho)
    }

    /// False when the type gets no time, or (with per-allocation noise) no
    /// band; such users carry zero rate, SE and EE.
    pub fn is_served(&self, zeta: UserType) -> bool {
        let eta_z = self.time_share(zeta);
        let band_ok = match self.mode {
            NoiseBandwidthMode::FullBand => true,
            NoiseBandwidthMode::Allocation => self.band_share(zeta) > 0.0,
        };
        eta_z > 0.0 && band_ok
    }

    /// `eta_zeta * log2(1 + sinr)`.
    pub fn se_from_sinr(&self, zeta: UserType, sinr: f64) -> f64 {
        if !self.is_served(zeta) {
            return 0.0;
        }
        self.time_share(zeta) * sinr.ln_1p() / std::f64::consts::LN_2
    }

    pub fn spectral_efficiency(&self, zeta: UserType, p_r: f64) -> f64 {
        self.se_from_sinr(zeta, p_r / self.sigma2(zeta))
    }

    /// Bandwidth scale turning SE into rate: `W rho_zeta / n_shared`.
    pub fn rate_per_se(&self, zeta: UserType, n_shared: f64) -> f64 {
        self.bandwidth * self.band_share(zeta) / n_shared
    }

    pub fn rate_from_sinr(&self, zeta: UserType, sinr: f64, n_shared: f64) -> f64 {
        let se = self.se_from_sinr(zeta, sinr);
        if se == 0.0 {
            return 0.0;
        }
        se * self.rate_per_se(zeta, n_shared)
    }

    /// `(eta_zeta / n) W rho_zeta log2(1 + p_r / sigma^2_zeta)`.
    pub fn user_rate(&self, zeta: UserType, p_r: f64, n_shared: f64) -> f64 {
        self.rate_from_sinr(zeta, p_r / self.sigma2(zeta), n_shared)
    }
}

pub fn user_rate(zeta: UserType, p_r: f64, n_shared: f64, cfg: &ScenarioConfig) -> f64 {
    LinkBudget::new(cfg).user_rate(zeta, p_r, n_shared)
}

pub fn spectral_efficiency(zeta: UserType, p_r: f64, cfg: &ScenarioConfig) -> f64 {
    LinkBudget::new(cfg).spectral_efficiency(zeta, p_r)
}

/// Linear BS consumption model; sleep power when the output is zero.
pub fn bs_power_in(params: &PowerModelParams, p_out: f64) -> Result<f64> {
    if p_out > params.p_max {
        return Err(Error::OverMax {
            p_out,
            p_max: params.p_max,
        });
    }
    let n = params.n_trx as f64;
    if p_out <= 0.0 {
        Ok(n * params.p_sleep)
    } else {
        Ok(n * params.p0 + params.delta_p * p_out)
    }
}

pub fn power_params(class: BsClass, cfg: &ScenarioConfig) -> &PowerModelParams {
    match class {
        BsClass::Macro => &cfg.power_model.macro_bs,
        BsClass::Micro => &cfg.power_model.micro_bs,
    }
}

/// Total consumption (W) when the macro is silent for a fraction `eta` of
/// the time and every micro transmits at full power.
pub fn total_network_power(eta: f64, cfg: &ScenarioConfig) -> Result<f64> {
    let macro_on = bs_power_in(&cfg.power_model.macro_bs, cfg.macro_power_w())?;
    let macro_off = bs_power_in(&cfg.power_model.macro_bs, 0.0)?;
    let micro = bs_power_in(&cfg.power_model.micro_bs, cfg.micro_power_w())?;
    Ok((1.0 - eta) * macro_on + eta * macro_off + cfg.n_micro as f64 * micro)
}

/// Bits per joule: user rate over total network consumption.
pub fn energy_efficiency(rate: f64, eta: f64, cfg: &ScenarioConfig) -> Result<f64> {
    Ok(rate / total_network_power(eta, cfg)?)
}
