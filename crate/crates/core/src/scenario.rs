//! Deployment layout, user placement and biased cell association.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{micro_angle, Circle, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserType {
    Macro = 0,
    DirectMicro = 1,
    Cre = 2,
}

impl UserType {
    pub const ALL: [UserType; 3] = [UserType::Macro, UserType::DirectMicro, UserType::Cre];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            UserType::Macro => "macro",
            UserType::DirectMicro => "direct_micro",
            UserType::Cre => "cre",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsClass {
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub position: Point,
    pub class: BsClass,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Path-loss exponent.
    pub exponent: f64,
}

impl BaseStation {
    /// `P_t / d^gamma`; infinite at the BS position.
    pub fn power_at(&self, p: Point) -> f64 {
        self.tx_power / p.dist(self.position).powf(self.exponent)
    }
}

/// Base stations in index order: 0 is the macro, 1..=n_micro the micros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub stations: Vec<BaseStation>,
    pub disc_radius: f64,
}

impl Layout {
    pub fn macro_bs(&self) -> &BaseStation {
        &self.stations[0]
    }

    pub fn micros(&self) -> &[BaseStation] {
        &self.stations[1..]
    }

    pub fn n_micro(&self) -> usize {
        self.stations.len() - 1
    }
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Layout {
    let mut stations = Vec::with_capacity(cfg.n_micro + 1);
    stations.push(BaseStation {
        position: Point::ORIGIN,
        class: BsClass::Macro,
        tx_power: cfg.macro_power_w(),
        exponent: cfg.alpha1,
    });
    for i in 0..cfg.n_micro {
        stations.push(BaseStation {
            position: Point::from_polar(cfg.ring_radius, micro_angle(i, cfg.n_micro)),
            class: BsClass::Micro,
            tx_power: cfg.micro_power_w(),
            exponent: cfg.alpha2,
        });
    }
    Layout {
        stations,
        disc_radius: cfg.disc_radius,
    }
}

/// Independent RNG stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_in_disc<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    loop {
        let p = Point::new(rng.random_range(-radius..=radius), rng.random_range(-radius..=radius));
        if p.norm_sq() <= radius * radius {
            return p;
        }
    }
}

/// Drops `cfg.n_ue` users: `floor(w_micro * n_ue)` uniformly over the direct
/// coverage circles (micro picked uniformly, then rejection inside its circle
/// clipped to the disc), the rest uniformly over the whole disc.
pub fn sample_users<R: Rng + ?Sized>(cfg: &ScenarioConfig, direct: &[Circle], rng: &mut R) -> Vec<Point> {
    let focused = ((cfg.w_micro * cfg.n_ue as f64).floor() as usize).min(cfg.n_ue);
    let r2 = cfg.disc_radius * cfg.disc_radius;
    let mut users = Vec::with_capacity(cfg.n_ue);
    for _ in 0..cfg.n_ue - focused {
        users.push(uniform_in_disc(cfg.disc_radius, rng));
    }
    for _ in 0..focused {
        let circle = direct[rng.random_range(0..direct.len())];
        loop {
            let p = circle.center + uniform_in_disc(circle.radius, rng);
            if p.norm_sq() <= r2 {
                users.push(p);
                break;
            }
        }
    }
    users
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub bs_index: usize,
    pub user_type: UserType,
}

/// Serves the user from the BS with the largest biased received power.
///
/// Exact ties go to the micro tier, and among micros to the lowest index. A
/// micro user is direct when its unbiased micro power is at least the macro
/// power, otherwise it is a CRE user.
pub fn associate(user: Point, layout: &Layout, bias_db: f64) -> Association {
    let bias = 10f64.powf(bias_db / 10.0);
    let macro_power = layout.macro_bs().power_at(user);
    let mut best: Option<(usize, f64)> = None;
    for (k, bs) in layout.micros().iter().enumerate() {
        let p = bs.power_at(user);
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((k + 1, p));
        }
    }
    match best {
        Some((idx, p)) if p * bias >= macro_power => Association {
            bs_index: idx,
            user_type: if p >= macro_power {
                UserType::DirectMicro
            } else {
                UserType::Cre
            },
        },
        _ => Association {
            bs_index: 0,
            user_type: UserType::Macro,
        },
    }
}

/// One realization of user positions and their associations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub associations: Vec<Association>,
}

impl Drop {
    pub fn generate<R: Rng + ?Sized>(cfg: &ScenarioConfig, layout: &Layout, direct: &[Circle], rng: &mut R) -> Self {
        let user_positions = sample_users(cfg, direct, rng);
        let associations = user_positions.iter().map(|&u| associate(u, layout, cfg.bias)).collect();
        Self {
            bs_positions: layout.stations.iter().map(|s| s.position).collect(),
            user_positions,
            associations,
        }
    }

    pub fn type_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for a in &self.associations {
            counts[a.user_type.index()] += 1;
        }
        counts
    }

    /// One row per user: `x_m,y_m,bs_index,type`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_m", "y_m", "bs_index", "type"])?;
        for (p, a) in self.user_positions.iter().zip(&self.associations) {
            w.write_record([
                p.x.to_string(),
                p.y.to_string(),
                a.bs_index.to_string(),
                a.user_type.label().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{solve_cre_contour_points, CoverageGeometry};

    #[test]
    fn ring_layout() {
        let layout = build_scenario(&ScenarioConfig::default());
        assert_eq!(layout.n_micro(), 10);
        for bs in layout.micros() {
            assert!((bs.position.norm() - 800.0).abs() < 1e-9);
        }
        let sep = layout.stations[1].position.dist(layout.stations[2].position);
        assert!((sep - 2.0 * 800.0 * (std::f64::consts::PI / 10.0).sin()).abs() < 1e-9);
        assert!((sep - 494.4).abs() < 0.1);
    }

    #[test]
    fn single_micro_on_axis() {
        let layout = build_scenario(&ScenarioConfig {
            n_micro: 1,
            ..ScenarioConfig::default()
        });
        assert_eq!(layout.micros()[0].position, Point::new(800.0, 0.0));
    }

    #[test]
    fn user_on_bs_positions() {
        let layout = build_scenario(&ScenarioConfig::default());
        let at_micro = associate(layout.stations[3].position, &layout, 10.0);
        assert_eq!(
            at_micro,
            Association {
                bs_index: 3,
                user_type: UserType::DirectMicro
            }
        );
        let at_macro = associate(Point::ORIGIN, &layout, 10.0);
        assert_eq!(
            at_macro,
            Association {
                bs_index: 0,
                user_type: UserType::Macro
            }
        );
    }

    #[test]
    fn contour_point_flips_type() {
        let cfg = ScenarioConfig::default();
        let layout = build_scenario(&cfg);
        let pts = solve_cre_contour_points(15.0, &cfg).unwrap();
        let inside = associate(Point::new(pts.p1 + 1e-3, 0.0), &layout, 15.0);
        let outside = associate(Point::new(pts.p1 - 1e-3, 0.0), &layout, 15.0);
        assert_eq!(
            inside,
            Association {
                bs_index: 1,
                user_type: UserType::Cre
            }
        );
        assert_eq!(outside.user_type, UserType::Macro);
    }

    #[test]
    fn no_cre_without_bias() {
        let cfg = ScenarioConfig::default();
        let layout = build_scenario(&cfg);
        let mut rng = stream_rng(3, 0);
        for _ in 0..5000 {
            let p = uniform_in_disc(1000.0, &mut rng);
            assert_ne!(associate(p, &layout, 0.0).user_type, UserType::Cre);
        }
    }

    #[test]
    fn focused_users_land_in_direct_circles() {
        let cfg = ScenarioConfig {
            w_micro: 1.0,
            n_ue: 2000,
            ..ScenarioConfig::default()
        };
        let g = CoverageGeometry::new(0.0, &cfg).unwrap();
        let users = sample_users(&cfg, &g.direct, &mut stream_rng(9, 1));
        assert_eq!(users.len(), 2000);
        assert!(users.iter().all(|&u| g.direct.iter().any(|c| c.contains(u))));
    }

    #[test]
    fn uniform_users_mean_radius() {
        let cfg = ScenarioConfig {
            w_micro: 0.0,
            n_ue: 100_000,
            ..ScenarioConfig::default()
        };
        let g = CoverageGeometry::new(0.0, &cfg).unwrap();
        let users = sample_users(&cfg, &g.direct, &mut stream_rng(11, 0));
        let mean = users.iter().map(|u| u.norm()).sum::<f64>() / users.len() as f64;
        assert!((mean / (2.0 / 3.0 * 1000.0) - 1.0).abs() < 0.01, "{mean}");
        assert!(users.iter().all(|u| u.norm() <= 1000.0));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let cfg = ScenarioConfig::default();
        let g = CoverageGeometry::new(0.0, &cfg).unwrap();
        let a = sample_users(&cfg, &g.direct, &mut stream_rng(5, 2));
        let b = sample_users(&cfg, &g.direct, &mut stream_rng(5, 2));
        let c = sample_users(&cfg, &g.direct, &mut stream_rng(5, 3));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn drop_csv_has_one_row_per_user() {
        let cfg = ScenarioConfig {
            n_ue: 25,
            ..ScenarioConfig::default()
        };
        let layout = build_scenario(&cfg);
        let g = CoverageGeometry::new(0.0, &cfg).unwrap();
        let drop = Drop::generate(&cfg, &layout, &g.direct, &mut stream_rng(1, 0));
        let mut buf = Vec::new();
        drop.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("x_m,y_m,bs_index,type"));
    }
}
