use std::sync::OnceLock;

use proptest::prelude::*;

use coe_hetnet::analytic::{type_mixture, AnalyticModel, Metric};
use coe_hetnet::geometry::{
    clipped_disk_intersection_area, disk_intersection_area, two_circle_intersection_area, Circle, HalfPlane, Point,
};
use coe_hetnet::scenario::{associate, build_scenario};
use coe_hetnet::{ScenarioConfig, UserType};

const BIASES: [f64; 3] = [0.0, 10.0, 20.0];

fn models() -> &'static [AnalyticModel] {
    static MODELS: OnceLock<Vec<AnalyticModel>> = OnceLock::new();
    MODELS.get_or_init(|| {
        BIASES
            .iter()
            .map(|&bias| {
                AnalyticModel::new(&ScenarioConfig {
                    bias,
                    ..ScenarioConfig::default()
                })
                .unwrap()
            })
            .collect()
    })
}

fn point_in_disc() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(u, phi)| Point::from_polar(1000.0 * u.sqrt(), phi))
}

fn circle() -> impl Strategy<Value = Circle> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.1..4.0f64).prop_map(|(x, y, r)| Circle::new(Point::new(x, y), r))
}

fn tier(zeta: UserType) -> u8 {
    match zeta {
        UserType::Macro => 0,
        _ => 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn association_ignores_a_common_power_scale(user in point_in_disc(), bias in 0.0..20.0f64, scale in 1e-3..1e3f64) {
        let layout = build_scenario(&ScenarioConfig::default());
        let mut scaled = layout.clone();
        for bs in &mut scaled.stations {
            bs.tx_power *= scale;
        }
        prop_assert_eq!(associate(user, &layout, bias), associate(user, &scaled, bias));
    }

    #[test]
    fn raising_the_bias_never_moves_users_to_the_macro(user in point_in_disc(), lo in 0.0..20.0f64, step in 0.0..10.0f64) {
        let layout = build_scenario(&ScenarioConfig::default());
        let before = associate(user, &layout, lo);
        let after = associate(user, &layout, lo + step);
        prop_assert!(tier(after.user_type) >= tier(before.user_type));
        if before.user_type == UserType::DirectMicro {
            prop_assert_eq!(after, before);
        }
    }

    #[test]
    fn two_circle_area_is_symmetric_and_bounded(a in circle(), b in circle()) {
        let ab = two_circle_intersection_area(&a, &b);
        let ba = two_circle_intersection_area(&b, &a);
        prop_assert!((ab - ba).abs() <= 1e-12 * a.area().max(b.area()));
        prop_assert!(ab >= 0.0);
        prop_assert!(ab <= a.area().min(b.area()) * (1.0 + 1e-12));
    }

    #[test]
    fn half_plane_and_its_complement_split_the_intersection(
        a in circle(),
        b in circle(),
        c in circle(),
        n in 0.0..std::f64::consts::TAU,
        offset in -5.0..5.0f64,
    ) {
        let disks = [a, b, c];
        let h = HalfPlane { normal: Point::from_polar(1.0, n), offset };
        let flip = HalfPlane { normal: h.normal * -1.0, offset: -offset };
        let whole = disk_intersection_area(&disks);
        let split = clipped_disk_intersection_area(&disks, &[h]) + clipped_disk_intersection_area(&disks, &[flip]);
        prop_assert!((whole - split).abs() <= 1e-9 * (1.0 + whole), "whole {whole} split {split}");
    }

    #[test]
    fn mixture_weights_sum_to_one(bias in 0.0..25.0f64, w in 0.0..=1.0f64) {
        let cfg = ScenarioConfig { bias, w_micro: w, ..ScenarioConfig::default() };
        let m = type_mixture(bias, &cfg).unwrap();
        prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(m.weights.iter().all(|&x| x >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn percentiles_invert_the_cdf(k in 0..BIASES.len(), m in 0..3usize, eta in 0.0..=1.0f64, rho in 0.01..0.99f64, q in 0.001..0.999f64) {
        let cdf = models()[k].mixture_cdf(Metric::ALL[m], eta, rho).unwrap();
        prop_assume!(q > cdf.atom_at_zero + 1e-9);
        let x = cdf.percentile(q).unwrap();
        prop_assert!((cdf.eval(x) - q).abs() <= 1e-6, "F({x}) = {} for q = {q}", cdf.eval(x));
    }

    #[test]
    fn cdfs_are_monotone(k in 0..BIASES.len(), m in 0..3usize, eta in 0.0..=1.0f64, rho in 0.01..0.99f64) {
        let cdf = models()[k].mixture_cdf(Metric::ALL[m], eta, rho).unwrap();
        let ys: Vec<f64> = cdf.grid(1000).iter().map(|&x| cdf.eval(x)).collect();
        prop_assert!(ys.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(ys.iter().all(|y| (0.0..=1.0).contains(y)));
    }
}
