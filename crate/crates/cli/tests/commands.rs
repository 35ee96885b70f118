use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use coe_hetnet::ScenarioConfig;
use serde_json::Value;
use tempfile::TempDir;

fn hetnet(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetnet"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn assert_cdf_column(p: &[f64]) {
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(p.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn cdf_writes_monotone_analytic_and_empirical_tables() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(
        dir.path(),
        &["cdf", "--metric", "rate", "--grid-size", "200", "--drops", "5"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["cdf_rate_analytic.csv", "cdf_rate_empirical.csv"] {
        let (header, rows) = read_csv(&dir.path().join(name));
        assert_eq!(header, ["rate_bit_per_s", "probability"]);
        assert_cdf_column(&column(&rows, 1));
        let x = column(&rows, 0);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
    }
    let (_, rows) = read_csv(&dir.path().join("cdf_rate_analytic.csv"));
    assert_eq!(rows.len(), 200);

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "cdf");
    let files: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert_eq!(files, ["cdf_rate_analytic.csv", "cdf_rate_empirical.csv"]);
}

#[test]
fn cdf_grid_of_two_is_the_support_endpoints() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(
        dir.path(),
        &["cdf", "--metric", "se", "--grid-size", "2", "--drops", "0"],
    );
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("cdf_se_analytic.csv"));
    assert_eq!(header, ["se_bit_per_s_per_hz", "probability"]);
    assert_eq!(rows.len(), 2);
    let p = column(&rows, 1);
    assert_eq!(p[0], 0.0);
    assert!(p[1] > 1.0 - 1e-6);
    assert!(!dir.path().join("cdf_se_empirical.csv").exists());
}

#[test]
fn manifest_hash_matches_its_config_snapshot() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(dir.path(), &["--seed", "77", "--bias", "15", "simulate"]);
    assert!(o.status.success());
    let manifest = read_json(&dir.path().join("manifest.json"));
    let cfg: ScenarioConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(cfg.rng_seed, 77);
    assert_eq!(cfg.bias, 15.0);
    assert_eq!(manifest["seed"], 77);
    assert_eq!(manifest["config_hash"].as_str().unwrap(), cfg.digest());
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["duration_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"bias": 20.0, "w_micro": 0.25, "n_ue": 50}"#).unwrap();
    let o = hetnet(
        dir.path(),
        &["--config", cfg_path.to_str().unwrap(), "--w-micro", "0.75", "simulate"],
    );
    assert!(o.status.success());
    let cfg: ScenarioConfig =
        serde_json::from_value(read_json(&dir.path().join("manifest.json"))["config"].clone()).unwrap();
    assert_eq!(cfg.bias, 20.0);
    assert_eq!(cfg.w_micro, 0.75);
    assert_eq!(cfg.n_ue, 50);
    assert_eq!(cfg.alpha1, 3.5);
    let (_, rows) = read_csv(&dir.path().join("drop_0000.csv"));
    assert_eq!(rows.len(), 50);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = hetnet(
            dir.path(),
            &["--seed", seed, "--threads", "1", "simulate", "--drops", "2"],
        );
        assert!(o.status.success());
    }
    for name in ["drop_0000.csv", "drop_0001.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap());
        assert_ne!(x, fs::read(c.path().join(name)).unwrap());
    }
}

#[test]
fn simulate_records_carry_units() {
    let dir = TempDir::new().unwrap();
    assert!(hetnet(dir.path(), &["simulate"]).status.success());
    let (header, rows) = read_csv(&dir.path().join("drop_0000.csv"));
    assert_eq!(
        header,
        [
            "x_m",
            "y_m",
            "bs_index",
            "user_type",
            "p_r_w",
            "sinr",
            "n_shared",
            "rate_bit_per_s",
            "se_bit_per_s_per_hz",
            "ee_bit_per_joule"
        ]
    );
    assert_eq!(rows.len(), 1000);
}

#[test]
fn optimize_r10_matches_the_reference_cell() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(
        dir.path(),
        &["--bias", "20", "--w-micro", "0.5", "optimize", "--objective", "r10"],
    );
    assert!(o.status.success());
    let s = read_json(&dir.path().join("optimize_r10.json"));
    let eta = s["eta"].as_f64().unwrap();
    let rho = s["rho"].as_f64().unwrap();
    // Grid units, so that 0.03 is not lost to rounding of 0.35 - 0.32.
    assert!(((eta - 0.35) * 100.0).abs().round() <= 3.0, "eta* {eta}");
    assert!(((rho - 0.50) * 100.0).abs().round() <= 3.0, "rho* {rho}");
    let r10 = s["display_value"].as_f64().unwrap();
    assert_eq!(s["display_unit"], "Mbit/s");
    assert!((r10 / 4.011 - 1.0).abs() <= 0.10, "R10 {r10}");
    assert_eq!(s["bias"], 20.0);
    assert_eq!(s["w_micro"], 0.5);

    let (header, rows) = read_csv(&dir.path().join("surface_r10.csv"));
    assert_eq!(header, ["eta", "rho", "r10_bit_per_s"]);
    assert_eq!(rows.len(), 101 * 101);
}

#[test]
fn theta50_optimum_is_at_zero_eta() {
    let dir = TempDir::new().unwrap();
    for (bias, w) in [
        ("10", "0.5"),
        ("20", "0.3333333333333333"),
        ("15", "0.6666666666666666"),
    ] {
        let o = hetnet(
            dir.path(),
            &[
                "--bias",
                bias,
                "--w-micro",
                w,
                "optimize",
                "--objective",
                "theta50",
                "--step",
                "0.05",
            ],
        );
        assert!(o.status.success());
        let s = read_json(&dir.path().join("optimize_theta50.json"));
        assert_eq!(s["eta"], 0.0, "B={bias} W={w}");
    }
}

#[test]
fn sweep_rows_follow_the_median_trend() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(
        dir.path(),
        &[
            "--rho",
            "0.5",
            "sweep",
            "--objective",
            "se10",
            "r10",
            "theta50",
            "--eta-step",
            "0.05",
        ],
    );
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("sweep_eta.csv"));
    assert_eq!(header, ["eta", "rho", "objective", "value", "unit"]);
    assert_eq!(rows.len(), 21 * 3);

    let series = |name: &str| -> Vec<(f64, f64)> {
        rows.iter()
            .filter(|r| r[2] == name)
            .map(|r| (r[0].parse().unwrap(), r[3].parse().unwrap()))
            .collect()
    };
    let theta50 = series("theta50");
    assert!(theta50.windows(2).all(|w| w[1].1 <= w[0].1));
    // No CRE time: more than a tenth of the users get nothing.
    assert_eq!(series("r10")[0], (0.0, 0.0));
    let se10 = series("se10");
    let (imax, _) = se10
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    assert!(imax > 0 && imax < se10.len() - 1);
    assert!(rows.iter().filter(|r| r[2] == "r10").all(|r| r[4] == "Mbit/s"));
}

#[test]
fn validate_self_test_is_calibrated() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(dir.path(), &["validate", "--metric", "ee", "--self-test"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let s = read_json(&dir.path().join("ks_ee.json"));
    assert_eq!(s["mode"], "self_test");
    assert_eq!(s["report"]["n_trials"], 400);
    assert!(s["report"]["pass_ratio"].as_f64().unwrap() >= 0.93);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn validate_exit_status_follows_the_threshold() {
    let dir = TempDir::new().unwrap();
    let args = [
        "--bias",
        "20",
        "--w-micro",
        "0.6666666666666666",
        "validate",
        "--trials",
        "100",
    ];
    let o = hetnet(dir.path(), &args);
    let s = read_json(&dir.path().join("ks_rate.json"));
    let pass = s["report"]["pass_ratio"].as_f64().unwrap();
    assert!(pass > 0.5 && pass < 1.0, "pass ratio {pass}");
    assert_eq!(o.status.code(), Some(0));

    let strict = [&args[..], &["--threshold", "1.0"]].concat();
    let o = hetnet(dir.path(), &strict);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("below the threshold"));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn malformed_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"rho": 1.5}"#, "rho"),
        (r#"{"n_micro": 0}"#, "n_micro"),
        (r#"{"w_mikro": 0.5}"#, "w_mikro"),
        (r#"{"bias": "ten"}"#, "`bias`"),
    ];
    for (text, field) in cases {
        let path = dir.path().join("bad.json");
        fs::write(&path, text).unwrap();
        let o = hetnet(dir.path(), &["--config", path.to_str().unwrap(), "validate"]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{text}: {err}");
    }
    let o = hetnet(dir.path(), &["--eta", "-0.1", "optimize"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hetnet(dir.path(), &["--config", "/nonexistent/cfg.json", "cdf"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hetnet(dir.path(), &["cdf", "--grid-size", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn noise_bandwidth_mode_flag_is_recorded() {
    let dir = TempDir::new().unwrap();
    let o = hetnet(
        dir.path(),
        &[
            "--noise-bandwidth-mode",
            "allocation",
            "optimize",
            "--objective",
            "r10",
            "--step",
            "0.1",
        ],
    );
    assert!(o.status.success());
    let s = read_json(&dir.path().join("optimize_r10.json"));
    assert_eq!(s["noise_bandwidth_mode"], "allocation");
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["noise_bandwidth_mode"], "allocation");
}
