use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const MARKET: &str = "
[market]
r = 0.85
c = 0.72

[policy]
alpha = 0.6
beta = 0.2
";

fn repmarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repmarket"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parses a CSV, checking the header and that every field is a number, a
/// boolean or empty.
fn read_csv(text: &str, header: &[&str]) -> Vec<Vec<String>> {
    assert!(!text.contains('\r'), "LF line endings only");
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let got: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(got, header);
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(r.len(), header.len());
            for field in &r {
                assert!(
                    field.is_empty() || field == "true" || field == "false" || field.parse::<f64>().is_ok(),
                    "unparseable field `{field}`"
                );
            }
            r.iter().map(String::from).collect()
        })
        .collect()
}

fn f(field: &str) -> f64 {
    field.parse().unwrap()
}

#[test]
fn equilibrium_reports_the_interior_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MARKET);
    let out = repmarket(&["equilibrium", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys = [
        "kind",
        "xi_star",
        "thresholds",
        "pi_good",
        "pi_bad",
        "revenue",
        "cost",
        "profit",
        "u_buyer",
        "u_seller",
        "u_good_seller",
    ];
    assert_eq!(doc.as_object().unwrap().len(), keys.len());
    for k in keys {
        assert!(doc.get(k).is_some(), "missing {k}");
    }
    assert_eq!(doc["kind"], "InteriorCoexistence");
    // Buyers seeing a bad rating are indifferent at this share.
    let (r, a, b) = (0.85, 0.6, 0.2);
    let xi = (1.0 - b) / (r * (1.0 - a) + (1.0 - b));
    assert!((doc["xi_star"].as_f64().unwrap() - xi).abs() < 1e-12);
    assert!((doc["revenue"].as_f64().unwrap() - 0.533053).abs() < 1e-6);
    // Good sellers sell on every good rating and half the bad ones.
    assert!((doc["pi_good"].as_f64().unwrap() - (1.0 + a) * (r - 0.72) / 2.0).abs() < 1e-12);
}

#[test]
fn equilibrium_without_trade_is_all_zero() {
    let out = repmarket(&[
        "equilibrium",
        "--set",
        "market.r=0.85",
        "--set",
        "market.c=0.72",
        "--set",
        "policy.alpha=0.6",
        "--set",
        "policy.beta=0.3",
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["kind"], "NoTrade");
    assert!(doc["xi_star"].is_null());
    for k in [
        "pi_good",
        "pi_bad",
        "revenue",
        "cost",
        "profit",
        "u_buyer",
        "u_seller",
        "u_good_seller",
    ] {
        assert_eq!(doc[k].as_f64(), Some(0.0), "{k}");
    }
}

#[test]
fn missing_field_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[market]\nc = 0.72\n[policy]\nalpha = 0.6\nbeta = 0.2\n");
    let out = repmarket(&["equilibrium", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("market") && msg.contains("`r`"), "{msg}");
}

#[test]
fn invalid_values_and_unknown_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MARKET);
    let out = repmarket(&["equilibrium", "--config", &cfg, "--set", "policy.alpha=1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("policy.alpha"), "{}", stderr(&out));
    let out = repmarket(&["equilibrium", "--config", &cfg, "--set", "market.gamma=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("gamma"));
}

#[test]
fn overrides_win_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MARKET);
    let out = repmarket(&["equilibrium", "--config", &cfg, "--set", "policy.beta=0.3"]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["kind"], "NoTrade");
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MARKET);
    let target = dir.path().join("missing").join("eq.json");
    let out = repmarket(&["equilibrium", "--config", &cfg, "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

const SWEEP: &str = "
[market]
r = 0.85
c = 0.72

[sweep]
x = { axis = \"alpha\", min = 0.05, max = 0.95, steps = 7 }
y = { axis = \"beta\", min = 0.05, max = 0.95, steps = 5 }
";

#[test]
fn revenue_sweep_schema_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let out_path = dir.path().join("sweep.csv");
    let out = repmarket(&["sweep", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows = read_csv(&text, &["alpha", "beta", "revenue", "cost", "profit", "feasible"]);
    assert_eq!(rows.len(), 35);
    for (i, row) in rows.iter().enumerate() {
        let (alpha, beta) = (0.05 + 0.15 * (i / 5) as f64, 0.05 + 0.225 * (i % 5) as f64);
        assert!((f(&row[0]) - alpha).abs() < 1e-11 && (f(&row[1]) - beta).abs() < 1e-11);
        // Zero revenue outside the coexistence region, in either label orientation.
        let (a, b) = if alpha >= beta {
            (alpha, beta)
        } else {
            (1.0 - alpha, 1.0 - beta)
        };
        let feasible = a * (0.85 - 0.72) > b * (1.0 - 0.72);
        assert_eq!(row[5], feasible.to_string());
        if !feasible {
            assert_eq!(f(&row[2]), 0.0);
        }
        assert_eq!(f(&row[3]), 0.0, "no cost section means free accuracy");
    }
}

#[test]
fn welfare_and_delta_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SWEEP}quantities = [\"u_buyer\", \"u_seller\", \"u_good_seller\"]\n"),
    );
    let out = repmarket(&["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(
        &String::from_utf8(out.stdout).unwrap(),
        &["alpha", "beta", "u_buyer", "u_seller", "u_good_seller"],
    );
    assert_eq!(rows.len(), 35);

    let out = repmarket(&[
        "sweep",
        "--config",
        &cfg,
        "--set",
        "policy={alpha=0.6, beta=0.2}",
        "--set",
        "sweep.x={axis=\"xi\", min=0.0, max=1.0, steps=11}",
        "--set",
        "sweep.y={axis=\"r\", min=0.85, max=0.85, steps=1}",
        "--set",
        "sweep.quantities=[\"delta\"]",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&String::from_utf8(out.stdout).unwrap(), &["xi", "r", "delta"]);
    // Above the bad-rating threshold everyone buys and bad sellers earn more.
    let upper = 0.8 / 1.14;
    for row in rows.iter().filter(|row| f(&row[0]) > upper + 1e-9) {
        assert!((f(&row[2]) - (0.13 - 0.28)).abs() < 1e-11, "{row:?}");
    }
}

#[test]
fn invalid_sweep_axes_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    for set in [
        "sweep.x={axis=\"gamma\", min=0.1, max=0.9, steps=3}",
        "sweep.x={axis=\"beta\", min=0.1, max=0.9, steps=3}",
        "sweep.x={axis=\"alpha\", min=0.9, max=0.1, steps=3}",
        "sweep.quantities=[\"happiness\"]",
        "sweep.quantities=[\"delta\"]",
    ] {
        let out = repmarket(&["sweep", "--config", &cfg, "--set", set]);
        assert_eq!(out.status.code(), Some(2), "{set}: {}", stderr(&out));
    }
}

#[test]
fn sweeps_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SWEEP}quantities = [\"revenue\", \"u_buyer\", \"xi_star\"]\n"),
    );
    let one = repmarket(&["sweep", "--config", &cfg, "--jobs", "1"]);
    let four = repmarket(&["sweep", "--config", &cfg, "--jobs", "4"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

const OPTIMIZE: &str = "
[market]
r = 0.85
c = 0.45

[cost]
alpha0 = 0.6
beta0 = 0.4
kappa = 0.2
p = 2.0
q = 0.5

[optimize]
x = { axis = \"r\", min = 0.65, max = 0.85, steps = 2 }
y = { axis = \"kappa\", min = 0.01, max = 5.0, steps = 3, scale = \"log\" }
resolution = 0.03125
";

#[test]
fn optimize_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMIZE);
    let out = repmarket(&["optimize", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(
        &String::from_utf8(out.stdout).unwrap(),
        &["r", "kappa", "profit_star", "alpha_star", "beta_star"],
    );
    assert_eq!(rows.len(), 6);
    assert!((f(&rows[1][1]) - 0.01f64.sqrt() * 5f64.sqrt()).abs() < 1e-11);
    assert!(rows.iter().all(|row| f(&row[2]) >= 0.0));

    let out = repmarket(&[
        "optimize",
        "--config",
        &cfg,
        "--set",
        "optimize.y={axis=\"s\", min=0.0, max=0.9, steps=4}",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(
        &String::from_utf8(out.stdout).unwrap(),
        &["r", "kappa", "profit_star", "alpha_star", "beta_star", "s_star"],
    );
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!([0.0, 0.3, 0.6, 0.9].iter().any(|s| (f(&row[5]) - s).abs() < 1e-11));
    }
}

#[test]
fn unprofitable_market_falls_back_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMIZE);
    // Commission above the good-sale value: no policy sustains trade.
    let out = repmarket(&[
        "optimize",
        "--config",
        &cfg,
        "--set",
        "market.c=0.9",
        "--set",
        "optimize.x={axis=\"r\", min=0.5, max=0.8, steps=2}",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(
        &String::from_utf8(out.stdout).unwrap(),
        &["r", "kappa", "profit_star", "alpha_star", "beta_star"],
    );
    for row in rows {
        assert_eq!(f(&row[2]), 0.0);
        assert_eq!((f(&row[3]), f(&row[4])), (0.6, 0.4));
    }
}

#[test]
fn invalid_optimize_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), OPTIMIZE);
    for set in [
        "optimize.x={axis=\"kappa\", min=0.1, max=1.0, steps=2}",
        "optimize.resolution=0.0",
        "optimize.y={axis=\"s\", min=0.5, max=1.0, steps=3}",
        "optimize.y={axis=\"kappa\", min=0.0, max=1.0, steps=3, scale=\"log\"}",
    ] {
        let out = repmarket(&["optimize", "--config", &cfg, "--set", set]);
        assert_eq!(out.status.code(), Some(2), "{set}: {}", stderr(&out));
    }
}

fn integrate_rows(initial: &str) -> Vec<Vec<String>> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{MARKET}\n[integrate]\ninitial = {initial}\nhorizon = 200.0\n"),
    );
    let out = repmarket(&["integrate", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    read_csv(
        &String::from_utf8(out.stdout).unwrap(),
        &["t", "x_good", "x_bad", "x_inactive", "xi"],
    )
}

#[test]
fn integrate_trajectories() {
    let xi_star = 0.8 / 1.14;
    let rows = integrate_rows("{ good = 0.5, bad = 0.3, inactive = 0.2 }");
    let last = rows.last().unwrap();
    assert!((f(&last[4]) - xi_star).abs() < 1e-4, "{last:?}");
    for row in &rows {
        let sum: f64 = row[1..4].iter().map(|x| f(x)).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    // Below the good-rating threshold nothing moves.
    let rows = integrate_rows("{ good = 0.1, bad = 0.7, inactive = 0.2 }");
    assert!(
        rows.iter().all(|row| row[1..4] == ["0.1", "0.7", "0.2"]),
        "{:?}",
        rows.last()
    );

    // The all-good vertex is a fixed point.
    let rows = integrate_rows("{ good = 1.0, bad = 0.0, inactive = 0.0 }");
    assert!(rows.iter().all(|row| row[4] == "1"));
}

const SIMULATE: &str = "
[simulate]
n_sellers = 60
lambda_per_seller = 4.0
sigma = 3.0
periods = 400
bins = 20
initial = { good = 0.4, bad = 0.4, inactive = 0.2 }
";

fn simulate_into(dir: &Path, name: &str, extra: &[&str]) -> (Output, String, String) {
    let cfg = write_config(dir, &format!("{MARKET}{SIMULATE}"));
    let out_path = dir.join(format!("{name}.csv"));
    let mut args = vec!["simulate", "--config", &cfg, "--out", out_path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = repmarket(&args);
    let csv = std::fs::read_to_string(&out_path).unwrap_or_default();
    let json = std::fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap_or_default();
    (out, csv, json)
}

#[test]
fn simulate_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv, json) = simulate_into(dir.path(), "run", &["--seed", "5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(
        &csv,
        &[
            "period",
            "N_G",
            "N_B",
            "N_I",
            "xi",
            "sales_good",
            "sales_bad",
            "revenue",
        ],
    );
    assert_eq!(rows.len(), 400);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        let counts: Vec<u32> = row[1..4].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(counts.iter().sum::<u32>(), 60);
        let sales: u64 = row[5].parse::<u64>().unwrap() + row[6].parse::<u64>().unwrap();
        assert!((f(&row[7]) - 0.72 * sales as f64).abs() < 1e-9);
    }
    let summary: Value = serde_json::from_str(&json).unwrap();
    let obj = summary.as_object().unwrap();
    assert_eq!(obj.len(), 4);
    assert!(summary["mode_xi"].as_f64().is_some());
    assert_eq!(summary["histogram"].as_array().unwrap().len(), 20);
    assert_eq!(summary["window"], serde_json::json!([300, 400]));
    assert!(summary["extinct_good"].is_boolean());
    let counted: u64 = summary["histogram"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert!(counted <= 100);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a_csv, a_json) = simulate_into(dir.path(), "a", &["--seed", "9"]);
    let (_, b_csv, b_json) = simulate_into(dir.path(), "b", &["--seed", "9", "--jobs", "3"]);
    let (_, c_csv, _) = simulate_into(dir.path(), "c", &["--seed", "10"]);
    assert!(!a_csv.is_empty());
    assert_eq!(a_csv, b_csv);
    assert_eq!(a_json, b_json);
    assert_ne!(a_csv, c_csv);
}

#[test]
fn simulate_thins_the_trajectory_only() {
    let dir = tempfile::tempdir().unwrap();
    let (_, full_csv, full_json) = simulate_into(dir.path(), "full", &["--seed", "2"]);
    let (out, thin_csv, thin_json) = simulate_into(
        dir.path(),
        "thin",
        &["--seed", "2", "--set", "simulate.record_every=50"],
    );
    assert!(out.status.success());
    let header = [
        "period",
        "N_G",
        "N_B",
        "N_I",
        "xi",
        "sales_good",
        "sales_bad",
        "revenue",
    ];
    let full = read_csv(&full_csv, &header);
    let thin = read_csv(&thin_csv, &header);
    assert_eq!(thin.len(), 8);
    assert_eq!(thin[1], full[50]);
    assert_eq!(full_json, thin_json);
}

#[test]
fn short_simulation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _, _) = simulate_into(dir.path(), "short", &["--set", "simulate.periods=3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("EmptyWindow"));
}
