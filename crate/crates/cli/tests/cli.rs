use std::collections::HashMap;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liapform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Csv { header, rows }
    }

    fn col(&self, name: &str) -> Vec<&str> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no {name}"));
        self.rows.iter().map(|r| r[i].as_str()).collect()
    }

    fn floats(&self, name: &str) -> Vec<f64> {
        self.col(name).iter().map(|v| v.parse().unwrap()).collect()
    }
}

fn fields(text: &str) -> HashMap<String, String> {
    text.lines()
        .skip(1)
        .filter_map(|l| l.split_once(','))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("liapform-cli-{}-{name}", std::process::id()))
}

#[test]
fn roots_of_reference_system() {
    let out = run(&["roots", "--lambda", "1", "--c", "0.5"]);
    assert_eq!(code(&out), 0);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(
        csv.header,
        ["index", "re", "im", "rho", "res_imag", "res_a2", "decrement", "has_real_root"]
    );
    assert_eq!(csv.rows.len(), 4);
    let sum: f64 = csv.floats("re").iter().sum();
    assert!((sum + 1.0).abs() < 1e-9);
    for v in csv.col("re") {
        // Printed floats carry 17 significant digits and reparse exactly.
        let x: f64 = v.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), v);
    }
}

#[test]
fn roots_detect_real_root_and_reject_strong_coupling() {
    let out = run(&["roots", "--lambda", "1", "--c", "0.999"]);
    assert_eq!(code(&out), 0);
    assert!(Csv::parse(&stdout(&out)).col("has_real_root").iter().all(|v| *v == "true"));

    let out = run(&["roots", "--lambda", "1", "--c", "1.5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("|c| < lambda"));
}

#[test]
fn scan_grid_is_sound_and_deterministic() {
    let first = run(&["scan"]);
    assert_eq!(code(&first), 0);
    let second = run(&["scan", "--jobs", "2"]);
    assert_eq!(first.stdout, second.stdout);
    let csv = Csv::parse(&stdout(&first));
    assert_eq!(csv.rows.len(), 100);
    let spectral = csv.floats("spectral_decrement");
    let certified = csv.floats("certified_norm_rate");
    for (s, c) in spectral.iter().zip(&certified) {
        assert!(*s > 0.0 && *s < 0.25);
        assert!(*c <= s + 1e-8);
    }
    let lambdas = csv.floats("lambda");
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(lambdas[0], 0.5);
    assert_eq!(lambdas[99], 50.0);
}

#[test]
fn scan_power_law_reaches_large_rates() {
    let out = run(&[
        "scan", "--lambda-min", "1e4", "--lambda-max", "1e6", "--lambda-count", "3",
        "--c-law", "power", "--c-min", "0.75", "--c-max", "0.75", "--c-count", "2",
    ]);
    assert_eq!(code(&out), 0);
    let csv = Csv::parse(&stdout(&out));
    assert!(csv.floats("certified_norm_rate").iter().all(|r| *r >= 0.2));
}

#[test]
fn scan_rejects_degenerate_grid() {
    assert_eq!(code(&run(&["scan", "--lambda-count", "1"])), 1);
}

#[test]
fn certify_exit_codes() {
    let out = run(&["certify", "--example", "wave", "--modes", "16", "--gamma", "0.5", "--p", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fields(&stdout(&out))["valid"], "true");

    let out = run(&["certify", "--variant", "weak", "--lambda1", "1", "--c", "0.5", "--p", "2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("lambda_1/|c|"));

    let out = run(&["certify", "--example", "string", "--gamma", "5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("threshold"));

    let out = run(&["certify", "--lambda", "1", "--c", "0.5", "--p", "2", "--epsilon", "1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(fields(&stdout(&out))["valid"], "false");
}

#[test]
fn scalar_simulation_energy_decreases() {
    let out = run(&["simulate", "--lambda", "1", "--c", "0.5", "--T", "20", "--dt", "0.05"]);
    assert_eq!(code(&out), 0);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.header, ["t", "E", "H_eps", "norm_sq"]);
    let e = csv.floats("E");
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert_eq!(csv.rows.len(), 401);
}

#[test]
fn weak_simulation_respects_polynomial_bound() {
    let cert = run(&["certify", "--example", "weak", "--modes", "8", "--c", "0.2"]);
    assert_eq!(code(&cert), 0);
    let c_theoretical: f64 = fields(&stdout(&cert))["c_theoretical"].parse().unwrap();
    let out = run(&[
        "simulate", "--example", "weak", "--modes", "8", "--c", "0.2", "--T", "400", "--dt", "0.5",
        "--seed", "7",
    ]);
    assert_eq!(code(&out), 0);
    let csv = Csv::parse(&stdout(&out));
    let (t, k, h) = (csv.floats("t"), csv.floats("K"), csv.floats("H_eps"));
    for i in 0..t.len() {
        if t[i] >= 1.0 {
            assert!(t[i] * k[i] <= c_theoretical * h[0] * (1.0 + 1e-6));
        }
    }
}

#[test]
fn simulate_rejects_unstable_rk4_step() {
    let out = run(&["simulate", "--method", "rk4", "--dt", "5"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("try dt <="));
}

#[test]
fn simulate_checks_initial_state_length() {
    assert_eq!(code(&run(&["simulate", "--u0", "1,0,0"])), 1);
    assert_eq!(code(&run(&["simulate", "--u0", "1,0,-1,0"])), 0);
}

#[test]
fn pde_examples() {
    let out = run(&["pde", "--example", "wave", "--modes", "16", "--gamma", "0.5"]);
    assert_eq!(code(&out), 0);
    let f = fields(&stdout(&out));
    assert_eq!(f["slope_within_bound"], "true");
    let slope: f64 = f["fitted_log_slope"].parse().unwrap();
    let minus_delta: f64 = f["minus_certified_delta"].parse().unwrap();
    assert!(slope <= minus_delta);

    let out = run(&["pde", "--example", "plate", "--gamma", "2", "--L", "3.14159"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("(0, lambda_1)"));

    let out = run(&["pde", "--example", "complex", "--lambda", "1", "--c", "0.3", "--d", "0.4"]);
    assert_eq!(code(&out), 0);

    assert_eq!(code(&run(&["pde", "--example", "scalar"])), 1);
    assert_eq!(code(&run(&["pde", "--example", "membrane"])), 1);
}

#[test]
fn weak_uniformity_table() {
    let out = run(&["weak", "--modes", "8,16", "--c", "0.2"]);
    assert_eq!(code(&out), 0);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(
        csv.header,
        ["n", "gamma", "epsilon", "c_observed", "c_theoretical", "spectral_decrement", "status"]
    );
    assert_eq!(csv.rows.len(), 2);
    let observed = csv.floats("c_observed");
    assert!(observed[0].max(observed[1]) / observed[0].min(observed[1]) <= 2.0);

    let out = run(&["weak", "--modes", "4,8,12", "--c", "0.9", "--p", "10"]);
    assert_eq!(code(&out), 2);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.rows.len(), 3);
    assert!(csv.col("status").iter().all(|s| *s == "invalid-p"));
}

#[test]
fn config_file_with_flag_precedence() {
    let path = temp_path("config.json");
    std::fs::write(
        &path,
        r#"{"format": "json", "roots": {"lambda": 1.0, "c": 0.999}}"#,
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "roots", "--c", "0.5"]);
    assert_eq!(code(&out), 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["has_real_root"] == false));

    std::fs::write(&path, r#"{"roots": {"lambda": 1.0, "c": 0.5, "gamma": 2}}"#).unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "roots"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("gamma"));

    std::fs::write(&path, r#"{"colour": "blue"}"#).unwrap();
    assert_eq!(code(&run(&["--config", path.to_str().unwrap(), "roots"])), 1);
    std::fs::remove_file(&path).ok();
}

#[test]
fn output_file_matches_stdout() {
    let path = temp_path("roots.csv");
    let args = ["roots", "--lambda", "2", "--c", "1"];
    let direct = run(&args);
    let mut with_output = vec!["--output", path.to_str().unwrap()];
    with_output.extend(args);
    let out = run(&with_output);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
    std::fs::remove_file(&path).ok();
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["roots", "--bogus"])), 1);
    assert_eq!(code(&run(&["roots", "--lambda", "1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}
