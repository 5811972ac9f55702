//! The subcommands are thin adapters: every number they print must equal the
//! corresponding library value rendered at the requested precision.

use std::fs;
use std::process::Command;

use clap::Parser;
use num_rational::BigRational;
use ultralevy::levy::{evans_ratio, shell_density, tail};
use ultralevy::process::{PathConfig, Simulator};
use ultralevy::spectral::heat_kernel;
use ultralevy::{parse_profile_json, Precision};
use ultralevy_cli::{run, Cli, DEFAULT_PROFILE};

fn invoke(args: &[&str]) -> (anyhow::Result<()>, String, String) {
    let cli = Cli::try_parse_from(std::iter::once("ultralevy").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let result = run(cli, &mut out, &mut err);
    (result, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> (String, String) {
    let (result, out, err) = invoke(args);
    result.unwrap_or_else(|e| panic!("{args:?} failed: {e:#}"));
    (out, err)
}

/// Data rows of a CSV table, skipping the metadata and header lines.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

fn prec(digits: u32) -> Precision {
    Precision::from_digits(digits)
}

#[test]
fn spectrum_rows_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("p.json");
    fs::write(&profile, r#"{"p":2,"kappa":1,"m":[1,3]}"#).unwrap();
    let (out, _) = ok(&["spectrum", "--profile", profile.to_str().unwrap(), "--precision", "12"]);
    assert!(out.starts_with("# {"));
    assert_eq!(out.lines().nth(1), Some("n,eigenvalue,multiplicity"));
    assert_eq!(rows(&out), vec![vec!["0", "0", "1"], vec!["1", "1.41421356237", "1"], vec!["2", "8", "62"]]);
}

#[test]
fn rule_profiles_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("rule.json");
    fs::write(&profile, r#"{"p":3,"kappa":1,"m_rule":{"ratio":2,"count":3}}"#).unwrap();
    let (out, err) = ok(&["validate", "--profile", profile.to_str().unwrap()]);
    assert_eq!(rows(&out)[3], vec!["3", "4", "12", "6561", "531441"]);
    assert!(err.contains("depth 3"));
}

#[test]
fn levy_table_matches_library() {
    let (out, err) = ok(&["levy", "--check", "--precision", "25"]);
    assert!(err.contains("abel-identity: PASS (n ≤ 3)"));
    assert!(err.contains("jump-identity: PASS (n ≤ 3)"));
    let tower = parse_profile_json(DEFAULT_PROFILE).unwrap();
    let p = prec(25);
    for row in rows(&out) {
        let n: usize = row[0].parse().unwrap();
        let nu = shell_density(&tower, &half(), n).unwrap().to_real(p).to_decimal_string(25);
        let t = tail(&tower, &half(), n).unwrap().to_real(p).to_decimal_string(25);
        assert_eq!(row[1], nu);
        assert_eq!(row[2], t);
        if n >= 2 {
            let e = evans_ratio(&tower, &half(), n, p).unwrap().ratio.to_decimal_string(25);
            assert_eq!(row[5], e);
        } else {
            assert_eq!(row[5], "");
        }
    }
    assert_eq!(&rows(&out)[2][3][..8], "0.971512");
}

#[test]
fn evans_reference_value() {
    let (out, _) = ok(&["evans", "--n", "2"]);
    let ratio: f64 = rows(&out)[0][1].parse().unwrap();
    assert!((ratio - 0.3435).abs() / 0.3435 < 1e-3);
    assert_eq!(rows(&out)[0][3], "ratio below one");
    let (out, _) = ok(&["evans", "--n", "2", "--alpha", "3/2"]);
    assert_eq!(rows(&out)[0][3], "condition not established");
}

#[test]
fn kernel_values_and_zero_time() {
    let (out, err) = ok(&["kernel", "--t", "0,1/2", "--check"]);
    assert!(err.contains("kernel-normalization t=1/2: PASS"));
    let tower = parse_profile_json(DEFAULT_PROFILE).unwrap();
    let table = rows(&out);
    assert_eq!(table.len(), 8);
    for row in &table[..4] {
        assert_eq!(row[1], "0");
        assert_eq!(row[2], "0");
    }
    for row in &table[4..] {
        let l: usize = row[0].parse().unwrap();
        let g = heat_kernel(&tower, &half(), &half(), l, prec(30)).unwrap();
        assert_eq!(row[2], g.to_decimal_string(30));
    }
}

#[test]
fn fourier_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("phi.json");
    fs::write(&input, r#"["3/2", "-1", "0.25", "7"]"#).unwrap();
    let forward = dir.path().join("f.json");
    ok(&["fourier", "--input", input.to_str().unwrap(), "--json", "--out", forward.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&forward).unwrap()).unwrap();
    assert_eq!(doc["meta"]["direction"], "forward");
    let exact: Vec<String> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[1].as_str().unwrap().to_string())
        .collect();
    let values = dir.path().join("values.json");
    fs::write(&values, serde_json::to_string(&exact).unwrap()).unwrap();
    let (out, _) = ok(&["fourier", "--inverse", "--input", values.to_str().unwrap()]);
    let back: Vec<String> = rows(&out).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(back, vec!["3/2", "-1/1", "1/4", "7/1"]);
}

#[test]
fn simulate_writes_library_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.csv");
    ok(&["simulate", "--seed", "17", "--t-end", "0.002", "--out", file.to_str().unwrap()]);
    let tower = parse_profile_json(DEFAULT_PROFILE).unwrap();
    let table = ultralevy::levy::build_shell_table(&tower, &half(), 3).unwrap();
    let sim = Simulator::new(&table, prec(30)).unwrap();
    let expected = sim.sample_path(&PathConfig::new(0.002, 17), 0).unwrap().to_csv_string().unwrap();
    assert_eq!(fs::read_to_string(&file).unwrap(), expected);

    let many = dir.path().join("many");
    ok(&["simulate", "--seed", "17", "--t-end", "0.002", "--paths", "3", "--out", many.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(many.join("path-000000.csv")).unwrap(), expected);
    assert!(many.join("path-000002.csv").exists());
}

#[test]
fn dimension_and_exitstats_report() {
    let (out, err) = ok(&["dimension", "--paths", "5", "--t", "0.5"]);
    assert!(err.contains("target alpha = 1/2"));
    let table = rows(&out);
    assert_eq!(table.len(), 2);
    let slope: f64 = table[0][2].parse().unwrap();
    assert!(slope > 0.3 && slope < 0.7, "{slope}");

    let (out, _) = ok(&["exitstats", "--paths", "50", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["columns"][0], "quantity");
    assert_eq!(doc["rows"][2][0], "avoidance_3_1");
    assert_eq!(doc["meta"]["excluded"], 0);
}

#[test]
fn validation_errors() {
    let cases: &[(&[&str], &str)] = &[
        (&["spectrum", "--alpha", "0"], "alpha must be positive"),
        (&["simulate", "--paths", "0", "--out", "/nonexistent"], "paths must be at least 1"),
        (&["dimension", "--paths", "0"], "paths must be at least 1"),
        (&["kernel", "--t=-1"], "time must be nonnegative"),
        (&["levy", "--max-level", "4"], "needs m_5"),
        (&["spectrum", "--alpha", "one half"], "parsing --alpha"),
        (&["simulate", "--t-end", "1", "--budget", "10"], "event budget"),
        (&["exitstats", "--n", "1", "--outer", "1"], "outer < n"),
        (&["validate", "--precision", "0"], "precision"),
    ];
    for (args, needle) in cases {
        let (result, _, _) = invoke(args);
        let message = format!("{:#}", result.expect_err(&format!("{args:?} should fail")));
        assert!(message.contains(needle), "{args:?}: {message}");
    }
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_ultralevy");
    let good = Command::new(bin).args(["evans", "--n", "2"]).output().unwrap();
    assert!(good.status.success());
    let bad = Command::new(bin).args(["spectrum", "--alpha", "0"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("alpha must be positive"));
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("bad.json");
    fs::write(&profile, r#"{"p":4,"kappa":1,"m":[1,3]}"#).unwrap();
    let bad = Command::new(bin).args(["validate", "--profile", profile.to_str().unwrap()]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("not prime"));
}
