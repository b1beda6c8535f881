use std::path::Path;
use std::process::{Command, Output};

fn nstorus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nstorus")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nstorus(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header and rows of a CSV table, checking the schema line.
fn parse(csv: &str, schema: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let (first, body) = csv.split_once('\n').unwrap();
    assert_eq!(first, format!("# nstorus {schema} schema v1"));
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<Option<f64>> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().ok()).collect()
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn free_levels_are_half_squares() {
    let (h, rows) = parse(&ok(&["spectrum", "--system", "free", "--hbar", "1", "--emax", "40"]), "spectrum");
    let e: Vec<f64> = column(&h, &rows, "energy").into_iter().map(Option::unwrap).collect();
    // n = 0 once, every other n twice
    let mut want = vec![0.0];
    for n in 1..=8 {
        want.extend([0.5 * (n * n) as f64; 2]);
    }
    assert_eq!(e.len(), want.len());
    for (a, b) in e.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn h1_level_count_follows_phase_space_area() {
    let (h, rows) = parse(&ok(&["spectrum", "--system", "H1", "--hbar", "0.02", "--emax", "3"]), "spectrum");
    // ∮ over both rotational sheets: 2 ∫ √(2(3 − cos²x)) dx / (2πħ)
    let n = 20_000;
    let area: f64 = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * std::f64::consts::TAU / n as f64;
            2.0 * (2.0 * (3.0 - x.cos().powi(2))).sqrt() * std::f64::consts::TAU / n as f64
        })
        .sum();
    let weyl = area / (std::f64::consts::TAU * 0.02);
    assert!((rows.len() as f64 - weyl).abs() < 3.0, "{} levels, phase-space estimate {weyl}", rows.len());
    assert!(column(&h, &rows, "energy").iter().all(|e| e.unwrap() <= 3.0));
}

#[test]
fn negative_hbar_is_a_range_error() {
    let out = nstorus(&["spectrum", "--system", "H1", "--hbar", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "parameter out of range");
    assert_eq!(err["exit_code"], 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["spectrum", "--bogus"],
        vec!["spectrum", "--system", "nope"],
        vec!["spectrum"],
        vec!["spectrum", "--system", "H1", "--k", "2"],
        vec!["scan", "hbar", "--system", "ex2.2", "--values", "0.04,0.02"],
        vec!["compare", "--system", "ex3.2", "--pc", "0.01", "--pc-over-hbar", "0.5"],
        vec!["spectrum", "--system", "ex3.3", "--j", "3.3"],
    ] {
        let out = nstorus(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&out)["exit_code"], 2, "{args:?}");
    }
}

#[test]
fn numerical_failure_exits_one() {
    let out = nstorus(&["spectrum", "--system", "H1", "--basis-cap", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "basis-cap");
    let out = nstorus(&["wsum", "--k", "3", "--x", "0", "--y", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "divergent-sum");
}

#[test]
fn shifted_kink_at_half_hbar_cancels() {
    let (h, rows) = parse(&ok(&["compare", "--system", "ex3.2", "--pc-over-hbar", "0.5"]), "compare");
    assert!(rows.len() >= 3);
    for d in column(&h, &rows, "delta_numeric") {
        assert!(d.unwrap() < 1e-10);
    }
    for d in column(&h, &rows, "delta_predicted") {
        assert_eq!(d, Some(0.0));
    }
}

#[test]
fn pc_scan_minimum_at_half_hbar() {
    let (h, rows) = parse(&ok(&["scan", "pc", "--system", "ex3.2", "--range", "0:0.02:3", "--energy", "0.5"]), "scan-pc");
    let pc = column(&h, &rows, "p_c");
    let d = column(&h, &rows, "delta_numeric");
    assert_eq!(pc[1], Some(0.01));
    assert!(d[1].unwrap() < 1e-12 && d[0].unwrap() > 1e-6 && d[2].unwrap() > 1e-6);
}

#[test]
fn lambda_scan_is_degenerate_at_zero() {
    let (h, rows) =
        parse(&ok(&["scan", "lambda", "--system", "lambda", "--values", "-0.2,0,0.2", "--energy", "1.5"]), "scan-lambda");
    let d = column(&h, &rows, "delta_numeric");
    let p = column(&h, &rows, "delta_predicted");
    assert!(d[1].unwrap() < 1e-12 && p[1] == Some(0.0));
    assert!(d[0].unwrap() > 1e-6 && d[2].unwrap() > 1e-6);
}

#[test]
fn wsum_matches_direct_sum() {
    let (h, rows) = parse(&ok(&["wsum", "--k", "3", "--x", "1", "--y", "0.25"]), "wsum");
    let re = column(&h, &rows, "re")[0].unwrap();
    let im = column(&h, &rows, "im")[0].unwrap();
    let (mut sr, mut si) = (0.0, 0.0);
    for q in -200_000i64..=200_000 {
        let a = std::f64::consts::TAU * q as f64 * 0.25;
        let d = (1.0 + std::f64::consts::TAU * q as f64).powi(3);
        sr += a.cos() / d;
        si += a.sin() / d;
    }
    assert!((re - sr).abs() < 1e-9 && (im - si).abs() < 1e-9, "{re} {im} vs {sr} {si}");
}

#[test]
fn catalog_surfaces() {
    let (h, rows) = parse(&ok(&["catalog", "list"]), "catalog");
    let ids: Vec<&str> = rows.iter().map(|r| r[h.iter().position(|c| c == "id").unwrap()].as_str()).collect();
    assert_eq!(ids, ["free", "H1", "H2", "H3", "H4", "ex2.1", "ex2.2", "ex3.1", "ex3.2", "ex3.3", "lambda"]);
    let d: serde_json::Value = serde_json::from_str(&ok(&["catalog", "describe", "ex2.2", "--k", "3"])).unwrap();
    assert_eq!(d["id"], "ex2.2");
    assert_eq!(d["loci"][0]["order"], 3);
    assert!(d["parameters"].as_array().unwrap().iter().any(|p| p["name"] == "k" && p["value"] == 3.0));
}

#[test]
fn json_output_has_schema() {
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["pairs", "--system", "H2", "--emin", "1.2", "--emax", "1.6", "--format", "json"])).unwrap();
    assert_eq!(v["schema"], "pairs");
    assert_eq!(v["version"], 1);
    let cols = v["columns"].as_array().unwrap();
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row.as_array().unwrap().len(), cols.len());
    }
    assert!(!v["rows"].as_array().unwrap().is_empty());
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        ok(&["compare", "--system", "ex2.2", "--k", "2", "--emin", "2", "--emax", "2.4", "--jobs", jobs, "--out", out.to_str().unwrap()]);
    }
    assert_eq!(read(&a), read(&b));
    assert!(dir.path().join("a.csv.meta.json").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "system = \"ex2.2\"\nk = 2\nemin = 2.0\nemax = 2.3\n").unwrap();
    let out = dir.path().join("c.csv");
    ok(&["compare", "--config", cfg.to_str().unwrap(), "--k", "1", "--out", out.to_str().unwrap(), "--gnuplot"]);
    let meta: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("c.csv.meta.json"))).unwrap();
    assert_eq!(meta["command"], "compare");
    assert_eq!(meta["config"]["system"], "ex2.2");
    assert_eq!(meta["config"]["k"], 1);
    assert!(meta["basis_dimension"].as_u64().unwrap() > 0);
    let script = String::from_utf8(read(&dir.path().join("c.csv.gp"))).unwrap();
    assert!(script.contains("'c.csv' using 1:2"));
    // the file's k = 2 would give a different table
    let direct = ok(&["compare", "--system", "ex2.2", "--k", "1", "--emin", "2.0", "--emax", "2.3"]);
    assert_eq!(read(&out), direct.into_bytes());

    std::fs::write(&cfg, "system = \"ex2.2\"\nhbarr = 0.1\n").unwrap();
    let bad = nstorus(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["error"]["kind"], "configuration");
}

#[test]
fn predict_paths_breakdown() {
    let (h, rows) = parse(&ok(&["predict", "--system", "H2", "--energy", "1.5", "--paths"]), "predict-paths");
    assert_eq!(rows.len(), 2);
    assert!(column(&h, &rows, "jump").iter().all(|j| *j == Some(2.0)));
    let (h, rows) = parse(&ok(&["predict", "--system", "ex2.1", "--k", "2", "--emin", "2", "--emax", "2.3"]), "predict");
    let eta = column(&h, &rows, "eta");
    let closed = column(&h, &rows, "closed_eta");
    assert!(!rows.is_empty());
    for (a, b) in eta.iter().zip(&closed) {
        assert!((a.unwrap() / b.unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn help_and_version_succeed() {
    assert!(ok(&["--help"]).contains("spectrum"));
    assert!(ok(&["--version"]).contains(env!("CARGO_PKG_VERSION")));
}
