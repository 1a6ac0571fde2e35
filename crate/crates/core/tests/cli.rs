use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_moebius");

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("MOEBIUS_SEEDLESS").env("SOURCE_DATE_EPOCH", "1700000000");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = csv_rows(text);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn mathieu_at_zero_gives_squares() {
    let text = ok(&["mathieu", "--q", "0", "--max-order", "5"]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["m", "a_m", "b_m"]);
    assert_eq!(rows.len(), 6);
    for (m, row) in rows.iter().enumerate() {
        let want = (m * m) as f64;
        assert!((row[1].parse::<f64>().unwrap() - want).abs() < 1e-12);
        if m == 0 {
            assert!(row[2].is_empty());
        } else {
            assert!((row[2].parse::<f64>().unwrap() - want).abs() < 1e-12);
        }
    }
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let csv_text = ok(&["mathieu"]);
    let json: Value = serde_json::from_str(&ok(&["--format", "json", "mathieu"])).unwrap();
    assert!(!csv_text.contains('\r'));
    let a = column(&csv_text, "a_m");
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), a.len());
    for (row, v) in rows.iter().zip(&a) {
        assert_eq!(row["a_m"].as_f64().unwrap(), *v);
    }
    assert!(rows[0]["b_m"].is_null());
    assert_eq!(json["manifest"]["command"], "mathieu");
    assert_eq!(json["manifest"]["timestamp"], 1700000000);
    assert_eq!(json["manifest"]["parameters"]["q"], -0.25);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--format", "json", "spectrum", "--model", "effective", "--a", "0.75", "--circumference", "13.2"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn output_file_with_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fake.csv");
    let p = path.to_str().unwrap();
    let out = run(&["--output", p, "spectrum", "--model", "fake", "--a", "0.75", "--circumference", "13.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let values = column(&std::fs::read_to_string(&path).unwrap(), "value");
    assert_eq!(values.len(), 20);
    assert_eq!(values[0], 4.386490844928603);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fake.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["parameters"]["model"], "fake");
}

#[test]
fn spectra_at_reference_parameters() {
    let fake = ok(&["spectrum", "--model", "fake", "--a", "0.75", "--circumference", "13.2", "--count", "3"]);
    let (_, rows) = csv_rows(&fake);
    assert_eq!(rows[0][2], "1");
    assert_eq!(rows[1][2], "2");
    let eff = column(
        &ok(&["spectrum", "--model", "effective", "--a", "0.75", "--circumference", "13.2", "--count", "3"]),
        "value",
    );
    for (got, want) in eff.iter().zip([4.384732657634105, 4.612770845791257, 4.61452884109396]) {
        assert!((got - want).abs() < 1e-11 * want);
    }
    let text = ok(&["spectrum", "--model", "true", "--a", "0.75", "--circumference", "13.2", "--N", "102", "--count", "3"]);
    let vals = column(&text, "value");
    let res = column(&text, "residual");
    assert!((vals[0] - 4.387440201465426).abs() < 1e-9);
    assert!(res[0] > 0.0 && res[0] < 0.0114);
}

#[test]
fn exit_codes() {
    let bad_width = run(&["spectrum", "--model", "fake", "--a", "-1", "--R", "2"]);
    assert_eq!(bad_width.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_width.stderr).contains("half-width"));
    assert_eq!(run(&["spectrum", "--model", "fake", "--a", "0.5", "--R", "2", "--circumference", "3"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--model", "true", "--a", "0.5", "--R", "2", "--N", "3", "--count", "5"]).status.code(), Some(2));
    assert_eq!(run(&["converge", "--a-max", "2"]).status.code(), Some(2));
    // a five-function basis cannot hold the fifth effective mode
    let capacity = run(&["converge", "--kind", "eigenvector", "--N", "5", "--K", "5", "--steps", "4"]);
    assert_eq!(capacity.status.code(), Some(3));
    assert!(capacity.stdout.is_empty());
}

#[test]
fn seedless_variable() {
    assert_eq!(run_env(&["mathieu"], &[("MOEBIUS_SEEDLESS", "1")]).status.code(), Some(0));
    let out = run_env(&["mathieu"], &[("MOEBIUS_SEEDLESS", "yes")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn ground_state_density() {
    let r = (18.0 / (2.0 * PI)).to_string();
    let (ms, mu) = (257usize, 65usize);
    let grid = format!("{ms}x{mu}");
    let text = ok(&["eigenfunction", "--k", "1", "--a", "1.3", "--R", &r, "--N", "96", "--grid", &grid]);
    let (s, u, value, density) = (column(&text, "s"), column(&text, "u"), column(&text, "value"), column(&text, "density"));
    assert_eq!(value.len(), ms * mu);
    assert!(density.iter().all(|&d| d >= 0.0));
    // trapezoid rule on the rectangular grid, s-major
    let hs = 2.0 * PI * 18.0 / (2.0 * PI) / (ms - 1) as f64;
    let hu = 2.0 / (mu - 1) as f64;
    let mut total = 0.0;
    for i in 0..ms {
        for j in 0..mu {
            let w = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            total += w(i, ms) * w(j, mu) * density[i * mu + j];
        }
    }
    assert!((total * hs * hu - 1.0).abs() < 1e-3, "{}", total * hs * hu);
    // no sign change away from the Dirichlet edges
    let interior: Vec<f64> = value.iter().zip(&u).filter(|(_, u)| u.abs() < 1.0).map(|(v, _)| *v).collect();
    let sign = interior[0].signum();
    assert!(interior.iter().all(|v| v.signum() == sign && v.abs() > 1e-6));
    assert_eq!(s[0], 0.0);
}

#[test]
fn embedding_respects_the_seam() {
    let text = ok(&["eigenfunction", "--a", "0.8", "--R", "2", "--N", "30", "--grid", "9x5", "--embed3d"]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["s", "u", "value", "density", "x", "y", "z"]);
    let f = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    for j in 0..5 {
        let first = &rows[j];
        let last = &rows[8 * 5 + (4 - j)];
        assert!((f(first, 1) + f(last, 1)).abs() < 1e-15);
        for col in [2, 4, 5, 6] {
            assert!((f(first, col) - f(last, col)).abs() < 1e-10, "column {col}: {first:?} {last:?}");
        }
    }
}

#[test]
fn converge_reports_slopes() {
    let text = ok(&[
        "converge", "--a-min", "0.05", "--a-max", "0.5", "--steps", "6", "--grid", "geometric", "--K", "3",
    ]);
    let (header, rows) = csv_rows(&text);
    let slope_col = header.iter().position(|h| h == "slope").unwrap();
    let slopes: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "slope").collect();
    assert_eq!(slopes.len(), 3);
    let ground: f64 = slopes[0][slope_col].parse().unwrap();
    assert!((1.8..=2.2).contains(&ground), "{ground}");
    assert_eq!(rows.iter().filter(|r| r[0] == "point").count(), 18);
}

#[test]
fn verify_passes() {
    let text = ok(&["verify"]);
    let (_, rows) = csv_rows(&text);
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r[2] == "pass"), "{text}");
}
