use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic-sparse"))
        .args(args)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn domination_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "domination",
        "--d",
        "1",
        "--depth",
        "8",
        "--seeds",
        "6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = read(&path);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "domination");
    assert_eq!(r["config"]["seed"], 0);
    assert_eq!(r["config"]["seeds"], 6);
    assert_eq!(r["result"]["rows"].as_array().unwrap().len(), 6);
    assert!(
        r["result"]["max_ratio"].as_f64().unwrap() >= r["result"]["median_ratio"].as_f64().unwrap()
    );
    assert_eq!(r["passed"], true);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        let p = dir.path().join(name);
        let out = run(&[
            "stopping",
            "--d",
            "2",
            "--depth",
            "5",
            "--seed",
            "11",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(args("a.json"), args("b.json"));
    let one = run(&[
        "goodness",
        "--r",
        "4",
        "--gamma",
        "2/5",
        "--samples",
        "3000",
        "--seed",
        "5",
        "--threads",
        "1",
    ]);
    let many = run(&[
        "goodness",
        "--r",
        "4",
        "--gamma",
        "2/5",
        "--samples",
        "3000",
        "--seed",
        "5",
        "--threads",
        "4",
    ]);
    assert_eq!(report(&one)["result"], report(&many)["result"]);
}

#[test]
fn goodness_estimate_with_interval() {
    let out = run(&["goodness", "--r", "4", "--samples", "10000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["gamma"], "1/8");
    let res = &r["result"];
    let (lo, pi, hi) = (
        res["ci_low"].as_f64().unwrap(),
        res["pi_good"].as_f64().unwrap(),
        res["ci_high"].as_f64().unwrap(),
    );
    assert!(lo <= pi && pi <= hi);
    assert_eq!(res["seed"], 7);
}

#[test]
fn cz_auto_height() {
    let out = run(&[
        "cz", "--lambda", "auto", "--A", "3", "--depth", "9", "--seed", "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out);
    let (f, _) = dyadic_sparse::verify::random_pair(2, 1, 9).unwrap();
    let avg = f.abs().cube_average(f.root()).unwrap();
    assert!((r["result"]["lambda"].as_f64().unwrap() - 3.0 * avg).abs() <= 1e-12 * avg);
    assert_eq!(r["config"]["lambda"], "auto");
    assert_eq!(r["result"]["check"]["passed"], true);
    for b in r["result"]["bad_cubes"].as_array().unwrap() {
        let a = b["average_abs"].as_f64().unwrap();
        assert!(a > 3.0 * avg && a <= 6.0 * avg);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"d": 2, "depth": 4, "seed": 3, "generator": {"kind": "constant", "value": 2.0}}"#,
    )
    .unwrap();
    let out = run(&["haar", "--config", cfg.to_str().unwrap(), "--depth", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["d"], 2);
    assert_eq!(r["config"]["depth"], 5);
    assert_eq!(r["result"]["mean"], 2.0);
    assert_eq!(r["result"]["coefficients"], 3 * (1 + 4 + 16 + 64 + 256));
}

#[test]
fn csv_output() {
    let out = run(&["weights", "--depth", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("label,beta,characteristic,ratio"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn offdiag_within_bound() {
    let out = run(&[
        "offdiag", "--gamma", "2/5", "--r", "4", "--pairs", "50", "--betas", "0.5,1,2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = report(&out)["result"]["betas"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row["max_ratio"].as_f64().unwrap() <= row["bound"].as_f64().unwrap());
    }
}

#[test]
fn grid_function_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bin");
    let f = dyadic_sparse::GridFn::from_cells(1, 6, dyadic_sparse::Cube::unit(1), |c| {
        c[0] as f64 - 20.0
    })
    .unwrap();
    dyadic_sparse::grid_fn::io::write_binary(&f, std::fs::File::create(&path).unwrap()).unwrap();
    let out = run(&["weak11", "--input", path.to_str().unwrap(), "--j-max", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(&out);
    assert_eq!(r["config"]["depth"], 6);
    assert_eq!(r["result"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nope"]).status.code(), Some(2));
    assert_eq!(run(&["haar", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["cz", "--lambda", "zero"]).status.code(), Some(2));
    assert_eq!(run(&["goodness", "--gamma", "3/4"]).status.code(), Some(2));
    assert_eq!(
        run(&["sparse-cover", "--C", "0.5", "--depth", "5"])
            .status
            .code(),
        Some(2)
    );
    // adaptive doubling switched off: a single spike breaks the halving condition
    let spike = r#"{"kind":"spike_train","locations":[[0.1]],"height":null}"#;
    let out = run(&[
        "stopping",
        "--depth",
        "6",
        "--A",
        "1.01",
        "--adapt",
        "false",
        "--generator",
        spike,
    ]);
    assert_eq!(out.status.code(), Some(1));
}
