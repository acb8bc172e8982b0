use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    run_env(args, None)
}

fn run_env(args: &[&str], constants: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hardy-lab"));
    cmd.args(args).env_remove("HARDY_LAB_CONSTANTS");
    if let Some(p) = constants {
        cmd.env("HARDY_LAB_CONSTANTS", p);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn coeffs_csv_lists_one_row_per_index() {
    let out = run(&[
        "coeffs",
        "--symbol",
        "mobius:a=0.5",
        "--n",
        "3",
        "--N",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,re,im"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 41);
    // a_{0,3} = a³ for T_a
    assert_eq!(rows[0], vec![0.0, 0.125, 0.0]);
    let norm_sq: f64 = rows.iter().map(|r| r[1] * r[1] + r[2] * r[2]).sum();
    assert!(norm_sq <= 1.0 + 1e-12);
}

#[test]
fn coeffs_methods_agree() {
    let get = |method: &str| {
        let out = run(&[
            "coeffs",
            "--symbol",
            "mobius:a=-0.3",
            "--n",
            "5",
            "--N",
            "63",
            "--method",
            method,
        ]);
        assert_eq!(out.status.code(), Some(0));
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    let e = get("explicit");
    for other in [get("series"), get("fft")] {
        assert!(e.iter().zip(&other).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn weights_check_reports_profiles() {
    let v = json(&run(&[
        "weights",
        "check",
        "--weight",
        "thm32",
        "--horizon",
        "512",
    ]));
    assert_eq!(v["weight"], "thm32");
    assert_eq!(v["horizon"], 512);
    for key in [
        "essdec_constant",
        "delta2_inf",
        "polymin_exponent",
        "slowosc_min",
        "slowosc_max",
        "meandelta2_inf",
    ] {
        assert!(v[key].is_number(), "{key}");
    }
    assert!((v["slowosc_max"].as_f64().unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn norm_is_byte_identical_across_runs() {
    let args = [
        "norm",
        "--symbol",
        "mobius:a=0.5",
        "--weight",
        "power:nu=1",
        "--N",
        "128",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["N"], 128);
    assert!(v["seed"].is_u64());
}

#[test]
fn blocks_default_base_and_partition() {
    let v = json(&run(&["blocks", "--symbol", "mobius:a=0.5", "--N", "64"]));
    assert_eq!(v["n_base"], 7);
    assert_eq!(v["unweighted"]["partition_exact"], true);
}

#[test]
fn calibrate_reproduces_bundled_constants() {
    let out = run(&["calibrate"]);
    assert_eq!(out.status.code(), Some(0));
    let bundled = include_str!("../../core/data/constants.json");
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim_end(),
        bundled.trim_end()
    );
}

#[test]
fn constants_override_changes_default_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.json");
    let mut c: serde_json::Value =
        serde_json::from_str(include_str!("../../core/data/constants.json")).unwrap();
    c["delta_star"] = serde_json::json!(0.125);
    std::fs::write(&path, c.to_string()).unwrap();
    let v = json(&run_env(
        &["lemma-scan", "--a", "0.5", "--n", "256"],
        Some(&path),
    ));
    assert_eq!(v["delta_star"], 0.125);
    let v = json(&run(&["lemma-scan", "--a", "0.5", "--n", "256"]));
    assert_eq!(v["delta_star"], 0.1953125);
}

#[test]
fn inner_check_compares_both_routes() {
    let v = json(&run(&["inner", "--n", "5", "--N", "64", "--check-m", "20"]));
    let check = &v["check"];
    let lag = check["laguerre"].as_f64().unwrap();
    let osc = check["oscillatory"][0].as_f64().unwrap();
    assert!((lag - osc).abs() <= check["error_bound"].as_f64().unwrap() + 1e-10);
}

#[test]
fn fresnel_brackets_the_limit() {
    let v = json(&run(&["fresnel", "--T", "50"]));
    assert!(v["bracket"]["tail_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: [&[&str]; 6] = [
        &["norm", "--symbol", "nope", "--N", "8"],
        &["norm", "--symbol", "mobius:a=1.5", "--N", "8"],
        &["weights", "check", "--weight", "bogus", "--horizon", "64"],
        &[
            "weights",
            "check",
            "--weight",
            "thm32",
            "--horizon",
            "1000000000",
        ],
        &[
            "blocks",
            "--symbol",
            "mobius:a=0.5",
            "--N",
            "16",
            "--base",
            "40",
        ],
        &["coeffs", "--symbol", "mobius:a=0.5"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let out = run(&[
        "coeffs",
        "--symbol",
        "mobius:a=0.5",
        "--n",
        "3",
        "--cache",
        "/nonexistent/dir/c.bin",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
#[ignore = "runs the whole acceptance suite; the acceptance target covers the same code"]
fn report_all_exits_one_while_a_criterion_fails() {
    let out = run(&["report", "all"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 11);
    let failed = criteria.iter().filter(|o| o["pass"] == false).count();
    assert_eq!(v["failed"], failed);
    assert_eq!(out.status.code(), Some(if failed > 0 { 1 } else { 0 }));
}
