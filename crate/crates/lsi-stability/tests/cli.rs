//! End-to-end checks of the command-line surface: exit codes, output
//! determinism, document shapes, and the canonical field-spec round trip.

use lsi_stability::cli::run_subcommand_with;
use std::process::Command;

/// Run the CLI in-process and capture (exit code, stdout, stderr).
fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("lsi".to_string())
        .chain(args.iter().map(|s| s.to_string()))
        .collect();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_subcommand_with(&argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("stdout is utf-8"),
        String::from_utf8(err).expect("stderr is utf-8"),
    )
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = [
        "sharpness",
        "--a-min",
        "0.01",
        "--a-max",
        "0.2",
        "--steps",
        "5",
    ];
    let (c1, o1, _) = run(&args);
    let (c2, o2, _) = run(&args);
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    assert_eq!(o1, o2, "two runs of the same argv must agree byte for byte");
    assert!(!o1.is_empty());
}

#[test]
fn parse_errors_exit_2_and_point_at_the_byte() {
    let (code, out, err) = run(&["deficit", "--field", "gauss(a=0.5"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("byte 12"), "stderr was: {err}");
}

#[test]
fn unknown_flags_exit_2() {
    let (code, _, err) = run(&["deficit", "--field", "gauss(a=1)", "--bogus"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn help_exits_0_and_prints_usage() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Usage"), "help text was: {out}");
}

#[test]
fn numerical_failures_exit_3() {
    // A Gaussian trial field is not a probability density for the transport
    // pipeline, so the mass check rejects it.
    let (code, _, err) = run(&["transport", "--density", "gauss(a=1)"]);
    assert_eq!(code, 3);
    assert!(!err.is_empty());
}

#[test]
fn failed_reduction_check_exits_1() {
    // An impossible tolerance forces the --check verdict to fail while the
    // computation itself succeeds.
    let (code, out, _) = run(&[
        "reduce",
        "--field",
        "shifted(base=0.7,x0=0.2,a=0.3,s=1.1)",
        "--check",
        "--tol",
        "1e-30",
    ]);
    assert_eq!(code, 1);
    let doc: serde_json::Value = serde_json::from_str(&out).expect("json document");
    assert_eq!(doc["within_tol"], serde_json::Value::Bool(false));
}

#[test]
fn deficit_json_document_has_the_expected_shape() {
    let (code, out, _) = run(&["deficit", "--field", "gauss(a=1)"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).expect("json document");
    // oracle value from tools/oracle.py: delta_star at a=1 is 0.45069385566594515.
    let deficit = doc["deficit"].as_f64().unwrap();
    assert!((deficit - 0.45069385566594515).abs() < 1e-6);
    let pi_deficit = doc["pi_deficit"].as_f64().unwrap();
    assert!((pi_deficit - std::f64::consts::PI * deficit).abs() < 1e-12);
    for key in [
        "field",
        "dim",
        "order",
        "grad_term",
        "entropy_term",
        "norm_sq",
        "m2",
        "m4",
    ] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(
        doc["field"],
        serde_json::Value::String("gauss(a=1.0)".into())
    );
}

#[test]
fn field_specs_round_trip_canonically() {
    // Whitespace and key order in the input do not leak into the canonical
    // form echoed back in the payload.
    let (code, out, _) = run(&["deficit", "--field", " tilt( a = 0.25 , c = 1.5 ) "]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).expect("json document");
    assert_eq!(
        doc["field"],
        serde_json::Value::String("tilt(c=1.5,a=0.25)".into())
    );
}

#[test]
fn sharpness_csv_has_the_documented_header_and_is_descending() {
    let (code, out, _) = run(&[
        "sharpness",
        "--a-min",
        "0.01",
        "--a-max",
        "0.2",
        "--steps",
        "4",
    ]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("a,n,pi_deficit,dist_sq,ratio,branch"));
    let a_values: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(a_values.len(), 4);
    assert!(a_values.windows(2).all(|w| w[0] > w[1]));
    assert!((a_values[0] - 0.2).abs() < 1e-15);
    assert!((a_values[3] - 0.01).abs() < 1e-15);
}

#[test]
fn scan_blowup_csv_has_the_documented_header() {
    let (code, out, _) = run(&["scan-blowup", "--eps-list", "0.1", "--b-list", "1.0,2.0"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("eps,b,delta,fisher,w1,grad_energy_mu,m2_mu")
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn transport_csv_map_is_monotone() {
    let (code, out, _) = run(&[
        "transport",
        "--density",
        "mix(eps=0.1,b=2)",
        "--grid",
        "65",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let t: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(t.len(), 65);
    assert!(t.windows(2).all(|w| w[0] <= w[1]), "map must be monotone");
}

#[test]
fn binary_reports_usage_errors_from_a_real_process() {
    let exe = env!("CARGO_BIN_EXE_lsi");
    let bad = Command::new(exe)
        .args(["deficit", "--field", "gauss(q=1)"])
        .output()
        .expect("spawn the built binary");
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());

    let help = Command::new(exe)
        .arg("--help")
        .output()
        .expect("spawn the built binary");
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn binary_emits_json_on_stdout() {
    let exe = env!("CARGO_BIN_EXE_lsi");
    let out = Command::new(exe)
        .args(["project", "--field", "tilt(c=1.1,a=0.6)"])
        .output()
        .expect("spawn the built binary");
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a json document");
    assert!(doc["residual_sq"].as_f64().unwrap() < 1e-9);
}
