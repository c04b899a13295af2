use std::process::Command;

use cvqkd_rates::output::{reemit, Format};
use cvqkd_rates::{run, EXIT_INVALID, EXIT_NO_KEY, EXIT_OK};
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cvqkd-rates").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const KEYRATE: [&str; 9] = [
    "keyrate", "--vm", "10", "--eta-x", "0.1", "--eps-x", "0.05", "--vpb", "1.005",
];

#[test]
fn keyrate_json_fields() {
    let (code, out, _) = invoke(&[&KEYRATE[..], &["--variant", "ud-pessimistic"]].concat());
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["command"], "keyrate");
    assert_eq!(v["config"]["variant"], "ud-pessimistic");
    let row = v["results"][0].as_object().unwrap();
    let keys: Vec<_> = row.keys().map(String::as_str).collect();
    assert_eq!(keys, ["i_ab", "chi_be", "key_rate", "c_p_evaluated", "worst_case"]);
    assert_eq!(row["worst_case"], true);
    let (i, chi, k) = (
        row["i_ab"].as_f64().unwrap(),
        row["chi_be"].as_f64().unwrap(),
        row["key_rate"].as_f64().unwrap(),
    );
    assert!((k - (i - chi)).abs() < 1e-11);
    assert!(k > 0.0);
}

#[test]
fn keyrate_at_explicit_cp_matches_library() {
    use cvqkd_core::keyrate::key_rate_at;
    use cvqkd_core::{PQuadObservation, ProtocolConfig, QuadratureChannel, Variant};
    let (code, out, _) = invoke(&[&KEYRATE[..], &["--cp", "-0.53"]].concat());
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let expected = key_rate_at(
        &ProtocolConfig::new(10.0, Variant::UdPessimistic).unwrap(),
        &QuadratureChannel::new(0.1, 0.05).unwrap(),
        &PQuadObservation::new(1.005, -0.53),
    )
    .unwrap();
    let got = v["results"][0]["key_rate"].as_f64().unwrap();
    assert!((got - expected.key_rate).abs() <= 1e-12 * expected.key_rate.abs().max(1.0));
    assert_eq!(v["results"][0]["worst_case"], false);
}

#[test]
fn transmittance_above_one_is_rejected() {
    let (code, out, err) = invoke(&["keyrate", "--eta-x", "1.2", "--eps-x", "0.05"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(out.is_empty());
    assert!(err.contains("transmittance"), "{err}");
}

#[test]
fn invalid_flags_exit_two() {
    for args in [
        &["keyrate", "--eta-x", "0.1", "--variant", "bb84"][..],
        &["keyrate", "--eta-x", "abc"],
        &["keyrate"],
        &["figure", "--id", "7"],
        &["keyrate", "--eta-x", "0.1", "--vm", "-1"],
        &["keyrate", "--eta-x", "0.1", "--grid-points", "100"],
        &["keyrate", "--eta-x", "0.1", "--eps-x", "-0.1"],
        &["keyrate", "--eta-x", "0.1", "--variant", "gg02", "--cp", "-0.5"],
        &["keyrate", "--eta-x", "0.1", "--eps-x", "0.05", "--vpb", "1.005", "--cp", "5"],
        &["sweep-loss", "--loss-db-step", "0"],
    ] {
        let (code, _, err) = invoke(args);
        assert_eq!(code, EXIT_INVALID, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("tolerable-noise"));
}

#[test]
fn empty_region_exits_three_with_record() {
    let args = ["keyrate", "--eta-x", "0.1", "--eps-x", "0.05", "--vpb", "0.9"];
    let (code, out, _) = invoke(&args);
    assert_eq!(code, EXIT_NO_KEY);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["kind"], "empty-region");
    assert_eq!(v["results"].as_array().unwrap().len(), 0);
    let (code, out, _) = invoke(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(code, EXIT_NO_KEY);
    assert!(out.starts_with("error,message\nempty-region,"));
}

#[test]
fn no_positive_rate_exits_three_with_record() {
    let (code, out, _) = invoke(&[
        "tolerable-noise",
        "--beta",
        "0.5",
        "--loss-db-min",
        "25",
        "--loss-db-max",
        "26",
        "--variant",
        "ud-pessimistic",
        "--grid-points",
        "301",
        "--format",
        "json",
    ]);
    assert_eq!(code, EXIT_NO_KEY);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["error"]["kind"], "no-positive-rate");
    assert_eq!(v["config"]["beta"].as_f64(), Some(0.5));
}

fn sample_invocations() -> Vec<Vec<&'static str>> {
    let small_loss = ["--loss-db-max", "6", "--loss-db-step", "1.5", "--grid-points", "301"];
    vec![
        KEYRATE.to_vec(),
        [&KEYRATE[..], &["--variant", "gg02"]].concat(),
        vec!["region", "--eta-x", "0.1", "--eps-x", "0.05", "--resolution", "7", "--grid-points", "301"],
        vec!["sweep-cp", "--eta-x", "0.1", "--eps-x", "0.05", "--vpb", "1.003", "--vpb", "1.01", "--resolution", "21"],
        [&["sweep-loss"][..], &small_loss].concat(),
        [&["tolerable-noise", "--variant", "gg02", "--variant", "ud-pessimistic"][..], &small_loss].concat(),
        vec!["figure", "--id", "2", "--grid-points", "301"],
    ]
}

#[test]
fn outputs_round_trip_byte_identical() {
    for args in sample_invocations() {
        for (flag, format) in [("csv", Format::Csv), ("json", Format::Json)] {
            let full = [&args[..], &["--format", flag]].concat();
            let (code, out, err) = invoke(&full);
            assert_eq!(code, EXIT_OK, "{full:?}: {err}");
            assert!(!out.contains('\r'));
            assert_eq!(reemit(&out, format).unwrap(), out, "{full:?}");
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    for args in sample_invocations() {
        let first = invoke(&args);
        assert_eq!(first, invoke(&args), "{args:?}");
    }
}

#[test]
fn csv_columns_per_command() {
    let header = |args: &[&str]| invoke(args).1.lines().next().unwrap().to_string();
    assert_eq!(
        header(&["sweep-loss", "--loss-db-max", "1", "--variant", "ud-optimistic", "--variant", "gg02"]),
        "loss_db,key_rate_ud_optimistic,key_rate_gg02"
    );
    assert_eq!(
        header(&["sweep-cp", "--eta-x", "0.1", "--eps-x", "0.05", "--resolution", "3"]),
        "v_p_b,c_p,key_rate"
    );
}

#[test]
fn writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let (code, out, _) = invoke(&[&KEYRATE[..], &["--out", path.to_str().unwrap()]].concat());
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let (_, direct, _) = invoke(&KEYRATE);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn thread_count_does_not_change_output() {
    let bin = env!("CARGO_BIN_EXE_cvqkd-rates");
    let args = ["sweep-loss", "--loss-db-max", "10", "--loss-db-step", "2", "--grid-points", "301"];
    let outputs: Vec<_> = ["1", "3", "0"]
        .iter()
        .map(|n| {
            let o = Command::new(bin).args(args).env("CVQKD_RATES_THREADS", n).output().unwrap();
            assert!(o.status.success());
            o.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let bad = Command::new(bin).args(args).env("CVQKD_RATES_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INVALID));
}
