use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_effirr")
}

fn run(args: &[&str]) -> (Value, i32) {
    let out: Output = Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs");
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8(out.stdout).expect("utf8 stdout");
    let value: Value = serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"));
    (value, code)
}

fn write_cfg(name: &str, body: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    p.push(name);
    std::fs::write(&p, body).expect("write config");
    p.to_string_lossy().into_owned()
}

const QUAD5: &str = r#"{
  "mode": "corollary1",
  "m": 1,
  "n": 3,
  "sign": -1,
  "eta": { "u1": "5", "u2": "1", "t": "-3" }
}"#;

#[test]
fn poly_prints_the_worked_example() {
    let (v, code) = run(&["poly", "--m", "1", "--n", "3", "--r", "2", "--d", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "poly");
    assert!(v["version"].is_string());
    let coeffs: Vec<&str> = v["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(coeffs, ["1", "7", "14/5"]);
    assert_eq!(v["denominator"], "5");
    assert_eq!(v["numerator"]["value"], "9");
}

#[test]
fn measure_reports_constants_and_exits_zero() {
    let cfg = write_cfg("quad5_measure.json", QUAD5);
    let (v, code) = run(&["measure", "--config", &cfg]);
    assert_eq!(code, 0);
    assert_eq!(v["measure"]["ok"], true);
    assert_eq!(v["empirical"], true);
    assert_eq!(v["measure"]["d"]["value"], "3");
    // every numeric field carries a provenance string
    for key in ["alpha", "e", "q", "kappa", "c", "d", "n_dn"] {
        assert!(
            v["measure"][key]["provenance"].is_string(),
            "missing provenance on {key}"
        );
    }
    let e = v["measure"]["e"]["value"].as_str().unwrap();
    assert!(e.starts_with("2.123"), "E enclosure moved: {e}");
}

#[test]
fn reports_are_byte_deterministic() {
    let cfg = write_cfg("quad5_det.json", QUAD5);
    let once: Output = Command::new(bin())
        .args(["measure", "--config", &cfg])
        .output()
        .unwrap();
    let twice: Output = Command::new(bin())
        .args(["measure", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(once.stdout, twice.stdout);
}

#[test]
fn failed_preconditions_name_themselves_and_exit_one() {
    // eta = 3 + sqrt(2): an algebraic integer whose conjugate ratio is 2.78,
    // outside the unit interval and not unimodular.
    let cfg = write_cfg(
        "bad_ratio.json",
        r#"{
  "mode": "theorem2",
  "m": 1,
  "n": 3,
  "eta": { "u1": "6", "u2": "2", "t": "2" }
}"#,
    );
    let (v, code) = run(&["measure", "--config", &cfg]);
    assert_eq!(code, 1);
    assert_eq!(v["measure"]["ok"], false);
    let names: Vec<String> = v["measure"]["preconditions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["status"] == "fail")
        .map(|p| p["name"].as_str().unwrap().to_string())
        .collect();
    assert!(!names.is_empty(), "no failed precondition named");
}

#[test]
fn malformed_configs_exit_three() {
    let cfg = write_cfg("broken.json", "{ not json");
    let (v, code) = run(&["measure", "--config", &cfg]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "input");

    let cfg = write_cfg(
        "unknown_key.json",
        r#"{"mode":"corollary1","m":1,"n":3,"eta":{"u1":"5","u2":"1","t":"-3"},"extra":1}"#,
    );
    let (_, code) = run(&["measure", "--config", &cfg]);
    assert_eq!(code, 3);

    let cfg = write_cfg("mode_flag.json", QUAD5);
    let (_, code) = run(&["measure", "--config", &cfg, "--mode", "theorem9"]);
    assert_eq!(code, 3);
}

#[test]
fn seq_certifies_growth_on_a_short_run() {
    let cfg = write_cfg("quad5_seq.json", QUAD5);
    let (v, code) = run(&["seq", "--config", &cfg, "--r-max", "8"]);
    assert_eq!(code, 0);
    let g = &v["growth"];
    assert_eq!(g["all_within"], true);
    assert_eq!(g["degeneracies"].as_array().unwrap().len(), 0);
    assert_eq!(v["pairs"].as_array().unwrap().len(), 9);
    // r = 0 pair is (1, 1)
    assert_eq!(v["pairs"][0]["p"], serde_json::json!([["1", "0"], ["0", "0"]]));
}

#[test]
fn verify_scans_and_passes() {
    let cfg = write_cfg("quad5_verify.json", QUAD5);
    let (v, code) = run(&["verify", "--config", &cfg, "--q-max", "200"]);
    assert_eq!(code, 0);
    assert_eq!(v["scan"]["pass"], true);
    assert_eq!(v["target"]["kind"], "real");
    assert_eq!(v["scan"]["q_max"], 200);
}

#[test]
fn calibrate_passes_its_own_recheck() {
    let (v, code) = run(&["calibrate", "--m", "1", "--n", "3", "--d", "6", "--r-max", "40"]);
    assert_eq!(code, 0);
    assert_eq!(v["check"]["all_pass"], true);
    assert_eq!(v["empirical"], true);
}

#[test]
fn search_ranks_by_kappa_ascending() {
    let cfg = write_cfg(
        "search_small.json",
        r#"{"u1_max": 12, "t": "-3", "n": 3, "cal_d": "6", "cal_r_max": 40}"#,
    );
    let (v, code) = run(&["search", "--config", &cfg]);
    assert_eq!(code, 0);
    let rows = v["admissible"].as_array().unwrap();
    assert!(!rows.is_empty());
    let kappas: Vec<f64> = rows
        .iter()
        .map(|r| {
            let s = r["kappa"].as_str().unwrap();
            let mantissa = s.split(" ±").next().unwrap();
            mantissa.parse::<f64>().unwrap()
        })
        .collect();
    for w in kappas.windows(2) {
        assert!(w[0] <= w[1], "kappa order broken: {kappas:?}");
    }
    assert_eq!(v["empirical"], true);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let mut p = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    p.push("poly_out.json");
    let out = p.to_string_lossy().into_owned();
    let status = Command::new(bin())
        .args(["poly", "--m", "1", "--n", "3", "--r", "2", "--out", &out])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["denominator"], "5");
}
