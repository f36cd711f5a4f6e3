use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nucspin::io::read_table;

const BIN: &str = env!("CARGO_BIN_EXE_nucspin");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const CLOSED_LOOP: &str = r#"{
    "system": {"f_larmor_mhz": 1.4158, "spins": [{"label": "target", "a_par_mhz": 0.11, "a_perp_mhz": 0.33}]},
    "sequence": {"tau_grid": {"start_us": 0.1, "stop_us": 3.0, "points": 401}}
}"#;

#[test]
fn spectrum_then_fit_recovers_generator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLOSED_LOOP);
    let out = dir.path().display().to_string();
    let spec = run(&["spectrum", "--config", &cfg, "--out", &out]);
    assert!(spec.status.success(), "{}", String::from_utf8_lossy(&spec.stderr));
    let fit = run(&["fit", "--config", &cfg, "--out", &out]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));

    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let r = &doc["result"]["fit"];
    for (key, truth) in [("a_par", 0.11), ("a_perp", 0.33), ("f_larmor", 1.4158)] {
        let got = r[key].as_f64().unwrap();
        assert!((got / truth - 1.0).abs() < 0.01, "{key}: {got} vs {truth}");
    }
}

#[test]
fn trace_has_two_branches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CLOSED_LOOP);
    let out = dir.path().display().to_string();
    let res = run(&["trace", "--config", &cfg, "--out", &out, "--threads", "1"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let t = read_table(&dir.path().join("trace.csv")).unwrap();
    let start = t.column_index("electron_start").unwrap();
    let ups = t.rows.iter().filter(|r| r[start] == "up").count();
    let downs = t.rows.iter().filter(|r| r[start] == "down").count();
    assert_eq!(ups, downs);
    assert_eq!(ups, 1 + 9 * 50);
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"system": {"f_larmor_mhz": 1.4, "spins": [{"label": "a", "a_par_mhz": 0.1, "a_perp_mhz": 0.3}]}, "sequence": {"tau_us": -1.0}}"#,
    );
    let res = run(&["rabi", "--config", &cfg, "--out", &dir.path().display().to_string()]);
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["path"], "sequence.tau_us");
}

#[test]
fn missing_config_file_exits_4() {
    let res = run(&["echo", "--config", "/nonexistent/run.json"]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn flat_spectrum_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    let mut body = String::from("tau_us,p_down,sigma\n");
    for k in 0..100 {
        body.push_str(&format!("{},0.5,\n", 0.1 + 0.02 * k as f64));
    }
    fs::write(&csv, body).unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"system": {{"f_larmor_mhz": 1.4, "spins": [{{"label": "a", "a_par_mhz": 0.1, "a_perp_mhz": 0.3}}]}}, "fit": {{"input_csv": "{}"}}}}"#,
            csv.display()
        ),
    );
    let res = run(&["fit", "--config", &cfg, "--out", &dir.path().display().to_string()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn noisy_spectrum_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"system": {"f_larmor_mhz": 1.4158, "spins": [{"label": "target", "a_par_mhz": 0.11, "a_perp_mhz": 0.33}]},
            "sequence": {"tau_grid": {"start_us": 1.4, "stop_us": 1.7, "points": 61}},
            "monte_carlo": {"shots": 500, "mean_bright_counts": 0.05}}"#,
    );
    let outs: Vec<Vec<u8>> = ["a", "b", "c"]
        .iter()
        .zip(["11", "11", "12"])
        .map(|(sub, seed)| {
            let out = dir.path().join(sub);
            let res = run(&["spectrum", "--config", &cfg, "--out", &out.display().to_string(), "--seed", seed]);
            assert!(res.status.success());
            fs::read(out.join("spectrum.csv")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0], outs[2]);
}

#[test]
fn shipped_reference_config_is_valid() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.json");
    let doc = fs::read_to_string(path).unwrap();
    let cfg = nucspin::io::parse_config(&doc).unwrap();
    assert_eq!(cfg.system.n_spins(), 1);
    assert!(cfg.notes.is_empty());
}
