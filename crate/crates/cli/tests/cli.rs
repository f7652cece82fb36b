use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn benjamin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_benjamin"))
        .args(args)
        .output()
        .expect("spawn benjamin")
}

fn report(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json");
    serde_json::from_str(&text).expect("valid json")
}

#[test]
fn spectrum_reports_the_seven_thirds_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec");
    let o = benjamin(&["spectrum", "--alpha", "2.3333333333333335", "--n", "16", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["experiment"], "spectrum");
    let clusters = r["result"]["clusters"].to_string();
    assert!(clusters.contains("[1,2]") || clusters.contains("[-2,-1]"), "{clusters}");
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn control_run_is_byte_identical_and_hum_is_not_larger() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = benjamin(&[
            "control", "--alpha", "1", "--mu", "0.3", "--n", "8", "--T", "0.5", "--s", "1", "--seed", "9", "-o",
            a.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(std::fs::read(a.join("report.json")).unwrap());
    }
    assert!(runs[0] == runs[1], "reports differ between runs");
    let r = report(&a);
    assert_eq!(r["result"]["hum_not_larger"], true);
    for f in ["trajectory.csv", "control.csv", "terminal_state.csv"] {
        assert!(a.join(f).exists(), "{f}");
    }
}

#[test]
fn stabilize_gramian_meets_the_requested_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stab");
    let o = benjamin(&[
        "stabilize", "--alpha", "1", "--n", "8", "--law", "gramian", "--lambda", "1", "-o", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r["result"]["fitted_rate"].as_f64().unwrap() >= 0.99);
    let csv = std::fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(csv.starts_with("t,L2_norm,Hs_norm"));
}

#[test]
fn observability_accepts_a_horizon_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("obs");
    let o = benjamin(&["observability", "--alpha", "1", "--n", "8", "--T", "0.01,0.1,1", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["result"]["monotone"], true);
}

#[test]
fn invalid_input_exits_with_code_two() {
    let o = benjamin(&["spectrum", "--alpha", "-1", "--n", "8", "-o", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
    let o = benjamin(&["control", "--alpha", "1", "--n", "8", "--T", "0.1,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = benjamin(&["spectrum", "--n", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_scenario_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "experiment = \"spectrum\"\n[system]\nalpha = 1.0\nbeta = 2.0\n[discretization]\nn = 8\n").unwrap();
    let o = benjamin(&["spectrum", "-s", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let path = dir.path().join("sweep.toml");
    let text = format!(
        "experiment = \"control\"\nseed = 3\noutput = {:?}\nT = 0.5\n[system]\nalpha = 1.0\n[discretization]\nn = 6\n\
         [initial]\nkind = \"random\"\nnorm = 1.0\n[sweep]\nalpha = [0.1, 1.0]\nmu = [0.0, 0.3]\n",
        out.to_str().unwrap()
    );
    std::fs::write(&path, text).unwrap();
    let o = benjamin(&["sweep", "-s", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep_summary.json")).unwrap()).unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for run in runs {
        assert!(Path::new(run["output"].as_str().unwrap()).join("report.json").exists());
    }
}
