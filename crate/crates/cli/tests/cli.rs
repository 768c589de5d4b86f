use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spinphonon(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinphonon"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("SPINPHONON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn missing_key_is_a_config_error_naming_the_key() {
    let dir = TempDir::new().unwrap();
    let o = spinphonon(dir.path(), &["anneal", "--set", "chain.n=6", "--set", "chain.t_c=0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("anneal.tau_ev"));
    let m = manifest(dir.path());
    assert_eq!(m["error"]["exit_code"], 2);
    assert!(m["error"]["message"].as_str().unwrap().contains("anneal.tau_ev"));
}

#[test]
fn oversized_enumeration_is_a_capacity_error() {
    let dir = TempDir::new().unwrap();
    let o = spinphonon(
        dir.path(),
        &["ground-state", "--set", "chain.n=30", "--set", "chain.t_c=0.5"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(manifest(dir.path())["error"]["kind"], "capacity");
}

#[test]
fn unknown_hopping_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = spinphonon(
        dir.path(),
        &[
            "modes",
            "--set",
            "chain.n=6",
            "--set",
            "chain.t_c=0.1",
            "--set",
            "chain.hopping=spiral",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_csv() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "frustration-scan",
        "--set",
        "chain.n=10",
        "--set",
        "chain.dk_d0=2.0943951023931957",
        "--set",
        "scan.points=4",
    ];
    for d in [&a, &b] {
        let o = spinphonon(d.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &TempDir| fs::read(d.path().join("frustration_scan.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_file_is_overridden_by_set() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("run.toml");
    fs::write(&file, "[chain]\nn = 8\nt_c = 0.3\nhopping = \"open_nn\"\n").unwrap();
    let out = dir.path().join("out");
    let o = spinphonon(
        &out,
        &["--config", file.to_str().unwrap(), "--set", "chain.n=5", "modes"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("modes.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "mode,frequency,zigzag_overlap");
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(manifest(&out)["config"]["chain"]["n"], 5);
}

#[test]
fn coupling_figure_writes_one_table_per_range() {
    let dir = TempDir::new().unwrap();
    let o = spinphonon(dir.path(), &["figure", "fig1b"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 3, "{names:?}");
    for n in &names {
        let text = fs::read_to_string(dir.path().join(n)).unwrap();
        assert_eq!(text.lines().next().unwrap(), "separation,j_exact,j_analytic");
        assert!(text.lines().count() > 5);
    }
}

#[test]
fn params_reports_the_beryllium_chain() {
    let dir = TempDir::new().unwrap();
    let o = spinphonon(
        dir.path(),
        &[
            "params",
            "--set",
            "setup.species=\"9Be+\"",
            "--set",
            "setup.omega_x_hz=5e6",
            "--set",
            "setup.omega_z_hz=192e3",
            "--set",
            "setup.d0=10e-6",
            "--set",
            "setup.lambda_eff=320e-9",
            "--set",
            "setup.theta_deg=0.6",
            "--set",
            "setup.n=20",
            "--set",
            "setup.g_hz=10e3",
            "--set",
            "setup.delta_hz=20e3",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("params.json")).unwrap()).unwrap();
    let eta_x = p["report"]["lamb_dicke"]["eta_x"].as_f64().unwrap();
    assert!((eta_x - 0.208).abs() < 0.005, "{eta_x}");
    let g = p["chain"]["g"].as_f64().unwrap();
    assert!((g - 0.5).abs() < 1e-12);
}

#[test]
fn help_lists_output_columns() {
    let o = Command::new(env!("CARGO_BIN_EXE_spinphonon"))
        .args(["--help"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&o.stdout);
    for needle in [
        "frustration_scan.csv",
        "anneal_sweep.csv",
        "max_norm_drift",
        "exact_sweep.csv",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
}
