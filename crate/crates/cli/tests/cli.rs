use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn radshock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radshock")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn verify_passes_for_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = radshock(&["--preset", "burgers-linear", "--eps", "0.2", "-o", &out_arg(dir.path()), "verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
    assert!(dir.path().join("effective_config.toml").exists());
}

#[test]
fn inverted_end_states_fail_a3() {
    let dir = tempfile::tempdir().unwrap();
    let o = radshock(&[
        "--set", "model.f=[0, 0, 0.5]",
        "--set", "model.m=[0, 1]",
        "--set", "model.l=1",
        "--set", "model.u_minus=-0.2",
        "--set", "model.u_plus=0.2",
        "-o", &out_arg(dir.path()),
        "verify",
    ]);
    assert_eq!(code(&o), 2);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(report["failures"].as_array().unwrap().iter().any(|f| f == "A3"));
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\npreset = \"burgers-linear\"\neps = = 0.2\n").unwrap();
    let o = radshock(&["-c", &cfg.display().to_string(), "verify"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn missing_model_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = radshock(&["-o", &out_arg(dir.path()), "profile"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn profile_csv_is_monotone_and_refinement_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = radshock(&["--preset", "burgers-linear", "-o", &out_arg(dir.path()), "profile", "--refine"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let u: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(u.windows(2).all(|w| w[1] < w[0]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("profile.json")).unwrap()).unwrap();
    assert!(report["refinement"]["max_node_change"].as_f64().unwrap() < 1e-8);
}

#[test]
fn single_round_budget_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = radshock(&[
        "--preset", "burgers-linear",
        "--set", "condition.oracle=false",
        "-o", &out_arg(dir.path()),
        "evans", "--budget", "1",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn simulate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = out_arg(dir.path());
    let guard = radshock(&["--preset", "burgers-linear", "-o", &d, "simulate", "--t-final", "20", "--amplitude", "0.5"]);
    assert_eq!(code(&guard), 2);
    let short = radshock(&["--preset", "burgers-linear", "-o", &d, "simulate", "--t-final", "2"]);
    assert_eq!(code(&short), 1);
    assert!(String::from_utf8_lossy(&short.stderr).contains("fit window"));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_byte_identical_and_reproducible_from_echoed_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "--preset".to_string(),
            "burgers-cubicM".into(),
            "--eps".into(),
            "0.1".into(),
            "--set".into(),
            "simulate.initial={ kind = \"random\", count = 3, spread = 5.0, width = 1.0 }".into(),
            "-o".into(),
            d.display().to_string(),
            "simulate".into(),
            "--t-final".into(),
            "12".into(),
            "--h".into(),
            "0.05".into(),
            "--seed".into(),
            "11".into(),
        ]
    };
    for d in [a.path(), b.path()] {
        let argv = args(d);
        let o = radshock(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), fb.len());
    for ((na, ca), (nb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na != "effective_config.toml" {
            assert!(ca == cb, "{na} differs between runs");
        }
    }
    // Re-run from the echoed configuration into a third directory.
    let cfg = a.path().join("effective_config.toml");
    let o = radshock(&["-c", &cfg.display().to_string(), "-o", &out_arg(c.path()), "simulate"]);
    assert_eq!(code(&o), 0);
    for name in ["simulate.csv", "simulate.json"] {
        assert!(fs::read(a.path().join(name)).unwrap() == fs::read(c.path().join(name)).unwrap(), "{name}");
    }
}
