//! CLI side of the acceptance suite: the exit-code contract (one fixture
//! per code) and byte-identical reports for identical configurations.

use std::process::Command;
use std::time::Instant;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hdhi"))
        .args(args)
        .output()
        .expect("spawn hdhi");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn criterion_9_exit_codes_and_determinism() {
    let start = Instant::now();

    // Code 0: all verdicts true.
    let (code, stdout, _) = run(&["constant", "--preset", "cor54"]);
    assert_eq!(code, 0, "constant cor54 should pass:\n{stdout}");
    assert!(stdout.contains("1.644934066848"));

    // Code 1: a false verdict. The reverse trace on the shifted-beta preset
    // genuinely sits below the constant.
    let (code, stdout, _) = run(&[
        "sharpness",
        "--preset",
        "cor54",
        "--set",
        "p=-1.0",
        "--set",
        "eps_schedule=[0.1,0.05]",
    ]);
    assert_eq!(code, 1, "expected a false verdict:\n{stdout}");
    assert!(stdout.contains("false"));

    // Code 2: indeterminate present, none false. Far beyond the kernel
    // decay both sides of the lower bound underflow together.
    let (code, stdout, _) = run(&[
        "weights",
        "--preset",
        "cor54",
        "--tol-sum",
        "1e-6",
        "--set",
        "x_grid.min=1e6",
        "--set",
        "x_grid.max=1e7",
        "--set",
        "x_grid.points=3",
        "--set",
        "n_list=[1]",
    ]);
    assert_eq!(code, 2, "expected indeterminate:\n{stdout}");
    assert!(stdout.contains("indeterminate"));
    assert!(!stdout.contains(" false"));

    // Code 3: configuration error before any computation.
    let (code, _, stderr) = run(&[
        "constant",
        "--set",
        "kernel.gamma=0.9",
        "--set",
        "kernel.sigma=0.5",
    ]);
    assert_eq!(code, 3, "expected configuration rejection:\n{stderr}");
    assert!(stderr.contains("gamma"));

    // Zero test functions violate the hypotheses: also a config-class error.
    let (code, _, stderr) = run(&["verify", "--preset", "cor54", "--set", "test_family=\"zero\""]);
    assert_eq!(code, 3, "zero family should be rejected:\n{stderr}");

    // Code 4: an unattainable tolerance surfaces as a convergence error.
    let (code, _, stderr) = run(&["verify", "--preset", "cor51", "--tol-sum", "1e-14"]);
    assert_eq!(code, 4, "expected convergence error:\n{stderr}");
    assert!(stderr.contains("convergence"));

    // Determinism: identical configuration, byte-identical report bodies
    // (stdout and the NDJSON records).
    let dir = std::env::temp_dir();
    let out1 = dir.join("hdhi_det_1.ndjson");
    let out2 = dir.join("hdhi_det_2.ndjson");
    let args = |out: &std::path::Path| {
        vec![
            "weights".to_string(),
            "--preset".into(),
            "cor51".into(),
            "--tol-sum".into(),
            "1e-6".into(),
            "--set".into(),
            "x_grid.points=5".into(),
            "--set".into(),
            "n_list=[1,2]".into(),
            "--seed".into(),
            "42".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
        ]
    };
    let run_owned = |args: Vec<String>| {
        let out = Command::new(env!("CARGO_BIN_EXE_hdhi"))
            .args(&args)
            .output()
            .expect("spawn hdhi");
        (out.status.code().unwrap_or(-1), out.stdout)
    };
    let (c1, body1) = run_owned(args(&out1));
    let (c2, body2) = run_owned(args(&out2));
    assert_eq!(c1, 0);
    assert_eq!(c2, 0);
    assert_eq!(body1, body2, "stdout bodies differ between identical runs");
    let f1 = std::fs::read(&out1).unwrap();
    let f2 = std::fs::read(&out2).unwrap();
    assert!(!f1.is_empty());
    assert_eq!(f1, f2, "NDJSON records differ between identical runs");

    let elapsed = start.elapsed().as_secs_f64();
    println!("acceptance 9 (exit codes and determinism): PASS ({elapsed:.1}s)");
}

#[test]
fn preset_fidelity_and_report_header() {
    // Each preset expands into a config satisfying its hypotheses and the
    // resolved config is printed in the header.
    for preset in ["cor51", "cor52", "cor53", "cor54", "remark55"] {
        let (code, stdout, stderr) = run(&["constant", "--preset", preset]);
        assert_eq!(code, 0, "{preset}: {stderr}");
        assert!(stdout.contains("# config:"), "{preset} missing header");
        assert!(stdout.contains("# tolerances:"));
        assert!(stdout.contains(&format!("\"preset\":\"{preset}\"")));
    }
    // cor52 flips the direction.
    let (_, stdout, _) = run(&["constant", "--preset", "cor52"]);
    assert!(stdout.contains("\"delta\":-1"));
}

#[test]
fn verify_rejects_reverse_with_cutoff_family() {
    let (code, _, stderr) = run(&[
        "verify",
        "--preset",
        "cor54",
        "--set",
        "p=-1.0",
        "--set",
        "test_family=\"extremal:0.05\"",
    ]);
    assert_eq!(code, 3, "cutoff family in a reverse regime: {stderr}");
}

#[test]
fn config_file_and_overrides() {
    let dir = std::env::temp_dir();
    let cfg_path = dir.join("hdhi_cfg_test.json");
    std::fs::write(
        &cfg_path,
        r#"{"kernel":{"rho":0.7,"alpha":0.0,"gamma":0.4,"sigma":0.8},"tol_quad":1e-9}"#,
    )
    .unwrap();
    let (code, stdout, stderr) = run(&["constant", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    // 2 Γ(2) ζ(2, 1/2) / (0.4 · 1.4²) with ζ(2, 1/2) = π²/2.
    let expect = std::f64::consts::PI.powi(2) / (0.4 * 1.96);
    assert!(
        stdout.contains(&format!("{:.9}", expect)[..10]),
        "constant missing from:\n{stdout}"
    );
    // Overrides still apply on top of the file.
    let (code, stdout, _) = run(&[
        "constant",
        "--config",
        cfg_path.to_str().unwrap(),
        "--set",
        "kernel.rho=1.0",
        "--set",
        "kernel.alpha=1.0",
        "--set",
        "kernel.gamma=0.5",
        "--set",
        "kernel.sigma=1.0",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("1.644934066848"));
}
