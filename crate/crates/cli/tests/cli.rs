use std::path::Path;
use std::process::Command;

use qite_cli::config::{resolve, validate_config, ConfigFile, Experiment, Overrides, DESK_SHOTS};
use qite_cli::experiments::{execute, run_lambda_sweep, run_trotter_diag};
use qite_cli::output::sha256_hex;

const LAMBDA0: f64 = -0.773_502_691_896_258_4;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn qite() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qite"))
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"experiment":"lambda_sweep"}"#);
    let err = validate_config(&p).unwrap_err().to_string();
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn alpha_below_floor_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"experiment":"lambda_sweep","seed":1,"alpha":0.3}"#);
    let err = validate_config(&p).unwrap_err().to_string();
    assert!(err.contains("alpha"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"experiment":"tau_sweep","seed":1,"taus":[10]}"#);
    assert!(validate_config(&p).is_err());
}

#[test]
fn minimal_file_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", r#"{"experiment":"lambda_sweep","seed":7}"#);
    let cfg = validate_config(&p).unwrap();
    assert_eq!(cfg.tau, 20.0);
    assert_eq!(cfg.alpha, 0.85);
    assert_eq!(cfg.gamma_sq, Some(0.5));
    assert_eq!(cfg.eps_target, 1e-4);
    assert_eq!(cfg.hamiltonian, "heisenberg4");
    assert!(cfg.lambda_grid.len() >= 60);
    assert_eq!((cfg.lambda_grid[0], *cfg.lambda_grid.last().unwrap()), (0.2, 1.0));
    assert_eq!(cfg.shots, DESK_SHOTS);

    let gs = resolve(
        serde_json::from_str(r#"{"experiment":"ground_search","seed":7}"#).unwrap(),
        &Overrides::default(),
    )
    .unwrap();
    assert_eq!((gs.tau0, gs.dt, gs.gamma_sq), (20.0, 2.5, None));
}

#[test]
fn single_point_sweep_meets_floor() {
    let lam = LAMBDA0.abs() + 1.0 / 40.0;
    let file: ConfigFile =
        serde_json::from_str(&format!(r#"{{"experiment":"lambda_sweep","seed":1,"lambda_grid":[{lam}]}}"#)).unwrap();
    let run = run_lambda_sweep(&resolve(file, &Overrides::default()).unwrap()).unwrap();
    let row = &run.rows[0];
    assert!(row.success_prob >= 0.85f64.powi(2) * 0.5 * (-2.0f64).exp() - row.eps);
}

#[test]
fn lambda_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let file: ConfigFile =
            serde_json::from_str(r#"{"experiment":"lambda_sweep","seed":3,"lambda_grid":[0.6,0.78,0.9]}"#).unwrap();
        let flags = Overrides { out: Some(dir.path().join(name)), ..Default::default() };
        execute(&resolve(file, &flags).unwrap()).unwrap();
        hashes.push(sha256_hex(&std::fs::read(dir.path().join(name)).unwrap()));
    }
    assert_eq!(hashes[0], hashes[1]);
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let manifest = std::fs::read(dir.path().join("a.manifest.json")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# manifest_sha256={}", sha256_hex(&manifest)));
    assert_eq!(csv.lines().nth(1).unwrap(), "tau,lambda,eps,success_prob,lower_bound,infidelity");
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn ground_search_rerun_from_manifest_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("g1.csv");
    let status = qite()
        .args(["ground_search", "--seed", "11", "--tau", "10", "--exact-loss", "--out"])
        .arg(&first)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("g1.manifest.json")).unwrap()).unwrap();
    let cfg_path = write(dir.path(), "again.json", &manifest["config"].to_string());
    let second = dir.path().join("g2.csv");
    let status = qite().arg("--config").arg(&cfg_path).arg("--out").arg(&second).status().unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let csv = std::fs::read_to_string(&first).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("i,tau,lambda_l,lambda_r,r,branch,E_i,ci_low,ci_high,shots"));
}

#[test]
fn exit_code_follows_enforced_checks() {
    let dir = tempfile::tempdir().unwrap();
    let ok = qite()
        .env("QITE_THREADS", "1")
        .args(["trotter_diag", "--seed", "1", "--out"])
        .arg(dir.path().join("t.csv"))
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));

    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"experiment":"trotter_diag","seed":1,"n_grid":[1,2],"checks":["ratio_near_four"]}"#,
    );
    let bad = qite().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("u.csv")).status().unwrap();
    assert_eq!(bad.code(), Some(1));

    let missing = qite().args(["trotter_diag"]).status().unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn trotter_rows_follow_grid_order() {
    let file: ConfigFile =
        serde_json::from_str(r#"{"experiment":"trotter_diag","seed":1,"n_grid":[16,1,4]}"#).unwrap();
    let cfg = resolve(file, &Overrides::default()).unwrap();
    assert_eq!(cfg.experiment, Experiment::TrotterDiag);
    let run = run_trotter_diag(&cfg).unwrap();
    let ns: Vec<usize> = run.rows.iter().map(|r| r.n_steps).collect();
    assert_eq!(ns, vec![16, 1, 4]);
    assert!(run.rows[0].ratio.is_nan());
}
