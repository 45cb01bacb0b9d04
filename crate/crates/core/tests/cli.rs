//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use singular_euler::io::parse_config;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singular-euler"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn identities_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let t = std::time::Instant::now();
    let o = run(&["identities", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t.elapsed().as_secs_f64() < 5.0);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["hard_pass"], true);
    let r = json(&out.join("reports/identities.json"));
    assert!(r["max_ratio"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn simulate_steady_disc() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"domain": "disc",
            "field_init": {"kind": "patch", "radius": 0.6, "resolution": 20},
            "tracers": {"ring": {"center": [0.0, 0.0], "radius": 0.8, "n": 16}},
            "sim": {"t_end": 1.0}}"#,
    );
    let out = dir.path().join("sim");
    let o = run(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("run_summary.json"));
    assert_eq!(s["exited_count"], 0);
    assert!(s["min_dist"].as_f64().unwrap() > 0.19);
    let traj = std::fs::read_to_string(out.join("trajectories.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("#format=singular-euler/trajectories/1"));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("t,id,z_re,z_im,x1,x2,psi,one_minus_abs_z"));
    assert!(out.join("conservation.csv").exists());
    let snap = singular_euler::VortexField::load_csv(&out.join("final_field.csv")).unwrap();
    assert_eq!(snap.tracers().len(), 16);
}

#[test]
fn sign_changing_field_is_rejected_by_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"domain": "square",
            "field_init": {"kind": "blobs", "nonnegative": true, "particles": [
                {"z": [0.1, 0.0], "w": 1.0, "eps": 0.05},
                {"z": [-0.3, 0.2], "w": -0.5, "eps": 0.05}]}}"#,
    );
    let out = dir.path().join("v");
    let o = run(&["verify", "--config", &cfg, "--check", "lemma34", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "SignFlagMissing");
    let s = json(&out.join("summary.json"));
    assert_eq!(s["checks"][0]["error"], "SignFlagMissing");
}

#[test]
fn config_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    for (text, code) in [
        (r#"{"domain": "disc", "viscosity": 0.1}"#, "SchemaError"),
        (r#"{"domain": "disc""#, "ParseError"),
        (
            r#"{"domain": {"corners": [{"theta": 1.0, "alpha": 1.5}], "beta_c": {"kind": "zero"},
                "kappa": 0.0, "sprime0": 1.0}}"#,
            "AngleOutOfRange",
        ),
    ] {
        let cfg = write_config(dir.path(), text);
        let o = run(&["map-diag", "--config", &cfg, "--out", dir.path().join("m").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"], code);
    }
}

#[test]
fn map_diag_on_l_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"domain": "l_shape"}"#);
    let out = dir.path().join("m");
    let o = run(&["map-diag", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = json(&out.join("summary.json"));
    assert!(s["max_rel_err"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["alpha_star"].as_f64().unwrap(), 0.75);
}

#[test]
fn verify_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"domain": "l_shape", "field_init": {"kind": "random_blobs", "n": 40},
            "verify": {"checks": ["lemma33", "lemma34", "r_bound", "kernel_bounds"], "samples": 60}}"#,
    );
    let mut outs = Vec::new();
    for (k, threads) in ["1", "1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("v{k}"));
        let o = bin()
            .args(["verify", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()])
            .env("SINGULAR_EULER_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    for name in ["summary.json", "reports/lemma33.json", "reports/lemma34.json", "reports/kernel_bounds.json"] {
        let a = std::fs::read(outs[0].join(name)).unwrap();
        assert_eq!(a, std::fs::read(outs[1].join(name)).unwrap(), "{name}");
        assert_eq!(a, std::fs::read(outs[2].join(name)).unwrap(), "{name}");
    }
    assert_eq!(json(&outs[0].join("reports/lemma34.json"))["seed"], 7);
}

#[test]
fn example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&p).unwrap();
            parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 3);
}
