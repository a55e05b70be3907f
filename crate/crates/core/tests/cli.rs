use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use thermoporo::cli::main_with_args;

const CONFIG: &str = r#"{
  "geometry": {"resolution": 4, "inclusion": {"kind": "box", "lo": [0.25, 0.25, 0.25], "hi": [0.75, 0.75, 0.75]}},
  "phases": {
    "matrix": {"lambda": 2.0, "mu": 1.0, "beta": 0.8, "gamma": 0.3, "alpha": 0.1,
               "phi": 0.5, "kappa": 1.0, "conductivity": 1.5, "capacity": 1.2},
    "inclusion": {"lambda": 4.0, "mu": 2.0, "beta": 0.8, "gamma": 0.3, "alpha": 0.1,
                  "phi": 0.5, "kappa": 2.0, "conductivity": 3.0, "capacity": 1.2}
  },
  "interface": {"zeta": 1.0, "omega": 1.0},
  "sources": {
    "fluid": [[{"amplitude": 1.0, "shape": {"kind": "sine_bump"}}], [{"amplitude": 1.0, "shape": {"kind": "sine_bump"}}]],
    "heat": [[{"amplitude": 1.0, "shape": {"kind": "sine_bump"}}], [{"amplitude": 1.0, "shape": {"kind": "sine_bump"}}]]
  },
  "time": {"dt": 0.05, "t_end": 0.1},
  "macro": {"resolution": 6},
  "eps_list": [0.5],
  "dns": {"epsilon": 0.5},
  "output": {"directory": "unused", "vtk": true}
}"#;

fn write_config(dir: &Path) -> PathBuf {
    let p = dir.join("run.json");
    let fallback = format!("\"{}\"", dir.join("default_out").display());
    fs::write(&p, CONFIG.replace("\"unused\"", &fallback)).unwrap();
    p
}

fn cli(args: &[&str]) -> i32 {
    let mut v = vec!["thermoporo".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    main_with_args(v)
}

fn exit_code(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_thermoporo"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

/// Asserts that two directories hold the same files with the same bytes.
fn assert_same_tree(a: &Path, b: &Path) {
    let (la, lb) = (listing(a), listing(b));
    let names = |l: &[(String, Vec<u8>)]| l.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(&la), names(&lb));
    for ((name, x), (_, y)) in la.iter().zip(&lb) {
        assert!(x == y, "{name} differs");
    }
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn exit_codes_distinguish_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let m = missing.to_str().unwrap();
    assert_eq!(exit_code(&["upscale", "--config", m]), 2);
    assert_eq!(exit_code(&["frobnicate"]), 2);
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        fs::read_to_string(write_config(tmp.path()))
            .unwrap()
            .replace("\"zeta\": 1.0", "\"zeta\": -1.0"),
    )
    .unwrap();
    assert_eq!(exit_code(&["upscale", "--config", bad.to_str().unwrap()]), 2);
    let cfg = write_config(tmp.path());
    assert_eq!(
        exit_code(&["macro", "--config", cfg.to_str().unwrap(), "--coeffs", m]),
        2
    );
    assert_eq!(exit_code(&["selftest"]), 0);
}

#[test]
fn stored_coefficients_reproduce_the_in_process_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let up = tmp.path().join("up");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        cli(&[
            "--sequential",
            "upscale",
            "--config",
            cfg,
            "--out",
            up.to_str().unwrap()
        ]),
        0
    );
    let coeffs = up.join("coefficients.json");
    assert!(coeffs.exists());
    assert!(up.join("coefficients.csv").exists());
    assert_eq!(
        cli(&["--sequential", "macro", "--config", cfg, "--out", a.to_str().unwrap()]),
        0
    );
    assert_eq!(
        cli(&[
            "--sequential",
            "macro",
            "--config",
            cfg,
            "--out",
            b.to_str().unwrap(),
            "--coeffs",
            coeffs.to_str().unwrap()
        ]),
        0
    );
    let la = listing(&a);
    assert!(la.iter().any(|(n, _)| n == "energy.csv"));
    assert!(la.iter().any(|(n, _)| n.starts_with("macro_") && n.ends_with(".vtk")));
    assert_same_tree(&a, &b);
}

#[test]
fn sequential_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let dirs = [tmp.path().join("one"), tmp.path().join("two")];
    for d in &dirs {
        assert_eq!(
            cli(&["--sequential", "verify", "--config", cfg, "--out", d.to_str().unwrap()]),
            0
        );
        assert_eq!(
            cli(&["--sequential", "dns", "--config", cfg, "--out", d.to_str().unwrap()]),
            0
        );
    }
    let a = listing(&dirs[0]);
    assert!(a.iter().any(|(n, _)| n == "convergence.csv"));
    assert!(a.iter().any(|(n, _)| n == "dns_summary.json"));
    assert_same_tree(&dirs[0], &dirs[1]);
}
