//! End-to-end checks of the `smock` binary: subcommands, output formats,
//! exit codes, and output determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn smock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smock"))
        .args(args)
        .env("SMOCK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("smock-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn constants_woven_and_checkered() {
    let v = stdout_json(&smock(&["constants", "builtin:woven"]));
    assert_eq!(v["delta"], 1.0);
    assert_eq!(v["l_max"], 2.0);
    let lo = v["depth_lo"].as_f64().unwrap();
    let hi = v["depth_hi"].as_f64().unwrap();
    assert!(lo <= 1.0 + 1e-9 && 1.0 <= hi + 1e-9 && hi - lo <= 1e-6);

    let v = stdout_json(&smock(&["constants", "builtin:checkered"]));
    let d = v["delta"].as_f64().unwrap();
    assert!((d - 2f64.sqrt()).abs() < 1e-9);
    assert!((v["depth_hi"].as_f64().unwrap() - 1.5).abs() < 1e-5);
}

#[test]
fn dist_examples_and_witness() {
    let v = stdout_json(&smock(&[
        "dist",
        "builtin:plus",
        "--from",
        "stitch:0,0",
        "--to",
        "stitch:3,0",
    ]));
    assert_eq!(v["distance"], 1.0);

    let v = stdout_json(&smock(&[
        "dist",
        "builtin:bumpy",
        "--from",
        "stitch:0,0",
        "--to",
        "stitch:3,6",
        "--witness",
    ]));
    let d = v["distance"].as_f64().unwrap();
    assert!((d - (8f64.sqrt() + 2.0)).abs() < 1e-9);
    assert_eq!(v["witness"]["jumps"], 1);
    assert_eq!(v["witness"]["hops"].as_array().unwrap().len(), 2);

    // Identical endpoints.
    let v = stdout_json(&smock(&[
        "dist",
        "builtin:woven",
        "--from",
        "1.25,0.5",
        "--to",
        "1.25,0.5",
    ]));
    assert_eq!(v["distance"], 0.0);
}

#[test]
fn exit_codes() {
    // Missing file: parse/usage class.
    let out = smock(&["constants", "/nonexistent/nowhere.smk"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown builtin: domain.
    let out = smock(&["constants", "builtin:spiral"]);
    assert_eq!(out.status.code(), Some(4));
    // Stitch off the lattice: domain.
    let out = smock(&[
        "dist",
        "builtin:plus",
        "--from",
        "stitch:1,0",
        "--to",
        "stitch:3,0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    // Zero radius: usage.
    let out = smock(&["ball", "builtin:woven", "--stitch", "0,0", "--radius", "0"]);
    assert_eq!(out.status.code(), Some(2));
    // Validation failure in a pattern file.
    let bad = tmp("bad.smk");
    std::fs::write(&bad, "smockpattern 1\nbasis 2 0 0 2\n").unwrap();
    let out = smock(&["constants", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_file(&bad).ok();
    // Syntax error in a pattern file.
    let bad = tmp("syntax.smk");
    std::fs::write(&bad, "smockpattern 1\nbasis 2 0 0 x\nstitch 0 seg 0 0 1 0\n").unwrap();
    let out = smock(&["constants", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&bad).ok();
}

#[test]
fn pattern_file_roundtrip() {
    let file = tmp("woven.smk");
    std::fs::write(
        &file,
        "smockpattern 1\n# woven\nbasis 4 0 2 2\nstitch 0 seg -1 0 1 0\nstitch 1 seg 2 -1 2 1\n",
    )
    .unwrap();
    let v = stdout_json(&smock(&["constants", file.to_str().unwrap()]));
    assert_eq!(v["delta"], 1.0);
    assert_eq!(v["l_max"], 2.0);
    std::fs::remove_file(&file).ok();
}

#[test]
fn ball_frontier_and_render() {
    let svg = tmp("ball.svg");
    let out = smock(&[
        "ball",
        "builtin:woven",
        "--stitch",
        "0,0",
        "--radius",
        "3",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg"));
    std::fs::remove_file(&svg).ok();

    let pgm = tmp("ball.pgm");
    let out = smock(&[
        "ball",
        "builtin:plus",
        "--stitch",
        "0,0",
        "--radius",
        "1.5",
        "--spacing",
        "0.05",
        "--out",
        pgm.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = std::fs::read(&pgm).unwrap();
    assert!(body.starts_with(b"P5\n"));
    std::fs::remove_file(&pgm).ok();

    let v = stdout_json(&smock(&[
        "frontier",
        "builtin:plus",
        "--stitch",
        "0,0",
        "--radius",
        "1",
    ]));
    assert_eq!(v["stitches"].as_array().unwrap().len(), 4);

    let series = tmp("series.svg");
    let out = smock(&[
        "render",
        "builtin:woven",
        "--stitch",
        "0,0",
        "--balls",
        "1,2,3",
        "--spacing",
        "0.1",
        "--out",
        series.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    std::fs::remove_file(&series).ok();
}

#[test]
fn gh_rescale_csv_shape() {
    let out = smock(&[
        "gh-rescale",
        "builtin:plus",
        "--norm",
        "plus",
        "--scales",
        "8,16,32",
        "--radius",
        "1",
        "--grid",
        "0.1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines[0], "R,epsilon,epsilon_times_R");
    assert_eq!(lines.len(), 4);
    let eps: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(eps[0] > eps[1] && eps[1] > eps[2], "{eps:?}");
}

#[test]
fn tangent_check_and_check_commands() {
    let v = stdout_json(&smock(&[
        "tangent-check",
        "builtin:woven",
        "--norm",
        "woven",
        "--samples",
        "200",
        "--seed",
        "5",
        "--window",
        "20",
    ]));
    assert_eq!(v["exceeded"], false);
    assert!(v["max_dev"].as_f64().unwrap() <= 8.0);

    let v = stdout_json(&smock(&["check", "builtin:plus", "--samples", "120"]));
    assert_eq!(v["clean"], true);
}

#[test]
fn deterministic_output() {
    let a = smock(&["constants", "builtin:bumpy"]);
    let b = smock(&["constants", "builtin:bumpy"]);
    assert_eq!(a.stdout, b.stdout);
    let a = smock(&[
        "gh-rescale", "builtin:plus", "--norm", "plus", "--scales", "8", "--grid", "0.1",
    ]);
    let b = smock(&[
        "gh-rescale", "builtin:plus", "--norm", "plus", "--scales", "8", "--grid", "0.1",
    ]);
    assert_eq!(a.stdout, b.stdout);
}
