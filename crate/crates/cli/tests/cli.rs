use std::path::Path;
use std::process::{Command, Output};

use circreg::io;
use circreg::scenes;
use serde_json::Value;

fn circreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn circreg")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = circreg(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_wall_time(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"wall_time_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_signal(dir: &Path) {
    io::save_signal_csv(&scenes::phase_signal(100).unwrap(), &dir.join("clean.csv")).unwrap();
}

const DENOISE_1D: &[&str] = &[
    "denoise1d", "clean.csv", "--s", "0.1", "--p", "1.1", "--alpha", "0.19", "--eps", "0.01",
    "--steps", "300", "--step-size", "0.01", "--sigma", "0.1", "--seed", "3", "--clean", "clean.csv",
];

#[test]
fn reports_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_signal(d);
    for name in ["a.json", "b.json"] {
        let mut args = DENOISE_1D.to_vec();
        args.extend(["--report", "r.json", "--out", "u.csv"]);
        ok(d, &args);
        std::fs::rename(d.join("r.json"), d.join(name)).unwrap();
    }
    assert_eq!(without_wall_time(&d.join("a.json")), without_wall_time(&d.join("b.json")));
    let r = read_json(&d.join("a.json"));
    assert_eq!(r["schema"], "circreg.run/1");
    assert_eq!(r["command"][0], "circreg");
    assert_eq!(r["seed"], 3);
    let m = &r["metrics"];
    assert!(m["wrapped_rmse"].as_f64().unwrap() < m["wrapped_rmse_observed"].as_f64().unwrap());
    assert_eq!(io::load_signal_csv(&d.join("u.csv"), 1.0).unwrap().len(), 100);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_signal(d);
    let mut metrics = Vec::new();
    for threads in ["1", "3"] {
        let mut args = DENOISE_1D.to_vec();
        args.extend(["--threads", threads, "--report", "r.json"]);
        ok(d, &args);
        let r = read_json(&d.join("r.json"));
        metrics.push((r["metrics"].clone(), r["energy_trace"].clone()));
    }
    assert_eq!(metrics[0], metrics[1]);
}

#[test]
fn report_goes_to_stdout_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_signal(d);
    let out = ok(d, DENOISE_1D);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["energy_trace"].as_array().unwrap().len() > 1);
}

#[test]
fn invalid_parameters_exit_2_and_name_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_signal(d);
    let out = circreg(d, &["denoise1d", "clean.csv", "--s", "1", "--p", "2", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s=1 requires k=0"));
    let out = circreg(d, &["denoise1d", "clean.csv", "--s", "0.5", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--alpha"));
    let out = circreg(d, &["denoise1d", "missing.csv", "--s", "0.5", "--p", "2", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = circreg(d, &["denoise1d", "clean.csv", "--s", "0.5", "--p", "2", "--alpha", "1", "--steps", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = circreg(d, &["denoise1d", "clean.csv", "--s", "0.5", "--p", "2", "--alpha", "1", "--metric", "absolute"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_signal(d);
    let out = circreg(
        d,
        &[
            "denoise1d", "clean.csv", "--s", "0.5", "--p", "2", "--alpha", "1e6", "--steps", "5",
            "--step-size", "1e300", "--sigma", "0.5",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite energy at step"));
}

#[test]
fn rainbow_noise_and_denoise2d() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["make-rainbow", "--rows", "20", "--cols", "12", "--out", "r.png"]);
    let r = io::load_angle_image(&d.join("r.png")).unwrap();
    assert_eq!(r.grid().shape(), (20, 12));
    ok(d, &["add-noise", "r.png", "--sigma", "0.05", "--seed", "1", "--out", "n.png"]);
    ok(
        d,
        &[
            "denoise2d", "n.png", "--s", "0.9", "--p", "1.1", "--alpha", "1", "--eps", "0.05", "--steps", "20",
            "--step-size", "0.001", "--clean", "r.png", "--report", "rep.json", "--out", "u.png",
        ],
    );
    assert!(read_json(&d.join("rep.json"))["metrics"]["wrapped_rmse"].is_number());
    let out = circreg(d, &["denoise2d", "n.png", "--s", "0.5", "--p", "2", "--alpha", "1", "--mollifier", "bump", "--l", "0"]);
    assert_eq!(out.status.code(), Some(0));
    ok(d, &["make-rainbow", "--rows", "20", "--cols", "12", "--hue", "--out", "h.png"]);
    ok(d, &["tv-denoise", "h.png", "--hue", "--lambda", "5", "--iters", "10", "--out", "t.png"]);
}

#[test]
fn inpainting_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    io::save_angle_image(&scenes::two_color_blocks(28, 28).unwrap(), &d.join("b.png")).unwrap();
    io::save_mask(&scenes::block_mask(28, 28, 4).unwrap(), &d.join("m.png")).unwrap();
    ok(
        d,
        &[
            "inpaint", "b.png", "--mask", "m.png", "--s", "0.3", "--p", "1.01", "--alpha", "0.3", "--eps", "0.05",
            "--steps", "50", "--step-size", "0.002", "--init", "tv", "--clean", "b.png", "--report", "i.json",
        ],
    );
    let m = &read_json(&d.join("i.json"))["metrics"];
    assert!(m["wrapped_rmse_unknown"].as_f64().unwrap() < 0.1);
    ok(d, &["tv-inpaint", "b.png", "--mask", "m.png", "--clean", "b.png", "--report", "t.json"]);
    assert!(read_json(&d.join("t.json"))["metrics"]["wrapped_rmse"].is_number());
    let out = circreg(d, &["tv-inpaint", "b.png"]);
    assert_eq!(out.status.code(), Some(2));
    let out = circreg(d, &["tv-denoise", "b.png", "--mask", "m.png"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn studies_emit_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["bbm-study", "--n", "1000", "--eps-list", "0.05,0.02", "--report", "b.json"]);
    let b = read_json(&d.join("b.json"));
    assert_eq!(b["tables"]["bbm"]["rows"].as_array().unwrap().len(), 2);
    assert!((b["metrics"]["final_ratio"].as_f64().unwrap() - 1.0).abs() < 0.01);
    let out = circreg(d, &["bbm-study", "--n", "1000", "--eps-list", "0.02,0.05"]);
    assert_eq!(out.status.code(), Some(2));

    ok(d, &["conjecture-study", "--s", "0.5", "--n", "1000", "--eps-list", "0.04,0.02", "--report", "c.json"]);
    assert!(read_json(&d.join("c.json"))["tables"]["conjecture"]["seminorm"].as_f64().unwrap() > 0.0);

    ok(
        d,
        &[
            "convergence-study", "--sigmas", "0.2,0.1", "--seeds", "0,1,2", "--s", "0.5", "--p", "2", "--eps",
            "0.02", "--steps", "50", "--step-size", "0.02", "--report", "v.json",
        ],
    );
    let v = read_json(&d.join("v.json"));
    assert_eq!(v["metrics"]["rule_admissible"], 1.0);
    assert_eq!(v["tables"]["convergence"]["rows"][0]["rmse"].as_array().unwrap().len(), 3);

    ok(d, &["poincare-study", "--s", "0.5", "--p", "2", "--eps", "0.1", "--samples", "50", "--report", "p.json"]);
    let p = read_json(&d.join("p.json"));
    assert!(p["metrics"]["max_ratio"].as_f64().unwrap().is_finite());
}
