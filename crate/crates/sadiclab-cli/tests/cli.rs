//! End-to-end tests of the `sadiclab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sadiclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sadiclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn limitword_tribonacci() {
    let o = sadiclab(&["limitword", "--directive", "tribonacci", "--n", "31"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1213121121312121312112131213121\n");
    assert!(stderr(&o).contains("primitive"));
}

#[test]
fn limitword_zero_letters_prints_nothing() {
    let o = sadiclab(&["limitword", "--directive", "tribonacci", "--n", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");
}

#[test]
fn limitword_fibonacci_variant() {
    let o = sadiclab(&[
        "limitword",
        "--directive",
        "sturmian:1,1,1",
        "--n",
        "29",
        "--letter",
        "2",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "21121121211211212112121121121\n");
    // Both limit sequences agree except for their first two letters.
    let both = sadiclab(&["limitword", "--directive", "sturmian:1,1,1", "--n", "29"]);
    let lines: Vec<String> = stdout(&both).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0][2..], lines[1][2..]);
}

#[test]
fn parse_errors_are_operational() {
    let o = sadiclab(&["limitword", "--directive", "brun:(1,4)^w"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
    let o = sadiclab(&["check", "--directive", ""]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fractal_is_reproducible_from_its_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("tribo.svg");
    let pts = dir.path().join("tribo.txt");
    let args = [
        "fractal",
        "--n",
        "3000",
        "-o",
        path_str(&svg),
        "--points",
        path_str(&pts),
    ];
    assert!(sadiclab(&args).status.success());
    let first = std::fs::read(&svg).unwrap();
    assert!(sadiclab(&args).status.success());
    assert_eq!(first, std::fs::read(&svg).unwrap());

    let text = String::from_utf8(first.clone()).unwrap();
    let start =
        text.find("sadiclab run configuration\n").unwrap() + "sadiclab run configuration\n".len();
    let end = text.find("-->").unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, &text[start..end]).unwrap();
    std::fs::remove_file(&svg).unwrap();
    assert!(sadiclab(&["fractal", "--config", path_str(&cfg)])
        .status
        .success());
    assert_eq!(first, std::fs::read(&svg).unwrap());

    // Three subtiles, one line per point in the point file.
    assert_eq!(text.matches("<circle").count(), 3000);
    assert!(text.contains("tile 3"));
    assert_eq!(std::fs::read_to_string(&pts).unwrap().lines().count(), 3000);
}

#[test]
fn fibonacci_variant_fractal_is_two_abutting_segments() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("fib.txt");
    let o = sadiclab(&[
        "fractal",
        "--directive",
        "sturmian:1,1,1",
        "--n",
        "4000",
        "--letter",
        "2",
        "-o",
        path_str(&dir.path().join("fib.svg")),
        "--points",
        path_str(&pts),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for line in std::fs::read_to_string(&pts).unwrap().lines() {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let x: f64 = cols[0].parse().unwrap();
        let label: usize = cols[1].parse().unwrap();
        let r = &mut ranges[label - 1];
        *r = (r.0.min(x), r.1.max(x));
    }
    let (a, b) = if ranges[0].0 < ranges[1].0 {
        (ranges[0], ranges[1])
    } else {
        (ranges[1], ranges[0])
    };
    let gap = b.0 - a.1;
    let total = b.1 - a.0;
    // The segments touch: gap and overlap are both below the sampling step.
    assert!(gap.abs() < 0.01 * total, "{ranges:?}");
}

#[test]
fn unbounded_cloud_guard() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.svg");
    let args = [
        "fractal",
        "--directive",
        "ar:(3,3,1,1,1,2)^w",
        "--n",
        "2000",
        "-o",
        path_str(&out),
    ];
    let o = sadiclab(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("imbalance witness"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(sadiclab(&forced).status.success());
    assert!(out.exists());
}

#[test]
fn ppm_fallback_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.ppm");
    assert!(sadiclab(&[
        "fractal",
        "--n",
        "500",
        "--format",
        "ppm",
        "-o",
        path_str(&out)
    ])
    .status
    .success());
    let bytes = std::fs::read(&out).unwrap();
    let head = String::from_utf8_lossy(&bytes[..200]);
    assert!(head.starts_with("P6\n# sadiclab run configuration\n# command = fractal\n"));
}

#[test]
fn check_brun_periodic() {
    let o = sadiclab(&[
        "check",
        "--directive",
        "brun:(1,2,1,2)^ω",
        "--cloud-points",
        "3000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["errors"], 0);
    let checks = &v["checks"];
    assert_eq!(
        checks["hypotheses"]["primitivity"]["witnesses"][0],
        serde_json::json!([0, 4])
    );
    assert_eq!(checks["lyapunov"]["verdict"], "satisfied");
    assert!(checks["tiling_multiplicity"]["report"]["histogram"].is_array());
}

#[test]
fn check_ar_radius_table() {
    let o = sadiclab(&[
        "check",
        "--directive",
        "ar:(1,2,3)^w",
        "--steps",
        "6",
        "--cloud-points",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let table = v["checks"]["geometric_finiteness_radius"]
        .as_array()
        .unwrap();
    assert_eq!(table.len(), 6);
    let radii: Vec<u64> = table
        .iter()
        .map(|r| r["radius"].as_u64().unwrap())
        .collect();
    assert!(radii.windows(2).all(|w| w[0] <= w[1]), "{radii:?}");
}

#[test]
fn lyapunov_report() {
    let o = sadiclab(&[
        "lyapunov",
        "--directive",
        "brun",
        "--n",
        "20000",
        "--replicas",
        "8",
        "--seed",
        "3",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    for key in [
        "family", "measure", "n", "replicas", "theta1", "theta2", "stderr1", "stderr2", "verdict",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "satisfied");
    assert_eq!(v["n"], 20000);
}

#[test]
fn thread_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_sadiclab"))
        .args([
            "lyapunov",
            "--directive",
            "brun",
            "--n",
            "2000",
            "--replicas",
            "4",
        ])
        .env("SADICLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_sadiclab"))
        .args(["limitword", "--n", "3"])
        .env("SADICLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn dualplane_figure() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("d.svg");
    let faces = dir.path().join("d.txt");
    let o = sadiclab(&[
        "dualplane",
        "--directive",
        "ar:(1,2,3)^w",
        "--n",
        "6",
        "-o",
        path_str(&svg),
        "--points",
        path_str(&faces),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let count = std::fs::read_to_string(&faces).unwrap().lines().count();
    assert_eq!(
        std::fs::read_to_string(&svg)
            .unwrap()
            .matches("<polygon")
            .count(),
        count
    );
}

#[test]
fn expand_exact_and_language() {
    let o = sadiclab(&["expand", "--algorithm", "classical", "--input", "21,13"]);
    let v = json(&o);
    assert_eq!(v["terminated"], true);
    let o = sadiclab(&["language", "--directive", "sturmian:1,1,1", "--n", "5"]);
    let v = json(&o);
    // Sturmian complexity n + 1.
    assert_eq!(v["counts"], serde_json::json!([1, 2, 3, 4, 5, 6]));
}

#[test]
fn code_and_exchange_agree_with_the_limit_sequence() {
    let o = sadiclab(&["code", "--n", "300", "--cloud-points", "20000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&o)["agreement"]["agreed"], 300);
    let o = sadiclab(&["exchange", "--n", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        json(&o)["matches_limit_sequences_starting_with"],
        serde_json::json!([1])
    );
}
