use std::path::Path;
use std::process::{Command, Output};

fn reground(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reground"))
        .args(args)
        .output()
        .unwrap()
}

fn desk() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/desk.toml")
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn parse_prints_graphs_and_rejects_nonsense() {
    let out = reground(&[
        "--config",
        &desk(),
        "parse",
        "grab the red ball",
        "put it on the box",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "detect(red); detect(ball); and(0,1); locate(2)\ndetect(box); position(on,held,0)\n"
    );
    let out = reground(&["--config", &desk(), "parse", "grab the ball to the"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("error:"));
}

#[test]
fn bad_configuration_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[training]\nema_decay = 2.0\n").unwrap();
    let out = reground(&["--config", path.to_str().unwrap(), "parse", "grab the ball"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
}

#[test]
fn generated_data_evaluates_against_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("short.toml");
    let text = std::fs::read_to_string(desk())
        .unwrap()
        .replace("max_samples = 200000", "max_samples = 1000");
    std::fs::write(&cfg, text).unwrap();
    let cfg = cfg.to_str().unwrap();
    let data = d.join("data");
    let out = reground(&[
        "--config",
        cfg,
        "generate-data",
        "--seed",
        "2",
        "--train",
        "50",
        "--test",
        "40",
        "--out-dir",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let train = std::fs::read_to_string(data.join("train.jsonl")).unwrap();
    assert_eq!(train.lines().count(), 51);
    assert!(train
        .lines()
        .next()
        .unwrap()
        .contains("\"constrained\":true"));

    let w = d.join("w.bin");
    let curve = d.join("curve.tsv");
    let out = reground(&[
        "--config",
        cfg,
        "train",
        "--weights",
        w.to_str().unwrap(),
        "--report",
        curve.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = reground::report::read_curve(std::fs::read(&curve).unwrap().as_slice()).unwrap();
    assert_eq!(report.stages.len(), 6);

    let test = data.join("test.jsonl");
    let out = reground(&[
        "--config",
        cfg,
        "eval",
        "--weights",
        w.to_str().unwrap(),
        "--data",
        test.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("samples\t40\nerror\t"), "{stdout}");

    // weights are tied to their grid
    let out = reground(&[
        "eval",
        "--weights",
        w.to_str().unwrap(),
        "--data",
        test.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}
