mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confsom::ensemble::write_csv_matrix;

fn confsom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confsom")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_input(dir: &Path, atoms: usize, name: &str) -> PathBuf {
    let e = common::three_state(atoms, 60, 0.05, atoms as u64);
    let path = dir.join(name);
    std::fs::write(&path, write_csv_matrix(&e, false)).unwrap();
    path
}

fn stdout_paths(out: &Output) -> Vec<PathBuf> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(PathBuf::from).collect()
}

#[test]
fn missing_input_file_exits_3() {
    let out = confsom(&["train", "--input", "/nonexistent/traj.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn no_input_or_bad_config_exits_2() {
    assert_eq!(confsom(&["train"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"training": {"radius": 3}}"#).unwrap();
    let input = small_input(dir.path(), 4, "t.csv");
    assert_eq!(confsom(&["train", "--config", s(&cfg), "--input", s(&input)]).status.code(), Some(2));
    assert_eq!(confsom(&["train", "--input", s(&input), "--stride", "0"]).status.code(), Some(2));
}

#[test]
fn defaults_train_a_ten_by_ten_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path(), 4, "t.csv");
    let out_dir = dir.path().join("out");
    let out = confsom(&["train", "--input", s(&input), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let paths = stdout_paths(&out);
    assert_eq!(paths, vec![out_dir.join("report.json"), out_dir.join("som.json")]);
    let map: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("som.json")).unwrap()).unwrap();
    assert_eq!((map["rows"].as_u64(), map["cols"].as_u64()), (Some(10), Some(10)));
    assert_eq!(map["dim"], 12);
}

#[test]
fn dimension_mismatch_on_classify_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let train_in = small_input(dir.path(), 4, "a.csv");
    let other = small_input(dir.path(), 5, "b.csv");
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"training": {"map_size": 9, "train_len": 20}}"#).unwrap();
    let trained = confsom(&["train", "--config", s(&cfg), "--input", s(&train_in), "--out", s(&out_dir)]);
    assert!(trained.status.success());
    let map = out_dir.join("som.json");

    let same = confsom(&["classify", "--map", s(&map), "--input", s(&train_in), "--out", s(&out_dir)]);
    assert!(same.status.success());
    assert_eq!(stdout_paths(&same), vec![out_dir.join("classification.json")]);

    let bad = confsom(&["classify", "--map", s(&map), "--input", s(&other), "--out", s(&out_dir)]);
    assert_eq!(bad.status.code(), Some(5), "{}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn analysis_subcommands_reuse_a_map_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_input(dir.path(), 6, "t.csv");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"training": {"map_size": 9, "train_len": 50}, "network": {"threshold": {"beta": 4}}}"#,
    )
    .unwrap();
    let run = |cmd: &str, out: &Path, extra: &[&str]| {
        let mut args = vec![cmd, "--config", s(&cfg), "--input", s(&input), "--out", s(out)];
        args.extend_from_slice(extra);
        let o = confsom(&args);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run("pipeline", &a, &["--seed", "3"]);
    run("pipeline", &b, &["--seed", "3", "--threads", "2"]);
    for f in ["report.json", "som.json", "som.svg", "dendrogram.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }

    let map = a.join("som.json");
    let c = dir.path().join("c");
    let clustered = run("cluster", &c, &["--map", s(&map)]);
    let written = stdout_paths(&clustered);
    assert!(written.contains(&c.join("som.svg")));
    assert!(!written.iter().any(|p| p.extension().is_some_and(|x| x == "graphml")));
    assert!(!c.join("som.json").exists());

    let n = dir.path().join("n");
    let networks = stdout_paths(&run("networks", &n, &["--map", s(&map)]));
    assert!(networks.iter().any(|p| p.extension().is_some_and(|x| x == "graphml")));
    assert!(!n.join("som.svg").exists());

    let r = dir.path().join("r");
    run("report", &r, &["--map", s(&map), "--seed", "3"]);
    // Same map and data as the pipeline run, so the same report.
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("config");
        v
    };
    assert_eq!(strip(&r.join("report.json")), strip(&a.join("report.json")));
}
