use std::path::Path;

use serde_json::Value;
use tempfile::TempDir;
use vidmem::cli::run;

fn vidmem(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run(std::iter::once("vidmem").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out) = vidmem(args);
    assert_eq!(code, 0, "{args:?} -> {out}");
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A world plus its built memory in a fresh tempdir.
fn built(seed: &str) -> (TempDir, std::path::PathBuf, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("world.json");
    let mem = dir.path().join("mem");
    ok(&["gen-world", "--seed", seed, "--segments", "30", "--objects", "4", "-o", p(&world)]);
    ok(&["build-memory", "--world", p(&world), "-o", p(&mem)]);
    (dir, world, mem)
}

#[test]
fn gen_world_is_deterministic() {
    let a = ok(&["gen-world", "--seed", "7"]);
    let b = ok(&["gen-world", "--seed", "7"]);
    let c = ok(&["gen-world", "--seed", "8"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["n_segments"], 44);
}

#[test]
fn localize_scores_decompose() {
    let (_dir, world, mem) = built("3");
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&world).unwrap()).unwrap();
    let query = w["nlq_examples"][0]["query"].as_str().unwrap().to_string();
    for (ratio, w_video) in [("18:11", 18.0 / 29.0), ("7:8", 7.0 / 15.0)] {
        let out = ok(&["localize", "--mem", p(&mem), "--query", &query, "--ratio", ratio]);
        let rows: Vec<Value> = serde_json::from_str(&out).unwrap();
        assert_eq!(rows.len(), 5);
        let mut last = f64::INFINITY;
        for r in &rows {
            let f = |k: &str| r[k].as_f64().unwrap();
            let expect = (1.0 - w_video) * f("text_score") + w_video * f("video_score");
            assert!((f("score") - expect).abs() < 1e-9, "{r}");
            assert!(f("score") <= last);
            last = f("score");
        }
    }
}

#[test]
fn eval_nlq_on_a_clean_world_is_perfect() {
    let (dir, world, mem) = built("5");
    let report = dir.path().join("report.json");
    ok(&["eval", "nlq", "--mem", p(&mem), "--examples", p(&world), "-o", p(&report)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["r1@0.3"], 1.0);
    assert_eq!(v["r5@0.5"], 1.0);
    assert_eq!(v["examples"].as_array().unwrap().len(), 10);
}

#[test]
fn eval_mcq_uses_count_scripts() {
    let (_dir, world, mem) = built("9");
    let out = ok(&["eval", "mcq", "--mem", p(&mem), "--world", p(&world)]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["accuracy"], 1.0);
}

#[test]
fn objects_runs_sql() {
    let (_dir, _world, mem) = built("2");
    let out = ok(&["objects", "--mem", p(&mem), "--sql", "SELECT COUNT(DISTINCT object_id) FROM objects"]);
    assert_eq!(out.trim(), "COUNT(DISTINCT object_id)\n4");
    let (code, _) = vidmem(&["objects", "--mem", p(&mem), "--sql", "DELETE FROM objects"]);
    assert_eq!(code, 1);
}

#[test]
fn export_transcript_is_stable() {
    let a = ok(&["export-transcript", "--case", "case4"]);
    assert_eq!(a, ok(&["export-transcript", "--case", "case4"]));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["steps"][0]["action"], "object_memory_querying");
}

#[test]
fn exit_codes() {
    assert_eq!(vidmem(&["frobnicate"]).0, 2);
    assert_eq!(vidmem(&["gen-world", "--segments", "0"]).0, 2);
    assert_eq!(vidmem(&["export-transcript", "--case", "case9"]).0, 2);
    assert_eq!(vidmem(&["--set", "top_k=oops", "gen-world"]).0, 2);
    assert_eq!(vidmem(&["--set", "no_such_key=1", "gen-world"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    assert_eq!(vidmem(&["objects", "--mem", p(&missing), "--sql", "SELECT * FROM objects"]).0, 1);
}

#[test]
fn config_file_then_set_override() {
    let (dir, _world, mem) = built("4");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"top_k": 2, "ensemble_ratio": "7:8"}"#).unwrap();
    let rows = |extra: &[&str]| -> Vec<Value> {
        let mut args = vec!["--config", p(&cfg)];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["localize", "--mem", p(&mem), "--query", "C picks up a cup"]);
        serde_json::from_str(&ok(&args)).unwrap()
    };
    assert_eq!(rows(&[]).len(), 2);
    assert_eq!(rows(&["--set", "top_k=3"]).len(), 3);
    let r = &rows(&["--set", "ensemble_ratio=1:0"])[0];
    assert!((r["score"].as_f64().unwrap() - r["video_score"].as_f64().unwrap()).abs() < 1e-12);

    std::fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(vidmem(&["--config", p(&cfg), "gen-world"]).0, 2);
}
