use std::path::Path;
use std::process::{Command, Output};

use hcfr_core::game::{GameConfig, InfoKey, LowKey, Prev};
use hcfr_core::persist::{Checkpoint, SkillsFile, StrategyFile, METRICS_HEADER};
use hcfr_core::Profile;
use tempfile::TempDir;

fn hcfr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcfr"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const KUHN_TABULAR: &str = "[game]\ngame_kind = \"kuhn\"\nnum_options = 2\n\n[solver]\niterations = 25\n";

const KUHN_HDCFR: &str = "[game]\ngame_kind = \"kuhn\"\nnum_options = 2\n\n[solver]\ntier = \"hdcfr\"\niterations = 20\ntraversals = 32\neval_every = 5\nseed = 3\n";

#[test]
fn solve_writes_one_row_per_iteration() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.toml", KUHN_TABULAR);
    let stdout = ok(&hcfr(&["solve", "--config", "k.toml", "--out", "run"], tmp.path()));
    assert!(stdout.contains("exploitability="), "{stdout}");
    let csv = std::fs::read_to_string(tmp.path().join("run/metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 26);
    assert!(tmp.path().join("run/strategy.json").exists());
    assert!(matches!(
        Checkpoint::read(&tmp.path().join("run/checkpoint.bin")).unwrap(),
        Checkpoint::Tabular(_)
    ));
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.toml", "[game]\ngame_kind = \"kuhn\"\n[solver]\niteratons = 5\n");
    let out = hcfr(&["solve", "--config", "bad.toml"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("iteratons"));
}

#[test]
fn json_config_is_accepted() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "k.json",
        r#"{"game": {"game_kind": "kuhn", "num_options": 2}, "solver": {"iterations": 3}}"#,
    );
    ok(&hcfr(&["solve", "--config", "k.json", "--out", "run"], tmp.path()));
}

#[test]
fn same_seed_gives_identical_strategy_file() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "h.toml", KUHN_HDCFR);
    ok(&hcfr(&["solve", "--config", "h.toml", "--out", "a"], tmp.path()));
    ok(&hcfr(&["--threads", "2", "solve", "--config", "h.toml", "--out", "b"], tmp.path()));
    ok(&hcfr(&["solve", "--config", "h.toml", "--out", "c", "--seed", "4"], tmp.path()));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("strategy.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "full.toml", KUHN_HDCFR);
    write(tmp.path(), "half.toml", &KUHN_HDCFR.replace("iterations = 20", "iterations = 10"));
    ok(&hcfr(&["train", "--config", "full.toml", "--out", "full"], tmp.path()));
    ok(&hcfr(&["train", "--config", "half.toml", "--out", "part"], tmp.path()));
    ok(&hcfr(
        &["train", "--config", "full.toml", "--out", "part", "--resume", "part/checkpoint.bin"],
        tmp.path(),
    ));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("strategy.json")).unwrap();
    assert_eq!(read("full"), read("part"));
    let csv = |d: &str| std::fs::read_to_string(tmp.path().join(d).join("metrics.csv")).unwrap();
    assert_eq!(csv("full"), csv("part"));
}

fn kuhn_equilibrium() -> Profile {
    let mut prof = Profile::new();
    let third = 1.0 / 3.0;
    let rows: [(&str, [f64; 2]); 12] = [
        ("p1|J||", [1.0, 0.0]),
        ("p1|Q||", [1.0, 0.0]),
        ("p1|K||", [1.0, 0.0]),
        ("p1|J||cr", [1.0, 0.0]),
        ("p1|Q||cr", [2.0 * third, third]),
        ("p1|K||cr", [0.0, 1.0]),
        ("p2|J||c", [2.0 * third, third]),
        ("p2|Q||c", [1.0, 0.0]),
        ("p2|K||c", [0.0, 1.0]),
        ("p2|J||r", [1.0, 0.0]),
        ("p2|Q||r", [2.0 * third, third]),
        ("p2|K||r", [0.0, 1.0]),
    ];
    for (key, probs) in rows {
        let key: InfoKey = key.parse().unwrap();
        let prev = if key.actions().len() < 2 { Prev::Initial } else { Prev::Option(0) };
        let key = key.with_prev(prev);
        prof.high.insert(key.clone(), vec![1.0]);
        prof.low.insert(LowKey::new(key, 0), probs.to_vec());
    }
    prof
}

#[test]
fn eval_of_equilibrium_is_zero_and_refuses_other_games() {
    let tmp = TempDir::new().unwrap();
    let game = GameConfig::kuhn(1);
    StrategyFile::new(&kuhn_equilibrium(), &game, "fixture", 0, 0)
        .write(&tmp.path().join("ne.json"))
        .unwrap();
    let stdout = ok(&hcfr(&["eval", "ne.json", "--json"], tmp.path()));
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let mbbg = report["files"][0]["exploitability_mbbg"].as_f64().unwrap();
    assert!(mbbg.abs() < 1e-6, "{mbbg}");

    write(tmp.path(), "k2.toml", KUHN_TABULAR);
    let out = hcfr(&["eval", "ne.json", "--config", "k2.toml"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing"));
}

#[test]
fn eval_two_files_reports_a_match() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.toml", KUHN_TABULAR);
    ok(&hcfr(&["solve", "--config", "k.toml", "--out", "a"], tmp.path()));
    let stdout = ok(&hcfr(
        &["eval", "a/strategy.json", "a/strategy.json", "--deals", "2000", "--json"],
        tmp.path(),
    ));
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let h = &report["head_to_head"];
    assert_eq!(h["deals"], 2000);
    assert!(h["mean_mbbg"].as_f64().unwrap().abs() <= h["ci95_mbbg"].as_f64().unwrap() + 1e-9);
}

#[test]
fn match_writes_transcript() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.toml", KUHN_TABULAR);
    ok(&hcfr(&["solve", "--config", "k.toml", "--out", "a"], tmp.path()));
    ok(&hcfr(
        &["match", "a/strategy.json", "a/strategy.json", "--deals", "10", "--out", "m"],
        tmp.path(),
    ));
    let text = std::fs::read_to_string(tmp.path().join("m/transcript.ndjson")).unwrap();
    assert_eq!(text.lines().count(), 20);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    for field in ["hand", "seat_a", "actions", "payoff_a"] {
        assert!(first.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn skills_round_trip_and_frozen_import() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "k.toml", KUHN_TABULAR);
    write(tmp.path(), "h.toml", KUHN_HDCFR);
    ok(&hcfr(&["solve", "--config", "k.toml", "--out", "src"], tmp.path()));
    ok(&hcfr(&["export-skills", "src/strategy.json", "--out", "src"], tmp.path()));
    let strategy = StrategyFile::read(&tmp.path().join("src/strategy.json")).unwrap();
    let skills = SkillsFile::read(&tmp.path().join("src/skills.json")).unwrap();
    assert_eq!(skills.low, strategy.low);

    ok(&hcfr(
        &["import-skills", "src/skills.json", "--config", "h.toml", "--out", "dst", "--frozen"],
        tmp.path(),
    ));
    let Checkpoint::Sampled(snap) = Checkpoint::read(&tmp.path().join("dst/checkpoint.bin")).unwrap() else {
        panic!("expected sampled checkpoint");
    };
    assert!(snap.frozen);
    let trained = StrategyFile::read(&tmp.path().join("dst/strategy.json")).unwrap();
    for (k, v) in &skills.low {
        assert_eq!(trained.low.get(k), Some(v));
    }
}

#[test]
fn cross_variant_import_reports_unmappable_keys() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "leduc.toml",
        "[game]\ngame_kind = \"leduc\"\nnum_options = 2\n[solver]\ntier = \"mc\"\niterations = 1\ntraversals = 4\neval_every = 0\n",
    );
    // The first key needs three raises, over the target cap of two.
    let src_game = GameConfig::leduc_scaled(10, 60, 2);
    let mut prof = Profile::new();
    let key: InfoKey = "p2|K||rrr|z0".parse().unwrap();
    prof.low.insert(LowKey::new(key, 0), vec![0.5, 0.5]);
    let key: InfoKey = "p1|K|||z-".parse().unwrap();
    prof.low.insert(LowKey::new(key, 1), vec![0.25, 0.75]);
    let skills = hcfr_core::skills::SkillSet::from_profile(&prof, &src_game);
    SkillsFile::new(&skills, 0).write(&tmp.path().join("skills.json")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hcfr"))
        .args(["import-skills", "skills.json", "--config", "leduc.toml", "--out", "dst"])
        .current_dir(tmp.path())
        .env("RUST_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 unmappable"));
}

#[test]
fn count_tree_presets() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&hcfr(&["count-tree"], tmp.path()));
    assert!(stdout.contains("leduc\t464"));
    assert!(stdout.contains("kuhn\t8"));
    let stdout = ok(&hcfr(&["count-tree", "--game", "leduc_10"], tmp.path()));
    assert_eq!(stdout.trim(), "leduc_10\t31814");
}
