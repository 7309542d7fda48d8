use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

use teamchess::chess::perft;
use teamchess::rl::load_checkpoint;
use teamchess::team::GameRecord;
use teamchess_cli::config::{self, ExperimentConfig, ManagerDef};
use teamchess_cli::output::{read_manifest, MANIFEST};
use teamchess_cli::{analyze, matches, report, selfcheck, train};

const SMOKE: &str = include_str!("../../../configs/smoke.json");

fn smoke_value() -> Value {
    let mut v: Value = serde_json::from_str(SMOKE).unwrap();
    v["output_dir"] = json!("runs");
    v
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn load(dir: &Path, v: &Value) -> ExperimentConfig {
    config::load(&write_config(dir, v)).unwrap()
}

fn parse_err(v: &Value) -> String {
    let dir = tempfile::tempdir().unwrap();
    format!("{:#}", config::load(&write_config(dir.path(), v)).unwrap_err())
}

fn records(path: &Path) -> Vec<GameRecord> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_teamchess"))
}

#[test]
fn bundled_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["smoke.json", "rigged.json", "ladder.json"] {
        config::load(&root.join(name)).unwrap_or_else(|e| panic!("{name}: {e:#}"));
    }
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let mut v = smoke_value();
    v["train"]["arch"]["depth"] = json!(3);
    let e = parse_err(&v);
    assert!(e.contains("train.arch.depth"), "{e}");

    let mut v = smoke_value();
    v["colour"] = json!("white");
    assert!(parse_err(&v).contains("colour"));

    let mut v = smoke_value();
    v["manager"]["expert_depth"] = json!(2);
    assert!(parse_err(&v).contains("expert_depth"));
}

#[test]
fn missing_keys_are_rejected_with_their_path() {
    let mut v = smoke_value();
    v["train"]["arch"].as_object_mut().unwrap().remove("vocab");
    let e = parse_err(&v);
    assert!(e.contains("train.arch.vocab"), "{e}");

    let mut v = smoke_value();
    v["analysis"].as_object_mut().unwrap().remove("checkpoint");
    let e = parse_err(&v);
    assert!(e.contains("analysis.checkpoint"), "{e}");

    let mut v = smoke_value();
    v.as_object_mut().unwrap().remove("workers");
    assert!(parse_err(&v).contains("workers"));
}

#[test]
fn referenced_files_and_engines_must_exist() {
    let mut v = smoke_value();
    v["openings"]["file"] = json!("no-such-openings.txt");
    assert!(parse_err(&v).contains("no-such-openings.txt"));

    let mut v = smoke_value();
    v["manager"] = json!({"kind": "rl", "checkpoint": "missing.ckpt"});
    assert!(parse_err(&v).contains("missing.ckpt"));

    let mut v = smoke_value();
    v["adversary"] = json!("nobody");
    assert!(parse_err(&v).contains("unknown engine `nobody`"));

    let mut v = smoke_value();
    v["engines"]["lstyle"] = json!("builtin:alphabeta?depth=0");
    assert!(parse_err(&v).contains("lstyle"));
}

#[test]
fn constant_manager_plays_exactly_the_chosen_member() {
    let dir = tempfile::tempdir().unwrap();
    for member in [1u8, 2] {
        let mut cfg = load(dir.path(), &smoke_value());
        cfg.manager = ManagerDef::Constant { member };
        let (summary, out) = matches::run_team_match(&cfg).unwrap();
        let team = records(&out.path("team_games.jsonl"));
        let solo = records(&out.path(&format!("member{member}_games.jsonl")));
        assert_eq!(team.len(), solo.len());
        for (t, s) in team.iter().zip(&solo) {
            assert_eq!(t.moves, s.moves, "game {}", t.game_id);
            assert_eq!(t.outcome, s.outcome);
        }
        assert_eq!(
            summary.team.stats.per_game_scores,
            summary.members[member as usize - 1].stats.per_game_scores
        );
    }
}

#[test]
fn identical_config_gives_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &smoke_value());
    let mut digests = Vec::new();
    for out in ["a", "b"] {
        let status = bin()
            .args(["run-match", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let cfg = config::load(&path).unwrap();
        let m = dir
            .path()
            .join(out)
            .join(&cfg.hash()[..12])
            .join("run-match")
            .join(MANIFEST);
        let m = read_manifest(&m).unwrap();
        assert!(m.complete);
        digests.push((m.content_hash(), m.artifacts));
    }
    assert_eq!(digests[0], digests[1]);
    assert!(digests[0].1.iter().any(|a| a.path == "team_games.jsonl"));
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let v = {
        let mut v = smoke_value();
        v["engines"]["random"] = json!("builtin:random?seed=9");
        v["members"] = json!(["lstyle", "random"]);
        v
    };
    let cfg = load(dir.path(), &v);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(cfg.hash(), other.hash());
    let mut workers = cfg.clone();
    workers.workers = 3;
    assert_eq!(cfg.hash(), workers.hash());
}

#[test]
fn ladder_writes_one_row_per_rung() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), &smoke_value());
    let mut seen = 0;
    let (summary, out) = matches::run_ladder(&cfg, |_| seen += 1).unwrap();
    assert_eq!(seen, 4);
    let csv = std::fs::read_to_string(out.path("ladder.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert_eq!(summary.rows.len(), 4);
    let t = summary.trend.expect("four rungs give a trend");
    assert_eq!(t.n, 4);
    assert!(t.ci95[0] <= t.slope && t.slope <= t.ci95[1]);
}

#[test]
fn smoke_training_emits_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), &smoke_value());
    assert_eq!(cfg.train.as_ref().unwrap().train_openings.count, 20);
    let mut reports = 0;
    let (outcome, out) = train::train_manager(&cfg, None, |_| reports += 1).unwrap();
    assert_eq!(reports, 1);
    assert!(outcome.finished);
    let (params, meta) = load_checkpoint(&out.path(train::CHECKPOINT)).unwrap();
    assert_eq!(meta.iteration, 1);
    assert_eq!(params, outcome.state.params);
    assert!(out.path("checkpoints/iter-001.ckpt").exists());
    let m = read_manifest(&out.path(MANIFEST)).unwrap();
    assert!(m.complete);
    for a in &m.artifacts {
        assert!(out.path(&a.path).exists(), "{}", a.path);
    }

    // the trained manager drives a match
    let status = bin()
        .args(["run-match", "--manager", "rl", "--config"])
        .arg(dir.path().join("config.json"))
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

#[test]
fn interrupted_training_resumes_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke_value();
    v["train"]["iterations"] = json!(2);
    v["train"]["train_openings"]["count"] = json!(8);
    let path = write_config(dir.path(), &v);

    let mut straight = config::load(&path).unwrap();
    straight.output_dir = dir.path().join("straight");
    let (a, a_out) = train::train_manager(&straight, None, |_| {}).unwrap();

    let mut split = config::load(&path).unwrap();
    split.output_dir = dir.path().join("split");
    let (first, _) = train::train_manager(&split, Some(1), |_| {}).unwrap();
    assert!(!first.finished);
    assert_eq!(first.state.completed, 1);
    let (b, b_out) = train::train_manager(&split, None, |_| {}).unwrap();
    assert_eq!(b.resumed_from, Some(1));
    assert!(b.finished);

    assert_eq!(a.checkpoint_sha256, b.checkpoint_sha256);
    let ma = read_manifest(&a_out.path(MANIFEST)).unwrap();
    let mb = read_manifest(&b_out.path(MANIFEST)).unwrap();
    assert_eq!(ma.content_hash(), mb.content_hash());
}

#[test]
fn members_that_never_disagree_are_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke_value();
    v["members"] = json!(["lstyle", "lstyle"]);
    let cfg = load(dir.path(), &v);
    let e = format!("{:#}", train::train_manager(&cfg, None, |_| {}).unwrap_err());
    assert!(e.contains("no disagreements") && e.contains("always agree"), "{e}");
}

#[test]
fn analysis_report_has_every_study_and_documented_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), &smoke_value());
    train::train_manager(&cfg, None, |_| {}).unwrap();
    let (rep, out) = analyze::analyze(&cfg, None).unwrap();
    assert_eq!(rep.studies.len(), 9);
    let untrained: Vec<_> = rep
        .studies
        .iter()
        .filter(|s| s.control.as_str() == "untrained")
        .collect();
    assert_eq!(untrained.len(), 3);
    assert!(untrained.iter().any(|s| s.grouping.as_str() == "piece-vs-empty"));

    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path("analysis.json")).unwrap()).unwrap();
    let keys = |v: &Value| -> Vec<String> {
        let mut k: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(v["schema"], analyze::SCHEMA);
    assert_eq!(keys(&v), ["checkpoint", "sampling", "schema", "source_games", "studies"]);
    assert_eq!(keys(&v["checkpoint"]), ["arch", "iteration", "path", "seed", "sha256"]);
    assert_eq!(
        keys(&v["studies"][0]),
        [
            "a_w",
            "a_w_weighted",
            "box_a",
            "box_b",
            "control",
            "grouping",
            "paired_a_above_b",
            "positions",
            "samples_file",
            "skipped"
        ]
    );
    assert_eq!(v["checkpoint"]["path"], format!("{}/train-manager/manager.ckpt", &cfg.hash()[..12]));
    for s in v["studies"].as_array().unwrap() {
        let a = s["a_w"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&a));
        assert!(out.path(s["samples_file"].as_str().unwrap()).exists());
    }

    let q = std::fs::read_to_string(out.path("quantiles.csv")).unwrap();
    assert_eq!(q.lines().count(), 1 + 9 * 2);
    assert!(q.starts_with("grouping,control,group,"));
    let text = report::build_report(&cfg.output_dir).unwrap();
    assert!(text.contains("piece-vs-empty         untrained"), "{text}");
}

#[test]
fn mismatched_checkpoint_is_a_version_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), &smoke_value());
    let (_, out) = train::train_manager(&cfg, None, |_| {}).unwrap();
    let ckpt = out.path(train::CHECKPOINT);
    let side = PathBuf::from(format!("{}.json", ckpt.display()));
    let mut meta: Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    meta["arch"]["model_dim"] = json!(32);
    std::fs::write(&side, meta.to_string()).unwrap();
    let e = format!("{:#}", analyze::analyze(&cfg, None).unwrap_err());
    assert!(e.contains("does not match its architecture"), "{e}");

    meta["arch"]["model_dim"] = json!(16);
    meta["format_version"] = json!(99);
    std::fs::write(&side, meta.to_string()).unwrap();
    let e = format!("{:#}", analyze::analyze(&cfg, Some(&ckpt)).unwrap_err());
    assert!(e.contains("unsupported checkpoint version 99"), "{e}");
}

#[test]
fn empty_directory_has_nothing_to_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = report::write_report(dir.path()).unwrap();
    assert!(text.starts_with(report::NOTHING), "{text}");
    let out = bin().arg("report").arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("nothing to report"));
}

#[test]
fn partial_runs_are_reported_with_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), &smoke_value());
    let (_, done) = matches::run_team_match(&cfg).unwrap();
    let mut other = cfg.clone();
    other.seed = 99;
    let (_, broken) = matches::run_team_match(&other).unwrap();
    std::fs::remove_file(broken.path("stats.json")).unwrap();
    let mpath = broken.path(MANIFEST);
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&mpath).unwrap()).unwrap();
    m["complete"] = json!(false);
    std::fs::write(&mpath, m.to_string()).unwrap();

    let text = report::write_report(&cfg.output_dir).unwrap();
    let done_label = done.dir.strip_prefix(&cfg.output_dir).unwrap().display().to_string();
    let broken_label = broken.dir.strip_prefix(&cfg.output_dir).unwrap().display().to_string();
    assert!(text.contains(&format!("== match {done_label}")), "{text}");
    assert!(text.contains("synergy: "));
    assert!(text.contains("== gaps"));
    assert!(text.contains(&format!("{broken_label}: run-match did not finish")));
    assert!(text.contains(&format!("{broken_label}: missing artifact stats.json")));
    assert!(cfg.output_dir.join("report.txt").exists());
}

#[test]
fn corrupted_move_counts_fail_perft_with_position_and_depth() {
    let checks = selfcheck::perft_checks(|b, d| perft(b, d) + u64::from(d == 3));
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    assert_eq!(failed.len(), 5);
    for c in &failed {
        let line = c.to_string();
        assert!(line.starts_with("FAIL perft ") && line.contains("depth 3"), "{line}");
    }
    assert!(failed[0].to_string().contains("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq"));
    assert!(selfcheck::perft_checks(perft).iter().all(|c| c.passed));
    assert!(selfcheck::statistics_checks().iter().all(|c| c.passed));
}

#[test]
fn exit_codes() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["perft", "--depth", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "400");

    let dir = tempfile::tempdir().unwrap();
    let mut v = smoke_value();
    v["workers"] = json!(1);
    v["manager"] = json!({"kind": "random"});
    let out = bin()
        .args(["run-match", "--manager", "constant:3", "--config"])
        .arg(write_config(dir.path(), &v))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let script = dir.path().join("dead-engine.sh");
    std::fs::write(&script, "#!/bin/sh\necho nonsense\n").unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    v["engines"]["dead"] = json!({
        "path": script,
        "options": {},
        "limits": {"depth": 1, "nodes": null, "movetime": null},
        "timeouts": {"handshake_ms": 500, "grace_ms": 100, "search_ms": 500}
    });
    v["adversary"] = json!("dead");
    v["openings"]["count"] = json!(2);
    let out = bin()
        .args(["run-match", "--config"])
        .arg(write_config(dir.path(), &v))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("games failed"));
}
