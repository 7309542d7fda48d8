use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;

use teamchess::analysis::wdl_z_test;
use teamchess::rl::IterationReport;
use teamchess::team::MatchStatistics;

use crate::analyze::AnalysisReport;
use crate::matches::{read_json, LadderSummary, MatchSummary};
use crate::output::{read_manifest, write_atomic, Manifest, MANIFEST};

pub const NOTHING: &str = "nothing to report";

fn find_manifests(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return;
    };
    let mut entries: Vec<PathBuf> = entries.flatten().map(|e| e.path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() && depth > 0 {
            find_manifests(&p, depth - 1, out);
        } else if p.file_name().is_some_and(|n| n == MANIFEST) {
            out.push(p);
        }
    }
}

fn wdl(s: &MatchStatistics) -> String {
    format!("{:.4} ± {:.4} ({} games)", s.wdl, s.sem, s.games())
}

#[derive(serde::Deserialize)]
struct TrainState {
    completed: u32,
    reports: Vec<IterationReport>,
}

/// Text digest of every run under `dir`; gaps are listed rather than
/// fatal.
pub fn build_report(dir: &Path) -> Result<String> {
    let mut manifests = Vec::new();
    find_manifests(dir, 3, &mut manifests);
    if manifests.is_empty() {
        return Ok(format!("{NOTHING}: no manifests under {}\n", dir.display()));
    }
    let mut s = String::new();
    let mut gaps = Vec::new();
    let mut team_matches: Vec<(String, MatchSummary)> = Vec::new();
    let mut ladders: Vec<(String, LadderSummary)> = Vec::new();
    let mut trainings: Vec<(String, bool, TrainState)> = Vec::new();
    let mut analyses: Vec<(String, AnalysisReport)> = Vec::new();

    for path in &manifests {
        let run_dir = path.parent().expect("manifest has a parent");
        let label = run_dir.strip_prefix(dir).unwrap_or(run_dir).display().to_string();
        let m: Manifest = match read_manifest(path) {
            Ok(m) => m,
            Err(e) => {
                gaps.push(format!("{label}: unreadable manifest ({e:#})"));
                continue;
            }
        };
        if !m.complete {
            gaps.push(format!("{label}: {} did not finish; showing what it wrote", m.command));
        }
        for a in &m.artifacts {
            if !run_dir.join(&a.path).exists() {
                gaps.push(format!("{label}: missing artifact {}", a.path));
            }
        }
        let mut load = |file: &str| -> Option<PathBuf> {
            let p = run_dir.join(file);
            if p.exists() {
                Some(p)
            } else {
                gaps.push(format!("{label}: {} has no {file}", m.command));
                None
            }
        };
        match m.command.as_str() {
            "run-match" => {
                if let Some(p) = load("stats.json") {
                    match read_json(&p) {
                        Ok(v) => team_matches.push((label.clone(), v)),
                        Err(e) => gaps.push(format!("{label}: {e:#}")),
                    }
                }
            }
            "ladder" => {
                if let Some(p) = load("ladder.json") {
                    match read_json(&p) {
                        Ok(v) => ladders.push((label.clone(), v)),
                        Err(e) => gaps.push(format!("{label}: {e:#}")),
                    }
                }
            }
            "train-manager" => {
                if let Some(p) = load("state.json") {
                    match read_json(&p) {
                        Ok(v) => trainings.push((label.clone(), m.complete, v)),
                        Err(e) => gaps.push(format!("{label}: {e:#}")),
                    }
                }
            }
            "analyze" => {
                if let Some(p) = load("analysis.json") {
                    match read_json(&p) {
                        Ok(v) => analyses.push((label.clone(), v)),
                        Err(e) => gaps.push(format!("{label}: {e:#}")),
                    }
                }
            }
            other => gaps.push(format!("{label}: unknown command {other}")),
        }
    }

    for (label, m) in &team_matches {
        writeln!(s, "== match {label}: vs {}", m.adversary)?;
        for (k, member) in m.members.iter().enumerate() {
            writeln!(s, "member {} solo  {:<60} {}", k + 1, member.name, wdl(&member.stats))?;
        }
        writeln!(s, "team ({})  {}", m.manager, wdl(&m.team.stats))?;
        writeln!(
            s,
            "synergy: {} (team {:.4} vs best member {:.4}, z = {:.3}, p = {:.4})",
            if m.synergy { "yes" } else { "no" },
            m.team.stats.wdl,
            m.best_member_wdl,
            m.z_vs_best_member.z,
            m.z_vs_best_member.p_two_sided
        )?;
        writeln!(s)?;
    }

    for (label, l) in &ladders {
        writeln!(s, "== expertise ladder {label}: vs {}", l.adversary)?;
        for (k, member) in l.members.iter().enumerate() {
            writeln!(s, "member {} solo {}", k + 1, wdl(&member.stats))?;
        }
        let best_member = l.members.iter().map(|m| m.stats.wdl).fold(f64::MIN, f64::max);
        writeln!(s, "{:<56} {:>10} {:>10} {:>10} {:>8}", "expert", "solo_wdl", "team_wdl", "team_sem", "synergy")?;
        for r in &l.rows {
            writeln!(
                s,
                "{:<56} {:>10.4} {:>10.4} {:>10.4} {:>8}",
                r.expert_name,
                r.expert_solo.wdl,
                r.team.wdl,
                r.team.sem,
                if r.team.wdl > best_member { "yes" } else { "no" }
            )?;
        }
        match (&l.trend, &l.trend_error) {
            (Some(t), _) => writeln!(
                s,
                "trend: slope {:.4} (se {:.4}, 95% CI [{:.4}, {:.4}], p = {:.4}, n = {}), intercept {:.4}",
                t.slope, t.slope_se, t.ci95[0], t.ci95[1], t.p_two_sided, t.n, t.intercept
            )?,
            (None, Some(e)) => writeln!(s, "trend: not available ({e})")?,
            (None, None) => writeln!(s, "trend: not available")?,
        }
        writeln!(s)?;
    }

    // managed teams compared across runs against the same adversary
    let rl: Vec<_> = team_matches.iter().filter(|(_, m)| m.manager_kind == "rl").collect();
    for (label, m) in &rl {
        let mut rivals: Vec<(String, &MatchStatistics)> = Vec::new();
        for (other, o) in &team_matches {
            if o.manager_kind == "sme" && o.adversary == m.adversary {
                rivals.push((format!("{other} {}", o.manager), &o.team.stats));
            }
        }
        for (other, l) in &ladders {
            if l.adversary == m.adversary {
                if let Some(best) = l.rows.iter().max_by(|a, b| a.team.wdl.total_cmp(&b.team.wdl)) {
                    rivals.push((format!("{other} best rung {}", best.expert_name), &best.team));
                }
            }
        }
        if let Some((name, best)) = rivals.into_iter().max_by(|a, b| a.1.wdl.total_cmp(&b.1.wdl)) {
            let z = wdl_z_test(&m.team.stats, best)?;
            writeln!(
                s,
                "== RL team {label} vs strongest expert-managed team ({name}): {:.4} vs {:.4}, z = {:.3}, p = {:.4}\n",
                m.team.stats.wdl, best.wdl, z.z, z.p_two_sided
            )?;
        }
    }

    for (label, complete, t) in &trainings {
        writeln!(
            s,
            "== manager training {label}: {} iterations{}",
            t.completed,
            if *complete { "" } else { " (unfinished)" }
        )?;
        writeln!(s, "iter  dataset  train_loss  heldout_acc  team_wdl  routing_acc")?;
        for r in &t.reports {
            writeln!(
                s,
                "{:>4}  {:>7}  {:>10.4}  {:>11.4}  {:>8.4}  {:>11}",
                r.iteration,
                r.dataset_size,
                r.train_loss,
                r.heldout_accuracy,
                r.team_wdl,
                r.ground_truth_accuracy.map_or("-".into(), |a| format!("{a:.4}"))
            )?;
        }
        writeln!(s)?;
    }

    for (label, a) in &analyses {
        writeln!(
            s,
            "== attention {label}: {} positions from {} games, checkpoint iteration {}",
            a.sampling.requested.min(a.sampling.phases.iter().map(|p| p.taken).sum()),
            a.source_games,
            a.checkpoint.iteration
        )?;
        writeln!(s, "{:<22} {:<10} {:>8} {:>8} {:>10} {:>8}", "grouping", "control", "A_w", "A_w(wt)", "A>B share", "skipped")?;
        for st in &a.studies {
            writeln!(
                s,
                "{:<22} {:<10} {:>8.4} {:>8.4} {:>10.4} {:>8}",
                st.grouping.as_str(),
                st.control.as_str(),
                st.a_w,
                st.a_w_weighted,
                st.paired_a_above_b,
                st.skipped
            )?;
        }
        writeln!(s)?;
    }

    if !gaps.is_empty() {
        writeln!(s, "== gaps")?;
        for g in &gaps {
            writeln!(s, "- {g}")?;
        }
    }
    Ok(s)
}

pub fn write_report(dir: &Path) -> Result<String> {
    let text = build_report(dir)?;
    if dir.is_dir() {
        write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    }
    Ok(text)
}
