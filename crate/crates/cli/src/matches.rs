use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use teamchess::analysis::{trend_regression, wdl_z_test, RegressionResult, ZTest};
use teamchess::rl::{load_checkpoint, RlManager};
use teamchess::sme::{ladder_csv, run_expertise_ladder, LadderRow, SmeConfig};
use teamchess::team::{
    run_match, solo_baseline, summary_csv_header, summary_csv_row, write_game_records,
    ConstantManager, GameRecord, ManagerFactory, MatchStatistics, MemberId, RandomManager, Side,
    TeamSpec,
};

use crate::config::{load_openings, ExperimentConfig, ManagerDef};
use crate::output::Outputs;

pub fn sme_config(cfg: &ExperimentConfig, expert: &str, tie_epsilon: Option<i64>) -> Result<SmeConfig> {
    let mut sme = SmeConfig::new(cfg.engine(expert)?);
    if let Some(eps) = tie_epsilon {
        if eps < 0 {
            bail!("tie_epsilon must be non-negative");
        }
        sme.tie_epsilon = eps;
    }
    Ok(sme)
}

pub fn build_manager(cfg: &ExperimentConfig) -> Result<Arc<dyn ManagerFactory>> {
    Ok(match &cfg.manager {
        ManagerDef::Sme {
            expert,
            tie_epsilon,
        } => Arc::new(sme_config(cfg, expert, *tie_epsilon)?),
        ManagerDef::Rl { checkpoint } => {
            let (params, _) = load_checkpoint(checkpoint)
                .with_context(|| format!("loading {}", checkpoint.display()))?;
            let label = checkpoint
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Arc::new(RlManager::new(Arc::new(params), label))
        }
        ManagerDef::Constant { member } => Arc::new(ConstantManager(
            MemberId::new(*member).context("member must be 1 or 2")?,
        )),
        ManagerDef::Random => Arc::new(RandomManager),
    })
}

fn jsonl(records: &[GameRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_game_records(&mut buf, records)?;
    Ok(buf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedStats {
    pub name: String,
    pub stats: MatchStatistics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchSummary {
    pub adversary: String,
    pub manager: String,
    pub manager_kind: String,
    pub members: Vec<NamedStats>,
    pub team: NamedStats,
    pub best_member_wdl: f64,
    /// Team WDL above the better member playing alone.
    pub synergy: bool,
    pub z_vs_best_member: ZTest,
}

fn manager_kind(m: &ManagerDef) -> &'static str {
    match m {
        ManagerDef::Sme { .. } => "sme",
        ManagerDef::Rl { .. } => "rl",
        ManagerDef::Constant { .. } => "constant",
        ManagerDef::Random => "random",
    }
}

fn member_solos(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<NamedStats>> {
    let openings = load_openings(&cfg.openings)?;
    let adversary = cfg.engine(&cfg.adversary)?;
    let mut v = Vec::new();
    for (k, member) in cfg.member_refs()?.iter().enumerate() {
        let r = solo_baseline(member, &adversary, &openings, &cfg.match_options())?;
        out.write(&format!("member{}_games.jsonl", k + 1), &jsonl(&r.records)?)?;
        v.push(NamedStats {
            name: member.name(),
            stats: r.stats,
        });
    }
    Ok(v)
}

/// Both members alone and the managed team against the adversary.
pub fn run_team_match(cfg: &ExperimentConfig) -> Result<(MatchSummary, Outputs)> {
    let mut out = Outputs::create(cfg, "run-match")?;
    out.flush(false)?;
    let openings = load_openings(&cfg.openings)?;
    let adversary = cfg.engine(&cfg.adversary)?;
    let members = member_solos(cfg, &mut out)?;
    let side = Side::Team(TeamSpec {
        members: cfg.member_refs()?,
        manager: build_manager(cfg)?,
    });
    let team = run_match(&side, &adversary, &openings, &cfg.match_options())?;
    out.write("team_games.jsonl", &jsonl(&team.records)?)?;

    let best = members
        .iter()
        .max_by(|a, b| a.stats.wdl.total_cmp(&b.stats.wdl))
        .expect("two members");
    let summary = MatchSummary {
        adversary: adversary.name(),
        manager: match &side {
            Side::Team(t) => t.manager.name(),
            Side::Solo(_) => unreachable!(),
        },
        manager_kind: manager_kind(&cfg.manager).into(),
        best_member_wdl: best.stats.wdl,
        synergy: team.stats.wdl > best.stats.wdl,
        z_vs_best_member: wdl_z_test(&team.stats, &best.stats)?,
        members: members.clone(),
        team: NamedStats {
            name: side.name(),
            stats: team.stats,
        },
    };
    let mut csv = format!("{}\n", summary_csv_header());
    for m in &summary.members {
        csv.push_str(&summary_csv_row(&m.name, &summary.adversary, &m.stats));
        csv.push('\n');
    }
    csv.push_str(&summary_csv_row(&summary.team.name, &summary.adversary, &summary.team.stats));
    csv.push('\n');
    out.write("summary.csv", csv.as_bytes())?;
    out.write_json("stats.json", &summary)?;
    out.flush(true)?;
    Ok((summary, out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderSummary {
    pub adversary: String,
    pub members: Vec<NamedStats>,
    pub rows: Vec<LadderRow>,
    /// Team WDL regressed on expert solo WDL; `None` below three rungs or
    /// when every expert scores the same.
    pub trend: Option<RegressionResult>,
    pub trend_error: Option<String>,
}

pub fn run_ladder(cfg: &ExperimentConfig, mut progress: impl FnMut(&LadderRow)) -> Result<(LadderSummary, Outputs)> {
    let Some(rungs) = &cfg.ladder else {
        bail!("config has no ladder");
    };
    let mut out = Outputs::create(cfg, "ladder")?;
    out.flush(false)?;
    let openings = load_openings(&cfg.openings)?;
    let adversary = cfg.engine(&cfg.adversary)?;
    let members = member_solos(cfg, &mut out)?;
    let ladder = rungs
        .iter()
        .map(|r| sme_config(cfg, &r.expert, r.tie_epsilon))
        .collect::<Result<Vec<_>>>()?;
    let rows = run_expertise_ladder(
        &ladder,
        &cfg.member_refs()?,
        &adversary,
        &openings,
        &cfg.match_options(),
        |r| progress(r),
    )?;
    let x: Vec<f64> = rows.iter().map(|r| r.expert_solo.wdl).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.team.wdl).collect();
    let (trend, trend_error) = match trend_regression(&x, &y) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = LadderSummary {
        adversary: adversary.name(),
        members,
        rows,
        trend,
        trend_error,
    };
    out.write("ladder.csv", ladder_csv(&summary.rows).as_bytes())?;
    out.write_json("ladder.json", &summary)?;
    out.flush(true)?;
    Ok((summary, out))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
