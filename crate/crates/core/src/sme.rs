//! Subject-matter-expert manager: an engine scores both recommended moves
//! with its own evaluation and the higher score wins.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chess::{Board, Move};
use crate::engine::{Engine, EngineError, EngineRef};
use crate::team::{
    run_match, solo_baseline, Decision, DecisionContext, Manager, ManagerFactory, MatchOptions,
    MatchStatistics, MemberId, Side, TeamError, TeamSpec,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SmeConfig {
    /// Built-ins evaluate at their own depth; UCI references carry limits.
    pub expert: EngineRef,
    /// Score gaps at or below this are ties (centipawns, >= 0).
    pub tie_epsilon: i64,
}

impl SmeConfig {
    /// Tie threshold 0 for built-ins (exact arithmetic), 5 for UCI engines.
    pub fn new(expert: EngineRef) -> SmeConfig {
        let tie_epsilon = if expert.is_deterministic() { 0 } else { 5 };
        SmeConfig {
            expert,
            tie_epsilon,
        }
    }
}

/// Argmax over two mover-perspective scores; gaps within `tie_epsilon` are
/// reported as indifference.
pub fn choose(v1: i64, v2: i64, tie_epsilon: i64) -> Decision {
    if (v1 - v2).abs() <= tie_epsilon {
        Decision::Indifferent
    } else if v1 > v2 {
        Decision::Member(MemberId::ONE)
    } else {
        Decision::Member(MemberId::TWO)
    }
}

/// Both moves scored by `expert`, mover's perspective.
pub fn sme_scores(
    expert: &mut dyn Engine,
    board: &Board,
    a1: Move,
    a2: Move,
) -> Result<(i64, i64), EngineError> {
    Ok((expert.score_move(board, a1)?, expert.score_move(board, a2)?))
}

/// Expert decision with ties resolved by a fair coin from `rng`.
pub fn sme_decide<R: Rng>(
    expert: &mut dyn Engine,
    tie_epsilon: i64,
    board: &Board,
    a1: Move,
    a2: Move,
    rng: &mut R,
) -> Result<MemberId, EngineError> {
    let (v1, v2) = sme_scores(expert, board, a1, a2)?;
    Ok(match choose(v1, v2, tie_epsilon) {
        Decision::Member(k) => k,
        Decision::Indifferent => {
            if rng.gen_bool(0.5) {
                MemberId::ONE
            } else {
                MemberId::TWO
            }
        }
    })
}

pub struct SmeManager {
    expert: Box<dyn Engine>,
    tie_epsilon: i64,
}

impl SmeManager {
    pub fn new(expert: Box<dyn Engine>, tie_epsilon: i64) -> SmeManager {
        assert!(tie_epsilon >= 0, "tie_epsilon must be non-negative");
        SmeManager {
            expert,
            tie_epsilon,
        }
    }
}

impl Manager for SmeManager {
    fn name(&self) -> String {
        format!("sme({})", self.expert.name())
    }

    fn decide(&mut self, ctx: &mut DecisionContext<'_>) -> Result<Decision, EngineError> {
        let (a1, a2) = ctx
            .recommendations
            .ok_or_else(|| EngineError::Protocol("expert manager needs both moves".into()))?;
        let (v1, v2) = sme_scores(self.expert.as_mut(), ctx.state, a1, a2)?;
        Ok(choose(v1, v2, self.tie_epsilon))
    }
}

impl ManagerFactory for SmeConfig {
    fn name(&self) -> String {
        format!("sme({})", self.expert.name())
    }

    fn build(&self) -> Result<Box<dyn Manager>, EngineError> {
        Ok(Box::new(SmeManager::new(
            self.expert.instantiate()?,
            self.tie_epsilon,
        )))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRow {
    pub expert_name: String,
    pub tie_epsilon: i64,
    pub expert_solo: MatchStatistics,
    pub team: MatchStatistics,
}

/// For each expert: its solo WDL against the adversary and the WDL of the
/// team it manages, on the same openings and seeds.
pub fn run_expertise_ladder(
    ladder: &[SmeConfig],
    members: &[EngineRef; 2],
    adversary: &EngineRef,
    openings: &[Board],
    opts: &MatchOptions,
    mut progress: impl FnMut(&LadderRow),
) -> Result<Vec<LadderRow>, TeamError> {
    if ladder.is_empty() {
        return Err(TeamError::Setup("expertise ladder is empty".into()));
    }
    let mut rows = Vec::with_capacity(ladder.len());
    for cfg in ladder {
        let solo = solo_baseline(&cfg.expert, adversary, openings, opts)?;
        let team = run_match(
            &Side::Team(TeamSpec {
                members: members.clone(),
                manager: Arc::new(cfg.clone()),
            }),
            adversary,
            openings,
            opts,
        )?;
        let row = LadderRow {
            expert_name: cfg.expert.name(),
            tie_epsilon: cfg.tie_epsilon,
            expert_solo: solo.stats,
            team: team.stats,
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

pub const LADDER_CSV_HEADER: &str =
    "expert_name,expert_solo_wdl,expert_solo_sem,team_wdl,team_sem,games";

pub fn ladder_csv(rows: &[LadderRow]) -> String {
    let mut s = String::from(LADDER_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{}\n",
            crate::team::csv_field(&r.expert_name),
            r.expert_solo.wdl,
            r.expert_solo.sem,
            r.team.wdl,
            r.team.sem,
            r.team.games()
        ));
    }
    s
}
