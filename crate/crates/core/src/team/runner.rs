use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::game::{play_game, GamePlayers, GameRecord, GameRules};
use super::{Manager, ManagerFactory, MatchStatistics, TeamError};
use crate::chess::{Board, Color};
use crate::engine::{Engine, EngineError, EngineRef};
use crate::seed;

#[derive(Clone)]
pub struct TeamSpec {
    pub members: [EngineRef; 2],
    pub manager: Arc<dyn ManagerFactory>,
}

/// The side facing the adversary.
#[derive(Clone)]
pub enum Side {
    Team(TeamSpec),
    Solo(EngineRef),
}

impl Side {
    pub fn name(&self) -> String {
        match self {
            Side::Team(t) => format!(
                "team({} + {} / {})",
                t.members[0].name(),
                t.members[1].name(),
                t.manager.name()
            ),
            Side::Solo(e) => e.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub seed: u64,
    pub rules: GameRules,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// A match with a larger fraction of aborted games is an error.
    pub max_failure_fraction: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            seed: 0,
            rules: GameRules::default(),
            workers: 0,
            max_failure_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub stats: MatchStatistics,
    /// Sorted by (opening index, team color), white first.
    pub records: Vec<GameRecord>,
}

/// Seed of the game played from `opening_index` with the team as `color`.
pub fn game_seed(master: u64, opening_index: usize, color: Color) -> u64 {
    seed::derive(master, &[opening_index as u64, color.index() as u64])
}

enum Players {
    Team {
        members: [Box<dyn Engine>; 2],
        manager: Box<dyn Manager>,
    },
    Solo(Box<dyn Engine>),
}

struct Worker {
    players: Players,
    adversary: Box<dyn Engine>,
}

impl Worker {
    fn build(side: &Side, adversary: &EngineRef) -> Result<Worker, EngineError> {
        let players = match side {
            Side::Team(t) => Players::Team {
                members: [t.members[0].instantiate()?, t.members[1].instantiate()?],
                manager: t.manager.build()?,
            },
            Side::Solo(e) => Players::Solo(e.instantiate()?),
        };
        Ok(Worker {
            players,
            adversary: adversary.instantiate()?,
        })
    }

    fn new_game(&mut self) -> Result<(), EngineError> {
        match &mut self.players {
            Players::Team { members, .. } => {
                members[0].new_game()?;
                members[1].new_game()?;
            }
            Players::Solo(e) => e.new_game()?,
        }
        self.adversary.new_game()
    }
}

fn failed_record(
    opening: &Board,
    opening_index: usize,
    color: Color,
    game_seed: u64,
    err: EngineError,
) -> GameRecord {
    GameRecord {
        game_id: format!("{opening_index}-{color}"),
        opening_index,
        opening_fen: opening.to_fen(),
        team_color: color,
        seed: game_seed,
        moves: Vec::new(),
        disagreements: Vec::new(),
        outcome: None,
        error: Some(err.to_string()),
    }
}

/// Plays every opening from both colors and aggregates the results.
///
/// Games are independent work items; results are sorted by key before
/// folding, so the statistics do not depend on scheduling. A worker that
/// hits an engine failure rebuilds its engines before its next game.
pub fn run_match(
    side: &Side,
    adversary: &EngineRef,
    openings: &[Board],
    opts: &MatchOptions,
) -> Result<MatchResult, TeamError> {
    if openings.is_empty() {
        return Err(TeamError::NoOpenings);
    }
    let jobs: Vec<(usize, Color)> = (0..openings.len())
        .flat_map(|i| [(i, Color::White), (i, Color::Black)])
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| TeamError::Setup(e.to_string()))?;
    let mut records: Vec<GameRecord> = pool.install(|| {
        jobs.par_iter()
            .map_init(
                || None::<Worker>,
                |slot, &(i, color)| {
                    let gs = game_seed(opts.seed, i, color);
                    let opening = &openings[i];
                    if slot.is_none() {
                        match Worker::build(side, adversary) {
                            Ok(w) => *slot = Some(w),
                            Err(e) => return failed_record(opening, i, color, gs, e),
                        }
                    }
                    let worker = slot.as_mut().expect("worker built");
                    if let Err(e) = worker.new_game() {
                        *slot = None;
                        return failed_record(opening, i, color, gs, e);
                    }
                    let mut players = match &mut worker.players {
                        Players::Team { members, manager } => GamePlayers::Team {
                            members,
                            manager: manager.as_mut(),
                        },
                        Players::Solo(e) => GamePlayers::Solo(e.as_mut()),
                    };
                    let record = play_game(
                        &mut players,
                        worker.adversary.as_mut(),
                        opening,
                        i,
                        color,
                        gs,
                        &opts.rules,
                    );
                    if record.error.is_some() {
                        *slot = None;
                    }
                    record
                },
            )
            .collect()
    });
    records.sort_by_key(|r| (r.opening_index, r.team_color.index()));
    let failed: Vec<&GameRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if failed.len() as f64 > opts.max_failure_fraction * records.len() as f64 {
        return Err(TeamError::TooManyFailures {
            failed: failed.len(),
            total: records.len(),
            limit: opts.max_failure_fraction * 100.0,
            first: failed[0].error.clone().unwrap_or_default(),
        });
    }
    let outcomes: Vec<_> = records
        .iter()
        .filter_map(|r| r.outcome.map(|o| o.kind))
        .collect();
    let stats = MatchStatistics::from_outcomes(&outcomes, failed.len() as u32);
    Ok(MatchResult { stats, records })
}

/// A single engine against the adversary, scheduled exactly like a team.
pub fn solo_baseline(
    engine: &EngineRef,
    adversary: &EngineRef,
    openings: &[Board],
    opts: &MatchOptions,
) -> Result<MatchResult, TeamError> {
    run_match(&Side::Solo(engine.clone()), adversary, openings, opts)
}

/// Writes one JSON object per line.
pub fn write_game_records<W: Write>(out: &mut W, records: &[GameRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn summary_csv_header() -> &'static str {
    "team,adversary,games,wins,draws,losses,wdl,sem,failed_games"
}

pub fn summary_csv_row(team: &str, adversary: &str, s: &MatchStatistics) -> String {
    format!(
        "{},{},{},{},{},{},{:.6},{:.6},{}",
        csv_field(team),
        csv_field(adversary),
        s.games(),
        s.wins,
        s.draws,
        s.losses,
        s.wdl,
        s.sem,
        s.failed_games
    )
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
