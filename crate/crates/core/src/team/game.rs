use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Chooser, Decision, DecisionContext, DisagreementRecord, Manager, MemberId};
use crate::chess::{game_result, Board, Color, Move, Outcome};
use crate::engine::{checked_best_move, Engine, EngineError};
use crate::seed;

/// The random streams of one game. Each consumer has its own stream, so a
/// manager that never draws cannot shift the adversary's noise.
pub struct GameSeeds {
    pub game_seed: u64,
    tiebreak: ChaCha8Rng,
    manager: ChaCha8Rng,
    noise: ChaCha8Rng,
}

impl GameSeeds {
    pub fn new(game_seed: u64) -> GameSeeds {
        let stream = |k| ChaCha8Rng::seed_from_u64(seed::derive(game_seed, &[k]));
        GameSeeds {
            game_seed,
            tiebreak: stream(1),
            manager: stream(2),
            noise: stream(3),
        }
    }
}

/// Whoever plays against the adversary: a managed team or a single engine.
pub enum GamePlayers<'a> {
    Team {
        members: &'a mut [Box<dyn Engine>; 2],
        manager: &'a mut dyn Manager,
    },
    Solo(&'a mut dyn Engine),
}

/// A game in progress. `history` holds the hash of every position since
/// the opening, current one included.
#[derive(Debug, Clone)]
pub struct PlayState {
    pub board: Board,
    pub history: Vec<u64>,
    pub moves: Vec<Move>,
}

impl PlayState {
    pub fn new(opening: &Board) -> PlayState {
        PlayState {
            board: opening.clone(),
            history: vec![opening.hash()],
            moves: Vec::new(),
        }
    }

    pub fn ply(&self) -> u32 {
        self.moves.len() as u32
    }

    /// Plays a move already known to be legal.
    pub fn push(&mut self, mv: Move) -> Result<(), EngineError> {
        self.board = self.board.play_checked(mv)?;
        self.history.push(self.board.hash());
        self.moves.push(mv);
        Ok(())
    }

    pub fn result(&self, ply_cap: u32) -> Option<Outcome> {
        game_result(&self.board, &self.history, ply_cap)
    }
}

/// One team move. The manager is consulted only when the members disagree.
pub fn team_move(
    members: &mut [Box<dyn Engine>; 2],
    manager: &mut dyn Manager,
    board: &Board,
    ply: u32,
    seeds: &mut GameSeeds,
    game_id: &str,
) -> Result<(Move, Option<DisagreementRecord>), EngineError> {
    let a1 = checked_best_move(members[0].as_mut(), board, ply)?;
    let a2 = checked_best_move(members[1].as_mut(), board, ply)?;
    if a1 == a2 {
        return Ok((a1, None));
    }
    let decision = manager.decide(&mut DecisionContext {
        state: board,
        recommendations: Some((a1, a2)),
        ply,
        rng: &mut seeds.manager,
    })?;
    let (chosen, chooser) = match decision {
        Decision::Member(k) => (k, Chooser::Manager),
        Decision::Indifferent => {
            let k = if seeds.tiebreak.gen_bool(0.5) {
                MemberId::ONE
            } else {
                MemberId::TWO
            };
            (k, Chooser::RandomTiebreak)
        }
    };
    let mv = if chosen == MemberId::ONE { a1 } else { a2 };
    Ok((
        mv,
        Some(DisagreementRecord {
            game_id: game_id.to_string(),
            ply,
            fen: board.to_fen(),
            a1,
            a2,
            chosen,
            chooser,
        }),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameRules {
    pub ply_cap: u32,
    /// Probability that the adversary plays a uniformly random legal move
    /// instead of its own choice.
    pub adversary_epsilon: f64,
}

impl Default for GameRules {
    fn default() -> Self {
        GameRules {
            ply_cap: crate::chess::DEFAULT_PLY_CAP,
            adversary_epsilon: 0.0,
        }
    }
}

/// Continues `state` to the end of the game. Returns the outcome from the
/// team's perspective; disagreements are appended as they happen.
pub fn play_from(
    players: &mut GamePlayers<'_>,
    adversary: &mut dyn Engine,
    state: &mut PlayState,
    team_color: Color,
    seeds: &mut GameSeeds,
    rules: &GameRules,
    game_id: &str,
    disagreements: &mut Vec<DisagreementRecord>,
) -> Result<Outcome, EngineError> {
    loop {
        if let Some(outcome) = state.result(rules.ply_cap) {
            return Ok(outcome.relative_to(team_color));
        }
        let ply = state.ply();
        let mv = if state.board.side_to_move() == team_color {
            match players {
                GamePlayers::Team { members, manager } => {
                    let (mv, record) =
                        team_move(members, *manager, &state.board, ply, seeds, game_id)?;
                    disagreements.extend(record);
                    mv
                }
                GamePlayers::Solo(engine) => checked_best_move(*engine, &state.board, ply)?,
            }
        } else {
            // one draw per adversary move, whatever epsilon is
            let roll: f64 = seeds.noise.gen();
            if roll < rules.adversary_epsilon {
                let moves = {
                    let mut m = state.board.legal_moves();
                    m.sort_unstable();
                    m
                };
                moves[seeds.noise.gen_range(0..moves.len())]
            } else {
                checked_best_move(adversary, &state.board, ply)?
            }
        };
        state.push(mv)?;
    }
}

/// A finished (or aborted) game, one JSON line per game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub opening_index: usize,
    pub opening_fen: String,
    pub team_color: Color,
    pub seed: u64,
    pub moves: Vec<Move>,
    pub disagreements: Vec<DisagreementRecord>,
    /// Team perspective; absent when the game aborted.
    pub outcome: Option<Outcome>,
    pub error: Option<String>,
}

impl GameRecord {
    pub fn score(&self) -> Option<f64> {
        self.outcome.map(|o| o.kind.score())
    }

    pub fn pgn(&self) -> Result<String, crate::chess::ChessError> {
        let opening = Board::from_fen(&self.opening_fen)?;
        let result = self.outcome.map_or("*", |o| o.pgn_result());
        crate::chess::to_pgn(&opening, &self.moves, result)
    }
}

/// Plays one game from `opening`. Engine failures end the game with an
/// error-tagged record rather than an `Err`.
#[allow(clippy::too_many_arguments)]
pub fn play_game(
    players: &mut GamePlayers<'_>,
    adversary: &mut dyn Engine,
    opening: &Board,
    opening_index: usize,
    team_color: Color,
    game_seed: u64,
    rules: &GameRules,
) -> GameRecord {
    let game_id = format!("{opening_index}-{team_color}");
    let mut seeds = GameSeeds::new(game_seed);
    let mut state = PlayState::new(opening);
    let mut disagreements = Vec::new();
    let result = play_from(
        players,
        adversary,
        &mut state,
        team_color,
        &mut seeds,
        rules,
        &game_id,
        &mut disagreements,
    );
    let (outcome, error) = match result {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e.to_string())),
    };
    GameRecord {
        game_id,
        opening_index,
        opening_fen: opening.to_fen(),
        team_color,
        seed: game_seed,
        moves: state.moves,
        disagreements,
        outcome,
        error,
    }
}
