use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::{Board, Color, Move};
use crate::engine::{Engine, EngineError, EngineRef};
use crate::seed;
use crate::team::{
    play_from, DisagreementRecord, GamePlayers, GameRecord, GameRules, GameSeeds, Manager,
    ManagerFactory, MemberId, PlayState,
};

/// Builds the engines of one rollout worker.
pub trait TeamEngines: Sync {
    fn members(&self) -> Result<[Box<dyn Engine>; 2], EngineError>;
    fn adversary(&self) -> Result<Box<dyn Engine>, EngineError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineRefs {
    pub members: [EngineRef; 2],
    pub adversary: EngineRef,
}

impl TeamEngines for EngineRefs {
    fn members(&self) -> Result<[Box<dyn Engine>; 2], EngineError> {
        Ok([self.members[0].instantiate()?, self.members[1].instantiate()?])
    }

    fn adversary(&self) -> Result<Box<dyn Engine>, EngineError> {
        self.adversary.instantiate()
    }
}

/// A disagreement together with the game prefix that led to it, so the
/// position can be replayed with its repetition history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementState {
    pub game_id: String,
    pub opening_index: usize,
    pub opening_fen: String,
    pub team_color: Color,
    pub prefix: Vec<Move>,
    pub a1: Move,
    pub a2: Move,
}

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("invalid disagreement {game_id} ply {ply}: {message}")]
    Invalid {
        game_id: String,
        ply: usize,
        message: String,
    },
    #[error("branch {branch}: only {survived} of {n} rollouts finished; last error: {last}")]
    TooFewRollouts {
        branch: MemberId,
        survived: usize,
        n: usize,
        last: String,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl DisagreementState {
    pub fn from_record(game: &GameRecord, d: &DisagreementRecord) -> DisagreementState {
        DisagreementState {
            game_id: game.game_id.clone(),
            opening_index: game.opening_index,
            opening_fen: game.opening_fen.clone(),
            team_color: game.team_color,
            prefix: game.moves[..d.ply as usize].to_vec(),
            a1: d.a1,
            a2: d.a2,
        }
    }

    fn invalid(&self, message: impl Into<String>) -> RolloutError {
        RolloutError::Invalid {
            game_id: self.game_id.clone(),
            ply: self.prefix.len(),
            message: message.into(),
        }
    }

    /// The game replayed up to the disagreement.
    pub fn play_state(&self) -> Result<PlayState, RolloutError> {
        let opening = Board::from_fen(&self.opening_fen).map_err(|e| self.invalid(e.to_string()))?;
        let mut state = PlayState::new(&opening);
        for &mv in &self.prefix {
            if !state.board.legal_moves().contains(&mv) {
                return Err(self.invalid(format!("prefix move {mv} is illegal")));
            }
            state.push(mv)?;
        }
        Ok(state)
    }

    pub fn board(&self) -> Result<Board, RolloutError> {
        self.play_state().map(|s| s.board)
    }

    fn checked_state(&self) -> Result<PlayState, RolloutError> {
        let state = self.play_state()?;
        if state.board.side_to_move() != self.team_color {
            return Err(self.invalid("team is not to move"));
        }
        if self.a1 == self.a2 {
            return Err(self.invalid("recommendations are identical"));
        }
        let legal = state.board.legal_moves();
        if legal.is_empty() {
            return Err(self.invalid("position is terminal"));
        }
        for mv in [self.a1, self.a2] {
            if !legal.contains(&mv) {
                return Err(self.invalid(format!("recommendation {mv} is illegal")));
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutEstimate {
    pub q1: f64,
    pub q2: f64,
    pub n_rollouts: usize,
    /// Rollouts that finished on each branch; failed ones are discarded.
    pub completed: [usize; 2],
}

impl RolloutEstimate {
    /// Better branch, or `None` on a tie.
    pub fn preferred(&self) -> Option<MemberId> {
        if self.q1 > self.q2 {
            Some(MemberId::ONE)
        } else if self.q2 > self.q1 {
            Some(MemberId::TWO)
        } else {
            None
        }
    }

    pub fn advantage(&self) -> f64 {
        (self.q1 - self.q2).abs()
    }
}

struct Rig {
    members: [Box<dyn Engine>; 2],
    adversary: Box<dyn Engine>,
    manager: Box<dyn Manager>,
}

impl Rig {
    fn build(engines: &dyn TeamEngines, manager: &dyn ManagerFactory) -> Result<Rig, EngineError> {
        Ok(Rig {
            members: engines.members()?,
            adversary: engines.adversary()?,
            manager: manager.build()?,
        })
    }

    fn rollout(
        &mut self,
        mut state: PlayState,
        mv: Move,
        team_color: Color,
        game_seed: u64,
        rules: &GameRules,
        game_id: &str,
    ) -> Result<f64, EngineError> {
        self.members[0].new_game()?;
        self.members[1].new_game()?;
        self.adversary.new_game()?;
        state.push(mv)?;
        let mut seeds = GameSeeds::new(game_seed);
        let mut players = GamePlayers::Team {
            members: &mut self.members,
            manager: self.manager.as_mut(),
        };
        let outcome = play_from(
            &mut players,
            self.adversary.as_mut(),
            &mut state,
            team_color,
            &mut seeds,
            rules,
            game_id,
            &mut Vec::new(),
        )?;
        Ok(outcome.kind.score())
    }
}

/// Plays each recommended move and finishes the game `n_rollouts` times
/// with the team under `manager`; q is the mean team score per branch.
pub fn estimate_q(
    ds: &DisagreementState,
    engines: &dyn TeamEngines,
    manager: &dyn ManagerFactory,
    rules: &GameRules,
    n_rollouts: usize,
    seed: u64,
) -> Result<RolloutEstimate, RolloutError> {
    if n_rollouts == 0 {
        return Err(ds.invalid("n_rollouts must be positive"));
    }
    let start = ds.checked_state()?;
    let mut rig: Option<Rig> = None;
    let mut q = [0.0; 2];
    let mut completed = [0usize; 2];
    for (k, branch) in [(0usize, ds.a1), (1, ds.a2)] {
        let mut total = 0.0;
        let mut last_error = String::new();
        for r in 0..n_rollouts {
            if rig.is_none() {
                rig = Some(Rig::build(engines, manager)?);
            }
            let gs = seed::derive(seed, &[k as u64, r as u64]);
            let id = format!("{}@{}/{}-{}", ds.game_id, ds.prefix.len(), k + 1, r);
            let result = rig.as_mut().expect("rig built").rollout(
                start.clone(),
                branch,
                ds.team_color,
                gs,
                rules,
                &id,
            );
            match result {
                Ok(score) => {
                    total += score;
                    completed[k] += 1;
                }
                Err(e) => {
                    last_error = e.to_string();
                    rig = None;
                }
            }
        }
        if 2 * completed[k] < n_rollouts {
            return Err(RolloutError::TooFewRollouts {
                branch: MemberId::new(k as u8 + 1).expect("1 or 2"),
                survived: completed[k],
                n: n_rollouts,
                last: last_error,
            });
        }
        q[k] = total / completed[k] as f64;
    }
    Ok(RolloutEstimate {
        q1: q[0],
        q2: q[1],
        n_rollouts,
        completed,
    })
}
