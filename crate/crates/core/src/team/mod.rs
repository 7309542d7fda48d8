//! Two-member teams: members recommend, a manager arbitrates disagreements,
//! and matches against an adversary are scored by WDL.

mod game;
mod managers;
mod runner;
mod stats;

use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chess::{Board, Move};
use crate::engine::EngineError;

pub use game::{
    play_from, play_game, team_move, GamePlayers, GameRecord, GameRules, GameSeeds, PlayState,
};
pub use managers::{ConstantManager, RandomManager};
pub use runner::{
    csv_field, game_seed, run_match, solo_baseline, summary_csv_header, summary_csv_row, write_game_records, MatchOptions,
    MatchResult, Side, TeamSpec,
};
pub use stats::MatchStatistics;

/// Team member index, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct MemberId(u8);

impl MemberId {
    pub const ONE: MemberId = MemberId(1);
    pub const TWO: MemberId = MemberId(2);

    pub fn new(k: u8) -> Option<MemberId> {
        matches!(k, 1 | 2).then_some(MemberId(k))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based slot.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn other(self) -> MemberId {
        MemberId(3 - self.0)
    }
}

impl TryFrom<u8> for MemberId {
    type Error = String;
    fn try_from(k: u8) -> Result<Self, Self::Error> {
        MemberId::new(k).ok_or_else(|| format!("member id must be 1 or 2, got {k}"))
    }
}

impl From<MemberId> for u8 {
    fn from(m: MemberId) -> u8 {
        m.0
    }
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What a manager sees. Recommendations are present and distinct whenever
/// the team protocol consults the manager; state-only managers ignore them.
pub struct DecisionContext<'a> {
    pub state: &'a Board,
    pub recommendations: Option<(Move, Move)>,
    pub ply: u32,
    /// The manager's own seeded stream.
    pub rng: &'a mut ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Member(MemberId),
    /// Both choices are equally good; the team flips a seeded coin.
    Indifferent,
}

pub trait Manager: Send {
    fn name(&self) -> String;
    fn decide(&mut self, ctx: &mut DecisionContext<'_>) -> Result<Decision, EngineError>;
}

/// Builds a fresh manager for each worker, so managers that own engine
/// handles are never shared between concurrent games.
pub trait ManagerFactory: Send + Sync {
    fn name(&self) -> String;
    fn build(&self) -> Result<Box<dyn Manager>, EngineError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chooser {
    Manager,
    RandomTiebreak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementRecord {
    pub game_id: String,
    pub ply: u32,
    pub fen: String,
    pub a1: Move,
    pub a2: Move,
    pub chosen: MemberId,
    pub chooser: Chooser,
}

#[derive(Debug, Error)]
pub enum TeamError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{failed} of {total} games failed, above the {limit:.1}% limit; first: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit: f64,
        first: String,
    },
    #[error("match needs at least one opening")]
    NoOpenings,
    #[error("{0}")]
    Setup(String),
}
