use serde::{Deserialize, Serialize};

use super::board::Board;
use super::types::Color;

/// Games still running at this many plies are adjudicated drawn.
pub const DEFAULT_PLY_CAP: u32 = 300;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Win,
    Draw,
    Loss,
}

impl OutcomeKind {
    /// Fixed score mapping: win 1, draw 0.5, loss 0.
    pub fn score(self) -> f64 {
        match self {
            OutcomeKind::Win => 1.0,
            OutcomeKind::Draw => 0.5,
            OutcomeKind::Loss => 0.0,
        }
    }

    pub fn flipped(self) -> OutcomeKind {
        match self {
            OutcomeKind::Win => OutcomeKind::Loss,
            OutcomeKind::Draw => OutcomeKind::Draw,
            OutcomeKind::Loss => OutcomeKind::Win,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeReason {
    Checkmate,
    Stalemate,
    FiftyMove,
    Threefold,
    PlyCap,
    Adjudicated,
}

/// A finished game's result, relative to `perspective`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub perspective: Color,
    pub kind: OutcomeKind,
    pub reason: OutcomeReason,
}

impl Outcome {
    /// The same result seen by `color`.
    pub fn relative_to(self, color: Color) -> Outcome {
        if color == self.perspective {
            self
        } else {
            Outcome {
                perspective: color,
                kind: self.kind.flipped(),
                reason: self.reason,
            }
        }
    }

    pub fn score_for(self, color: Color) -> f64 {
        self.relative_to(color).kind.score()
    }

    /// PGN result token.
    pub fn pgn_result(self) -> &'static str {
        match self.relative_to(Color::White).kind {
            OutcomeKind::Win => "1-0",
            OutcomeKind::Draw => "1/2-1/2",
            OutcomeKind::Loss => "0-1",
        }
    }
}

/// Adjudicates `board`.
///
/// `history` holds the hashes of every position of the game so far,
/// including the current one, so `history.len() - 1` plies have been played.
/// Returns `None` while the game continues; otherwise the outcome relative to
/// the side to move.
pub fn game_result(board: &Board, history: &[u64], ply_cap: u32) -> Option<Outcome> {
    let stm = board.side_to_move();
    let draw = |reason| {
        Some(Outcome {
            perspective: stm,
            kind: OutcomeKind::Draw,
            reason,
        })
    };
    if !board.has_legal_move() {
        return if board.is_check() {
            Some(Outcome {
                perspective: stm,
                kind: OutcomeKind::Loss,
                reason: OutcomeReason::Checkmate,
            })
        } else {
            draw(OutcomeReason::Stalemate)
        };
    }
    if board.halfmove_clock() >= 100 {
        return draw(OutcomeReason::FiftyMove);
    }
    let current = board.hash();
    if history.iter().filter(|&&h| h == current).count() >= 3 {
        return draw(OutcomeReason::Threefold);
    }
    let plies = history.len().saturating_sub(1);
    if plies >= ply_cap as usize {
        return draw(OutcomeReason::PlyCap);
    }
    None
}
