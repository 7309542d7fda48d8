//! Rules-of-chess kernel: positions, FEN, legal moves, attacks, adjudication.
//!
//! Squares are indexed 0 = a1 through 63 = h8, rank by rank. Every other
//! module shares this convention.

mod attacks;
mod board;
mod fen;
mod movegen;
mod outcome;
mod san;
mod shuffle;
mod types;
mod zobrist;

use thiserror::Error;

pub use attacks::{
    bishop_attacks, king_attacks, knight_attacks, pawn_attacks, queen_attacks, rook_attacks,
};
pub use board::{Board, STARTPOS_FEN};
pub use fen::FenField;
pub use movegen::{divide, perft};
pub use outcome::{game_result, Outcome, OutcomeKind, OutcomeReason, DEFAULT_PLY_CAP};
pub use san::to_pgn;
pub use shuffle::shuffle_position;
pub use types::{CastlingRights, Color, Move, Piece, PieceKind, Square};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChessError {
    #[error("FEN {field}: {message}")]
    Fen { field: FenField, message: String },
    #[error("invalid position: {0}")]
    Invariant(String),
    #[error("illegal move {mv} in {fen}")]
    IllegalMove { fen: String, mv: String },
}

/// Resolves UCI move text against a position's legal moves.
pub fn parse_legal_move(board: &Board, text: &str) -> Result<Move, ChessError> {
    let mv = Move::from_uci(text).map_err(|_| ChessError::IllegalMove {
        fen: board.to_fen(),
        mv: text.to_string(),
    })?;
    if board.legal_moves().contains(&mv) {
        Ok(mv)
    } else {
        Err(ChessError::IllegalMove {
            fen: board.to_fen(),
            mv: text.to_string(),
        })
    }
}

/// Reads an EPD-style opening list: one FEN per line, `#` starts a comment,
/// blank lines ignored. Extra EPD operations after the sixth field are
/// dropped.
pub fn parse_opening_list(text: &str) -> Result<Vec<Board>, (usize, ChessError)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let fen = if fields.len() > 6 {
            fields[..6].join(" ")
        } else if fields.len() == 4 {
            // bare EPD position: default the clocks
            format!("{} 0 1", fields.join(" "))
        } else {
            fields.join(" ")
        };
        out.push(Board::from_fen(&fen).map_err(|e| (i + 1, e))?);
    }
    Ok(out)
}
