//! Opening positions.
//!
//! The bundled set holds 250 balanced positions reached after 4 to 8 plies
//! of plausible play from the initial position. It is produced by
//! [`generate`] and checked against it in the test suite.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builtin::{search, EvalProfile};
use crate::chess::{parse_opening_list, Board, ChessError};

pub const BUNDLED: &str = include_str!("../data/openings.fen");
pub const BUNDLED_SEED: u64 = 2024;
pub const BUNDLED_COUNT: usize = 250;

/// Largest |score| (centipawns, depth-2 search, neutral profile) accepted.
pub const BALANCE_LIMIT: i32 = 50;

/// Moves within this many centipawns of the best one-ply move count as
/// plausible.
const PLAUSIBLE_WINDOW: i32 = 40;

pub fn bundled() -> Vec<Board> {
    parse_opening_list(BUNDLED).expect("bundled openings parse")
}

/// Parses an opening file; errors carry the 1-based line number.
pub fn parse(text: &str) -> Result<Vec<Board>, (usize, ChessError)> {
    parse_opening_list(text)
}

/// `n` distinct balanced openings, deterministic in `seed`.
pub fn generate(n: usize, seed: u64) -> Vec<Board> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mstyle = EvalProfile::mstyle();
    let neutral = EvalProfile::neutral();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let plies = rng.gen_range(4..=8);
        let mut board = Board::startpos();
        let mut ok = true;
        for _ in 0..plies {
            let mut moves = board.legal_moves();
            if moves.is_empty() {
                ok = false;
                break;
            }
            moves.sort_unstable();
            let scored: Vec<_> = moves
                .iter()
                .map(|&m| (m, search::move_value(&board, m, 1, &mstyle)))
                .collect();
            let best = scored.iter().map(|&(_, v)| v).max().expect("non-empty");
            let plausible: Vec<_> = scored
                .iter()
                .filter(|&&(_, v)| v >= best - PLAUSIBLE_WINDOW)
                .map(|&(m, _)| m)
                .collect();
            let mv = plausible[rng.gen_range(0..plausible.len())];
            board = board.apply_move(mv).expect("legal");
        }
        if !ok || !board.has_legal_move() {
            continue;
        }
        match search::value(&board, 2, &neutral) {
            Some(v) if v.abs() <= BALANCE_LIMIT => {}
            _ => continue,
        }
        if seen.insert(board.to_fen()) {
            out.push(board);
        }
    }
    out
}

/// Renders openings as an opening file, one FEN per line.
pub fn render(openings: &[Board]) -> String {
    let mut s = String::from("# balanced openings, 4-8 plies of plausible play\n");
    for b in openings {
        s.push_str(&b.to_fen());
        s.push('\n');
    }
    s
}
