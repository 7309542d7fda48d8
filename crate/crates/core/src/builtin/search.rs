//! Fixed-depth negamax with alpha-beta pruning.
//!
//! Nodes with depth left detect mate and stalemate from an empty move list.
//! Root children are always checked for being terminal, so even a one-ply
//! search sees mate-in-one. Leaves return the static evaluation; there is
//! no quiescence search.
//!
//! Root moves are searched in ascending (from, to, promotion) order and only
//! a strict improvement replaces the best move, so ties always resolve to
//! the lowest move.

use super::profile::EvalProfile;
use crate::chess::{Board, Move, PieceKind};

/// Internal mate score; a mate found `p` plies from the root scores
/// `MATE - p`.
pub const MATE: i32 = 100_000;
const INF: i32 = MATE + 1;

/// Best root move and its exact value, or `None` at a terminal position.
pub fn search(board: &Board, depth: u32, profile: &EvalProfile) -> Option<(Move, i32)> {
    debug_assert!(depth >= 1);
    let mut moves = board.legal_moves();
    moves.sort_unstable();
    let mut best: Option<(Move, i32)> = None;
    let mut alpha = -INF;
    for mv in moves {
        let child = board.play_unchecked(mv);
        let v = match root_child_terminal(&child) {
            Some(v) => v,
            None => -alphabeta(&child, depth - 1, 1, -INF, -alpha, profile),
        };
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((mv, v));
            alpha = alpha.max(v);
        }
    }
    best
}

/// Exact mover-perspective value of playing `mv`, searched to `depth` plies
/// in total (the move itself counts as one).
pub fn move_value(board: &Board, mv: Move, depth: u32, profile: &EvalProfile) -> i32 {
    let child = board.play_unchecked(mv);
    match root_child_terminal(&child) {
        Some(v) => v,
        None => -alphabeta(&child, depth.saturating_sub(1), 1, -INF, INF, profile),
    }
}

/// Value of `board` for its side to move at `depth`, `None` when terminal.
pub fn value(board: &Board, depth: u32, profile: &EvalProfile) -> Option<i32> {
    if !board.has_legal_move() {
        return None;
    }
    if depth == 0 {
        return Some(profile.evaluate(board));
    }
    search(board, depth, profile).map(|(_, v)| v)
}

/// Mover-perspective score when the child has no legal moves.
fn root_child_terminal(child: &Board) -> Option<i32> {
    if child.has_legal_move() {
        None
    } else if child.is_check() {
        Some(MATE - 1)
    } else {
        Some(0)
    }
}

fn alphabeta(
    board: &Board,
    depth: u32,
    ply: i32,
    mut alpha: i32,
    beta: i32,
    profile: &EvalProfile,
) -> i32 {
    if depth == 0 {
        return profile.evaluate(board);
    }
    let mut moves = board.legal_moves();
    if moves.is_empty() {
        return if board.is_check() { -(MATE - ply) } else { 0 };
    }
    order_moves(board, &mut moves);
    let mut best = -INF;
    for mv in moves {
        let v = -alphabeta(
            &board.play_unchecked(mv),
            depth - 1,
            ply + 1,
            -beta,
            -alpha,
            profile,
        );
        if v > best {
            best = v;
            if v > alpha {
                alpha = v;
                if alpha >= beta {
                    break;
                }
            }
        }
    }
    best
}

/// Captures first, most valuable victim then least valuable attacker.
fn order_moves(board: &Board, moves: &mut [Move]) {
    moves.sort_by_cached_key(|&m| {
        let victim = board.piece_at(m.to).map_or(-1, |p| p.kind.index() as i32);
        let attacker = board.piece_at(m.from).map_or(0, |p| p.kind.index() as i32);
        let promo = i32::from(m.promotion == Some(PieceKind::Queen));
        -(victim * 16 - attacker + promo * 64)
    });
}

/// Plain negamax without pruning, root rules identical to [`search`]. Kept
/// as the reference the pruned search is checked against.
pub fn search_unpruned(board: &Board, depth: u32, profile: &EvalProfile) -> Option<(Move, i32)> {
    fn negamax(board: &Board, depth: u32, ply: i32, profile: &EvalProfile) -> i32 {
        if depth == 0 {
            return profile.evaluate(board);
        }
        let moves = board.legal_moves();
        if moves.is_empty() {
            return if board.is_check() { -(MATE - ply) } else { 0 };
        }
        moves
            .into_iter()
            .map(|m| -negamax(&board.play_unchecked(m), depth - 1, ply + 1, profile))
            .max()
            .expect("non-empty")
    }
    let mut moves = board.legal_moves();
    moves.sort_unstable();
    let mut best: Option<(Move, i32)> = None;
    for mv in moves {
        let child = board.play_unchecked(mv);
        let v = match root_child_terminal(&child) {
            Some(v) => v,
            None => -negamax(&child, depth - 1, 1, profile),
        };
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((mv, v));
        }
    }
    best
}
