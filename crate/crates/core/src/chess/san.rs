//! Standard algebraic notation and PGN export.

use std::fmt::Write;

use super::board::{Board, STARTPOS_FEN};
use super::types::{Move, PieceKind};
use super::ChessError;

impl Board {
    /// SAN text for a legal move, with `+`/`#` suffixes.
    pub fn to_san(&self, mv: Move) -> Result<String, ChessError> {
        let legal = self.legal_moves();
        if !legal.contains(&mv) {
            return Err(ChessError::IllegalMove {
                fen: self.to_fen(),
                mv: mv.to_uci(),
            });
        }
        let piece = self.piece_at(mv.from).expect("legal move has a mover");
        let mut san = String::new();
        if piece.kind == PieceKind::King && mv.from.file().abs_diff(mv.to.file()) == 2 {
            san.push_str(if mv.to.file() == 6 { "O-O" } else { "O-O-O" });
        } else if piece.kind == PieceKind::Pawn {
            if self.is_capture(mv) {
                san.push((b'a' + mv.from.file()) as char);
                san.push('x');
            }
            write!(san, "{}", mv.to).unwrap();
            if let Some(k) = mv.promotion {
                san.push('=');
                san.push(k.letter().to_ascii_uppercase());
            }
        } else {
            san.push(piece.kind.letter().to_ascii_uppercase());
            let rivals: Vec<Move> = legal
                .iter()
                .copied()
                .filter(|m| {
                    m.to == mv.to
                        && m.from != mv.from
                        && self.piece_at(m.from).map(|p| p.kind) == Some(piece.kind)
                })
                .collect();
            if !rivals.is_empty() {
                let file_unique = rivals.iter().all(|m| m.from.file() != mv.from.file());
                let rank_unique = rivals.iter().all(|m| m.from.rank() != mv.from.rank());
                if file_unique {
                    san.push((b'a' + mv.from.file()) as char);
                } else if rank_unique {
                    san.push((b'1' + mv.from.rank()) as char);
                } else {
                    write!(san, "{}", mv.from).unwrap();
                }
            }
            if self.is_capture(mv) {
                san.push('x');
            }
            write!(san, "{}", mv.to).unwrap();
        }
        let next = self.play_unchecked(mv);
        if next.is_check() {
            san.push(if next.has_legal_move() { '+' } else { '#' });
        }
        Ok(san)
    }
}

/// Renders a game as PGN: a `Result` tag (plus `SetUp`/`FEN` for
/// non-standard starts) and the mainline moves.
pub fn to_pgn(opening: &Board, moves: &[Move], result: &str) -> Result<String, ChessError> {
    let mut out = String::new();
    let fen = opening.to_fen();
    if fen != STARTPOS_FEN {
        writeln!(out, "[SetUp \"1\"]").unwrap();
        writeln!(out, "[FEN \"{fen}\"]").unwrap();
    }
    writeln!(out, "[Result \"{result}\"]").unwrap();
    out.push('\n');

    let mut board = opening.clone();
    let mut tokens = Vec::with_capacity(moves.len() + moves.len() / 2 + 2);
    for (i, &mv) in moves.iter().enumerate() {
        let white = board.side_to_move() == super::Color::White;
        if white {
            tokens.push(format!("{}.", board.fullmove_number()));
        } else if i == 0 {
            tokens.push(format!("{}...", board.fullmove_number()));
        }
        tokens.push(board.to_san(mv)?);
        board = board.play_unchecked(mv);
    }
    tokens.push(result.to_string());

    let mut line = String::new();
    for t in tokens {
        if !line.is_empty() && line.len() + 1 + t.len() > 79 {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&t);
    }
    out.push_str(&line);
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn san_of(fen: &str, uci: &str) -> String {
        Board::from_fen(fen)
            .unwrap()
            .to_san(Move::from_uci(uci).unwrap())
            .unwrap()
    }

    #[test]
    fn basic_san() {
        assert_eq!(san_of(STARTPOS_FEN, "e2e4"), "e4");
        assert_eq!(san_of(STARTPOS_FEN, "g1f3"), "Nf3");
        assert_eq!(
            san_of("r3k3/8/8/8/8/8/8/R3K2R w KQq - 0 1", "e1g1"),
            "O-O"
        );
        assert_eq!(
            san_of("r3k3/8/8/8/8/8/8/R3K2R w KQq - 0 1", "e1c1"),
            "O-O-O"
        );
        assert_eq!(san_of("k7/4P3/8/8/8/8/8/K7 w - - 0 1", "e7e8q"), "e8=Q+");
        assert_eq!(san_of("k7/8/8/8/8/8/8/KR5R w - - 0 1", "b1e1"), "Rbe1");
        assert_eq!(san_of("7k/8/8/8/3p4/8/4P3/K7 w - - 0 1", "e2e4"), "e4");
        assert_eq!(
            san_of("7k/8/8/3pP3/8/8/8/K7 w - d6 0 1", "e5d6"),
            "exd6"
        );
    }

    #[test]
    fn fools_mate_pgn() {
        let b = Board::startpos();
        let moves: Vec<Move> = ["f2f3", "e7e5", "g2g4", "d8h4"]
            .iter()
            .map(|m| Move::from_uci(m).unwrap())
            .collect();
        let pgn = to_pgn(&b, &moves, "0-1").unwrap();
        assert_eq!(pgn, "[Result \"0-1\"]\n\n1. f3 e5 2. g4 Qh4# 0-1\n");
    }

    #[test]
    fn black_first_pgn_has_fen_tag() {
        let b = Board::from_fen("k7/8/8/8/8/8/8/K7 b - - 0 5").unwrap();
        let pgn = to_pgn(&b, &[Move::from_uci("a8b8").unwrap()], "*").unwrap();
        assert!(pgn.contains("[FEN \"k7/8/8/8/8/8/8/K7 b - - 0 5\"]"));
        assert!(pgn.contains("5... Kb8 *"));
    }
}
