use crate::chess::Board;

/// Tokens per position: CLS, 64 squares, side to move, castling, check.
pub const SEQ_LEN: usize = 68;
pub const VOCAB: usize = 34;

pub const CLS: u8 = 0;
pub const EMPTY: u8 = 1;
/// First piece token; pieces use `PIECE_BASE + piece.index()`.
pub const PIECE_BASE: u8 = 2;
pub const WHITE_TO_MOVE: u8 = 14;
pub const BLACK_TO_MOVE: u8 = 15;
/// Castling tokens are `CASTLING_BASE + rights bits`.
pub const CASTLING_BASE: u8 = 16;
pub const NOT_IN_CHECK: u8 = 32;
pub const IN_CHECK: u8 = 33;

/// Position of square `sq` (0 = a1) in the sequence.
pub const fn square_slot(sq: usize) -> usize {
    1 + sq
}

pub const SIDE_SLOT: usize = 65;
pub const CASTLING_SLOT: usize = 66;
pub const CHECK_SLOT: usize = 67;

pub type Tokens = [u8; SEQ_LEN];

pub fn encode_board(board: &Board) -> Tokens {
    let mut t = [0u8; SEQ_LEN];
    t[0] = CLS;
    for (sq, piece) in board.placement().iter().enumerate() {
        t[square_slot(sq)] = match piece {
            None => EMPTY,
            Some(p) => PIECE_BASE + p.index() as u8,
        };
    }
    t[SIDE_SLOT] = match board.side_to_move() {
        crate::chess::Color::White => WHITE_TO_MOVE,
        crate::chess::Color::Black => BLACK_TO_MOVE,
    };
    t[CASTLING_SLOT] = CASTLING_BASE + board.castling().bits();
    t[CHECK_SLOT] = if board.is_check() { IN_CHECK } else { NOT_IN_CHECK };
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn startpos_tokens() {
        let t = encode_board(&Board::startpos());
        assert_eq!(t[0], CLS);
        let squares = &t[1..65];
        assert_eq!(squares.iter().filter(|&&x| x == EMPTY).count(), 32);
        assert_eq!(squares.iter().filter(|&&x| x >= PIECE_BASE).count(), 32);
        assert_eq!(t[SIDE_SLOT], WHITE_TO_MOVE);
        assert_eq!(t[CASTLING_SLOT], CASTLING_BASE + 15);
        assert_eq!(t[CHECK_SLOT], NOT_IN_CHECK);
        assert!(t.iter().all(|&x| (x as usize) < VOCAB));
    }

    #[test]
    fn fools_mate_is_check() {
        let b = Board::from_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3")
            .unwrap();
        assert!(b.is_check());
        assert_eq!(encode_board(&b)[CHECK_SLOT], IN_CHECK);
    }
}
