use super::attacks::{
    bishop_attacks, king_attacks, knight_attacks, pawn_attacks, rook_attacks, Bits,
};
use super::board::Board;
use super::types::{CastlingRights, Color, Move, PieceKind, Square};

impl Board {
    /// Every legal move in the position, in generation order.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut moves = Vec::with_capacity(48);
        self.pseudo_legal_moves(&mut moves);
        let us = self.side_to_move();
        moves.retain(|&m| {
            let next = self.play_unchecked(m);
            !next.is_attacked(next.king_square(us), us.opponent())
        });
        moves
    }

    /// True if the side to move has at least one legal move.
    pub fn has_legal_move(&self) -> bool {
        let mut moves = Vec::with_capacity(48);
        self.pseudo_legal_moves(&mut moves);
        let us = self.side_to_move();
        moves.into_iter().any(|m| {
            let next = self.play_unchecked(m);
            !next.is_attacked(next.king_square(us), us.opponent())
        })
    }

    pub(crate) fn pseudo_legal_moves(&self, out: &mut Vec<Move>) {
        let us = self.side_to_move();
        let own = self.color_bb(us);
        let theirs = self.color_bb(us.opponent());
        let occ = own | theirs;

        self.pawn_moves(us, occ, theirs, out);

        for from in Bits(self.pieces(us, PieceKind::Knight)) {
            push_targets(from, knight_attacks(from) & !own, out);
        }
        for from in Bits(self.pieces(us, PieceKind::Bishop)) {
            push_targets(from, bishop_attacks(from, occ) & !own, out);
        }
        for from in Bits(self.pieces(us, PieceKind::Rook)) {
            push_targets(from, rook_attacks(from, occ) & !own, out);
        }
        for from in Bits(self.pieces(us, PieceKind::Queen)) {
            push_targets(
                from,
                (bishop_attacks(from, occ) | rook_attacks(from, occ)) & !own,
                out,
            );
        }
        let king = self.king_square(us);
        push_targets(king, king_attacks(king) & !own, out);
        self.castling_moves(us, king, occ, out);
    }

    fn pawn_moves(&self, us: Color, occ: u64, theirs: u64, out: &mut Vec<Move>) {
        let (forward, start_rank, promo_rank): (i8, u8, u8) = match us {
            Color::White => (8, 1, 7),
            Color::Black => (-8, 6, 0),
        };
        let ep_bit = self.en_passant().map_or(0, |s| s.bit());
        for from in Bits(self.pieces(us, PieceKind::Pawn)) {
            let one = from.index() as i8 + forward;
            if (0..64).contains(&one) {
                let one = Square::new(one as u8);
                if occ & one.bit() == 0 {
                    push_pawn(from, one, promo_rank, out);
                    if from.rank() == start_rank {
                        let two = Square::new((one.index() as i8 + forward) as u8);
                        if occ & two.bit() == 0 {
                            out.push(Move::new(from, two));
                        }
                    }
                }
            }
            for to in Bits(pawn_attacks(us, from) & (theirs | ep_bit)) {
                push_pawn(from, to, promo_rank, out);
            }
        }
    }

    fn castling_moves(&self, us: Color, king: Square, occ: u64, out: &mut Vec<Move>) {
        let rights = self.castling();
        let back = if us == Color::White { 0 } else { 7 };
        if king != Square::from_file_rank(4, back) {
            return;
        }
        let them = us.opponent();
        let sq = |f| Square::from_file_rank(f, back);
        if rights.has(CastlingRights::king_side(us))
            && occ & (sq(5).bit() | sq(6).bit()) == 0
            && !self.is_attacked(king, them)
            && !self.is_attacked(sq(5), them)
        {
            out.push(Move::new(king, sq(6)));
        }
        if rights.has(CastlingRights::queen_side(us))
            && occ & (sq(1).bit() | sq(2).bit() | sq(3).bit()) == 0
            && !self.is_attacked(king, them)
            && !self.is_attacked(sq(3), them)
        {
            out.push(Move::new(king, sq(2)));
        }
    }
}

#[inline]
fn push_targets(from: Square, targets: u64, out: &mut Vec<Move>) {
    for to in Bits(targets) {
        out.push(Move::new(from, to));
    }
}

#[inline]
fn push_pawn(from: Square, to: Square, promo_rank: u8, out: &mut Vec<Move>) {
    if to.rank() == promo_rank {
        for kind in PieceKind::PROMOTIONS {
            out.push(Move::with_promotion(from, to, kind));
        }
    } else {
        out.push(Move::new(from, to));
    }
}

/// Counts leaf nodes of the legal move tree to `depth`.
pub fn perft(board: &Board, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = board.legal_moves();
    if depth == 1 {
        return moves.len() as u64;
    }
    moves
        .into_iter()
        .map(|m| perft(&board.play_unchecked(m), depth - 1))
        .sum()
}

/// Per-root-move perft breakdown, sorted by move.
pub fn divide(board: &Board, depth: u32) -> Vec<(Move, u64)> {
    let mut out: Vec<(Move, u64)> = board
        .legal_moves()
        .into_iter()
        .map(|m| {
            let n = if depth <= 1 {
                1
            } else {
                perft(&board.play_unchecked(m), depth - 1)
            };
            (m, n)
        })
        .collect();
    out.sort();
    out
}
