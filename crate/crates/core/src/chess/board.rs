use super::attacks::{
    bishop_attacks, king_attacks, knight_attacks, pawn_attacks, rook_attacks, Bits,
};
use super::types::{CastlingRights, Color, Move, Piece, PieceKind, Square};
use super::zobrist::KEYS;
use super::ChessError;

/// A full chess position.
///
/// Placement is stored as a 64-entry mailbox together with bitboards derived
/// from it; the two are always kept in sync, so derived equality is
/// equality of positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Board {
    squares: [Option<Piece>; 64],
    by_color: [u64; 2],
    by_kind: [u64; 6],
    side_to_move: Color,
    castling: CastlingRights,
    en_passant: Option<Square>,
    halfmove_clock: u32,
    fullmove_number: u32,
}

pub const STARTPOS_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

impl Default for Board {
    fn default() -> Self {
        Board::startpos()
    }
}

impl Board {
    pub fn startpos() -> Board {
        Board::from_fen(STARTPOS_FEN).expect("start position FEN is valid")
    }

    /// Builds a position from its parts, checking every structural invariant.
    pub fn from_parts(
        placement: [Option<Piece>; 64],
        side_to_move: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> Result<Board, ChessError> {
        let board = Board::from_parts_unchecked(
            placement,
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        );
        board.validate()?;
        Ok(board)
    }

    pub(crate) fn from_parts_unchecked(
        placement: [Option<Piece>; 64],
        side_to_move: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove_clock: u32,
        fullmove_number: u32,
    ) -> Board {
        let mut board = Board {
            squares: [None; 64],
            by_color: [0; 2],
            by_kind: [0; 6],
            side_to_move,
            castling,
            en_passant,
            halfmove_clock,
            fullmove_number,
        };
        for sq in Square::all() {
            if let Some(p) = placement[sq.index()] {
                board.put(sq, p);
            }
        }
        board
    }

    fn validate(&self) -> Result<(), ChessError> {
        for color in Color::ALL {
            let kings = self.pieces(color, PieceKind::King).count_ones();
            if kings != 1 {
                return Err(ChessError::Invariant(format!(
                    "expected exactly one {color} king, found {kings}"
                )));
            }
        }
        if let Some(ep) = self.en_passant {
            if ep.rank() != 2 && ep.rank() != 5 {
                return Err(ChessError::Invariant(format!(
                    "en-passant square {ep} is not on rank 3 or 6"
                )));
            }
            if self.squares[ep.index()].is_some() {
                return Err(ChessError::Invariant(format!(
                    "en-passant square {ep} is occupied"
                )));
            }
        }
        for color in Color::ALL {
            let back = if color == Color::White { 0 } else { 7 };
            let king_home = Square::from_file_rank(4, back);
            let king = Some(Piece::new(color, PieceKind::King));
            let rook = Some(Piece::new(color, PieceKind::Rook));
            for (flag, rook_file) in [
                (CastlingRights::king_side(color), 7),
                (CastlingRights::queen_side(color), 0),
            ] {
                if self.castling.has(flag)
                    && (self.squares[king_home.index()] != king
                        || self.squares[Square::from_file_rank(rook_file, back).index()] != rook)
                {
                    return Err(ChessError::Invariant(format!(
                        "castling right for {color} without king and rook on home squares"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn put(&mut self, sq: Square, piece: Piece) {
        self.squares[sq.index()] = Some(piece);
        self.by_color[piece.color.index()] |= sq.bit();
        self.by_kind[piece.kind.index()] |= sq.bit();
    }

    #[inline]
    fn remove(&mut self, sq: Square) -> Option<Piece> {
        let piece = self.squares[sq.index()].take()?;
        self.by_color[piece.color.index()] &= !sq.bit();
        self.by_kind[piece.kind.index()] &= !sq.bit();
        Some(piece)
    }

    #[inline]
    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.squares[sq.index()]
    }

    pub fn placement(&self) -> &[Option<Piece>; 64] {
        &self.squares
    }

    #[inline]
    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    #[inline]
    pub fn occupied(&self) -> u64 {
        self.by_color[0] | self.by_color[1]
    }

    #[inline]
    pub fn color_bb(&self, color: Color) -> u64 {
        self.by_color[color.index()]
    }

    #[inline]
    pub fn kind_bb(&self, kind: PieceKind) -> u64 {
        self.by_kind[kind.index()]
    }

    #[inline]
    pub fn pieces(&self, color: Color, kind: PieceKind) -> u64 {
        self.by_color[color.index()] & self.by_kind[kind.index()]
    }

    pub fn king_square(&self, color: Color) -> Square {
        let kings = self.pieces(color, PieceKind::King);
        debug_assert!(kings != 0, "board without {color} king");
        Square::new(kings.trailing_zeros() as u8)
    }

    pub fn piece_count(&self) -> usize {
        self.occupied().count_ones() as usize
    }

    /// Bitboard of `by` pieces that pseudo-legally attack `sq`. Pins and the
    /// legality of the attacker's move are ignored; occupancy of `sq` is
    /// irrelevant.
    #[inline]
    pub fn attackers_to(&self, sq: Square, by: Color) -> u64 {
        let occ = self.occupied();
        let them = self.by_color[by.index()];
        let diag = self.by_kind[PieceKind::Bishop.index()] | self.by_kind[PieceKind::Queen.index()];
        let ortho = self.by_kind[PieceKind::Rook.index()] | self.by_kind[PieceKind::Queen.index()];
        them & ((pawn_attacks(by.opponent(), sq) & self.by_kind[PieceKind::Pawn.index()])
            | (knight_attacks(sq) & self.by_kind[PieceKind::Knight.index()])
            | (king_attacks(sq) & self.by_kind[PieceKind::King.index()])
            | (bishop_attacks(sq, occ) & diag)
            | (rook_attacks(sq, occ) & ortho))
    }

    #[inline]
    pub fn is_attacked(&self, sq: Square, by: Color) -> bool {
        self.attackers_to(sq, by) != 0
    }

    /// True iff the side to move's king is attacked.
    #[inline]
    pub fn is_check(&self) -> bool {
        let us = self.side_to_move;
        self.is_attacked(self.king_square(us), us.opponent())
    }

    /// Union of squares attacked by `color`.
    pub fn attack_map(&self, color: Color) -> u64 {
        let occ = self.occupied();
        let mut map = 0;
        for sq in Bits(self.by_color[color.index()]) {
            map |= self.piece_attacks(sq, occ);
        }
        map
    }

    /// Pseudo attack set of the piece standing on `sq`.
    pub(crate) fn piece_attacks(&self, sq: Square, occ: u64) -> u64 {
        match self.squares[sq.index()] {
            None => 0,
            Some(p) => match p.kind {
                PieceKind::Pawn => pawn_attacks(p.color, sq),
                PieceKind::Knight => knight_attacks(sq),
                PieceKind::Bishop => bishop_attacks(sq, occ),
                PieceKind::Rook => rook_attacks(sq, occ),
                PieceKind::Queen => bishop_attacks(sq, occ) | rook_attacks(sq, occ),
                PieceKind::King => king_attacks(sq),
            },
        }
    }

    /// Position hash over placement, side to move, castling rights and the
    /// en-passant square; clocks are excluded so repetitions match.
    pub fn hash(&self) -> u64 {
        let mut h = 0;
        for sq in Bits(self.occupied()) {
            let p = self.squares[sq.index()].expect("occupied square");
            h ^= KEYS.pieces[p.index()][sq.index()];
        }
        h ^= KEYS.castling[self.castling.bits() as usize];
        if let Some(ep) = self.en_passant {
            h ^= KEYS.en_passant[ep.index()];
        }
        if self.side_to_move == Color::Black {
            h ^= KEYS.black_to_move;
        }
        h
    }

    /// Applies a legal move. Anything outside `legal_moves()` is rejected.
    pub fn apply_move(&self, mv: Move) -> Result<Board, ChessError> {
        if !self.legal_moves().contains(&mv) {
            return Err(ChessError::IllegalMove {
                fen: self.to_fen(),
                mv: mv.to_uci(),
            });
        }
        Ok(self.play_unchecked(mv))
    }

    /// Applies a move known to be at least pseudo-legal, without checks.
    pub(crate) fn play_unchecked(&self, mv: Move) -> Board {
        let mut b = self.clone();
        let us = self.side_to_move;
        let piece = b.remove(mv.from).expect("move from an empty square");
        let mut capture = b.remove(mv.to).is_some();

        if piece.kind == PieceKind::Pawn
            && Some(mv.to) == self.en_passant
            && mv.from.file() != mv.to.file()
            && !capture
        {
            b.remove(Square::from_file_rank(mv.to.file(), mv.from.rank()));
            capture = true;
        }
        if piece.kind == PieceKind::King && mv.from.file().abs_diff(mv.to.file()) == 2 {
            let rank = mv.from.rank();
            let (rook_from, rook_to) = if mv.to.file() == 6 { (7, 5) } else { (0, 3) };
            if let Some(rook) = b.remove(Square::from_file_rank(rook_from, rank)) {
                b.put(Square::from_file_rank(rook_to, rank), rook);
            }
        }
        let placed = match mv.promotion {
            Some(kind) => Piece::new(us, kind),
            None => piece,
        };
        b.put(mv.to, placed);

        b.castling = CastlingRights::from_bits(
            b.castling.bits() & castle_mask(mv.from) & castle_mask(mv.to),
        );
        b.en_passant = if piece.kind == PieceKind::Pawn && mv.from.rank().abs_diff(mv.to.rank()) == 2
        {
            Some(Square::from_file_rank(
                mv.from.file(),
                (mv.from.rank() + mv.to.rank()) / 2,
            ))
        } else {
            None
        };
        b.halfmove_clock = if piece.kind == PieceKind::Pawn || capture {
            0
        } else {
            self.halfmove_clock + 1
        };
        if us == Color::Black {
            b.fullmove_number += 1;
        }
        b.side_to_move = us.opponent();
        b
    }

    /// True if `mv` captures something (including en passant).
    pub fn is_capture(&self, mv: Move) -> bool {
        self.squares[mv.to.index()].is_some()
            || (Some(mv.to) == self.en_passant
                && mv.from.file() != mv.to.file()
                && matches!(self.squares[mv.from.index()], Some(p) if p.kind == PieceKind::Pawn))
    }
}

fn castle_mask(sq: Square) -> u8 {
    match sq.index() {
        0 => !CastlingRights::WHITE_QUEEN,
        7 => !CastlingRights::WHITE_KING,
        4 => !(CastlingRights::WHITE_KING | CastlingRights::WHITE_QUEEN),
        56 => !CastlingRights::BLACK_QUEEN,
        63 => !CastlingRights::BLACK_KING,
        60 => !(CastlingRights::BLACK_KING | CastlingRights::BLACK_QUEEN),
        _ => 0xff,
    }
}
