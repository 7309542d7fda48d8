use std::fmt::Write;

use super::board::Board;
use super::types::{CastlingRights, Color, Piece, Square};
use super::ChessError;

/// FEN field that failed to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FenField {
    FieldCount,
    Placement,
    SideToMove,
    Castling,
    EnPassant,
    HalfmoveClock,
    FullmoveNumber,
}

impl std::fmt::Display for FenField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FenField::FieldCount => "field count",
            FenField::Placement => "piece placement",
            FenField::SideToMove => "side to move",
            FenField::Castling => "castling rights",
            FenField::EnPassant => "en-passant square",
            FenField::HalfmoveClock => "halfmove clock",
            FenField::FullmoveNumber => "fullmove number",
        })
    }
}

fn err(field: FenField, message: impl Into<String>) -> ChessError {
    ChessError::Fen {
        field,
        message: message.into(),
    }
}

impl Board {
    /// Parses a 6-field FEN record. Fields may be separated by any run of
    /// whitespace.
    pub fn from_fen(text: &str) -> Result<Board, ChessError> {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(
                FenField::FieldCount,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }

        let placement = parse_placement(fields[0])?;
        let side = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            other => return Err(err(FenField::SideToMove, format!("`{other}`"))),
        };
        let castling = parse_castling(fields[2])?;
        let en_passant = match fields[3] {
            "-" => None,
            s => Some(
                s.parse::<Square>()
                    .map_err(|e| err(FenField::EnPassant, e))?,
            ),
        };
        let halfmove = fields[4]
            .parse::<u32>()
            .map_err(|_| err(FenField::HalfmoveClock, format!("`{}`", fields[4])))?;
        let fullmove = fields[5]
            .parse::<u32>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| err(FenField::FullmoveNumber, format!("`{}`", fields[5])))?;

        Board::from_parts(placement, side, castling, en_passant, halfmove, fullmove).map_err(
            |e| match e {
                ChessError::Invariant(msg) => {
                    let field = if msg.contains("castling") {
                        FenField::Castling
                    } else if msg.contains("en-passant") {
                        FenField::EnPassant
                    } else {
                        FenField::Placement
                    };
                    err(field, msg)
                }
                other => other,
            },
        )
    }

    /// Canonical FEN: single spaces, castling in `KQkq` order.
    pub fn to_fen(&self) -> String {
        let mut out = String::with_capacity(90);
        for rank in (0..8).rev() {
            let mut empty = 0;
            for file in 0..8 {
                match self.piece_at(Square::from_file_rank(file, rank)) {
                    None => empty += 1,
                    Some(p) => {
                        if empty > 0 {
                            write!(out, "{empty}").unwrap();
                            empty = 0;
                        }
                        out.push(p.fen_char());
                    }
                }
            }
            if empty > 0 {
                write!(out, "{empty}").unwrap();
            }
            if rank > 0 {
                out.push('/');
            }
        }
        write!(
            out,
            " {} {} {} {} {}",
            self.side_to_move().fen_char(),
            self.castling(),
            self.en_passant()
                .map_or_else(|| "-".to_string(), |s| s.to_string()),
            self.halfmove_clock(),
            self.fullmove_number()
        )
        .unwrap();
        out
    }
}

fn parse_placement(field: &str) -> Result<[Option<Piece>; 64], ChessError> {
    let ranks: Vec<&str> = field.split('/').collect();
    if ranks.len() != 8 {
        return Err(err(
            FenField::Placement,
            format!("expected 8 ranks, found {}", ranks.len()),
        ));
    }
    let mut placement = [None; 64];
    for (i, text) in ranks.iter().enumerate() {
        let rank = 7 - i as u8;
        let mut file = 0u8;
        for c in text.chars() {
            if let Some(d) = c.to_digit(10) {
                if !(1..=8).contains(&d) {
                    return Err(err(FenField::Placement, format!("bad empty-run `{c}`")));
                }
                file += d as u8;
            } else {
                let piece = Piece::from_fen_char(c).ok_or_else(|| {
                    err(FenField::Placement, format!("illegal piece letter `{c}`"))
                })?;
                if file >= 8 {
                    return Err(err(
                        FenField::Placement,
                        format!("rank {} longer than 8 squares", rank + 1),
                    ));
                }
                placement[Square::from_file_rank(file, rank).index()] = Some(piece);
                file += 1;
            }
            if file > 8 {
                return Err(err(
                    FenField::Placement,
                    format!("rank {} longer than 8 squares", rank + 1),
                ));
            }
        }
        if file != 8 {
            return Err(err(
                FenField::Placement,
                format!("rank {} has {file} squares, expected 8", rank + 1),
            ));
        }
    }
    Ok(placement)
}

fn parse_castling(field: &str) -> Result<CastlingRights, ChessError> {
    if field == "-" {
        return Ok(CastlingRights::NONE);
    }
    let mut rights = CastlingRights::NONE;
    for c in field.chars() {
        let flag = match c {
            'K' => CastlingRights::WHITE_KING,
            'Q' => CastlingRights::WHITE_QUEEN,
            'k' => CastlingRights::BLACK_KING,
            'q' => CastlingRights::BLACK_QUEEN,
            _ => return Err(err(FenField::Castling, format!("unexpected `{c}`"))),
        };
        if rights.has(flag) {
            return Err(err(FenField::Castling, format!("duplicate `{c}`")));
        }
        rights.insert(flag);
    }
    Ok(rights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::board::STARTPOS_FEN;

    #[test]
    fn startpos_contents() {
        let b = Board::from_fen(STARTPOS_FEN).unwrap();
        assert_eq!(b.piece_count(), 32);
        assert_eq!(b.side_to_move(), Color::White);
        assert_eq!(b.castling(), CastlingRights::ALL);
        assert_eq!(b.to_fen(), STARTPOS_FEN);
    }

    #[test]
    fn rejects_kingless_board() {
        let e = Board::from_fen("8/8/8/8/8/8/8/8 w - - 0 1").unwrap_err();
        assert!(e.to_string().contains("king"), "{e}");
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("8/8/8/8/8/8/8/K6k w - - 0", FenField::FieldCount),
            ("8/8/8/8/8/8/8/K6x w - - 0 1", FenField::Placement),
            ("8/8/8/8/8/8/8/K5k w - - 0 1", FenField::Placement),
            ("8/8/8/8/8/8/8/K7k w - - 0 1", FenField::Placement),
            ("8/8/8/8/8/8/K6k w - - 0 1", FenField::Placement),
            ("8/8/8/8/8/8/8/K6k x - - 0 1", FenField::SideToMove),
            ("8/8/8/8/8/8/8/K6k w Z - 0 1", FenField::Castling),
            ("8/8/8/8/8/8/8/K6k w K - 0 1", FenField::Castling),
            ("8/8/8/8/8/8/8/K6k w - e4 0 1", FenField::EnPassant),
            ("8/8/8/8/8/8/8/K6k w - - x 1", FenField::HalfmoveClock),
            ("8/8/8/8/8/8/8/K6k w - - 0 0", FenField::FullmoveNumber),
        ];
        for (fen, field) in cases {
            match Board::from_fen(fen) {
                Err(ChessError::Fen { field: f, .. }) => assert_eq!(f, field, "{fen}"),
                other => panic!("{fen}: expected {field:?} error, got {other:?}"),
            }
        }
    }

    #[test]
    fn whitespace_is_canonicalized() {
        let b = Board::from_fen("  k7/8/8/8/8/8/8/K7   w  -  - 3   9 ").unwrap();
        assert_eq!(b.to_fen(), "k7/8/8/8/8/8/8/K7 w - - 3 9");
    }
}
