use serde::{Deserialize, Serialize};

use crate::chess::{
    bishop_attacks, knight_attacks, queen_attacks, rook_attacks, Board, Color, PieceKind, Square,
};

/// Static evaluation weights.
///
/// The king's material weight is ignored: kings are never captured, so the
/// evaluation never trades one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct EvalProfile {
    pub name: String,
    /// Pawn, knight, bishop, rook, queen, king (ignored), in centipawns.
    pub material: [i32; 6],
    /// Bonus per piece kind and square, from White's side (a1 = 0). Black
    /// reads the rank-mirrored entry.
    pub piece_square: Option<Box<[[i32; 64]; 6]>>,
    /// Centipawns per pseudo-legal target square of minor and major pieces.
    pub mobility: i32,
    /// Bonus for having the move.
    pub tempo: i32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    name: String,
    material: [i32; 6],
    #[serde(default)]
    piece_square: Option<Vec<Vec<i32>>>,
    mobility: i32,
    tempo: i32,
}

impl TryFrom<RawProfile> for EvalProfile {
    type Error = String;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        let piece_square = match raw.piece_square {
            None => None,
            Some(rows) => {
                if rows.len() != 6 {
                    return Err(format!(
                        "profile `{}`: piece_square needs 6 tables, found {}",
                        raw.name,
                        rows.len()
                    ));
                }
                let mut tables = Box::new([[0; 64]; 6]);
                for (k, row) in rows.iter().enumerate() {
                    if row.len() != 64 {
                        return Err(format!(
                            "profile `{}`: piece_square table {k} has {} entries, expected 64",
                            raw.name,
                            row.len()
                        ));
                    }
                    tables[k].copy_from_slice(row);
                }
                Some(tables)
            }
        };
        Ok(EvalProfile {
            name: raw.name,
            material: raw.material,
            piece_square,
            mobility: raw.mobility,
            tempo: raw.tempo,
        })
    }
}

impl From<EvalProfile> for RawProfile {
    fn from(p: EvalProfile) -> Self {
        RawProfile {
            name: p.name,
            material: p.material,
            piece_square: p
                .piece_square
                .map(|t| t.iter().map(|row| row.to_vec()).collect()),
            mobility: p.mobility,
            tempo: p.tempo,
        }
    }
}

const MATERIAL: [i32; 6] = [100, 320, 330, 500, 900, 0];

// Tables are written as seen from White with rank 8 on top.
#[rustfmt::skip]
const PST_VISUAL: [[i32; 64]; 6] = [
    [ // pawn
         0,  0,  0,  0,  0,  0,  0,  0,
        50, 50, 50, 50, 50, 50, 50, 50,
        10, 10, 20, 30, 30, 20, 10, 10,
         5,  5, 10, 25, 25, 10,  5,  5,
         0,  0,  0, 20, 20,  0,  0,  0,
         5, -5,-10,  0,  0,-10, -5,  5,
         5, 10, 10,-20,-20, 10, 10,  5,
         0,  0,  0,  0,  0,  0,  0,  0,
    ],
    [ // knight
        -50,-40,-30,-30,-30,-30,-40,-50,
        -40,-20,  0,  0,  0,  0,-20,-40,
        -30,  0, 10, 15, 15, 10,  0,-30,
        -30,  5, 15, 20, 20, 15,  5,-30,
        -30,  0, 15, 20, 20, 15,  0,-30,
        -30,  5, 10, 15, 15, 10,  5,-30,
        -40,-20,  0,  5,  5,  0,-20,-40,
        -50,-40,-30,-30,-30,-30,-40,-50,
    ],
    [ // bishop
        -20,-10,-10,-10,-10,-10,-10,-20,
        -10,  0,  0,  0,  0,  0,  0,-10,
        -10,  0,  5, 10, 10,  5,  0,-10,
        -10,  5,  5, 10, 10,  5,  5,-10,
        -10,  0, 10, 10, 10, 10,  0,-10,
        -10, 10, 10, 10, 10, 10, 10,-10,
        -10,  5,  0,  0,  0,  0,  5,-10,
        -20,-10,-10,-10,-10,-10,-10,-20,
    ],
    [ // rook
         0,  0,  0,  0,  0,  0,  0,  0,
         5, 10, 10, 10, 10, 10, 10,  5,
        -5,  0,  0,  0,  0,  0,  0, -5,
        -5,  0,  0,  0,  0,  0,  0, -5,
        -5,  0,  0,  0,  0,  0,  0, -5,
        -5,  0,  0,  0,  0,  0,  0, -5,
        -5,  0,  0,  0,  0,  0,  0, -5,
         0,  0,  0,  5,  5,  0,  0,  0,
    ],
    [ // queen
        -20,-10,-10, -5, -5,-10,-10,-20,
        -10,  0,  0,  0,  0,  0,  0,-10,
        -10,  0,  5,  5,  5,  5,  0,-10,
         -5,  0,  5,  5,  5,  5,  0, -5,
          0,  0,  5,  5,  5,  5,  0, -5,
        -10,  5,  5,  5,  5,  5,  0,-10,
        -10,  0,  5,  0,  0,  0,  0,-10,
        -20,-10,-10, -5, -5,-10,-10,-20,
    ],
    [ // king, middlegame
        -30,-40,-40,-50,-50,-40,-40,-30,
        -30,-40,-40,-50,-50,-40,-40,-30,
        -30,-40,-40,-50,-50,-40,-40,-30,
        -30,-40,-40,-50,-50,-40,-40,-30,
        -20,-30,-30,-40,-40,-30,-30,-20,
        -10,-20,-20,-20,-20,-20,-20,-10,
         20, 20,  0,  0,  0,  0, 20, 20,
         20, 30, 10,  0,  0, 10, 30, 20,
    ],
];

fn standard_tables(scale_num: i32, scale_den: i32) -> Box<[[i32; 64]; 6]> {
    let mut out = Box::new([[0; 64]; 6]);
    for (k, visual) in PST_VISUAL.iter().enumerate() {
        for sq in 0..64 {
            let rank = sq / 8;
            let file = sq % 8;
            out[k][sq] = visual[(7 - rank) * 8 + file] * scale_num / scale_den;
        }
    }
    out
}

impl EvalProfile {
    /// Pure material.
    pub fn material() -> EvalProfile {
        EvalProfile {
            name: "material".into(),
            material: MATERIAL,
            piece_square: None,
            mobility: 0,
            tempo: 0,
        }
    }

    /// Material plus mobility: an activity-driven style.
    pub fn lstyle() -> EvalProfile {
        EvalProfile {
            name: "lstyle".into(),
            material: MATERIAL,
            piece_square: None,
            mobility: 6,
            tempo: 0,
        }
    }

    /// Material plus piece-square tables and tempo: a positional style.
    pub fn mstyle() -> EvalProfile {
        EvalProfile {
            name: "mstyle".into(),
            material: MATERIAL,
            piece_square: Some(standard_tables(1, 1)),
            mobility: 0,
            tempo: 15,
        }
    }

    /// Balanced blend used for adversaries.
    pub fn neutral() -> EvalProfile {
        EvalProfile {
            name: "neutral".into(),
            material: MATERIAL,
            piece_square: Some(standard_tables(1, 2)),
            mobility: 3,
            tempo: 0,
        }
    }

    pub fn by_name(name: &str) -> Option<EvalProfile> {
        Some(match name {
            "material" => EvalProfile::material(),
            "lstyle" => EvalProfile::lstyle(),
            "mstyle" => EvalProfile::mstyle(),
            "neutral" => EvalProfile::neutral(),
            _ => return None,
        })
    }

    /// Static evaluation in centipawns from the side to move's perspective.
    pub fn evaluate(&self, board: &Board) -> i32 {
        let mut white_score = 0;
        let occ = board.occupied();
        for color in Color::ALL {
            let sign = if color == Color::White { 1 } else { -1 };
            let mut side = 0;
            for kind in PieceKind::ALL {
                let mut bb = board.pieces(color, kind);
                let weight = if kind == PieceKind::King {
                    0
                } else {
                    self.material[kind.index()]
                };
                side += weight * bb.count_ones() as i32;
                if let Some(pst) = &self.piece_square {
                    let table = &pst[kind.index()];
                    while bb != 0 {
                        let sq = bb.trailing_zeros() as usize;
                        bb &= bb - 1;
                        let rel = if color == Color::White { sq } else { sq ^ 56 };
                        side += table[rel];
                    }
                }
            }
            if self.mobility != 0 {
                let own = board.color_bb(color);
                let mut count = 0;
                for (kind, attacks) in [
                    (PieceKind::Knight, knight_like as fn(Square, u64) -> u64),
                    (PieceKind::Bishop, bishop_attacks),
                    (PieceKind::Rook, rook_attacks),
                    (PieceKind::Queen, queen_attacks),
                ] {
                    let mut bb = board.pieces(color, kind);
                    while bb != 0 {
                        let sq = Square::new(bb.trailing_zeros() as u8);
                        bb &= bb - 1;
                        count += (attacks(sq, occ) & !own).count_ones() as i32;
                    }
                }
                side += self.mobility * count;
            }
            white_score += sign * side;
        }
        let stm = board.side_to_move();
        let score = if stm == Color::White {
            white_score
        } else {
            -white_score
        };
        score + self.tempo
    }

    /// Material balance (no positional terms) for `color`.
    pub fn material_balance(&self, board: &Board, color: Color) -> i32 {
        material_balance_with(&self.material, board, color)
    }
}

fn knight_like(sq: Square, _occ: u64) -> u64 {
    knight_attacks(sq)
}

pub(crate) fn material_balance_with(weights: &[i32; 6], board: &Board, color: Color) -> i32 {
    let mut total = 0;
    for kind in PieceKind::ALL.iter().take(5) {
        let w = weights[kind.index()];
        total += w * board.pieces(color, *kind).count_ones() as i32;
        total -= w * board.pieces(color.opponent(), *kind).count_ones() as i32;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn startpos_is_symmetric() {
        let b = Board::startpos();
        for p in [
            EvalProfile::material(),
            EvalProfile::lstyle(),
            EvalProfile::neutral(),
        ] {
            assert_eq!(p.evaluate(&b), 0, "{}", p.name);
        }
        // tempo is the only asymmetric term
        assert_eq!(EvalProfile::mstyle().evaluate(&b), 15);
    }

    #[test]
    fn extra_knight_is_worth_its_weight() {
        let b = Board::from_fen("k7/8/8/8/8/8/8/KN6 w - - 0 1").unwrap();
        assert_eq!(EvalProfile::material().evaluate(&b), 320);
        let b = Board::from_fen("k7/8/8/8/8/8/8/KN6 b - - 0 1").unwrap();
        assert_eq!(EvalProfile::material().evaluate(&b), -320);
    }

    #[test]
    fn profile_json_round_trip() {
        let p = EvalProfile::mstyle();
        let json = serde_json::to_string(&p).unwrap();
        let back: EvalProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"name":"x","material":[1,2,3,4,5,0],"piece_square":[[1]],"mobility":0,"tempo":0}"#;
        assert!(serde_json::from_str::<EvalProfile>(bad).is_err());
    }
}
