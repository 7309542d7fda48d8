use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::chess::{Board, PieceKind};
use crate::seed;
use crate::team::GameRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GamePhase {
    Opening,
    Middlegame,
    Endgame,
}

impl GamePhase {
    pub const ALL: [GamePhase; 3] = [GamePhase::Opening, GamePhase::Middlegame, GamePhase::Endgame];
}

/// Endgame once non-pawn material (N, B = 1, R = 2, Q = 4; 24 at the
/// start) is down to 8; otherwise opening through move 10, then
/// middlegame.
pub fn game_phase(board: &Board) -> GamePhase {
    let material: u32 = [
        (PieceKind::Knight, 1),
        (PieceKind::Bishop, 1),
        (PieceKind::Rook, 2),
        (PieceKind::Queen, 4),
    ]
    .iter()
    .map(|&(k, w)| board.kind_bb(k).count_ones() * w)
    .sum();
    if material <= 8 {
        GamePhase::Endgame
    } else if board.fullmove_number() <= 10 {
        GamePhase::Opening
    } else {
        GamePhase::Middlegame
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSample {
    pub board: Board,
    pub game_id: String,
    /// Moves played since the opening position.
    pub ply: usize,
    pub phase: GamePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCount {
    pub phase: GamePhase,
    pub available: usize,
    pub taken: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRecipe {
    pub seed: u64,
    pub requested: usize,
    pub games: usize,
    pub phases: Vec<PhaseCount>,
}

/// Draws up to `n` distinct positions from the games, an equal share per
/// phase. A phase short of its share gives the remainder to the others.
/// Positions come back in game order.
pub fn sample_positions(
    records: &[GameRecord],
    n: usize,
    seed: u64,
) -> Result<(Vec<PositionSample>, SamplingRecipe), AnalysisError> {
    let mut pools: [Vec<PositionSample>; 3] = Default::default();
    let mut seen = std::collections::HashSet::new();
    for rec in records {
        let replay_err = |message: String| AnalysisError::Replay {
            game_id: rec.game_id.clone(),
            message,
        };
        let mut board = Board::from_fen(&rec.opening_fen).map_err(|e| replay_err(e.to_string()))?;
        for ply in 0..=rec.moves.len() {
            if ply > 0 {
                board = board
                    .apply_move(rec.moves[ply - 1])
                    .map_err(|e| replay_err(e.to_string()))?;
            }
            if !seen.insert(board.to_fen()) {
                continue;
            }
            let phase = game_phase(&board);
            pools[phase as usize].push(PositionSample {
                board: board.clone(),
                game_id: rec.game_id.clone(),
                ply,
                phase,
            });
        }
    }

    let available: Vec<usize> = pools.iter().map(Vec::len).collect();
    let mut quota = [0usize; 3];
    let mut left = n.min(available.iter().sum());
    while left > 0 {
        let open: Vec<usize> = (0..3).filter(|&p| quota[p] < available[p]).collect();
        let share = (left / open.len()).max(1);
        for &p in &open {
            let take = share.min(available[p] - quota[p]).min(left);
            quota[p] += take;
            left -= take;
        }
    }

    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (p, pool) in pools.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[p as u64]));
        chosen.extend(
            index::sample(&mut rng, pool.len(), quota[p])
                .into_iter()
                .map(|i| (p, i)),
        );
    }
    let mut out: Vec<PositionSample> = chosen.into_iter().map(|(p, i)| pools[p][i].clone()).collect();
    let order: std::collections::HashMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.game_id.as_str(), i))
        .collect();
    out.sort_by_key(|s| (order[s.game_id.as_str()], s.ply));
    let recipe = SamplingRecipe {
        seed,
        requested: n,
        games: records.len(),
        phases: GamePhase::ALL
            .iter()
            .map(|&phase| PhaseCount {
                phase,
                available: available[phase as usize],
                taken: quota[phase as usize],
            })
            .collect(),
    };
    Ok((out, recipe))
}
