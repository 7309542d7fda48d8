use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::board::Board;
use super::types::CastlingRights;

/// Permutes all 64 square contents uniformly at random under `seed`.
///
/// The piece multiset and side to move are kept; castling rights and the
/// en-passant square are cleared, and check status follows from the new
/// placement. The result may be an unreachable position and is meant only
/// for analysis controls, never for play.
pub fn shuffle_position(board: &Board, seed: u64) -> Board {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placement = *board.placement();
    placement.shuffle(&mut rng);
    Board::from_parts_unchecked(
        placement,
        board.side_to_move(),
        CastlingRights::NONE,
        None,
        board.halfmove_clock(),
        board.fullmove_number(),
    )
}
