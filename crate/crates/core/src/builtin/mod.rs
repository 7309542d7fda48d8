//! Built-in engines of tunable strength and style.
//!
//! These stand in for external engines so that every experiment runs
//! without binaries. All of them are pure functions of their spec and the
//! position (plus the game ply for the random engine).

mod profile;
pub mod search;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use profile::EvalProfile;

use crate::chess::{Board, Move};
use crate::engine::{Engine, EngineError, EvalScore};
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinKind {
    Random,
    Greedy,
    AlphaBeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinEngineSpec {
    pub kind: BuiltinKind,
    /// Search depth in plies; only meaningful for alpha-beta (>= 1).
    pub depth: u32,
    pub profile: EvalProfile,
    pub seed: u64,
}

impl BuiltinEngineSpec {
    pub fn random(seed: u64) -> BuiltinEngineSpec {
        BuiltinEngineSpec {
            kind: BuiltinKind::Random,
            depth: 0,
            profile: EvalProfile::material(),
            seed,
        }
    }

    pub fn greedy(profile: EvalProfile) -> BuiltinEngineSpec {
        BuiltinEngineSpec {
            kind: BuiltinKind::Greedy,
            depth: 1,
            profile,
            seed: 0,
        }
    }

    pub fn alphabeta(depth: u32, profile: EvalProfile) -> BuiltinEngineSpec {
        assert!(depth >= 1, "alpha-beta depth must be at least 1");
        BuiltinEngineSpec {
            kind: BuiltinKind::AlphaBeta,
            depth,
            profile,
            seed: 0,
        }
    }

    /// Default member with an activity-driven style.
    pub fn default_lstyle() -> BuiltinEngineSpec {
        Self::alphabeta(2, EvalProfile::lstyle())
    }

    /// Default member with a positional style.
    pub fn default_mstyle() -> BuiltinEngineSpec {
        Self::alphabeta(2, EvalProfile::mstyle())
    }

    /// Default adversary, one ply deeper than the members.
    pub fn default_adversary() -> BuiltinEngineSpec {
        Self::alphabeta(3, EvalProfile::neutral())
    }

    pub(crate) fn from_params(
        kind: &str,
        params: &BTreeMap<String, String>,
        profiles: &BTreeMap<String, EvalProfile>,
    ) -> Result<BuiltinEngineSpec, EngineError> {
        let bad = |msg: String| EngineError::Reference(msg);
        let kind = match kind {
            "random" => BuiltinKind::Random,
            "greedy" => BuiltinKind::Greedy,
            "alphabeta" => BuiltinKind::AlphaBeta,
            other => return Err(bad(format!("unknown builtin engine `{other}`"))),
        };
        let allowed: &[&str] = match kind {
            BuiltinKind::Random => &["seed"],
            BuiltinKind::Greedy => &["profile"],
            BuiltinKind::AlphaBeta => &["depth", "profile"],
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(bad(format!("unknown parameter `{k}`")));
        }
        let profile = resolve_profile(params.get("profile").map(String::as_str), profiles)?;
        let seed = parse_num(params, "seed")?.unwrap_or(0);
        Ok(match kind {
            BuiltinKind::Random => Self::random(seed),
            BuiltinKind::Greedy => Self::greedy(profile),
            BuiltinKind::AlphaBeta => {
                let depth = parse_num(params, "depth")?
                    .ok_or_else(|| bad("alphabeta needs depth=N".into()))?;
                if depth == 0 || depth > 8 {
                    return Err(bad(format!("alphabeta depth {depth} outside 1..=8")));
                }
                Self::alphabeta(depth as u32, profile)
            }
        })
    }

    /// Canonical URI-like name.
    pub fn name(&self) -> String {
        match self.kind {
            BuiltinKind::Random => format!("builtin:random?seed={}", self.seed),
            BuiltinKind::Greedy => format!("builtin:greedy?profile={}", self.profile.name),
            BuiltinKind::AlphaBeta => format!(
                "builtin:alphabeta?depth={}&profile={}",
                self.depth, self.profile.name
            ),
        }
    }
}

fn resolve_profile(
    name: Option<&str>,
    profiles: &BTreeMap<String, EvalProfile>,
) -> Result<EvalProfile, EngineError> {
    let name = name.unwrap_or("material");
    profiles
        .get(name)
        .cloned()
        .or_else(|| EvalProfile::by_name(name))
        .ok_or_else(|| EngineError::Reference(format!("unknown profile `{name}`")))
}

fn parse_num(params: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>, EngineError> {
    params
        .get(key)
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| EngineError::Reference(format!("`{key}={v}` is not a number")))
        })
        .transpose()
}

/// Uniform pick among the sorted legal moves, keyed on (seed, ply, position).
pub fn random_move(board: &Board, seed: u64, ply: u32) -> Option<Move> {
    let mut moves = board.legal_moves();
    if moves.is_empty() {
        return None;
    }
    moves.sort_unstable();
    let h = mix(mix(seed, board.hash()), ply as u64);
    Some(moves[(h % moves.len() as u64) as usize])
}

/// Recommended move for a non-terminal position.
pub fn recommend(spec: &BuiltinEngineSpec, board: &Board, ply: u32) -> Result<Move, EngineError> {
    let found = match spec.kind {
        BuiltinKind::Random => random_move(board, spec.seed, ply),
        BuiltinKind::Greedy => search::search(board, 1, &spec.profile).map(|(m, _)| m),
        BuiltinKind::AlphaBeta => search::search(board, spec.depth, &spec.profile).map(|(m, _)| m),
    };
    found.ok_or_else(|| EngineError::TerminalPosition(board.to_fen()))
}

/// Position score for the side to move: negamax value at the configured depth
/// for alpha-beta, static evaluation for greedy, zero for random.
pub fn evaluate(spec: &BuiltinEngineSpec, board: &Board) -> Result<EvalScore, EngineError> {
    let raw = match spec.kind {
        BuiltinKind::Random => Some(0),
        BuiltinKind::Greedy => search::value(board, 0, &spec.profile),
        BuiltinKind::AlphaBeta => search::value(board, spec.depth, &spec.profile),
    };
    raw.map(to_eval_score)
        .ok_or_else(|| EngineError::TerminalPosition(board.to_fen()))
}

pub(crate) fn to_eval_score(v: i32) -> EvalScore {
    const WINDOW: i32 = 1000;
    if v >= search::MATE - WINDOW {
        let plies = search::MATE - v;
        EvalScore::Mate((plies + 1) / 2)
    } else if v <= -(search::MATE - WINDOW) {
        let plies = search::MATE + v;
        EvalScore::Mate(-(plies / 2).max(1))
    } else {
        EvalScore::Centipawns(v)
    }
}

/// A built-in engine behind the [`Engine`] interface.
#[derive(Debug, Clone)]
pub struct BuiltinEngine {
    spec: BuiltinEngineSpec,
    name: String,
}

impl BuiltinEngine {
    pub fn new(spec: BuiltinEngineSpec) -> BuiltinEngine {
        let name = spec.name();
        BuiltinEngine { spec, name }
    }

    pub fn spec(&self) -> &BuiltinEngineSpec {
        &self.spec
    }
}

impl Engine for BuiltinEngine {
    fn name(&self) -> &str {
        &self.name
    }

    fn best_move(&mut self, board: &Board, ply: u32) -> Result<Move, EngineError> {
        recommend(&self.spec, board, ply)
    }

    fn evaluate(&mut self, board: &Board) -> Result<EvalScore, EngineError> {
        evaluate(&self.spec, board)
    }

    /// Scores the move exactly as this engine ranks root moves, so an expert
    /// built from a member's spec agrees with that member.
    fn score_move(&mut self, board: &Board, mv: Move) -> Result<i64, EngineError> {
        if !board.legal_moves().contains(&mv) {
            return Err(EngineError::IllegalMove {
                engine: self.name.clone(),
                mv: mv.to_uci(),
                fen: board.to_fen(),
            });
        }
        let depth = match self.spec.kind {
            BuiltinKind::Random => return Ok(0),
            BuiltinKind::Greedy => 1,
            BuiltinKind::AlphaBeta => self.spec.depth,
        };
        Ok(search::move_value(board, mv, depth, &self.spec.profile) as i64)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Which material situation a specialist is strong in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Advantage {
    Ahead,
    Behind,
}

/// How a specialist plays outside its strong situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakPlay {
    /// Seeded uniformly random legal move.
    Random,
    /// The move its own strong search rates lowest.
    Worst,
}

/// An engine that plays its strong spec when the mover's material balance
/// is level or matches `strong_when`, and weak moves otherwise.
///
/// Two specialists with opposite `strong_when` and the same strong spec
/// agree at level material and disagree elsewhere, with the better member
/// known by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialistSpec {
    pub strong_when: Advantage,
    pub strong: BuiltinEngineSpec,
    pub weak: WeakPlay,
    pub seed: u64,
}

impl SpecialistSpec {
    pub(crate) fn from_params(
        params: &BTreeMap<String, String>,
        profiles: &BTreeMap<String, EvalProfile>,
    ) -> Result<SpecialistSpec, EngineError> {
        let bad = |msg: String| EngineError::Reference(msg);
        if let Some(k) = params
            .keys()
            .find(|k| !["when", "depth", "profile", "weak", "seed"].contains(&k.as_str()))
        {
            return Err(bad(format!("unknown parameter `{k}`")));
        }
        let strong_when = match params.get("when").map(String::as_str) {
            Some("ahead") => Advantage::Ahead,
            Some("behind") => Advantage::Behind,
            _ => return Err(bad("specialist needs when=ahead|behind".into())),
        };
        let depth = parse_num(params, "depth")?.unwrap_or(2);
        if depth == 0 || depth > 8 {
            return Err(bad(format!("specialist depth {depth} outside 1..=8")));
        }
        let profile = resolve_profile(params.get("profile").map(String::as_str), profiles)?;
        let weak = match params.get("weak").map(String::as_str) {
            None | Some("random") => WeakPlay::Random,
            Some("worst") => WeakPlay::Worst,
            Some(other) => return Err(bad(format!("weak must be random|worst, got `{other}`"))),
        };
        Ok(SpecialistSpec {
            strong_when,
            strong: BuiltinEngineSpec::alphabeta(depth as u32, profile),
            weak,
            seed: parse_num(params, "seed")?.unwrap_or(0),
        })
    }

    pub fn name(&self) -> String {
        format!(
            "builtin:specialist?when={}&depth={}&profile={}&weak={}&seed={}",
            match self.strong_when {
                Advantage::Ahead => "ahead",
                Advantage::Behind => "behind",
            },
            self.strong.depth,
            self.strong.profile.name,
            match self.weak {
                WeakPlay::Random => "random",
                WeakPlay::Worst => "worst",
            },
            self.seed
        )
    }

    /// True when this specialist plays its strong engine at `board`.
    pub fn is_strong_at(&self, board: &Board) -> bool {
        let balance = material_balance(board);
        balance == 0
            || match self.strong_when {
                Advantage::Ahead => balance > 0,
                Advantage::Behind => balance < 0,
            }
    }
}

/// Standard material balance (100/320/330/500/900) for the side to move.
pub fn material_balance(board: &Board) -> i32 {
    profile::material_balance_with(
        &EvalProfile::material().material,
        board,
        board.side_to_move(),
    )
}

#[derive(Debug, Clone)]
pub struct Specialist {
    spec: SpecialistSpec,
    name: String,
}

impl Specialist {
    pub fn new(spec: SpecialistSpec) -> Specialist {
        let name = spec.name();
        Specialist { spec, name }
    }
}

impl Engine for Specialist {
    fn name(&self) -> &str {
        &self.name
    }

    fn best_move(&mut self, board: &Board, ply: u32) -> Result<Move, EngineError> {
        if self.spec.is_strong_at(board) {
            return recommend(&self.spec.strong, board, ply);
        }
        match self.spec.weak {
            WeakPlay::Random => random_move(board, self.spec.seed, ply)
                .ok_or_else(|| EngineError::TerminalPosition(board.to_fen())),
            WeakPlay::Worst => {
                let mut moves = board.legal_moves();
                moves.sort_unstable();
                let strong = &self.spec.strong;
                moves
                    .into_iter()
                    .min_by_key(|&m| search::move_value(board, m, strong.depth, &strong.profile))
                    .ok_or_else(|| EngineError::TerminalPosition(board.to_fen()))
            }
        }
    }

    fn evaluate(&mut self, board: &Board) -> Result<EvalScore, EngineError> {
        evaluate(&self.spec.strong, board)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Engines of increasing expertise: random, greedy, then alpha-beta at
/// depths 1..=`max_depth`, all sharing `profile`.
pub fn strength_ladder(max_depth: u32, profile: &EvalProfile, seed: u64) -> Vec<BuiltinEngineSpec> {
    let mut ladder = vec![
        BuiltinEngineSpec::random(seed),
        BuiltinEngineSpec::greedy(profile.clone()),
    ];
    ladder.extend((1..=max_depth).map(|d| BuiltinEngineSpec::alphabeta(d, profile.clone())));
    ladder
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_takes_hanging_queen() {
        // black queen on d5 capturable by the e4 pawn
        let b = Board::from_fen("4k3/8/8/3q4/4P3/8/8/4K3 w - - 0 1").unwrap();
        let mv = recommend(&BuiltinEngineSpec::greedy(EvalProfile::material()), &b, 0).unwrap();
        assert_eq!(mv.to_uci(), "e4d5");
    }

    #[test]
    fn random_engine_is_reproducible() {
        let spec = BuiltinEngineSpec::random(42);
        let b = Board::startpos();
        let a: Vec<Move> = (0..10).map(|p| recommend(&spec, &b, p).unwrap()).collect();
        let c: Vec<Move> = (0..10).map(|p| recommend(&spec, &b, p).unwrap()).collect();
        assert_eq!(a, c);
        let distinct: std::collections::HashSet<_> = a.iter().collect();
        assert!(distinct.len() > 1, "ply should vary the choice");
    }

    #[test]
    fn evaluation_examples() {
        let ab1 = BuiltinEngineSpec::alphabeta(1, EvalProfile::material());
        assert_eq!(
            evaluate(&ab1, &Board::startpos()).unwrap(),
            EvalScore::Centipawns(0)
        );
        // up a knight, no captures available for either side
        let b = Board::from_fen("k7/8/8/8/8/8/8/KN6 w - - 0 1").unwrap();
        assert_eq!(evaluate(&ab1, &b).unwrap(), EvalScore::Centipawns(320));
        let mate = Board::from_fen("6k1/5ppp/8/8/8/8/8/R5K1 w - - 0 1").unwrap();
        let ab2 = BuiltinEngineSpec::alphabeta(2, EvalProfile::material());
        assert_eq!(evaluate(&ab2, &mate).unwrap(), EvalScore::Mate(1));
        assert_eq!(
            evaluate(&BuiltinEngineSpec::random(1), &mate).unwrap(),
            EvalScore::Centipawns(0)
        );
    }

    #[test]
    fn mated_score_conversion() {
        assert_eq!(to_eval_score(-(search::MATE - 2)), EvalScore::Mate(-1));
        assert_eq!(to_eval_score(search::MATE - 3), EvalScore::Mate(2));
        assert_eq!(to_eval_score(-(search::MATE - 4)), EvalScore::Mate(-2));
    }

    #[test]
    fn ladder_has_distinct_rungs() {
        let ladder = strength_ladder(4, &EvalProfile::material(), 0);
        assert_eq!(ladder.len(), 6);
        let names: std::collections::HashSet<String> = ladder.iter().map(|s| s.name()).collect();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn specialist_strength_follows_material() {
        let even = Board::startpos();
        let up = Board::from_fen("k7/8/8/8/8/8/8/KN6 w - - 0 1").unwrap();
        let down = Board::from_fen("k7/8/8/8/8/8/8/KN6 b - - 0 1").unwrap();
        let ahead = SpecialistSpec {
            strong_when: Advantage::Ahead,
            strong: BuiltinEngineSpec::alphabeta(1, EvalProfile::material()),
            weak: WeakPlay::Random,
            seed: 0,
        };
        assert!(ahead.is_strong_at(&even));
        assert!(ahead.is_strong_at(&up));
        assert!(!ahead.is_strong_at(&down));
    }
}
