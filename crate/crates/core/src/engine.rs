//! The engine abstraction shared by built-in engines and UCI processes, plus
//! engine references as they appear in configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builtin::{BuiltinEngine, BuiltinEngineSpec, EvalProfile, Specialist, SpecialistSpec};
use crate::chess::{Board, Move};
use crate::uci::{EngineHandle, Timeouts};

/// Magnitude used to place mate scores above every centipawn score.
pub const MATE_VALUE: i64 = 100_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("failed to spawn engine `{path}`: {source}")]
    Spawn {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("engine timed out after {0:?} waiting for {1}")]
    Timeout(Duration, String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("engine process is dead")]
    Dead,
    #[error("engine is busy with another search")]
    Busy,
    #[error("engine `{engine}` returned illegal move {mv} in {fen}")]
    IllegalMove {
        engine: String,
        mv: String,
        fen: String,
    },
    #[error("engine queried at a terminal position: {0}")]
    TerminalPosition(String),
    #[error("engine I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid engine reference: {0}")]
    Reference(String),
    #[error("manager network: {0}")]
    Model(String),
}

/// Search limits; at least one is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchLimits {
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub nodes: Option<u64>,
    #[serde(default)]
    pub movetime: Option<u64>,
}

impl SearchLimits {
    pub fn depth(depth: u32) -> SearchLimits {
        SearchLimits {
            depth: Some(depth),
            nodes: None,
            movetime: None,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.depth.is_none() && self.nodes.is_none() && self.movetime.is_none() {
            return Err(EngineError::Reference(
                "search limits must set at least one of depth, nodes, movetime".into(),
            ));
        }
        if self.depth == Some(0) {
            return Err(EngineError::Reference("search depth must be >= 1".into()));
        }
        Ok(())
    }

    /// Arguments for the UCI `go` command.
    pub fn go_args(&self) -> String {
        let mut parts = Vec::new();
        if let Some(d) = self.depth {
            parts.push(format!("depth {d}"));
        }
        if let Some(n) = self.nodes {
            parts.push(format!("nodes {n}"));
        }
        if let Some(t) = self.movetime {
            parts.push(format!("movetime {t}"));
        }
        parts.join(" ")
    }
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits::depth(1)
    }
}

/// An engine score from the side to move's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum EvalScore {
    Centipawns(i32),
    /// Mate in this many moves; negative when the side to move is mated.
    /// Never zero.
    Mate(i32),
}

impl EvalScore {
    /// Total order over scores: mates map to ±(100000 − plies to mate).
    pub fn comparable(self) -> i64 {
        match self {
            EvalScore::Centipawns(cp) => cp as i64,
            EvalScore::Mate(n) if n > 0 => MATE_VALUE - (2 * n as i64 - 1),
            EvalScore::Mate(n) => -(MATE_VALUE - 2 * (n as i64).abs()),
        }
    }
}

impl fmt::Display for EvalScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalScore::Centipawns(cp) => write!(f, "cp {cp}"),
            EvalScore::Mate(n) => write!(f, "mate {n}"),
        }
    }
}

/// Anything that can recommend and score moves.
///
/// Callers never query an engine at a terminal position.
pub trait Engine: Send {
    fn name(&self) -> &str;

    /// Recommended move at `board`; `ply` is the game ply, which seeded
    /// random engines fold into their choice.
    fn best_move(&mut self, board: &Board, ply: u32) -> Result<Move, EngineError>;

    /// Score of `board` from its side to move's perspective.
    fn evaluate(&mut self, board: &Board) -> Result<EvalScore, EngineError>;

    /// Comparable score of playing `mv` at `board`, from the mover's
    /// perspective: the child position is evaluated and negated. Terminal
    /// children are scored directly (mate = `MATE_VALUE`, stalemate = 0).
    fn score_move(&mut self, board: &Board, mv: Move) -> Result<i64, EngineError> {
        let child = board.play_checked(mv)?;
        if let Some(v) = terminal_child_score(&child) {
            return Ok(v);
        }
        Ok(-self.evaluate(&child)?.comparable())
    }

    fn is_deterministic(&self) -> bool;

    /// Called before each game.
    fn new_game(&mut self) -> Result<(), EngineError> {
        Ok(())
    }
}

/// Mover-perspective score of a child with no legal moves.
pub(crate) fn terminal_child_score(child: &Board) -> Option<i64> {
    if child.has_legal_move() {
        None
    } else if child.is_check() {
        Some(MATE_VALUE)
    } else {
        Some(0)
    }
}

impl Board {
    pub(crate) fn play_checked(&self, mv: Move) -> Result<Board, EngineError> {
        self.apply_move(mv).map_err(|e| EngineError::IllegalMove {
            engine: String::new(),
            mv: mv.to_uci(),
            fen: e.to_string(),
        })
    }
}

/// Asks `engine` for a move and checks it against the legal move list.
pub fn checked_best_move(
    engine: &mut dyn Engine,
    board: &Board,
    ply: u32,
) -> Result<Move, EngineError> {
    if !board.has_legal_move() {
        return Err(EngineError::TerminalPosition(board.to_fen()));
    }
    let mv = engine.best_move(board, ply)?;
    if board.legal_moves().contains(&mv) {
        Ok(mv)
    } else {
        Err(EngineError::IllegalMove {
            engine: engine.name().to_string(),
            mv: mv.to_uci(),
            fen: board.to_fen(),
        })
    }
}

/// Engine reference as written in configuration. Built-ins use URI-like
/// names such as `builtin:alphabeta?depth=2&profile=mstyle`; anything else
/// is an executable speaking UCI.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineRef {
    Builtin(BuiltinEngineSpec),
    Specialist(SpecialistSpec),
    Uci {
        path: PathBuf,
        options: BTreeMap<String, String>,
        limits: SearchLimits,
        timeouts: Timeouts,
    },
}

/// Environment variable listing directories searched for bare engine names.
pub const ENGINE_PATH_VAR: &str = "TEAMCHESS_ENGINE_PATH";

impl EngineRef {
    /// Parses a reference. `profiles` resolves custom profile names in
    /// addition to the built-in ones.
    pub fn parse(
        text: &str,
        profiles: &BTreeMap<String, EvalProfile>,
    ) -> Result<EngineRef, EngineError> {
        if let Some(rest) = text.strip_prefix("builtin:") {
            let (kind, query) = rest.split_once('?').unwrap_or((rest, ""));
            let mut params = BTreeMap::new();
            for pair in query.split('&').filter(|p| !p.is_empty()) {
                let (k, v) = pair.split_once('=').ok_or_else(|| {
                    EngineError::Reference(format!("`{pair}` in `{text}` is not key=value"))
                })?;
                if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(EngineError::Reference(format!("duplicate `{k}` in `{text}`")));
                }
            }
            if kind == "specialist" {
                return SpecialistSpec::from_params(&params, profiles).map(EngineRef::Specialist);
            }
            return BuiltinEngineSpec::from_params(kind, &params, profiles).map(EngineRef::Builtin);
        }
        Ok(EngineRef::Uci {
            path: resolve_engine_path(text),
            options: BTreeMap::new(),
            limits: SearchLimits::default(),
            timeouts: Timeouts::default(),
        })
    }

    pub fn name(&self) -> String {
        match self {
            EngineRef::Builtin(s) => s.name(),
            EngineRef::Specialist(s) => s.name(),
            EngineRef::Uci { path, .. } => path.display().to_string(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, EngineRef::Uci { .. })
    }

    pub fn instantiate(&self) -> Result<Box<dyn Engine>, EngineError> {
        Ok(match self {
            EngineRef::Builtin(spec) => Box::new(BuiltinEngine::new(spec.clone())),
            EngineRef::Specialist(spec) => Box::new(Specialist::new(spec.clone())),
            EngineRef::Uci {
                path,
                options,
                limits,
                timeouts,
            } => Box::new(EngineHandle::spawn_with(path, options, *limits, *timeouts)?),
        })
    }
}

fn resolve_engine_path(text: &str) -> PathBuf {
    let direct = PathBuf::from(text);
    if direct.components().count() > 1 || direct.exists() {
        return direct;
    }
    if let Some(dirs) = std::env::var_os(ENGINE_PATH_VAR) {
        for dir in std::env::split_paths(&dirs) {
            let candidate = dir.join(text);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    direct
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mate_scores_order_above_centipawns() {
        let mate1 = EvalScore::Mate(1).comparable();
        let mate3 = EvalScore::Mate(3).comparable();
        let mated2 = EvalScore::Mate(-2).comparable();
        assert!(mate1 > mate3);
        assert!(mate3 > EvalScore::Centipawns(5000).comparable());
        assert!(mated2 < EvalScore::Centipawns(-5000).comparable());
        assert!(EvalScore::Mate(-5).comparable() > mated2);
    }

    #[test]
    fn go_arguments() {
        let lim = SearchLimits {
            depth: Some(3),
            nodes: None,
            movetime: Some(100),
        };
        assert_eq!(lim.go_args(), "depth 3 movetime 100");
        assert!(SearchLimits {
            depth: None,
            nodes: None,
            movetime: None
        }
        .validate()
        .is_err());
    }

    #[test]
    fn parses_builtin_references() {
        let none = BTreeMap::new();
        let r = EngineRef::parse("builtin:alphabeta?depth=2&profile=mstyle", &none).unwrap();
        assert_eq!(r.name(), "builtin:alphabeta?depth=2&profile=mstyle");
        assert!(EngineRef::parse("builtin:alphabeta?depth=0", &none).is_err());
        assert!(EngineRef::parse("builtin:alphabeta?profile=nope", &none).is_err());
        assert!(EngineRef::parse("builtin:warp", &none).is_err());
        assert!(matches!(
            EngineRef::parse("/usr/bin/stockfish", &none).unwrap(),
            EngineRef::Uci { .. }
        ));
    }
}
