//! UCI client over a child process's stdin/stdout.
//!
//! A reader thread forwards stdout lines through a channel so every wait can
//! time out. Any error kills the process and leaves the handle dead; a dead
//! handle rejects everything except [`EngineHandle::shutdown`].

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::chess::{Board, Move};
use crate::engine::{Engine, EngineError, EvalScore, SearchLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timeouts {
    /// `uci`/`uciok` and `isready`/`readyok` exchanges.
    pub handshake_ms: u64,
    /// Added to `movetime` when the search has one.
    pub grace_ms: u64,
    /// Search budget when no `movetime` is set.
    pub search_ms: u64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Timeouts {
            handshake_ms: 10_000,
            grace_ms: 2_000,
            search_ms: 60_000,
        }
    }
}

impl Timeouts {
    fn handshake(&self) -> Duration {
        Duration::from_millis(self.handshake_ms)
    }

    fn search(&self, limits: &SearchLimits) -> Duration {
        Duration::from_millis(match limits.movetime {
            Some(t) => t + self.grace_ms,
            None => self.search_ms,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandleState {
    Spawned,
    Ready,
    Searching,
    Dead,
}

/// A running UCI engine with exactly one owner.
pub struct EngineHandle {
    label: String,
    name: String,
    options: BTreeMap<String, String>,
    limits: SearchLimits,
    timeouts: Timeouts,
    state: HandleState,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    lines: Option<Receiver<String>>,
}

impl std::fmt::Debug for EngineHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EngineHandle")
            .field("label", &self.label)
            .field("name", &self.name)
            .field("state", &self.state)
            .finish()
    }
}

impl EngineHandle {
    pub fn spawn(path: &Path, options: &BTreeMap<String, String>) -> Result<Self, EngineError> {
        Self::spawn_with(path, options, SearchLimits::default(), Timeouts::default())
    }

    pub fn spawn_with(
        path: &Path,
        options: &BTreeMap<String, String>,
        limits: SearchLimits,
        timeouts: Timeouts,
    ) -> Result<Self, EngineError> {
        Self::spawn_command(Command::new(path), options, limits, timeouts)
    }

    /// Spawns `cmd` (arguments and environment already set) and completes
    /// the handshake.
    pub fn spawn_command(
        mut cmd: Command,
        options: &BTreeMap<String, String>,
        limits: SearchLimits,
        timeouts: Timeouts,
    ) -> Result<Self, EngineError> {
        limits.validate()?;
        let label = cmd.get_program().to_string_lossy().into_owned();
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| EngineError::Spawn {
                path: label.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut handle = EngineHandle {
            name: label.clone(),
            label,
            options: options.clone(),
            limits,
            timeouts,
            state: HandleState::Spawned,
            child: Some(child),
            stdin: Some(stdin),
            lines: Some(rx),
        };
        handle.guard(|h| h.handshake())?;
        Ok(handle)
    }

    fn handshake(&mut self) -> Result<(), EngineError> {
        self.send("uci")?;
        let deadline = Instant::now() + self.timeouts.handshake();
        loop {
            let line = self.recv(deadline, "uciok")?;
            if let Some(name) = line.trim().strip_prefix("id name ") {
                self.name = name.trim().to_string();
            } else if line.trim() == "uciok" {
                break;
            }
        }
        let options: Vec<(String, String)> = self
            .options
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in options {
            self.send(&format!("setoption name {k} value {v}"))?;
        }
        self.sync()?;
        self.state = HandleState::Ready;
        Ok(())
    }

    fn sync(&mut self) -> Result<(), EngineError> {
        self.send("isready")?;
        let deadline = Instant::now() + self.timeouts.handshake();
        while self.recv(deadline, "readyok")?.trim() != "readyok" {}
        Ok(())
    }

    /// Name reported by the engine in `id name`, or the executable path.
    pub fn engine_name(&self) -> &str {
        &self.name
    }

    pub fn state(&self) -> HandleState {
        self.state
    }

    pub fn options(&self) -> &BTreeMap<String, String> {
        &self.options
    }

    fn check_ready(&self) -> Result<(), EngineError> {
        match self.state {
            HandleState::Ready => Ok(()),
            HandleState::Dead => Err(EngineError::Dead),
            HandleState::Searching => Err(EngineError::Busy),
            HandleState::Spawned => Err(EngineError::Protocol("handshake incomplete".into())),
        }
    }

    /// Runs `f`; on error the process is killed and the handle goes dead.
    fn guard<T>(
        &mut self,
        f: impl FnOnce(&mut Self) -> Result<T, EngineError>,
    ) -> Result<T, EngineError> {
        let out = f(self);
        if out.is_err() {
            self.kill();
        }
        out
    }

    fn send(&mut self, line: &str) -> Result<(), EngineError> {
        let stdin = self.stdin.as_mut().ok_or(EngineError::Dead)?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|_| EngineError::Dead)
    }

    fn recv(&mut self, deadline: Instant, waiting_for: &str) -> Result<String, EngineError> {
        let rx = self.lines.as_ref().ok_or(EngineError::Dead)?;
        let now = Instant::now();
        let left = deadline.saturating_duration_since(now);
        match rx.recv_timeout(left) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(EngineError::Timeout(
                left.max(Duration::from_millis(1)),
                waiting_for.to_string(),
            )),
            Err(RecvTimeoutError::Disconnected) => Err(EngineError::Dead),
        }
    }

    /// Sends `ucinewgame` and waits for the engine to be ready again.
    pub fn new_game(&mut self) -> Result<(), EngineError> {
        self.check_ready()?;
        self.guard(|h| {
            h.send("ucinewgame")?;
            h.sync()
        })
    }

    /// Runs one search; returns the validated best move and the last score
    /// reported for the root position.
    pub fn search(
        &mut self,
        board: &Board,
        limits: &SearchLimits,
    ) -> Result<(Move, Option<EvalScore>), EngineError> {
        self.check_ready()?;
        limits.validate()?;
        if !board.has_legal_move() {
            return Err(EngineError::TerminalPosition(board.to_fen()));
        }
        let fen = board.to_fen();
        let timeout = self.timeouts.search(limits);
        self.guard(|h| {
            h.send(&format!("position fen {fen}"))?;
            h.send(&format!("go {}", limits.go_args()))?;
            h.state = HandleState::Searching;
            let deadline = Instant::now() + timeout;
            let mut score = None;
            let text = loop {
                let line = h.recv(deadline, "bestmove")?;
                if let Some(s) = parse_info_score(&line) {
                    score = Some(s);
                } else if let Some(mv) = parse_bestmove(&line)? {
                    break mv;
                }
            };
            let mv = Move::from_uci(&text).map_err(|_| {
                EngineError::Protocol(format!("unparsable bestmove `{text}`"))
            })?;
            if !board.legal_moves().contains(&mv) {
                return Err(EngineError::IllegalMove {
                    engine: h.name.clone(),
                    mv: text,
                    fen: fen.clone(),
                });
            }
            h.state = HandleState::Ready;
            Ok((mv, score))
        })
    }

    pub fn best_move_with(
        &mut self,
        board: &Board,
        limits: &SearchLimits,
    ) -> Result<Move, EngineError> {
        self.search(board, limits).map(|(m, _)| m)
    }

    pub fn evaluate_position(
        &mut self,
        board: &Board,
        limits: &SearchLimits,
    ) -> Result<EvalScore, EngineError> {
        self.check_ready()?;
        let (_, score) = self.search(board, limits)?;
        match score {
            Some(s) => Ok(s),
            None => {
                self.kill();
                Err(EngineError::Protocol("no score reported before bestmove".into()))
            }
        }
    }

    /// Sends `quit`, waits up to two seconds, then kills. Idempotent.
    pub fn shutdown(&mut self) {
        if self.state == HandleState::Dead {
            return;
        }
        let _ = self.send("quit");
        self.stdin = None;
        if let Some(child) = self.child.as_mut() {
            let deadline = Instant::now() + Duration::from_secs(2);
            while Instant::now() < deadline {
                match child.try_wait() {
                    Ok(Some(_)) | Err(_) => break,
                    Ok(None) => thread::sleep(Duration::from_millis(10)),
                }
            }
        }
        self.kill();
    }

    fn kill(&mut self) {
        self.stdin = None;
        if let Some(mut child) = self.child.take() {
            if let Ok(None) = child.try_wait() {
                let _ = child.kill();
            }
            let _ = child.wait();
        }
        // the reader thread ends at EOF; drain whatever it still holds
        if let Some(rx) = self.lines.take() {
            while rx.recv_timeout(Duration::from_millis(50)).is_ok() {}
        }
        self.state = HandleState::Dead;
    }
}

impl Drop for EngineHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl Engine for EngineHandle {
    fn name(&self) -> &str {
        &self.label
    }

    fn best_move(&mut self, board: &Board, _ply: u32) -> Result<Move, EngineError> {
        let limits = self.limits;
        self.best_move_with(board, &limits)
    }

    fn evaluate(&mut self, board: &Board) -> Result<EvalScore, EngineError> {
        let limits = self.limits;
        self.evaluate_position(board, &limits)
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn new_game(&mut self) -> Result<(), EngineError> {
        EngineHandle::new_game(self)
    }
}

/// Parses a `bestmove` line into its move text. Returns `Ok(None)` for any
/// other line and an error for the null move.
pub fn parse_bestmove(line: &str) -> Result<Option<String>, EngineError> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("bestmove") {
        return Ok(None);
    }
    match tokens.next() {
        None => Err(EngineError::Protocol("empty bestmove".into())),
        Some("0000") | Some("(none)") => Err(EngineError::Protocol(format!(
            "null bestmove in `{}`",
            line.trim()
        ))),
        Some(mv) => Ok(Some(mv.to_string())),
    }
}

/// Extracts the score from an `info` line. Other tokens are skipped.
pub fn parse_info_score(line: &str) -> Option<EvalScore> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.first() != Some(&"info") {
        return None;
    }
    let at = tokens.iter().position(|t| *t == "score")?;
    let value: i32 = tokens.get(at + 2)?.parse().ok()?;
    match *tokens.get(at + 1)? {
        "cp" => Some(EvalScore::Centipawns(value)),
        "mate" if value != 0 => Some(EvalScore::Mate(value)),
        _ => None,
    }
}
