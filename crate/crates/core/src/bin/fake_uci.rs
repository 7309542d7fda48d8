//! Scripted UCI engine for protocol tests.
//!
//! Usage: `fake-uci <transcript>` (or the transcript path in
//! `FAKE_UCI_TRANSCRIPT`). Transcript lines:
//!
//! ```text
//! > uci            expect this input line (`*` matches any run of text)
//! < uciok          write this output line
//! !sleep 500       pause
//! !exit 3          exit with a status code
//! !hang            stop reading and sleep forever
//! # comment
//! ```
//!
//! After the script ends the engine reads until `quit` or end of input.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::time::Duration;

fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !text.starts_with(first) || text.len() < first.len() + last.len() {
        return false;
    }
    let mut rest = &text[first.len()..];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    rest.ends_with(last)
}

fn main() -> ExitCode {
    let path = std::env::args()
        .nth(1)
        .or_else(|| std::env::var("FAKE_UCI_TRANSCRIPT").ok());
    let Some(path) = path else {
        eprintln!("usage: fake-uci <transcript>");
        return ExitCode::from(64);
    };
    let script = match std::fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("fake-uci: {path}: {e}");
            return ExitCode::from(66);
        }
    };
    let stdin = io::stdin();
    let mut input = stdin.lock().lines();
    let mut out = io::stdout().lock();
    for (n, raw) in script.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(expected) = line.strip_prefix('>') {
            let expected = expected.trim();
            match input.next() {
                Some(Ok(got)) if glob_match(expected, got.trim()) => {}
                Some(Ok(got)) => {
                    eprintln!("fake-uci: line {}: expected `{expected}`, got `{got}`", n + 1);
                    return ExitCode::from(2);
                }
                _ => return ExitCode::SUCCESS,
            }
        } else if let Some(text) = line.strip_prefix('<') {
            if writeln!(out, "{}", text.trim()).and_then(|_| out.flush()).is_err() {
                return ExitCode::SUCCESS;
            }
        } else if let Some(ms) = line.strip_prefix("!sleep") {
            let ms: u64 = ms.trim().parse().unwrap_or(0);
            std::thread::sleep(Duration::from_millis(ms));
        } else if let Some(code) = line.strip_prefix("!exit") {
            return ExitCode::from(code.trim().parse::<u8>().unwrap_or(0));
        } else if line == "!hang" {
            loop {
                std::thread::sleep(Duration::from_secs(3600));
            }
        } else {
            eprintln!("fake-uci: line {}: unknown directive `{line}`", n + 1);
            return ExitCode::from(65);
        }
    }
    for got in input.map_while(Result::ok) {
        if got.trim() == "quit" {
            break;
        }
    }
    ExitCode::SUCCESS
}

#[cfg(test)]
mod tests {
    use super::glob_match;

    #[test]
    fn wildcards() {
        assert!(glob_match("position fen *", "position fen 8/8 w - - 0 1"));
        assert!(glob_match("go *", "go depth 3"));
        assert!(glob_match("*", ""));
        assert!(!glob_match("go *", "stop"));
        assert!(glob_match("a*b*c", "axxbyyc"));
        assert!(!glob_match("a*b*c", "axxc"));
    }
}
