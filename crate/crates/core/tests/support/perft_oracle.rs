//! Brute-force move-tree oracle, deliberately sharing no code with the
//! library's generator: its own FEN reader, a signed-integer mailbox, and
//! legality decided by trying every (from, to) pair on the board.

#![allow(dead_code)]

#[derive(Clone)]
pub struct OracleBoard {
    // 0 empty; 1..=6 white P N B R Q K; negative for black
    sq: [i8; 64],
    white_to_move: bool,
    // white king side, white queen side, black king side, black queen side
    castle: [bool; 4],
    ep: Option<usize>,
}

pub fn parse(fen: &str) -> OracleBoard {
    let parts: Vec<&str> = fen.split_whitespace().collect();
    let mut sq = [0i8; 64];
    let mut rank = 7i32;
    let mut file = 0i32;
    for c in parts[0].chars() {
        match c {
            '/' => {
                rank -= 1;
                file = 0;
            }
            '1'..='8' => file += c as i32 - '0' as i32,
            _ => {
                let v = match c.to_ascii_lowercase() {
                    'p' => 1,
                    'n' => 2,
                    'b' => 3,
                    'r' => 4,
                    'q' => 5,
                    'k' => 6,
                    _ => panic!("bad piece {c}"),
                };
                sq[(rank * 8 + file) as usize] = if c.is_ascii_uppercase() { v } else { -v };
                file += 1;
            }
        }
    }
    let castle = [
        parts[2].contains('K'),
        parts[2].contains('Q'),
        parts[2].contains('k'),
        parts[2].contains('q'),
    ];
    let ep = if parts[3] == "-" {
        None
    } else {
        let b = parts[3].as_bytes();
        Some(((b[1] - b'1') * 8 + (b[0] - b'a')) as usize)
    };
    OracleBoard {
        sq,
        white_to_move: parts[1] == "w",
        castle,
        ep,
    }
}

fn fr(s: usize) -> (i32, i32) {
    ((s % 8) as i32, (s / 8) as i32)
}

fn path_clear(b: &OracleBoard, from: usize, to: usize) -> bool {
    let (f0, r0) = fr(from);
    let (f1, r1) = fr(to);
    let df = (f1 - f0).signum();
    let dr = (r1 - r0).signum();
    let (mut f, mut r) = (f0 + df, r0 + dr);
    while (f, r) != (f1, r1) {
        if b.sq[(r * 8 + f) as usize] != 0 {
            return false;
        }
        f += df;
        r += dr;
    }
    true
}

/// Does the piece on `from` hit `to` by its capture pattern?
fn covers(b: &OracleBoard, from: usize, to: usize) -> bool {
    let p = b.sq[from];
    if p == 0 || from == to {
        return false;
    }
    let (f0, r0) = fr(from);
    let (f1, r1) = fr(to);
    let (df, dr) = (f1 - f0, r1 - r0);
    match p.abs() {
        1 => {
            let dir = if p > 0 { 1 } else { -1 };
            dr == dir && df.abs() == 1
        }
        2 => (df.abs() == 1 && dr.abs() == 2) || (df.abs() == 2 && dr.abs() == 1),
        3 => df.abs() == dr.abs() && path_clear(b, from, to),
        4 => (df == 0 || dr == 0) && path_clear(b, from, to),
        5 => (df.abs() == dr.abs() || df == 0 || dr == 0) && path_clear(b, from, to),
        6 => df.abs().max(dr.abs()) == 1,
        _ => unreachable!(),
    }
}

pub fn attacked_by(b: &OracleBoard, target: usize, white: bool) -> bool {
    (0..64).any(|s| {
        let p = b.sq[s];
        p != 0 && (p > 0) == white && covers(b, s, target)
    })
}

/// Signed piece code on square `s`, 0 when empty.
pub fn piece_at(b: &OracleBoard, s: usize) -> i8 {
    b.sq[s]
}

pub fn white_to_move(b: &OracleBoard) -> bool {
    b.white_to_move
}

fn king_of(b: &OracleBoard, white: bool) -> usize {
    let k = if white { 6 } else { -6 };
    (0..64).find(|&s| b.sq[s] == k).expect("king present")
}

/// Is the side to move's king attacked?
pub fn in_check(b: &OracleBoard) -> bool {
    attacked_by(b, king_of(b, b.white_to_move), !b.white_to_move)
}

/// Promotion codes to try for a geometrically valid (from, to), or empty.
fn pseudo(b: &OracleBoard, from: usize, to: usize) -> Vec<i8> {
    let p = b.sq[from];
    let white = b.white_to_move;
    if p == 0 || (p > 0) != white || from == to {
        return vec![];
    }
    let t = b.sq[to];
    if t != 0 && (t > 0) == white {
        return vec![];
    }
    let (f0, r0) = fr(from);
    let (f1, r1) = fr(to);
    let (df, dr) = (f1 - f0, r1 - r0);
    let ok = match p.abs() {
        1 => {
            let dir = if white { 1 } else { -1 };
            let start = if white { 1 } else { 6 };
            if df == 0 && dr == dir && t == 0 {
                true
            } else if df == 0 && dr == 2 * dir && r0 == start && t == 0 {
                b.sq[(from as i32 + 8 * dir) as usize] == 0
            } else {
                df.abs() == 1 && dr == dir && (t != 0 || b.ep == Some(to))
            }
        }
        6 => {
            if df.abs().max(dr.abs()) == 1 {
                true
            } else {
                let home = if white { 4 } else { 60 };
                let idx = if white { 0 } else { 2 };
                if from != home || dr != 0 || df.abs() != 2 {
                    false
                } else {
                    let (right, rook_sq, between): (bool, usize, Vec<usize>) = if df == 2 {
                        (b.castle[idx], home + 3, vec![home + 1, home + 2])
                    } else {
                        (b.castle[idx + 1], home - 4, vec![home - 1, home - 2, home - 3])
                    };
                    let rook = if white { 4 } else { -4 };
                    right
                        && b.sq[rook_sq] == rook
                        && between.iter().all(|&s| b.sq[s] == 0)
                        && !attacked_by(b, home, !white)
                        && !attacked_by(b, (home as i32 + df.signum()) as usize, !white)
                }
            }
        }
        _ => covers(b, from, to),
    };
    if !ok {
        return vec![];
    }
    if p.abs() == 1 && (r1 == 7 || r1 == 0) {
        vec![2, 3, 4, 5]
    } else {
        vec![0]
    }
}

fn make(b: &OracleBoard, from: usize, to: usize, promo: i8) -> OracleBoard {
    let mut n = b.clone();
    let p = b.sq[from];
    let white = b.white_to_move;
    let (f0, r0) = fr(from);
    let (f1, r1) = fr(to);
    if p.abs() == 1 && f0 != f1 && b.sq[to] == 0 {
        n.sq[(r0 * 8 + f1) as usize] = 0;
    }
    if p.abs() == 6 && (f1 - f0).abs() == 2 {
        let (rf, rt) = if f1 > f0 { (to + 1, to - 1) } else { (to - 2, to + 1) };
        n.sq[rt] = n.sq[rf];
        n.sq[rf] = 0;
    }
    n.sq[from] = 0;
    n.sq[to] = if promo != 0 {
        if white {
            promo
        } else {
            -promo
        }
    } else {
        p
    };
    if p.abs() == 6 {
        let idx = if white { 0 } else { 2 };
        n.castle[idx] = false;
        n.castle[idx + 1] = false;
    }
    for (corner, idx) in [(7usize, 0usize), (0, 1), (63, 2), (56, 3)] {
        if from == corner || to == corner {
            n.castle[idx] = false;
        }
    }
    n.ep = if p.abs() == 1 && (r1 - r0).abs() == 2 {
        Some(((r0 + r1) / 2 * 8 + f0) as usize)
    } else {
        None
    };
    n.white_to_move = !white;
    n
}

/// All legal successors, each labelled with its UCI text.
pub fn successors(b: &OracleBoard) -> Vec<(String, OracleBoard)> {
    let mut out = Vec::new();
    let names = ['?', '?', 'n', 'b', 'r', 'q'];
    for from in 0..64 {
        let p = b.sq[from];
        if p == 0 || (p > 0) != b.white_to_move {
            continue;
        }
        for to in 0..64 {
            for promo in pseudo(b, from, to) {
                let n = make(b, from, to, promo);
                if attacked_by(&n, king_of(&n, b.white_to_move), !b.white_to_move) {
                    continue;
                }
                let sqname = |s: usize| {
                    format!("{}{}", (b'a' + (s % 8) as u8) as char, (b'1' + (s / 8) as u8) as char)
                };
                let mut text = format!("{}{}", sqname(from), sqname(to));
                if promo != 0 {
                    text.push(names[promo as usize]);
                }
                out.push((text, n));
            }
        }
    }
    out
}

pub fn perft(b: &OracleBoard, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let succ = successors(b);
    if depth == 1 {
        return succ.len() as u64;
    }
    succ.iter().map(|(_, n)| perft(n, depth - 1)).sum()
}

pub const STARTPOS: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";
pub const KIWIPETE: &str = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1";
pub const ENDGAME_PINS: &str = "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1";
pub const PROMOTIONS: &str = "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1";
