use std::time::Instant;

use teamchess::analysis::{a_w, a_w_ranked, trend_regression, wdl_z_test, ZFlag};
use teamchess::chess::{perft, Board, OutcomeKind};
use teamchess::rl::{gradient_check, ArchSpec, EncodedExample, ModelParams};
use teamchess::team::{MatchStatistics, MemberId};

/// Published node counts: the initial position and four well-known
/// stress positions.
pub const PERFT_TABLE: &[(&str, &[u64])] = &[
    (
        "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
        &[20, 400, 8902, 197281],
    ),
    (
        "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
        &[48, 2039, 97862],
    ),
    ("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1", &[14, 191, 2812, 43238]),
    (
        "r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1",
        &[6, 264, 9467],
    ),
    (
        "rnbq1k1r/pp1Pbppp/2p5/8/2B5/8/PPP1NnPP/RNBQK2R w KQ - 1 8",
        &[44, 1486, 62379],
    ),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Perft against the table with the move counter passed in, so a faulty
/// generator can be substituted.
pub fn perft_checks(count: impl Fn(&Board, u32) -> u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (fen, expected) in PERFT_TABLE {
        let board = match Board::from_fen(fen) {
            Ok(b) => b,
            Err(e) => {
                out.push(check(format!("perft {fen}"), false, e.to_string()));
                continue;
            }
        };
        for (i, &want) in expected.iter().enumerate() {
            let depth = i as u32 + 1;
            let got = count(&board, depth);
            out.push(check(
                format!("perft {fen} depth {depth}"),
                got == want,
                format!("{got} nodes, expected {want}"),
            ));
        }
    }
    out
}

pub fn gradient_checks() -> Vec<Check> {
    let arch = ArchSpec {
        layers: 2,
        heads: 2,
        model_dim: 8,
        ff_dim: 12,
        ..ArchSpec::default()
    };
    let mut params = ModelParams::init(arch, 5).expect("valid arch");
    // larger weights than a fresh init so every tensor carries signal
    for (i, v) in params.data.iter_mut().enumerate() {
        *v = *v * 10.0 + 0.02 * ((i % 7) as f64 - 3.0);
    }
    let boards = [
        Board::startpos(),
        Board::from_fen(PERFT_TABLE[1].0).expect("valid fen"),
        Board::from_fen(PERFT_TABLE[2].0).expect("valid fen"),
    ];
    let batch: Vec<EncodedExample> = boards
        .iter()
        .zip([(MemberId::ONE, 0.7), (MemberId::TWO, 0.2), (MemberId::TWO, 1.3)])
        .map(|(b, (l, w))| EncodedExample::new(b, l, w))
        .collect();
    match gradient_check(&params, &batch, 1e-5) {
        Err(e) => vec![check("gradient check", false, e.to_string())],
        Ok(tensors) => tensors
            .iter()
            .map(|t| {
                let detail = if t.zero_gradient {
                    format!("zero-gradient tensor, max abs error {:.2e}", t.max_abs_error)
                } else {
                    format!("relative error {:.2e}", t.rel_error)
                };
                check(format!("gradient {}", t.name), t.passes(1e-4, 1e-8), detail)
            })
            .collect(),
    }
}

pub fn statistics_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let a = a_w(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).expect("non-empty");
    out.push(check(
        "A_w worked example",
        (a - 2.0 / 9.0).abs() < 1e-12,
        format!("{a:.6}, expected 0.222222"),
    ));
    let xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let ys = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0];
    let (brute, ranked) = (a_w(&xs, &ys).unwrap(), a_w_ranked(&xs, &ys).unwrap());
    out.push(check(
        "A_w pair counting vs midranks",
        brute == ranked,
        format!("{brute} vs {ranked}"),
    ));
    let x = [0.1, 0.3, 0.4, 0.7, 0.9];
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let r = trend_regression(&x, &y).expect("valid data");
    out.push(check(
        "OLS exact fit",
        (r.slope - 2.0).abs() < 1e-10 && (r.intercept - 1.0).abs() < 1e-10,
        format!("slope {:.6}, intercept {:.6}", r.slope, r.intercept),
    ));
    let stats = |w: usize, d: usize, l: usize| {
        let mut o = vec![OutcomeKind::Win; w];
        o.extend(vec![OutcomeKind::Draw; d]);
        o.extend(vec![OutcomeKind::Loss; l]);
        MatchStatistics::from_outcomes(&o, 0)
    };
    let (m1, m2) = (stats(6, 2, 2), stats(3, 3, 4));
    // sample variances 1.6 / 9 and 1.725 / 9 over 10 games each
    let expect = 0.25 / ((1.6 / 9.0 + 1.725 / 9.0) / 10.0f64).sqrt();
    let z = wdl_z_test(&m1, &m2).expect("non-empty");
    out.push(check(
        "WDL z statistic",
        (z.z - expect).abs() < 1e-10 && z.flag == ZFlag::Finite,
        format!("{:.6}, expected {expect:.6}", z.z),
    ));
    out
}

/// Every oracle, with timing.
pub fn run_all() -> (Vec<Check>, std::time::Duration) {
    let start = Instant::now();
    let mut all = perft_checks(perft);
    all.extend(gradient_checks());
    all.extend(statistics_checks());
    (all, start.elapsed())
}
