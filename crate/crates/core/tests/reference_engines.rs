mod support;

use std::collections::BTreeMap;

use teamchess::builtin::{
    evaluate, random_move, recommend, search, strength_ladder, BuiltinEngineSpec, EvalProfile,
};
use teamchess::chess::{Board, Color, PieceKind};
use teamchess::engine::{EngineRef, EvalScore};
use teamchess::openings;
use teamchess::team::{solo_baseline, MatchOptions};

use support::perft_oracle;

/// Positions from seeded random games, 6 to 40 plies in.
fn random_positions(n: usize, seed: u64) -> Vec<Board> {
    let mut out = Vec::new();
    let mut s = seed;
    while out.len() < n {
        s += 1;
        let plies = 6 + (s % 35) as u32;
        let mut b = Board::startpos();
        for p in 0..plies {
            match random_move(&b, s, p) {
                Some(m) => b = b.apply_move(m).unwrap(),
                None => break,
            }
        }
        if b.has_legal_move() {
            out.push(b);
        }
    }
    out
}

/// Material from White's side, counted straight off the FEN text.
fn fen_material(fen: &str) -> i32 {
    let placement = fen.split(' ').next().unwrap();
    placement
        .chars()
        .map(|c| {
            let v = match c.to_ascii_lowercase() {
                'p' => 100,
                'n' => 320,
                'b' => 330,
                'r' => 500,
                'q' => 900,
                _ => 0,
            };
            if c.is_ascii_uppercase() {
                v
            } else {
                -v
            }
        })
        .sum()
}

#[test]
fn pruning_matches_plain_negamax() {
    for profile in [EvalProfile::material(), EvalProfile::neutral()] {
        for b in random_positions(50, 7) {
            assert_eq!(
                search::search(&b, 3, &profile),
                search::search_unpruned(&b, 3, &profile),
                "{}",
                b.to_fen()
            );
        }
    }
}

#[test]
fn depth_one_material_search_equals_greedy() {
    let greedy = BuiltinEngineSpec::greedy(EvalProfile::material());
    let ab1 = BuiltinEngineSpec::alphabeta(1, EvalProfile::material());
    for b in random_positions(100, 99) {
        assert_eq!(
            recommend(&greedy, &b, 0).unwrap(),
            recommend(&ab1, &b, 0).unwrap()
        );
    }
}

#[test]
fn greedy_picks_a_material_maximizing_move() {
    let b = Board::from_fen("r3k3/pp6/8/3q4/4P3/8/PP6/4K2R w K - 0 1").unwrap();
    let oracle = perft_oracle::parse(&b.to_fen());
    let sign = if b.side_to_move() == Color::White { 1 } else { -1 };
    // every reply, scored by the material left on the board
    let scored: Vec<(String, i32)> = perft_oracle::successors(&oracle)
        .into_iter()
        .map(|(uci, _)| {
            let mv = teamchess::chess::parse_legal_move(&b, &uci).unwrap();
            let child = b.apply_move(mv).unwrap();
            (uci, sign * fen_material(&child.to_fen()))
        })
        .collect();
    let best = scored.iter().map(|(_, v)| *v).max().unwrap();
    let winners: Vec<&str> = scored
        .iter()
        .filter(|(_, v)| *v == best)
        .map(|(m, _)| m.as_str())
        .collect();
    assert_eq!(winners, vec!["e4d5"]);
    let mv = recommend(&BuiltinEngineSpec::greedy(EvalProfile::material()), &b, 0).unwrap();
    assert_eq!(mv.to_uci(), "e4d5");
}

#[test]
fn static_evaluation_matches_material_count() {
    let profile = EvalProfile::material();
    let ab1 = BuiltinEngineSpec::alphabeta(1, profile.clone());
    for fen in [
        "k7/8/8/8/8/8/8/KN6 w - - 0 1",
        "k7/8/8/8/8/8/8/KN6 b - - 0 1",
        "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
    ] {
        let b = Board::from_fen(fen).unwrap();
        let sign = if b.side_to_move() == Color::White { 1 } else { -1 };
        assert_eq!(profile.evaluate(&b), sign * fen_material(fen));
    }
    // quiet, one knight up: the depth-1 value is the knight's weight
    let b = Board::from_fen("k7/8/8/8/8/8/8/KN6 w - - 0 1").unwrap();
    assert_eq!(evaluate(&ab1, &b).unwrap(), EvalScore::Centipawns(320));
    assert_eq!(
        evaluate(&ab1, &Board::startpos()).unwrap(),
        EvalScore::Centipawns(0)
    );
}

/// Mate-in-one by exhaustive two-ply enumeration on the independent board.
fn oracle_mates_in_one(fen: &str) -> Vec<String> {
    perft_oracle::successors(&perft_oracle::parse(fen))
        .into_iter()
        .filter(|(_, child)| perft_oracle::successors(child).is_empty() && perft_oracle::in_check(child))
        .map(|(uci, _)| uci)
        .collect()
}

#[test]
fn mate_in_one_is_reported_as_mate() {
    for fen in [
        "6k1/5ppp/8/8/8/8/8/R5K1 w - - 0 1",
        "rnbqkbnr/pppp1ppp/8/4p3/6P1/5P2/PPPPP2P/RNBQKBNR b KQkq - 0 2",
        "7k/8/6K1/8/8/8/8/1Q6 w - - 0 1",
    ] {
        let b = Board::from_fen(fen).unwrap();
        let mates = oracle_mates_in_one(fen);
        assert!(!mates.is_empty(), "{fen}");
        for depth in 2..=3 {
            let spec = BuiltinEngineSpec::alphabeta(depth, EvalProfile::neutral());
            assert_eq!(evaluate(&spec, &b).unwrap(), EvalScore::Mate(1), "{fen}");
            let mv = recommend(&spec, &b, 0).unwrap();
            assert!(mates.contains(&mv.to_uci()), "{fen}: {mv}");
        }
    }
}

#[test]
fn recommendations_are_deterministic() {
    let specs = [
        BuiltinEngineSpec::random(5),
        BuiltinEngineSpec::greedy(EvalProfile::lstyle()),
        BuiltinEngineSpec::default_mstyle(),
    ];
    for b in random_positions(20, 3) {
        for spec in &specs {
            for ply in [0, 17] {
                assert_eq!(
                    recommend(spec, &b, ply).unwrap(),
                    recommend(spec, &b, ply).unwrap()
                );
            }
        }
    }
}

#[test]
fn default_member_styles_disagree_often() {
    // positions from self-play of the two default members
    let l = BuiltinEngineSpec::default_lstyle();
    let m = BuiltinEngineSpec::default_mstyle();
    let mut positions = Vec::new();
    for (i, opening) in openings::bundled().iter().take(20).enumerate() {
        let mut b = opening.clone();
        for ply in 0..30 {
            if !b.has_legal_move() {
                break;
            }
            positions.push(b.clone());
            let spec = if (ply + i) % 2 == 0 { &l } else { &m };
            b = b.apply_move(recommend(spec, &b, ply as u32).unwrap()).unwrap();
        }
    }
    let differ = positions
        .iter()
        .filter(|b| recommend(&l, b, 0).unwrap() != recommend(&m, b, 0).unwrap())
        .count();
    let rate = differ as f64 / positions.len() as f64;
    println!("default member disagreement rate {rate:.3} over {} positions", positions.len());
    assert!(rate >= 0.10);
}

#[test]
fn profiles_with_different_tables_prefer_different_moves() {
    let b = Board::startpos();
    let material = recommend(&BuiltinEngineSpec::greedy(EvalProfile::material()), &b, 0).unwrap();
    let mstyle = recommend(&BuiltinEngineSpec::greedy(EvalProfile::mstyle()), &b, 0).unwrap();
    assert_ne!(material, mstyle);
}

#[test]
fn custom_profile_resolves_by_name() {
    let mut profiles = BTreeMap::new();
    let mut p = EvalProfile::material();
    p.name = "queenless".into();
    p.material[PieceKind::Queen.index()] = 0;
    profiles.insert(p.name.clone(), p);
    let r = EngineRef::parse("builtin:greedy?profile=queenless", &profiles).unwrap();
    assert_eq!(r.name(), "builtin:greedy?profile=queenless");
}

fn opts(seed: u64) -> MatchOptions {
    MatchOptions {
        seed,
        ..Default::default()
    }
}

#[test]
fn deeper_search_beats_shallower() {
    let ops: Vec<Board> = openings::bundled().into_iter().take(200).collect();
    let ab3 = EngineRef::Builtin(BuiltinEngineSpec::alphabeta(3, EvalProfile::neutral()));
    let ab1 = EngineRef::Builtin(BuiltinEngineSpec::alphabeta(1, EvalProfile::neutral()));
    let r = solo_baseline(&ab3, &ab1, &ops, &opts(1)).unwrap();
    println!("ab3 vs ab1 over {} games: WDL {:.4}", r.stats.games(), r.stats.wdl);
    assert!(r.stats.wdl > 0.5);
}

#[test]
fn random_engine_loses_to_depth_two() {
    let ops: Vec<Board> = openings::bundled().into_iter().take(200).collect();
    let random = EngineRef::Builtin(BuiltinEngineSpec::random(11));
    let ab2 = EngineRef::Builtin(BuiltinEngineSpec::alphabeta(2, EvalProfile::neutral()));
    let r = solo_baseline(&random, &ab2, &ops, &opts(2)).unwrap();
    println!("random vs ab2 over {} games: WDL {:.4}", r.stats.games(), r.stats.wdl);
    assert!(r.stats.wdl < 0.2);
}

#[test]
fn strength_ladder_is_monotone_against_fixed_adversary() {
    let ops: Vec<Board> = openings::bundled().into_iter().take(60).collect();
    let adversary = EngineRef::Builtin(BuiltinEngineSpec::alphabeta(2, EvalProfile::neutral()));
    let ladder = strength_ladder(3, &EvalProfile::neutral(), 4);
    assert_eq!(ladder.len(), 5);
    let wdls: Vec<f64> = ladder
        .iter()
        .map(|spec| {
            solo_baseline(&EngineRef::Builtin(spec.clone()), &adversary, &ops, &opts(3))
                .unwrap()
                .stats
                .wdl
        })
        .collect();
    println!("ladder WDLs {wdls:?}");
    assert!(wdls.windows(2).all(|w| w[0] <= w[1]), "{wdls:?}");
}
