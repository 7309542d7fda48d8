use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teamchess::builtin::{random_move, recommend, search, BuiltinEngine, BuiltinEngineSpec, EvalProfile};
use teamchess::chess::{Board, Move};
use teamchess::engine::{Engine, EngineError, EngineRef, EvalScore};
use teamchess::openings;
use teamchess::sme::*;
use teamchess::team::{Decision, MatchOptions, MemberId};

fn mv(b: &Board, uci: &str) -> Move {
    teamchess::chess::parse_legal_move(b, uci).unwrap()
}

/// Relies on the default child-evaluation scoring, as a UCI expert would.
struct ChildEvaluator(BuiltinEngineSpec);

impl Engine for ChildEvaluator {
    fn name(&self) -> &str {
        "child-evaluator"
    }
    fn best_move(&mut self, b: &Board, ply: u32) -> Result<Move, EngineError> {
        recommend(&self.0, b, ply)
    }
    fn evaluate(&mut self, b: &Board) -> Result<EvalScore, EngineError> {
        teamchess::builtin::evaluate(&self.0, b)
    }
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Static material of a position from the side to move's view, by counting.
fn material_oracle(b: &Board) -> i64 {
    let fen = b.to_fen();
    let placement = fen.split(' ').next().unwrap();
    let white: i64 = placement
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
        .sum();
    if b.side_to_move() == teamchess::chess::Color::White {
        white
    } else {
        -white
    }
}

#[test]
fn expert_avoids_hanging_the_queen() {
    // a1 = Qd4?? (pawn on e5 takes), a2 = quiet king move
    let b = Board::from_fen("4k3/8/8/4p3/8/8/3Q4/4K3 w - - 0 1").unwrap();
    let (a1, a2) = (mv(&b, "d2d4"), mv(&b, "e1f1"));
    // oracle: the mover's static material after the best reply on each branch
    let after_reply = |m: Move| -> i64 {
        let child = b.apply_move(m).unwrap();
        child
            .legal_moves()
            .into_iter()
            .map(|r| material_oracle(&child.apply_move(r).unwrap()))
            .min()
            .unwrap()
    };
    assert!(after_reply(a2) > after_reply(a1));
    let mut expert = BuiltinEngine::new(BuiltinEngineSpec::alphabeta(2, EvalProfile::material()));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        sme_decide(&mut expert, 0, &b, a1, a2, &mut rng).unwrap(),
        MemberId::TWO
    );
    let mut child_eval = ChildEvaluator(BuiltinEngineSpec::alphabeta(1, EvalProfile::material()));
    assert_eq!(
        sme_decide(&mut child_eval, 0, &b, a1, a2, &mut rng).unwrap(),
        MemberId::TWO
    );
}

#[test]
fn exact_ties_flip_a_seeded_coin() {
    // material-only: two quiet king moves score identically
    let b = Board::from_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1").unwrap();
    let (a1, a2) = (mv(&b, "e1d1"), mv(&b, "e1f1"));
    let mut expert = BuiltinEngine::new(BuiltinEngineSpec::greedy(EvalProfile::material()));
    let (v1, v2) = sme_scores(&mut expert, &b, a1, a2).unwrap();
    assert_eq!(v1, v2);
    let picks = |seed| -> Vec<MemberId> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..40)
            .map(|_| sme_decide(&mut expert.clone(), 0, &b, a1, a2, &mut rng).unwrap())
            .collect()
    };
    assert_eq!(picks(3), picks(3));
    let p = picks(3);
    assert!(p.contains(&MemberId::ONE) && p.contains(&MemberId::TWO));
}

#[test]
fn expert_equal_to_member_one_agrees_with_member_one() {
    let spec1 = BuiltinEngineSpec::default_lstyle();
    let spec2 = BuiltinEngineSpec::default_mstyle();
    let mut expert = BuiltinEngine::new(spec1.clone());
    let mut checked = 0;
    for (i, opening) in openings::bundled().iter().take(40).enumerate() {
        let mut b = opening.clone();
        for ply in 0..12u32 {
            if !b.has_legal_move() {
                break;
            }
            let a1 = recommend(&spec1, &b, ply).unwrap();
            let a2 = recommend(&spec2, &b, ply).unwrap();
            if a1 != a2 {
                // independent ranking from the unpruned reference search
                let rank = |m: Move| {
                    let child = b.apply_move(m).unwrap();
                    if !child.has_legal_move() {
                        return if child.is_check() { i64::MAX } else { 0 };
                    }
                    -(search::search_unpruned(&child, spec1.depth - 1, &spec1.profile)
                        .map(|(_, v)| v)
                        .unwrap_or_else(|| spec1.profile.evaluate(&child))) as i64
                };
                let decision = {
                    let (v1, v2) = sme_scores(&mut expert, &b, a1, a2).unwrap();
                    choose(v1, v2, 0)
                };
                if rank(a1) > rank(a2) {
                    assert_eq!(decision, Decision::Member(MemberId::ONE));
                } else {
                    // a1 is member 1's top choice, so a2 can at best tie it
                    assert_eq!(rank(a1), rank(a2));
                    assert_eq!(decision, Decision::Indifferent);
                }
                checked += 1;
            }
            let next = random_move(&b, i as u64, ply).unwrap();
            b = b.apply_move(next).unwrap();
        }
    }
    assert!(checked > 50, "only {checked} disagreements");
}

#[test]
fn mate_beats_any_material_gain() {
    // a1 = Ra8# ; a2 = Nxh4 wins a rook but is not mate
    let b = Board::from_fen("6k1/5ppp/8/8/7r/5N2/8/R5K1 w - - 0 1").unwrap();
    let a1 = mv(&b, "a1a8");
    let a2 = mv(&b, "f3h4");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in [
        BuiltinEngineSpec::greedy(EvalProfile::material()),
        BuiltinEngineSpec::alphabeta(3, EvalProfile::neutral()),
    ] {
        let mut e = BuiltinEngine::new(spec.clone());
        assert_eq!(sme_decide(&mut e, 0, &b, a1, a2, &mut rng).unwrap(), MemberId::ONE);
        assert_eq!(sme_decide(&mut e, 0, &b, a2, a1, &mut rng).unwrap(), MemberId::TWO);
        let mut c = ChildEvaluator(spec);
        assert_eq!(sme_decide(&mut c, 0, &b, a1, a2, &mut rng).unwrap(), MemberId::ONE);
    }
}

#[test]
fn single_rung_ladder_has_one_row() {
    let members = [
        EngineRef::Builtin(BuiltinEngineSpec::default_lstyle()),
        EngineRef::Builtin(BuiltinEngineSpec::default_mstyle()),
    ];
    let adversary = EngineRef::Builtin(BuiltinEngineSpec::alphabeta(1, EvalProfile::neutral()));
    let ladder = [SmeConfig::new(EngineRef::Builtin(BuiltinEngineSpec::greedy(
        EvalProfile::material(),
    )))];
    let ops: Vec<Board> = openings::bundled().into_iter().take(3).collect();
    let rows = run_expertise_ladder(
        &ladder,
        &members,
        &adversary,
        &ops,
        &MatchOptions::default(),
        |_| {},
    )
    .unwrap();
    assert_eq!(rows.len(), 1);
    let csv = ladder_csv(&rows);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with(LADDER_CSV_HEADER));
    assert_eq!(rows[0].team.games(), 6);
}

proptest! {
    #[test]
    fn argmax_survives_increasing_affine_maps(
        v1 in -200_000i64..200_000, v2 in -200_000i64..200_000,
        a in 1i64..50, c in -10_000i64..10_000,
    ) {
        prop_assert_eq!(choose(v1, v2, 0), choose(a * v1 + c, a * v2 + c, 0));
    }

    #[test]
    fn swapping_moves_swaps_the_choice(v1 in -5000i64..5000, v2 in -5000i64..5000, eps in 0i64..50) {
        match choose(v1, v2, eps) {
            Decision::Member(k) => prop_assert_eq!(choose(v2, v1, eps), Decision::Member(k.other())),
            Decision::Indifferent => prop_assert_eq!(choose(v2, v1, eps), Decision::Indifferent),
        }
    }

    #[test]
    fn builtin_scores_are_affine_invariant_on_positions(seed in 0u64..500) {
        let mut b = Board::startpos();
        for p in 0..(6 + seed % 20) as u32 {
            match random_move(&b, seed, p) {
                Some(m) => b = b.apply_move(m).unwrap(),
                None => break,
            }
        }
        let moves = b.legal_moves();
        prop_assume!(moves.len() >= 2);
        let (a1, a2) = (moves[0], moves[moves.len() - 1]);
        let mut e = BuiltinEngine::new(BuiltinEngineSpec::alphabeta(2, EvalProfile::neutral()));
        let (v1, v2) = sme_scores(&mut e, &b, a1, a2).unwrap();
        prop_assert_eq!(choose(v1, v2, 0), choose(3 * v1 - 7, 3 * v2 - 7, 0));
    }
}
