use proptest::prelude::*;

use teamchess::builtin::random_move;
use teamchess::chess::{Board, Color, PieceKind};
use teamchess::openings;
use teamchess::rl::*;
use teamchess::team::MemberId;

fn toy_arch() -> ArchSpec {
    ArchSpec {
        layers: 2,
        heads: 2,
        model_dim: 8,
        ff_dim: 12,
        ..ArchSpec::default()
    }
}

/// Positions reached by seeded random play from the bundled openings.
fn sample_positions(n: usize, seed: u64) -> Vec<Board> {
    let ops = openings::bundled();
    let mut out = Vec::with_capacity(n);
    let mut k = 0u64;
    while out.len() < n {
        let mut b = ops[(k as usize * 7) % ops.len()].clone();
        let plies = 2 + (teamchess::seed::mix(seed, k) % 40) as u32;
        for p in 0..plies {
            match random_move(&b, seed ^ k, p) {
                Some(m) => b = b.apply_move(m).unwrap(),
                None => break,
            }
        }
        if b.has_legal_move() {
            out.push(b);
        }
        k += 1;
    }
    out
}

fn labeled(boards: &[Board], f: impl Fn(&Board) -> bool) -> Vec<EncodedExample> {
    boards
        .iter()
        .map(|b| EncodedExample::new(b, if f(b) { MemberId::ONE } else { MemberId::TWO }, 1.0))
        .collect()
}

/// Params with every weight scaled up so the network is far from linear.
fn rough_params(seed: u64) -> ModelParams {
    let mut p = ModelParams::init(toy_arch(), seed).unwrap();
    for (i, v) in p.data.iter_mut().enumerate() {
        *v = *v * 10.0 + 0.02 * ((i % 7) as f64 - 3.0);
    }
    p
}

#[test]
fn gradient_matches_central_differences_per_tensor() {
    let params = rough_params(5);
    let boards = sample_positions(3, 11);
    let batch: Vec<EncodedExample> = boards
        .iter()
        .zip([(MemberId::ONE, 0.7), (MemberId::TWO, 0.2), (MemberId::TWO, 1.3)])
        .map(|(b, (l, w))| EncodedExample::new(b, l, w))
        .collect();
    let (_, grad) = loss_and_grad(&params, &batch).unwrap();
    let h = 1e-5;
    let layout = params.layout();
    for info in &layout.tensors {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut worst_abs: f64 = 0.0;
        for i in info.offset..info.offset + info.len() {
            let mut plus = params.clone();
            plus.data[i] += h;
            let mut minus = params.clone();
            minus.data[i] -= h;
            let fd = (loss_and_grad(&plus, &batch).unwrap().0
                - loss_and_grad(&minus, &batch).unwrap().0)
                / (2.0 * h);
            num += (fd - grad[i]).powi(2);
            worst_abs = worst_abs.max((fd - grad[i]).abs());
            den += fd.abs().max(grad[i].abs()).powi(2);
        }
        // key biases shift every score in a row equally, so softmax makes
        // their true gradient zero and only rounding noise is compared
        if info.name.ends_with(".bk") {
            assert!(worst_abs < 1e-8, "{}: {worst_abs:e}", info.name);
            continue;
        }
        let rel = num.sqrt() / den.sqrt();
        assert!(rel < 1e-4, "{}: relative error {rel:e}", info.name);
    }
}

#[test]
fn equal_logits_cost_ln2() {
    let mut p = ModelParams::init(toy_arch(), 1).unwrap();
    let layout = p.layout();
    let head = layout.tensors.iter().find(|t| t.name == "head_w").unwrap().clone();
    p.data[head.offset..head.offset + head.len()].fill(0.0);
    let batch = labeled(&sample_positions(4, 2), |b| b.side_to_move() == Color::White);
    let (loss, _) = loss_and_grad(&p, &batch).unwrap();
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn duplicated_batch_gives_same_loss() {
    let p = rough_params(3);
    let batch = labeled(&sample_positions(5, 9), |b| b.is_check());
    let mut twice = batch.clone();
    twice.extend(batch.iter().cloned());
    let a = loss_and_grad(&p, &batch).unwrap();
    let b = loss_and_grad(&p, &twice).unwrap();
    assert!((a.0 - b.0).abs() < 1e-12);
    assert!(a.1.iter().zip(&b.1).all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn fresh_params_give_small_finite_logits_and_pure_forward() {
    let p = ModelParams::init(ArchSpec::default(), 17).unwrap();
    for b in sample_positions(5, 4) {
        let t = encode_board(&b);
        let out = p.forward(&t).unwrap();
        assert!(out.logits.iter().all(|l| l.is_finite() && l.abs() < 0.5));
        let again = p.forward(&t).unwrap();
        assert_eq!(out.logits, again.logits);
        assert_eq!(out.attention, again.attention);
        assert_eq!(out.attention.shape(), &[2, 4, 68, 68]);
    }
}

#[test]
fn side_to_move_is_learned() {
    let boards = sample_positions(260, 1);
    let data = labeled(&boards, |b| b.side_to_move() == Color::White);
    let (train, heldout) = data.split_at(200);
    let mut p = ModelParams::init(ArchSpec::default(), 2).unwrap();
    let report = train_epochs(&mut p, train, heldout, &TrainConfig::default(), 3).unwrap();
    let acc = report.epochs.iter().filter_map(|e| e.heldout_accuracy).fold(0.0, f64::max);
    eprintln!("side-to-move heldout accuracy {acc:.3} {:?}", report.last());
    assert!(acc > 0.95);
}

#[test]
fn queen_presence_is_learned() {
    let boards = sample_positions(400, 5);
    let has_queen = |b: &Board| b.pieces(Color::White, PieceKind::Queen) != 0;
    let data = labeled(&boards, has_queen);
    let positives = data.iter().filter(|e| e.label == MemberId::ONE).count();
    eprintln!("queen positives {positives} of {}", data.len());
    let (train, heldout) = data.split_at(300);
    let mut p = ModelParams::init(ArchSpec::default(), 6).unwrap();
    let report = train_epochs(&mut p, train, heldout, &TrainConfig::default(), 7).unwrap();
    let acc = report.last().unwrap().heldout_accuracy.unwrap();
    eprintln!("queen heldout accuracy {acc:.3}");
    assert!(acc > 0.9);
}

#[test]
fn random_labels_can_be_memorized() {
    let boards = sample_positions(32, 8);
    let data: Vec<EncodedExample> = boards
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let label = if teamchess::seed::mix(99, i as u64).is_multiple_of(2) {
                MemberId::ONE
            } else {
                MemberId::TWO
            };
            EncodedExample::new(b, label, 1.0)
        })
        .collect();
    let mut p = ModelParams::init(ArchSpec::default(), 9).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let report = train_epochs(&mut p, &data, &[], &cfg, 10).unwrap();
    eprintln!("memorization {:?}", report.last());
    assert_eq!(report.last().unwrap().train_accuracy, 1.0);
}

#[test]
fn training_is_deterministic() {
    let data = labeled(&sample_positions(24, 12), |b| b.side_to_move() == Color::White);
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 5,
        ..TrainConfig::default()
    };
    let run = || {
        let mut p = ModelParams::init(toy_arch(), 4).unwrap();
        let r = train_epochs(&mut p, &data, &[], &cfg, 21).unwrap();
        (p, r)
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(a.data, b.data);
    assert_eq!(ra, rb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attention_rows_are_distributions(seed in 0u64..1000, scale in 1.0f64..30.0) {
        let mut p = ModelParams::init(toy_arch(), seed).unwrap();
        p.data.iter_mut().for_each(|v| *v *= scale);
        let b = &sample_positions(1, seed)[0];
        let out = p.forward(&encode_board(b)).unwrap();
        for row in out.attention.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-6);
            prop_assert!(row.iter().all(|&x| x >= 0.0));
        }
    }
}
