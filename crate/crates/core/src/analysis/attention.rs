use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{a_w, a_w_weighted, box_stats, BoxStats};
use super::AnalysisError;
use crate::chess::{shuffle_position, Board, Color};
use crate::rl::encode::{encode_board, square_slot};
use crate::rl::{ModelError, ModelParams};
use crate::seed;

const LABEL_UNTRAINED: u64 = 0x5_0000;
const LABEL_SHUFFLE: u64 = 0x5_0001;

/// Attention from the CLS query to each square's key, averaged over every
/// layer and head. Raw softmax weights: the 64 values sum to at most 1.
pub fn extract_cls_attention(params: &ModelParams, board: &Board) -> Result<[f64; 64], ModelError> {
    let out = params.forward(&encode_board(board))?;
    let (layers, heads) = (out.attention.shape()[0], out.attention.shape()[1]);
    let mut v = [0.0; 64];
    for (sq, slot) in v.iter_mut().enumerate() {
        let mut sum = 0.0;
        for l in 0..layers {
            for h in 0..heads {
                sum += out.attention[[l, h, 0, square_slot(sq)]];
            }
        }
        *slot = sum / (layers * heads) as f64;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// A: occupied squares, B: empty squares.
    PieceVsEmpty,
    /// A: pieces of either color attacked by the other color, B: the rest
    /// of the pieces.
    AttackedVsNot,
    /// As above, restricted to the pieces of the side to move.
    AttackedVsNotSideToMove,
}

impl Grouping {
    pub const ALL: [Grouping; 3] = [
        Grouping::PieceVsEmpty,
        Grouping::AttackedVsNot,
        Grouping::AttackedVsNotSideToMove,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::PieceVsEmpty => "piece-vs-empty",
            Grouping::AttackedVsNot => "attacked-vs-not",
            Grouping::AttackedVsNotSideToMove => "attacked-vs-not-stm",
        }
    }

    /// Square bitboards of group A and group B.
    pub fn groups(self, board: &Board) -> (u64, u64) {
        let occ = board.occupied();
        let attacked = |c: Color| board.color_bb(c) & board.attack_map(c.opponent());
        match self {
            Grouping::PieceVsEmpty => (occ, !occ),
            Grouping::AttackedVsNot => {
                let a = attacked(Color::White) | attacked(Color::Black);
                (a, occ & !a)
            }
            Grouping::AttackedVsNotSideToMove => {
                let stm = board.side_to_move();
                let a = attacked(stm);
                (a, board.color_bb(stm) & !a)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    None,
    /// Freshly initialized parameters of the same architecture.
    Untrained,
    /// Square contents permuted before encoding.
    Shuffled,
}

impl Control {
    pub const ALL: [Control; 3] = [Control::None, Control::Untrained, Control::Shuffled];

    pub fn as_str(self) -> &'static str {
        match self {
            Control::None => "none",
            Control::Untrained => "untrained",
            Control::Shuffled => "shuffled",
        }
    }
}

/// Mean attention over the squares of each group in one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub position: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub size_a: u32,
    pub size_b: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStudy {
    pub grouping: Grouping,
    pub control: Control,
    pub positions: usize,
    /// Positions where a group was empty.
    pub skipped: usize,
    pub samples: Vec<PairedSample>,
    /// Pair counting over per-position means.
    pub a_w: f64,
    /// Pairs weighted by the number of squares behind each mean.
    pub a_w_weighted: f64,
    /// Share of positions where group A got more attention than group B.
    pub paired_a_above_b: f64,
    pub box_a: BoxStats,
    pub box_b: BoxStats,
}

fn mean_over(att: &[f64; 64], bb: u64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for (sq, v) in att.iter().enumerate() {
        if bb >> sq & 1 == 1 {
            sum += v;
            n += 1;
        }
    }
    sum / n as f64
}

pub fn attention_group_study(
    params: &ModelParams,
    positions: &[Board],
    grouping: Grouping,
    control: Control,
    seed: u64,
) -> Result<AttentionStudy, AnalysisError> {
    if positions.is_empty() {
        return Err(AnalysisError::Input("no positions".into()));
    }
    let fresh;
    let model = match control {
        Control::Untrained => {
            fresh = ModelParams::init(params.arch, seed::derive(seed, &[LABEL_UNTRAINED]))?;
            &fresh
        }
        _ => params,
    };
    let per_position: Vec<Option<PairedSample>> = positions
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let board = match control {
                Control::Shuffled => {
                    shuffle_position(b, seed::derive(seed, &[LABEL_SHUFFLE, i as u64]))
                }
                _ => b.clone(),
            };
            let (ga, gb) = grouping.groups(&board);
            if ga == 0 || gb == 0 {
                return Ok(None);
            }
            let att = extract_cls_attention(model, &board)?;
            Ok(Some(PairedSample {
                position: i,
                mean_a: mean_over(&att, ga),
                mean_b: mean_over(&att, gb),
                size_a: ga.count_ones(),
                size_b: gb.count_ones(),
            }))
        })
        .collect::<Result<_, ModelError>>()?;
    let samples: Vec<PairedSample> = per_position.into_iter().flatten().collect();
    let skipped = positions.len() - samples.len();
    if samples.is_empty() {
        return Err(AnalysisError::Input(format!(
            "every position has an empty {} group",
            grouping.as_str()
        )));
    }
    let a: Vec<f64> = samples.iter().map(|s| s.mean_a).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.mean_b).collect();
    let wa: Vec<f64> = samples.iter().map(|s| s.size_a as f64).collect();
    let wb: Vec<f64> = samples.iter().map(|s| s.size_b as f64).collect();
    Ok(AttentionStudy {
        grouping,
        control,
        positions: positions.len(),
        skipped,
        a_w: a_w(&a, &b)?,
        a_w_weighted: a_w_weighted(&a, &wa, &b, &wb)?,
        paired_a_above_b: samples.iter().filter(|s| s.mean_a > s.mean_b).count() as f64
            / samples.len() as f64,
        box_a: box_stats(&a)?,
        box_b: box_stats(&b)?,
        samples,
    })
}

pub const SAMPLES_CSV_HEADER: &str = "position,mean_a,mean_b,size_a,size_b";

pub fn samples_csv(study: &AttentionStudy) -> String {
    let mut s = String::from(SAMPLES_CSV_HEADER);
    s.push('\n');
    for p in &study.samples {
        s.push_str(&format!(
            "{},{:e},{:e},{},{}\n",
            p.position, p.mean_a, p.mean_b, p.size_a, p.size_b
        ));
    }
    s
}

pub const QUANTILES_CSV_HEADER: &str =
    "grouping,control,group,n,mean,min,whisker_low,q1,median,q3,whisker_high,max,outliers";

pub fn quantiles_csv_rows(study: &AttentionStudy) -> String {
    let mut s = String::new();
    for (name, b) in [("a", &study.box_a), ("b", &study.box_b)] {
        s.push_str(&format!(
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            study.grouping.as_str(),
            study.control.as_str(),
            name,
            b.n,
            b.mean,
            b.min,
            b.whisker_low,
            b.q1,
            b.median,
            b.q3,
            b.whisker_high,
            b.max,
            b.outliers
        ));
    }
    s
}
