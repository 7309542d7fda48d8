//! Match comparisons, trend regression, effect sizes and CLS-attention
//! studies.

mod attention;
mod sampling;
mod stats;

use thiserror::Error;

pub use attention::{
    attention_group_study, extract_cls_attention, quantiles_csv_rows, samples_csv,
    AttentionStudy, Control, Grouping, PairedSample, QUANTILES_CSV_HEADER, SAMPLES_CSV_HEADER,
};
pub use sampling::{game_phase, sample_positions, GamePhase, PhaseCount, PositionSample, SamplingRecipe};
pub use stats::{
    a_w, a_w_ranked, a_w_weighted, box_stats, quantile_sorted, trend_regression,
    two_sided_normal, wdl_z_test, BoxStats, RegressionResult, ZFlag, ZTest,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("slope is undefined: every x is identical")]
    UndefinedSlope,
    #[error(transparent)]
    Model(#[from] crate::rl::ModelError),
    #[error("cannot replay game {game_id}: {message}")]
    Replay { game_id: String, message: String },
}
