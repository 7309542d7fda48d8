//! State-only manager: a small transformer that routes each disagreement to
//! a member, trained by policy iteration on rollout-estimated values.

pub mod checkpoint;
pub mod encode;
mod gradcheck;
mod manager;
mod model;
mod optim;
mod policy;
mod rollout;
mod train;
mod truth;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta};
pub use encode::{encode_board, Tokens};
pub use gradcheck::{gradient_check, TensorCheck};
pub use manager::{decision_from_logits, rl_decide, RlManager};
pub use model::{softmax2, ArchSpec, ForwardOutput, Layout, ModelError, ModelParams, TensorInfo};
pub use optim::{Adam, Optimizer, OptimizerConfig, Sgd};
pub use policy::{
    ground_truth_accuracy, initial_state, is_heldout, policy_iteration, report_csv, DatasetEntry,
    GroundTruth, IterationReport, PolicyConfig, PolicyError, PolicyInputs, PolicyState,
    REPORT_CSV_HEADER,
};
pub use rollout::{estimate_q, DisagreementState, EngineRefs, RolloutError, RolloutEstimate, TeamEngines};
pub use train::{
    accuracy, loss_and_grad, train_epochs, EncodedExample, EpochStats, TrainConfig, TrainError,
    TrainReport, TrainingExample,
};
pub use truth::specialist_ground_truth;
