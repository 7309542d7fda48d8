use std::sync::Arc;

use rand::Rng;

use super::encode::encode_board;
use super::model::ModelParams;
use crate::chess::Board;
use crate::engine::EngineError;
use crate::team::{Decision, DecisionContext, Manager, ManagerFactory, MemberId};

/// Logit 0 backs member 1, logit 1 member 2.
pub fn decision_from_logits(logits: [f64; 2]) -> Decision {
    if logits[0] > logits[1] {
        Decision::Member(MemberId::ONE)
    } else if logits[1] > logits[0] {
        Decision::Member(MemberId::TWO)
    } else {
        Decision::Indifferent
    }
}

/// The network's choice at `board`; exact ties go to a coin from `rng`.
pub fn rl_decide<R: Rng>(
    params: &ModelParams,
    board: &Board,
    rng: &mut R,
) -> Result<MemberId, EngineError> {
    let logits = params
        .logits(&encode_board(board))
        .map_err(|e| EngineError::Model(e.to_string()))?;
    Ok(match decision_from_logits(logits) {
        Decision::Member(k) => k,
        Decision::Indifferent => {
            if rng.gen_bool(0.5) {
                MemberId::ONE
            } else {
                MemberId::TWO
            }
        }
    })
}

/// Routes on the board alone; the recommended moves are never read.
#[derive(Clone)]
pub struct RlManager {
    params: Arc<ModelParams>,
    label: String,
}

impl RlManager {
    pub fn new(params: Arc<ModelParams>, label: impl Into<String>) -> RlManager {
        RlManager {
            params,
            label: label.into(),
        }
    }

    pub fn params(&self) -> &Arc<ModelParams> {
        &self.params
    }
}

impl Manager for RlManager {
    fn name(&self) -> String {
        format!("rl({})", self.label)
    }

    fn decide(&mut self, ctx: &mut DecisionContext<'_>) -> Result<Decision, EngineError> {
        let logits = self
            .params
            .logits(&encode_board(ctx.state))
            .map_err(|e| EngineError::Model(e.to_string()))?;
        Ok(decision_from_logits(logits))
    }
}

impl ManagerFactory for RlManager {
    fn name(&self) -> String {
        Manager::name(self)
    }

    fn build(&self) -> Result<Box<dyn Manager>, EngineError> {
        Ok(Box::new(self.clone()))
    }
}
