use rand::Rng;

use super::{Decision, DecisionContext, Manager, ManagerFactory, MemberId};
use crate::engine::EngineError;

/// Always picks the same member.
#[derive(Debug, Clone, Copy)]
pub struct ConstantManager(pub MemberId);

impl Manager for ConstantManager {
    fn name(&self) -> String {
        format!("constant:{}", self.0)
    }

    fn decide(&mut self, _ctx: &mut DecisionContext<'_>) -> Result<Decision, EngineError> {
        Ok(Decision::Member(self.0))
    }
}

impl ManagerFactory for ConstantManager {
    fn name(&self) -> String {
        Manager::name(self)
    }

    fn build(&self) -> Result<Box<dyn Manager>, EngineError> {
        Ok(Box::new(*self))
    }
}

/// Uniform seeded choice: the no-skill baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomManager;

impl Manager for RandomManager {
    fn name(&self) -> String {
        "random".into()
    }

    fn decide(&mut self, ctx: &mut DecisionContext<'_>) -> Result<Decision, EngineError> {
        Ok(Decision::Member(if ctx.rng.gen_bool(0.5) {
            MemberId::ONE
        } else {
            MemberId::TWO
        }))
    }
}

impl ManagerFactory for RandomManager {
    fn name(&self) -> String {
        Manager::name(self)
    }

    fn build(&self) -> Result<Box<dyn Manager>, EngineError> {
        Ok(Box::new(*self))
    }
}
