//! Policy iteration: play with the current manager, roll out both sides of
//! every harvested disagreement, and train on the better branch.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::manager::{rl_decide, RlManager};
use super::model::{ArchSpec, ModelError, ModelParams};
use super::rollout::{estimate_q, DisagreementState, EngineRefs, RolloutError, RolloutEstimate};
use super::train::{accuracy, train_epochs, EncodedExample, TrainConfig, TrainError, TrainingExample};
use crate::chess::{Board, ChessError};
use crate::seed;
use crate::team::{
    run_match, GameRecord, GameRules, ManagerFactory, MatchOptions, MemberId, RandomManager, Side,
    TeamError, TeamSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub iterations: u32,
    pub seed: u64,
    pub arch: ArchSpec,
    pub train: TrainConfig,
    /// Rollouts per branch; `None` picks 1 for fully deterministic setups
    /// and 8 otherwise.
    pub n_rollouts: Option<usize>,
    /// Disagreements kept per harvested game, sampled with a seeded shuffle.
    pub max_disagreements_per_game: Option<usize>,
    /// Share of openings whose examples are held out from training.
    pub heldout_fraction: f64,
    pub rules: GameRules,
    pub workers: usize,
    pub max_failure_fraction: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            iterations: 3,
            seed: 0,
            arch: ArchSpec::default(),
            train: TrainConfig::default(),
            n_rollouts: None,
            max_disagreements_per_game: Some(8),
            heldout_fraction: 0.2,
            rules: GameRules::default(),
            workers: 0,
            max_failure_fraction: 0.01,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.iterations == 0 {
            return Err("iterations must be positive".into());
        }
        if self.n_rollouts == Some(0) || self.max_disagreements_per_game == Some(0) {
            return Err("n_rollouts and max_disagreements_per_game must be positive".into());
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err("heldout_fraction must be in [0, 1)".into());
        }
        self.arch.validate().map_err(|e| e.to_string())?;
        self.train.validate()
    }

    pub fn rollouts_for(&self, engines: &EngineRefs) -> usize {
        self.n_rollouts.unwrap_or_else(|| {
            let deterministic = engines.members.iter().all(|m| m.is_deterministic())
                && engines.adversary.is_deterministic()
                && self.rules.adversary_epsilon == 0.0;
            if deterministic {
                1
            } else {
                8
            }
        })
    }

    fn match_options(&self, seed: u64) -> MatchOptions {
        MatchOptions {
            seed,
            rules: self.rules,
            workers: self.workers,
            max_failure_fraction: self.max_failure_fraction,
        }
    }
}

/// Known-correct member per state, for setups built so that one exists.
pub type GroundTruth = dyn Fn(&Board) -> Option<MemberId> + Sync;

pub struct PolicyInputs<'a> {
    pub engines: EngineRefs,
    pub train_openings: &'a [Board],
    pub eval_openings: &'a [Board],
    pub ground_truth: Option<&'a GroundTruth>,
}

/// One harvested disagreement, its rollout values and, unless tied, the
/// example built from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub iteration: u32,
    pub state: DisagreementState,
    pub estimate: RolloutEstimate,
    pub example: Option<TrainingExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: u32,
    pub dataset_size: usize,
    #[serde(with = "nan_as_null")]
    pub train_loss: f64,
    #[serde(with = "nan_as_null")]
    pub heldout_accuracy: f64,
    #[serde(with = "nan_as_null")]
    pub team_wdl: f64,
    #[serde(with = "nan_as_null")]
    pub team_sem: f64,
    pub harvested: usize,
    pub new_examples: usize,
    pub ties: usize,
    pub failed_estimates: usize,
    pub ground_truth_accuracy: Option<f64>,
    pub ground_truth_states: usize,
}

/// JSON has no NaN; undefined values travel as `null`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub const REPORT_CSV_HEADER: &str = "iteration,dataset_size,train_loss,heldout_accuracy,team_wdl,team_sem,harvested,new_examples,ties,failed_estimates,ground_truth_accuracy,ground_truth_states";

impl IterationReport {
    pub fn csv_row(&self) -> String {
        let gt = self
            .ground_truth_accuracy
            .map_or(String::new(), |a| format!("{a:.6}"));
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            self.iteration,
            self.dataset_size,
            self.train_loss,
            self.heldout_accuracy,
            self.team_wdl,
            self.team_sem,
            self.harvested,
            self.new_examples,
            self.ties,
            self.failed_estimates,
            gt,
            self.ground_truth_states
        )
    }
}

pub fn report_csv(reports: &[IterationReport]) -> String {
    let mut s = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Everything needed to continue after a completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    /// Iterations finished so far.
    pub completed: u32,
    pub params: ModelParams,
    pub dataset: Vec<DatasetEntry>,
    pub reports: Vec<IterationReport>,
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy-iteration settings: {0}")]
    Config(String),
    #[error("iteration {iteration} produced no disagreements over {games} games; the members always agree")]
    NoDisagreements { iteration: u32, games: usize },
    #[error("iteration {iteration}: every rollout estimate failed; first: {first}")]
    AllEstimatesFailed { iteration: u32, first: String },
    #[error("iteration {iteration}: {source}")]
    Match {
        iteration: u32,
        #[source]
        source: TeamError,
    },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error("resume state does not fit the configuration: {0}")]
    Resume(String),
}

const LABEL_INIT: u64 = 0x1_0000;
const LABEL_EVAL: u64 = 0x2_0000;
const LABEL_SPLIT: u64 = 0x3_0000;

pub fn initial_state(cfg: &PolicyConfig) -> Result<PolicyState, PolicyError> {
    Ok(PolicyState {
        completed: 0,
        params: ModelParams::init(cfg.arch, seed::derive(cfg.seed, &[LABEL_INIT]))?,
        dataset: Vec::new(),
        reports: Vec::new(),
    })
}

/// Whether examples from `opening_index` are held out.
pub fn is_heldout(cfg: &PolicyConfig, opening_index: usize) -> bool {
    let u = seed::derive(cfg.seed, &[LABEL_SPLIT, opening_index as u64]) >> 11;
    (u as f64 / (1u64 << 53) as f64) < cfg.heldout_fraction
}

fn harvest(
    records: &[GameRecord],
    cap: Option<usize>,
    seed: u64,
) -> Vec<DisagreementState> {
    let mut out = Vec::new();
    for (g, rec) in records.iter().enumerate() {
        if rec.outcome.is_none() {
            continue;
        }
        let mut picked: Vec<usize> = (0..rec.disagreements.len()).collect();
        if let Some(cap) = cap {
            if picked.len() > cap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[g as u64]));
                picked.shuffle(&mut rng);
                picked.truncate(cap);
                picked.sort_unstable();
            }
        }
        out.extend(
            picked
                .into_iter()
                .map(|i| DisagreementState::from_record(rec, &rec.disagreements[i])),
        );
    }
    out
}

fn rl_factory(params: &ModelParams, iteration: u32) -> Arc<RlManager> {
    Arc::new(RlManager::new(
        Arc::new(params.clone()),
        format!("iteration {iteration}"),
    ))
}

fn team(engines: &EngineRefs, manager: Arc<dyn ManagerFactory>) -> Side {
    Side::Team(TeamSpec {
        members: engines.members.clone(),
        manager,
    })
}

/// Share of disagreement states in `records` where the network picks the
/// member named by `truth`; states without a truth are skipped.
pub fn ground_truth_accuracy(
    params: &ModelParams,
    records: &[GameRecord],
    truth: &GroundTruth,
    seed: u64,
) -> Result<(f64, usize), PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut n) = (0usize, 0usize);
    for rec in records.iter().filter(|r| r.outcome.is_some()) {
        for d in &rec.disagreements {
            let board = Board::from_fen(&d.fen)?;
            if let Some(want) = truth(&board) {
                let got = rl_decide(params, &board, &mut rng)?;
                hits += (got == want) as usize;
                n += 1;
            }
        }
    }
    Ok((if n == 0 { f64::NAN } else { hits as f64 / n as f64 }, n))
}

/// Runs iterations `state.completed..cfg.iterations`, calling `checkpoint`
/// after each one. Every random choice is derived from (seed, iteration),
/// so resuming from a saved state reproduces an uninterrupted run.
pub fn policy_iteration(
    cfg: &PolicyConfig,
    inputs: &PolicyInputs<'_>,
    state: Option<PolicyState>,
    mut checkpoint: impl FnMut(&PolicyState) -> Result<(), PolicyError>,
) -> Result<PolicyState, PolicyError> {
    cfg.validate().map_err(PolicyError::Config)?;
    if inputs.train_openings.is_empty() || inputs.eval_openings.is_empty() {
        return Err(PolicyError::Config("train and eval openings must be non-empty".into()));
    }
    let mut state = match state {
        Some(s) => s,
        None => initial_state(cfg)?,
    };
    if state.params.arch != cfg.arch {
        return Err(PolicyError::Resume("architecture differs".into()));
    }
    if state.reports.len() != state.completed as usize {
        return Err(PolicyError::Resume("report count differs from completed iterations".into()));
    }
    let n_rollouts = cfg.rollouts_for(&inputs.engines);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PolicyError::Config(e.to_string()))?;

    for iteration in state.completed..cfg.iterations {
        let it_seed = seed::derive(cfg.seed, &[iteration as u64]);

        let current: Arc<dyn ManagerFactory> = if iteration == 0 {
            Arc::new(RandomManager)
        } else {
            rl_factory(&state.params, iteration)
        };
        let played = run_match(
            &team(&inputs.engines, current.clone()),
            &inputs.engines.adversary,
            inputs.train_openings,
            &cfg.match_options(seed::derive(it_seed, &[0])),
        )
        .map_err(|source| PolicyError::Match { iteration, source })?;

        let harvested = harvest(
            &played.records,
            cfg.max_disagreements_per_game,
            seed::derive(it_seed, &[1]),
        );
        if harvested.is_empty() {
            return Err(PolicyError::NoDisagreements {
                iteration,
                games: played.records.len(),
            });
        }

        let rollout_seed = seed::derive(it_seed, &[2]);
        let estimates: Vec<Result<RolloutEstimate, RolloutError>> = pool.install(|| {
            harvested
                .par_iter()
                .enumerate()
                .map(|(j, ds)| {
                    estimate_q(
                        ds,
                        &inputs.engines,
                        current.as_ref(),
                        &cfg.rules,
                        n_rollouts,
                        seed::derive(rollout_seed, &[j as u64]),
                    )
                })
                .collect()
        });

        let (mut new_examples, mut ties, mut failed) = (0, 0, 0);
        let mut first_failure = None;
        for (ds, est) in harvested.into_iter().zip(estimates) {
            match est {
                Ok(estimate) => {
                    let example = match estimate.preferred() {
                        Some(label) => {
                            new_examples += 1;
                            Some(TrainingExample {
                                fen: ds.board()?.to_fen(),
                                label,
                                weight: estimate.advantage(),
                            })
                        }
                        None => {
                            ties += 1;
                            None
                        }
                    };
                    state.dataset.push(DatasetEntry {
                        iteration,
                        state: ds,
                        estimate,
                        example,
                    });
                }
                Err(e) => {
                    failed += 1;
                    first_failure.get_or_insert(e.to_string());
                }
            }
        }
        if new_examples + ties == 0 {
            return Err(PolicyError::AllEstimatesFailed {
                iteration,
                first: first_failure.unwrap_or_default(),
            });
        }
        let harvested_count = new_examples + ties + failed;

        let (mut train_set, mut heldout_set) = (Vec::new(), Vec::new());
        for entry in &state.dataset {
            if let Some(ex) = &entry.example {
                let enc: EncodedExample = ex.encode()?;
                if is_heldout(cfg, entry.state.opening_index) {
                    heldout_set.push(enc);
                } else {
                    train_set.push(enc);
                }
            }
        }
        let train_loss = if train_set.is_empty() {
            f64::NAN
        } else {
            let report = train_epochs(
                &mut state.params,
                &train_set,
                &[],
                &cfg.train,
                seed::derive(it_seed, &[3]),
            )?;
            report.last().map_or(f64::NAN, |e| e.train_loss)
        };
        let heldout_accuracy = accuracy(&state.params, &heldout_set)?;

        let trained = rl_factory(&state.params, iteration + 1);
        let eval = run_match(
            &team(&inputs.engines, trained),
            &inputs.engines.adversary,
            inputs.eval_openings,
            &cfg.match_options(seed::derive(cfg.seed, &[LABEL_EVAL])),
        )
        .map_err(|source| PolicyError::Match { iteration, source })?;
        let (gt_acc, gt_n) = match inputs.ground_truth {
            Some(truth) => {
                let (a, n) = ground_truth_accuracy(
                    &state.params,
                    &eval.records,
                    truth,
                    seed::derive(it_seed, &[4]),
                )?;
                (Some(a), n)
            }
            None => (None, 0),
        };

        state.reports.push(IterationReport {
            iteration,
            dataset_size: train_set.len() + heldout_set.len(),
            train_loss,
            heldout_accuracy,
            team_wdl: eval.stats.wdl,
            team_sem: eval.stats.sem,
            harvested: harvested_count,
            new_examples,
            ties,
            failed_estimates: failed,
            ground_truth_accuracy: gt_acc,
            ground_truth_states: gt_n,
        });
        state.completed = iteration + 1;
        checkpoint(&state)?;
    }
    Ok(state)
}
