use std::io::Write;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use teamchess::rl::checkpoint::encode_params;
use teamchess::rl::{
    load_checkpoint, policy_iteration, report_csv, save_checkpoint,
    specialist_ground_truth, DatasetEntry, GroundTruth, IterationReport, PolicyError,
    PolicyInputs, PolicyState,
};

use crate::config::{load_openings, ExperimentConfig, GroundTruthKind};
use crate::output::{sha256_hex, Outputs};

pub const CHECKPOINT: &str = "manager.ckpt";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ResumeState {
    completed: u32,
    reports: Vec<IterationReport>,
}

fn dataset_jsonl(dataset: &[DatasetEntry]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for e in dataset {
        serde_json::to_writer(&mut buf, e)?;
        buf.write_all(b"\n")?;
    }
    Ok(buf)
}

fn load_state(out: &Outputs) -> Result<Option<PolicyState>> {
    let state_path = out.path("state.json");
    if !state_path.exists() {
        return Ok(None);
    }
    let resume: ResumeState = crate::matches::read_json(&state_path)?;
    let (params, meta) = load_checkpoint(&out.path(CHECKPOINT))?;
    if meta.iteration != resume.completed {
        bail!(
            "checkpoint is from iteration {} but state records {}",
            meta.iteration,
            resume.completed
        );
    }
    let text = std::fs::read_to_string(out.path("dataset.jsonl")).context("reading dataset.jsonl")?;
    let dataset = text
        .lines()
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("dataset.jsonl line {}", i + 1)))
        .collect::<Result<Vec<DatasetEntry>>>()?;
    Ok(Some(PolicyState {
        completed: resume.completed,
        params,
        dataset,
        reports: resume.reports,
    }))
}

fn persist(out: &mut Outputs, state: &PolicyState, seed: u64) -> Result<()> {
    let snapshot = format!("checkpoints/iter-{:03}.ckpt", state.completed);
    std::fs::create_dir_all(out.path("checkpoints"))?;
    for rel in [snapshot.as_str(), CHECKPOINT] {
        save_checkpoint(&out.path(rel), &state.params, seed, state.completed)?;
        out.record_existing(rel)?;
        out.record_existing(&format!("{rel}.json"))?;
    }
    out.write("dataset.jsonl", &dataset_jsonl(&state.dataset)?)?;
    out.write("report.csv", report_csv(&state.reports).as_bytes())?;
    // state last: it marks the iteration as complete
    out.write_json(
        "state.json",
        &ResumeState {
            completed: state.completed,
            reports: state.reports.clone(),
        },
    )?;
    out.flush(false)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: PolicyState,
    pub resumed_from: Option<u32>,
    pub checkpoint_sha256: String,
    pub finished: bool,
}

/// Runs (or continues) policy iteration; `stop_after` ends the run early
/// after that many completed iterations, as an interruption would.
pub fn train_manager(
    cfg: &ExperimentConfig,
    stop_after: Option<u32>,
    mut progress: impl FnMut(&IterationReport),
) -> Result<(TrainOutcome, Outputs)> {
    let Some(block) = &cfg.train else {
        bail!("config has no train block");
    };
    let mut policy = cfg.policy_config(block);
    let target = policy.iterations;
    if let Some(n) = stop_after {
        policy.iterations = policy.iterations.min(n.max(1));
    }
    let mut out = Outputs::create(cfg, "train-manager")?;
    let state = load_state(&out)?;
    let resumed_from = state.as_ref().map(|s| s.completed);
    let train_openings = load_openings(&block.train_openings)?;
    let eval_openings = load_openings(&block.eval_openings)?;
    let engines = cfg.engine_refs()?;
    let truth = match block.ground_truth {
        GroundTruthKind::None => None,
        GroundTruthKind::Specialists => Some(
            specialist_ground_truth(&engines.members)
                .context("ground_truth `specialists` needs two specialist members")?,
        ),
    };
    let inputs = PolicyInputs {
        engines,
        train_openings: &train_openings,
        eval_openings: &eval_openings,
        ground_truth: truth.as_ref().map(|f| f as &GroundTruth),
    };
    let done = match state {
        Some(s) if s.completed >= policy.iterations => s,
        s => {
            let mut failure = None;
            let result = policy_iteration(&policy, &inputs, s, |st| {
                if let Some(r) = st.reports.last() {
                    progress(r);
                }
                persist(&mut out, st, cfg.seed).map_err(|e| {
                    let msg = format!("{e:#}");
                    failure = Some(e);
                    PolicyError::Resume(msg)
                })
            });
            match (result, failure) {
                (_, Some(e)) => return Err(e),
                (r, None) => r?,
            }
        }
    };
    let finished = done.completed >= target;
    out.record_all()?;
    out.flush(finished)?;
    let checkpoint_sha256 = sha256_hex(&encode_params(&done.params));
    Ok((
        TrainOutcome {
            state: done,
            resumed_from,
            checkpoint_sha256,
            finished,
        },
        out,
    ))
}
