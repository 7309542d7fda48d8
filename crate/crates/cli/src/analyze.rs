use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use teamchess::analysis::{
    attention_group_study, quantiles_csv_rows, sample_positions, samples_csv, BoxStats, Control,
    Grouping, SamplingRecipe, QUANTILES_CSV_HEADER,
};
use teamchess::rl::{load_checkpoint, ArchSpec, RlManager};
use teamchess::seed;
use teamchess::team::{run_match, write_game_records, MatchOptions, Side, TeamSpec};

use crate::config::{load_openings, ExperimentConfig};
use crate::output::{sha256_hex, Outputs};
use crate::train::CHECKPOINT;

pub const SCHEMA: &str = "teamchess-analysis/1";
const LABEL_GAMES: u64 = 0xA_0000;
const LABEL_SAMPLE: u64 = 0xA_0001;
const LABEL_STUDY: u64 = 0xA_0002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointInfo {
    /// Relative to the output directory when the checkpoint lives there.
    pub path: PathBuf,
    pub sha256: String,
    pub arch: ArchSpec,
    pub seed: u64,
    pub iteration: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySummary {
    pub grouping: Grouping,
    pub control: Control,
    pub positions: usize,
    pub skipped: usize,
    pub a_w: f64,
    pub a_w_weighted: f64,
    pub paired_a_above_b: f64,
    pub box_a: BoxStats,
    pub box_b: BoxStats,
    pub samples_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema: String,
    pub checkpoint: CheckpointInfo,
    pub source_games: usize,
    pub sampling: SamplingRecipe,
    pub studies: Vec<StudySummary>,
}

pub fn default_checkpoint(cfg: &ExperimentConfig) -> PathBuf {
    cfg.run_dir().join("train-manager").join(CHECKPOINT)
}

/// Plays the trained team over the source openings, samples positions from
/// those games and runs every grouping under every control.
pub fn analyze(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<(AnalysisReport, Outputs)> {
    let block = cfg.analysis.as_ref().context("config has no analysis block")?;
    let ckpt = checkpoint
        .map(Path::to_path_buf)
        .or_else(|| block.checkpoint.clone())
        .unwrap_or_else(|| default_checkpoint(cfg));
    let (params, meta) =
        load_checkpoint(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    let bytes = std::fs::read(&ckpt)?;
    let params = Arc::new(params);

    let mut out = Outputs::create(cfg, "analyze")?;
    out.flush(false)?;
    let openings = load_openings(&block.source_openings)?;
    let side = Side::Team(TeamSpec {
        members: cfg.member_refs()?,
        manager: Arc::new(RlManager::new(params.clone(), "analysis")),
    });
    let opts = MatchOptions {
        seed: seed::derive(cfg.seed, &[LABEL_GAMES]),
        ..cfg.match_options()
    };
    let games = run_match(&side, &cfg.engine(&cfg.adversary)?, &openings, &opts)?;
    let mut buf = Vec::new();
    write_game_records(&mut buf, &games.records)?;
    out.write("games.jsonl", &buf)?;

    let finished: Vec<_> = games.records.iter().filter(|r| r.error.is_none()).cloned().collect();
    let (picked, recipe) =
        sample_positions(&finished, block.positions, seed::derive(cfg.seed, &[LABEL_SAMPLE]))?;
    let mut csv = String::from("index,game_id,ply,phase,fen\n");
    for (i, p) in picked.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{}\n",
            p.game_id,
            p.ply,
            serde_json::to_value(p.phase)?.as_str().unwrap_or_default(),
            p.board.to_fen()
        ));
    }
    out.write("positions.csv", csv.as_bytes())?;

    let boards: Vec<_> = picked.into_iter().map(|p| p.board).collect();
    let mut quantiles = format!("{QUANTILES_CSV_HEADER}\n");
    let mut studies = Vec::new();
    for grouping in Grouping::ALL {
        for control in Control::ALL {
            let study = attention_group_study(
                &params,
                &boards,
                grouping,
                control,
                seed::derive(cfg.seed, &[LABEL_STUDY]),
            )?;
            let file = format!("samples/{}_{}.csv", grouping.as_str(), control.as_str());
            out.write(&file, samples_csv(&study).as_bytes())?;
            quantiles.push_str(&quantiles_csv_rows(&study));
            studies.push(StudySummary {
                grouping,
                control,
                positions: study.positions,
                skipped: study.skipped,
                a_w: study.a_w,
                a_w_weighted: study.a_w_weighted,
                paired_a_above_b: study.paired_a_above_b,
                box_a: study.box_a,
                box_b: study.box_b,
                samples_file: file,
            });
        }
    }
    out.write("quantiles.csv", quantiles.as_bytes())?;
    let report = AnalysisReport {
        schema: SCHEMA.into(),
        checkpoint: CheckpointInfo {
            path: ckpt.strip_prefix(&cfg.output_dir).map(Path::to_path_buf).unwrap_or(ckpt),
            sha256: sha256_hex(&bytes),
            arch: meta.arch,
            seed: meta.seed,
            iteration: meta.iteration,
        },
        source_games: finished.len(),
        sampling: recipe,
        studies,
    };
    out.write_json("analysis.json", &report)?;
    out.flush(true)?;
    Ok((report, out))
}
