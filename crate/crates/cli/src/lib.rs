//! Command-line driver: configuration, orchestration, persistence and
//! reporting for team-of-engines experiments.

pub mod analyze;
pub mod config;
pub mod matches;
pub mod output;
pub mod report;
pub mod selfcheck;
pub mod train;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use teamchess::chess::{divide, Board};
use teamchess::rl::PolicyError;
use teamchess::team::TeamError;

use config::{ExperimentConfig, ManagerDef};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_ORACLE: u8 = 2;
pub const EXIT_ENGINE_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "teamchess", version, about = "Team-of-engines chess experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perft, gradient and statistics oracles.
    Selfcheck,
    /// Counts leaf nodes of the legal move tree.
    Perft {
        #[arg(long, default_value = teamchess::chess::STARTPOS_FEN)]
        fen: String,
        #[arg(long)]
        depth: u32,
        /// Per-move breakdown.
        #[arg(long)]
        divide: bool,
    },
    /// Members alone and the managed team against the adversary.
    RunMatch {
        #[command(flatten)]
        common: Common,
        /// sme, rl, constant:1, constant:2 or random.
        #[arg(long)]
        manager: Option<String>,
        /// Checkpoint for the rl manager.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Run the config's expertise ladder instead.
        #[arg(long)]
        ladder: bool,
    },
    /// Policy iteration for the learned manager; resumes if interrupted.
    TrainManager {
        #[command(flatten)]
        common: Common,
        /// Stop after this many completed iterations.
        #[arg(long)]
        stop_after: Option<u32>,
    },
    /// Attention studies on a trained manager.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Digest of every run under a directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Loads the config and folds command-line overrides into it.
pub fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = config::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

pub fn apply_manager_flag(
    cfg: &mut ExperimentConfig,
    flag: Option<&str>,
    checkpoint: Option<PathBuf>,
) -> Result<()> {
    match flag {
        None => {
            if let Some(c) = checkpoint {
                if let ManagerDef::Rl { .. } = cfg.manager {
                    cfg.manager = ManagerDef::Rl { checkpoint: c };
                }
            }
        }
        Some("sme") => {
            if !matches!(cfg.manager, ManagerDef::Sme { .. }) {
                bail!("--manager sme needs an sme manager (its expert) in the config");
            }
        }
        Some("rl") => {
            let c = match (checkpoint, &cfg.manager) {
                (Some(c), _) => c,
                (None, ManagerDef::Rl { checkpoint }) => checkpoint.clone(),
                (None, _) => analyze::default_checkpoint(cfg),
            };
            cfg.manager = ManagerDef::Rl { checkpoint: c };
        }
        Some("random") => cfg.manager = ManagerDef::Random,
        Some(other) => match other.strip_prefix("constant:").and_then(|k| k.parse().ok()) {
            Some(member @ 1..=2) => cfg.manager = ManagerDef::Constant { member },
            _ => bail!("unknown manager `{other}`; expected sme, rl, constant:1, constant:2 or random"),
        },
    }
    cfg.validate()
}

/// Exit status of a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(TeamError::TooManyFailures { .. }) = cause.downcast_ref::<TeamError>() {
            return EXIT_ENGINE_BUDGET;
        }
        if let Some(PolicyError::Match { source, .. }) = cause.downcast_ref::<PolicyError>() {
            if matches!(source, TeamError::TooManyFailures { .. }) {
                return EXIT_ENGINE_BUDGET;
            }
        }
    }
    EXIT_USAGE
}

/// Runs one command, printing to stdout; returns the exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Selfcheck => {
            let (checks, elapsed) = selfcheck::run_all();
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!(
                "{} checks, {failed} failed, {:.1} s",
                checks.len(),
                elapsed.as_secs_f64()
            );
            Ok(if failed == 0 { EXIT_OK } else { EXIT_ORACLE })
        }
        Command::Perft { fen, depth, divide: per_move } => {
            let board = Board::from_fen(&fen)?;
            let rows = divide(&board, depth);
            if per_move {
                for (mv, n) in &rows {
                    println!("{mv}: {n}");
                }
            }
            println!("{}", rows.iter().map(|r| r.1).sum::<u64>());
            Ok(EXIT_OK)
        }
        Command::RunMatch {
            common,
            manager,
            checkpoint,
            ladder,
        } => {
            let mut cfg = load_config(&common)?;
            if ladder {
                let (summary, out) = matches::run_ladder(&cfg, |r| {
                    println!(
                        "{}: solo {:.4}, team {:.4}",
                        r.expert_name, r.expert_solo.wdl, r.team.wdl
                    )
                })?;
                if let Some(t) = summary.trend {
                    println!(
                        "trend slope {:.4}, 95% CI [{:.4}, {:.4}], p = {:.4}",
                        t.slope, t.ci95[0], t.ci95[1], t.p_two_sided
                    );
                }
                println!("wrote {}", out.dir.display());
            } else {
                apply_manager_flag(&mut cfg, manager.as_deref(), checkpoint)?;
                let (summary, out) = matches::run_team_match(&cfg)?;
                for m in &summary.members {
                    println!("{}: {:.4}", m.name, m.stats.wdl);
                }
                println!(
                    "{}: {:.4} (synergy: {})",
                    summary.team.name,
                    summary.team.stats.wdl,
                    if summary.synergy { "yes" } else { "no" }
                );
                println!("wrote {}", out.dir.display());
            }
            Ok(EXIT_OK)
        }
        Command::TrainManager { common, stop_after } => {
            let cfg = load_config(&common)?;
            let (outcome, out) = train::train_manager(&cfg, stop_after, |r| {
                println!(
                    "iteration {}: {} examples, loss {:.4}, held-out {:.4}, team {:.4}{}",
                    r.iteration,
                    r.dataset_size,
                    r.train_loss,
                    r.heldout_accuracy,
                    r.team_wdl,
                    r.ground_truth_accuracy
                        .map_or(String::new(), |a| format!(", routing {a:.4}"))
                )
            })?;
            if let Some(k) = outcome.resumed_from {
                println!("resumed after iteration {k}");
            }
            println!(
                "{} of {} iterations done; checkpoint sha256 {}",
                outcome.state.completed,
                cfg.train.as_ref().map_or(0, |t| t.iterations),
                outcome.checkpoint_sha256
            );
            println!("wrote {}", out.dir.display());
            Ok(EXIT_OK)
        }
        Command::Analyze { common, checkpoint } => {
            let cfg = load_config(&common)?;
            let (report, out) = analyze::analyze(&cfg, checkpoint.as_deref())?;
            for s in &report.studies {
                println!(
                    "{} / {}: A_w {:.4} (weighted {:.4}), skipped {}",
                    s.grouping.as_str(),
                    s.control.as_str(),
                    s.a_w,
                    s.a_w_weighted,
                    s.skipped
                );
            }
            println!("wrote {}", out.dir.display());
            Ok(EXIT_OK)
        }
        Command::Report { out } => {
            print!("{}", report::write_report(&out)?);
            Ok(EXIT_OK)
        }
    }
}
