//! Experiment configuration: one JSON document, parsed strictly. Unknown
//! keys fail through serde; missing keys fail by comparing the input with
//! the canonical re-serialization, so every key must be written out
//! (optional values as `null`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use teamchess::builtin::EvalProfile;
use teamchess::chess::Board;
use teamchess::engine::{EngineRef, SearchLimits};
use teamchess::openings;
use teamchess::rl::{ArchSpec, EngineRefs, PolicyConfig, TrainConfig};
use teamchess::team::{GameRules, MatchOptions};
use teamchess::uci::Timeouts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads, 0 for all cores. Does not affect results.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub openings: OpeningSet,
    pub rules: GameRules,
    pub max_failure_fraction: f64,
    /// Custom evaluation profiles, usable as `profile=<name>`.
    pub profiles: BTreeMap<String, EvalProfile>,
    pub engines: BTreeMap<String, EngineDef>,
    pub members: [String; 2],
    pub adversary: String,
    pub manager: ManagerDef,
    pub ladder: Option<Vec<LadderRung>>,
    pub train: Option<TrainBlock>,
    pub analysis: Option<AnalysisBlock>,
}

/// `count` openings starting at `first`, from `file` or the bundled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpeningSet {
    pub file: Option<PathBuf>,
    pub first: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EngineDef {
    /// `builtin:...` reference, or an executable name or path.
    Reference(String),
    Uci(UciDef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UciDef {
    pub path: PathBuf,
    pub options: BTreeMap<String, String>,
    pub limits: SearchLimits,
    pub timeouts: Timeouts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ManagerDef {
    Sme {
        expert: String,
        /// Centipawns; `null` picks 0 for built-ins and 5 for UCI experts.
        tie_epsilon: Option<i64>,
    },
    Rl {
        checkpoint: PathBuf,
    },
    Constant {
        member: u8,
    },
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderRung {
    pub expert: String,
    pub tie_epsilon: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruthKind {
    None,
    /// Both members are specialists; the one playing strong is correct.
    Specialists,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainBlock {
    pub iterations: u32,
    pub arch: ArchSpec,
    pub optimization: TrainConfig,
    pub n_rollouts: Option<usize>,
    pub max_disagreements_per_game: Option<usize>,
    pub heldout_fraction: f64,
    pub train_openings: OpeningSet,
    pub eval_openings: OpeningSet,
    pub ground_truth: GroundTruthKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// `null` uses the checkpoint written by `train-manager`.
    pub checkpoint: Option<PathBuf>,
    /// Openings of the games positions are sampled from.
    pub source_openings: OpeningSet,
    pub positions: usize,
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base).with_context(|| format!("config {}", path.display()))
}

/// Parses and validates; relative paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let input: Value = serde_json::from_str(text).context("config is not valid JSON")?;
    let mut de = serde_json::Deserializer::from_str(text);
    let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| anyhow::anyhow!("at `{}`: {}", e.path(), e.inner()))?;
    let canonical = serde_json::to_value(&cfg).expect("config serializes");
    let mut missing = Vec::new();
    missing_keys(&input, &canonical, "", &mut missing);
    if !missing.is_empty() {
        bail!("missing keys: {}", missing.join(", "));
    }
    cfg.resolve_paths(base);
    cfg.validate()?;
    Ok(cfg)
}

fn missing_keys(input: &Value, canonical: &Value, path: &str, out: &mut Vec<String>) {
    match (input, canonical) {
        (Value::Object(i), Value::Object(c)) => {
            for (k, cv) in c {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match i.get(k) {
                    None => out.push(p),
                    Some(iv) => missing_keys(iv, cv, &p, out),
                }
            }
        }
        (Value::Array(i), Value::Array(c)) => {
            for (n, (iv, cv)) in i.iter().zip(c).enumerate() {
                missing_keys(iv, cv, &format!("{path}[{n}]"), out);
            }
        }
        _ => {}
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    fn opening_sets_mut(&mut self) -> Vec<&mut OpeningSet> {
        let mut v = vec![&mut self.openings];
        if let Some(t) = &mut self.train {
            v.push(&mut t.train_openings);
            v.push(&mut t.eval_openings);
        }
        if let Some(a) = &mut self.analysis {
            v.push(&mut a.source_openings);
        }
        v
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output_dir);
        for set in self.opening_sets_mut() {
            if let Some(f) = &mut set.file {
                resolve(base, f);
            }
        }
        if let ManagerDef::Rl { checkpoint } = &mut self.manager {
            resolve(base, checkpoint);
        }
        if let Some(AnalysisBlock {
            checkpoint: Some(c), ..
        }) = &mut self.analysis
        {
            resolve(base, c);
        }
        for def in self.engines.values_mut() {
            if let EngineDef::Uci(u) = def {
                if u.path.components().count() > 1 {
                    resolve(base, &mut u.path);
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            bail!("max_failure_fraction must be in [0, 1]");
        }
        for name in self.members.iter().chain([&self.adversary]) {
            self.engine(name)?;
        }
        match &self.manager {
            ManagerDef::Sme { expert, .. } => {
                self.engine(expert)?;
            }
            ManagerDef::Rl { checkpoint } => must_exist(checkpoint)?,
            ManagerDef::Constant { member } if !(1..=2).contains(member) => {
                bail!("constant manager member must be 1 or 2")
            }
            _ => {}
        }
        for rung in self.ladder.iter().flatten() {
            self.engine(&rung.expert)?;
        }
        if let Some(t) = &self.train {
            self.policy_config(t).validate().map_err(anyhow::Error::msg)?;
        }
        if let Some(AnalysisBlock {
            checkpoint: Some(c), ..
        }) = &self.analysis
        {
            must_exist(c)?;
        }
        for (name, def) in &self.engines {
            if let EngineDef::Uci(u) = def {
                u.limits
                    .validate()
                    .map_err(|e| anyhow::anyhow!("engine `{name}`: {e}"))?;
            }
            let r = self.engine(name)?;
            if let EngineRef::Uci { path, .. } = &r {
                must_exist(path).with_context(|| format!("engine `{name}`"))?;
            }
        }
        let mut sets = vec![&self.openings];
        if let Some(t) = &self.train {
            sets.extend([&t.train_openings, &t.eval_openings]);
        }
        if let Some(a) = &self.analysis {
            sets.push(&a.source_openings);
        }
        for set in sets {
            if let Some(f) = &set.file {
                must_exist(f)?;
            }
            if set.count == 0 {
                bail!("opening sets need a positive count");
            }
        }
        Ok(())
    }

    pub fn engine(&self, name: &str) -> Result<EngineRef> {
        let def = self
            .engines
            .get(name)
            .with_context(|| format!("unknown engine `{name}`"))?;
        Ok(match def {
            EngineDef::Reference(text) => EngineRef::parse(text, &self.profiles)
                .with_context(|| format!("engine `{name}`"))?,
            EngineDef::Uci(u) => match EngineRef::parse(&u.path.to_string_lossy(), &self.profiles)? {
                EngineRef::Uci { path, .. } => EngineRef::Uci {
                    path,
                    options: u.options.clone(),
                    limits: u.limits,
                    timeouts: u.timeouts,
                },
                _ => bail!("engine `{name}`: UCI engines take a path, not a builtin reference"),
            },
        })
    }

    pub fn member_refs(&self) -> Result<[EngineRef; 2]> {
        Ok([self.engine(&self.members[0])?, self.engine(&self.members[1])?])
    }

    pub fn engine_refs(&self) -> Result<EngineRefs> {
        Ok(EngineRefs {
            members: self.member_refs()?,
            adversary: self.engine(&self.adversary)?,
        })
    }

    pub fn match_options(&self) -> MatchOptions {
        MatchOptions {
            seed: self.seed,
            rules: self.rules,
            workers: self.workers,
            max_failure_fraction: self.max_failure_fraction,
        }
    }

    pub fn policy_config(&self, t: &TrainBlock) -> PolicyConfig {
        PolicyConfig {
            iterations: t.iterations,
            seed: self.seed,
            arch: t.arch,
            train: t.optimization,
            n_rollouts: t.n_rollouts,
            max_disagreements_per_game: t.max_disagreements_per_game,
            heldout_fraction: t.heldout_fraction,
            rules: self.rules,
            workers: self.workers,
            max_failure_fraction: self.max_failure_fraction,
        }
    }

    /// Hash of everything that determines results: the output directory
    /// and worker count are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.hash()[..12])
    }
}

fn must_exist(p: &Path) -> Result<()> {
    if !p.exists() {
        bail!("{} does not exist", p.display());
    }
    Ok(())
}

pub fn load_openings(set: &OpeningSet) -> Result<Vec<Board>> {
    let all = match &set.file {
        None => openings::bundled(),
        Some(f) => {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            openings::parse(&text)
                .map_err(|(line, e)| anyhow::anyhow!("{} line {line}: {e}", f.display()))?
        }
    };
    let end = set.first + set.count;
    if end > all.len() {
        bail!(
            "openings {}..{} requested but only {} available",
            set.first,
            end,
            all.len()
        );
    }
    Ok(all[set.first..end].to_vec())
}
