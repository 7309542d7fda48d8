use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub complete: bool,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    /// Digest of everything but timestamps: equal for reruns of the same
    /// config whose outputs match byte for byte.
    pub fn content_hash(&self) -> String {
        let key = serde_json::json!({
            "tool_version": self.tool_version,
            "command": self.command,
            "config_hash": self.config_hash,
            "complete": self.complete,
            "artifacts": self.artifacts,
        });
        sha256_hex(key.to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))
}

/// Artifact directory of one command; every write is recorded in the
/// manifest with its content hash.
#[derive(Debug)]
pub struct Outputs {
    pub dir: PathBuf,
    manifest: Manifest,
}

impl Outputs {
    pub fn create(cfg: &ExperimentConfig, command: &str) -> Result<Outputs> {
        let dir = cfg.run_dir().join(command);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs {
            dir,
            manifest: Manifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config_hash: cfg.hash(),
                config: cfg.clone(),
                started_at: chrono::Utc::now().to_rfc3339(),
                finished_at: None,
                complete: false,
                artifacts: Vec::new(),
            },
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path(rel), bytes)?;
        self.record(rel, bytes);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Records a file some other writer already put in place.
    pub fn record_existing(&mut self, rel: &str) -> Result<()> {
        let bytes = fs::read(self.path(rel)).with_context(|| format!("reading {rel}"))?;
        self.record(rel, &bytes);
        Ok(())
    }

    /// Records every file under the directory except the manifest.
    pub fn record_all(&mut self) -> Result<()> {
        let mut stack = vec![self.dir.clone()];
        let mut found = Vec::new();
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d).with_context(|| format!("listing {}", d.display()))? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(&self.dir).expect("inside dir");
                    let rel = rel.to_string_lossy().replace('\\', "/");
                    if rel != MANIFEST && !rel.ends_with(".tmp") {
                        found.push(rel);
                    }
                }
            }
        }
        for rel in found {
            self.record_existing(&rel)?;
        }
        Ok(())
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        let art = Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        };
        match self.manifest.artifacts.iter_mut().find(|a| a.path == rel) {
            Some(a) => *a = art,
            None => self.manifest.artifacts.push(art),
        }
        self.manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    }

    /// Writes the manifest; `complete` marks the command as finished.
    pub fn flush(&mut self, complete: bool) -> Result<()> {
        self.manifest.complete = complete;
        self.manifest.finished_at = complete.then(|| chrono::Utc::now().to_rfc3339());
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.path(MANIFEST), &bytes)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
