//! Content-addressed run store: one directory per run, one sub-directory per
//! stage, a `run.json` manifest and a `LATEST` alias file at the root.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const MANIFEST: &str = "run.json";
pub const LATEST: &str = "LATEST";
const LOCK: &str = "run.lock";
const STAGES: &str = "stages";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("run store i/o at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("decoding {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("run `{run}` has no stage `{stage}`")]
    UnknownStage { run: String, stage: String },
    #[error("stage `{stage}` of run `{run}` is not sealed")]
    Unsealed { run: String, stage: String },
    #[error("run `{0}` is locked by another writer (remove run.lock if stale)")]
    Locked(String),
    #[error("invalid run id `{0}`")]
    InvalidId(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Sealed,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Sealed,
    Failed,
}

/// Machine-readable account of a failed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Milliseconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: u64,
    /// File name → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    pub failure: Option<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_fingerprint: String,
    pub corpus_fingerprint: String,
    pub status: RunStatus,
    pub created_at: u64,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn failure(&self) -> Option<&FailureRecord> {
        self.stages.iter().find_map(|s| s.failure.as_ref())
    }
}

pub fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// First 16 hex digits of SHA-256 over both fingerprints.
pub fn run_id(config_fp: &str, corpus_fp: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_fp.as_bytes());
    h.update(b"\n");
    h.update(corpus_fp.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn hash_file(path: &Path) -> Result<String, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let tmp = path.with_extension("json.tmp");
    let bytes = serde_json::to_vec_pretty(value).expect("manifest serializes");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

/// Result of [`RunStore::begin`].
pub enum Begin {
    /// A sealed run with the same id already exists.
    Existing(RunManifest),
    New(RunWriter),
}

impl RunStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(RunStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    /// Resolves `latest` through the alias file; other ids pass through.
    pub fn resolve(&self, id: &str) -> Result<String, StoreError> {
        if id == "latest" {
            let p = self.root.join(LATEST);
            let s = fs::read_to_string(&p).map_err(|_| StoreError::UnknownRun(id.to_string()))?;
            return Ok(s.trim().to_string());
        }
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(id.to_string())
    }

    pub fn manifest(&self, id: &str) -> Result<RunManifest, StoreError> {
        let id = self.resolve(id)?;
        let p = self.run_dir(&id).join(MANIFEST);
        let bytes = match fs::read(&p) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::UnknownRun(id)),
            Err(e) => return Err(StoreError::Io { path: p, source: e }),
        };
        serde_json::from_slice(&bytes).map_err(|source| StoreError::Json { path: p, source })
    }

    /// Every run with a readable manifest, oldest first.
    pub fn list(&self) -> Result<Vec<RunManifest>, StoreError> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let e = e.map_err(io_err(&self.root))?;
            if !e.path().is_dir() {
                continue;
            }
            if let Some(name) = e.file_name().to_str() {
                if let Ok(m) = self.manifest(name) {
                    out.push(m);
                }
            }
        }
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.run_id.cmp(&b.run_id)));
        Ok(out)
    }

    /// Directory of a sealed stage. Failed, missing or in-progress stages are refused.
    pub fn stage_dir(&self, id: &str, stage: &str) -> Result<(String, PathBuf), StoreError> {
        let m = self.manifest(id)?;
        match m.stage(stage) {
            Some(s) if s.status == StageStatus::Sealed => {
                Ok((m.run_id.clone(), self.run_dir(&m.run_id).join(STAGES).join(stage)))
            }
            Some(_) => Err(StoreError::Unsealed { run: m.run_id, stage: stage.to_string() }),
            None if m.status == RunStatus::Running => Err(StoreError::Unsealed { run: m.run_id, stage: stage.to_string() }),
            None => Err(StoreError::UnknownStage { run: m.run_id, stage: stage.to_string() }),
        }
    }

    pub fn read_stage_file(&self, id: &str, stage: &str, file: &str) -> Result<(String, Vec<u8>), StoreError> {
        let (run, dir) = self.stage_dir(id, stage)?;
        let p = dir.join(file);
        let bytes = fs::read(&p).map_err(io_err(&p))?;
        Ok((run, bytes))
    }

    pub fn read_stage_json<T: DeserializeOwned>(&self, id: &str, stage: &str, file: &str) -> Result<(String, T), StoreError> {
        let (run, bytes) = self.read_stage_file(id, stage, file)?;
        let v = serde_json::from_slice(&bytes)
            .map_err(|source| StoreError::Json { path: PathBuf::from(stage).join(file), source })?;
        Ok((run, v))
    }

    /// Starts a run. A sealed run with the same id is returned as is unless
    /// `force`; anything else is restarted from scratch.
    pub fn begin(&self, run_id: &str, config_fp: &str, corpus_fp: &str, force: bool) -> Result<Begin, StoreError> {
        if !valid_id(run_id) {
            return Err(StoreError::InvalidId(run_id.to_string()));
        }
        let dir = self.run_dir(run_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let lock = dir.join(LOCK);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(StoreError::Locked(run_id.to_string())),
            Err(e) => return Err(StoreError::Io { path: lock, source: e }),
        }
        let guard = LockGuard(lock);
        if !force {
            if let Ok(m) = self.manifest(run_id) {
                if m.status == RunStatus::Sealed {
                    return Ok(Begin::Existing(m));
                }
            }
        }
        let stages = dir.join(STAGES);
        if stages.exists() {
            fs::remove_dir_all(&stages).map_err(io_err(&stages))?;
        }
        fs::create_dir_all(&stages).map_err(io_err(&stages))?;
        let manifest = RunManifest {
            run_id: run_id.to_string(),
            config_fingerprint: config_fp.to_string(),
            corpus_fingerprint: corpus_fp.to_string(),
            status: RunStatus::Running,
            created_at: now_millis(),
            stages: Vec::new(),
        };
        let w = RunWriter { store: self.clone(), manifest, _lock: guard };
        w.persist()?;
        Ok(Begin::New(w))
    }

    fn set_latest(&self, run_id: &str) -> Result<(), StoreError> {
        let p = self.root.join(LATEST);
        let tmp = self.root.join("LATEST.tmp");
        fs::write(&tmp, run_id).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &p).map_err(io_err(&p))
    }
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Single writer for one run; holds `run.lock` until dropped.
pub struct RunWriter {
    store: RunStore,
    manifest: RunManifest,
    _lock: LockGuard,
}

impl RunWriter {
    pub fn run_id(&self) -> &str {
        &self.manifest.run_id
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn persist(&self) -> Result<(), StoreError> {
        write_json(&self.store.run_dir(self.run_id()).join(MANIFEST), &self.manifest)
    }

    /// Runs `body` against a scratch directory and publishes it as stage
    /// `name` on success. On failure the run is marked partial, the failure
    /// recorded, and `body`'s error returned.
    pub fn stage<T, E>(
        &mut self,
        name: &str,
        body: impl FnOnce(&Path) -> Result<T, E>,
        kind: impl Fn(&E) -> String,
    ) -> Result<Result<T, E>, StoreError>
    where
        E: std::fmt::Display,
    {
        let stages = self.store.run_dir(self.run_id()).join(STAGES);
        let tmp = stages.join(format!("{name}.tmp"));
        let fin = stages.join(name);
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
        }
        fs::create_dir_all(&tmp).map_err(io_err(&tmp))?;
        let started_at = now_millis();
        log::info!("stage {name}: start");
        match body(&tmp) {
            Ok(v) => {
                let mut files = BTreeMap::new();
                let mut entries: Vec<PathBuf> =
                    fs::read_dir(&tmp).map_err(io_err(&tmp))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
                entries.sort();
                for p in entries {
                    if let Some(n) = p.file_name().and_then(|n| n.to_str()) {
                        files.insert(n.to_string(), hash_file(&p)?);
                    }
                }
                fs::rename(&tmp, &fin).map_err(io_err(&fin))?;
                self.manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Sealed,
                    started_at,
                    finished_at: now_millis(),
                    files,
                    failure: None,
                });
                self.persist()?;
                log::info!("stage {name}: sealed");
                Ok(Ok(v))
            }
            Err(e) => {
                let _ = fs::remove_dir_all(&tmp);
                log::error!("stage {name} failed: {e}");
                self.manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Failed,
                    started_at,
                    finished_at: now_millis(),
                    files: BTreeMap::new(),
                    failure: Some(FailureRecord { stage: name.to_string(), kind: kind(&e), message: e.to_string() }),
                });
                self.manifest.status = RunStatus::Partial;
                self.persist()?;
                self.store.set_latest(self.run_id())?;
                Ok(Err(e))
            }
        }
    }

    /// Marks the run sealed and points `LATEST` at it.
    pub fn seal(mut self) -> Result<RunManifest, StoreError> {
        self.manifest.status = RunStatus::Sealed;
        self.persist()?;
        self.store.set_latest(self.run_id())?;
        Ok(self.manifest.clone())
    }
}
