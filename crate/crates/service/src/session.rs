//! Planning sessions as append-only event logs, one directory per session.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use coaforge_core::evaluate::Weights;
use coaforge_core::ipb::enemy::{EnemySituationMap, Observation};
use coaforge_core::opord::MissionAnalysis;
use coaforge_core::pipeline::{
    plan, prepare, PipelineError, PlanningConfig, PlanningReport, Prepared, StatsCache,
};
use coaforge_core::util::digest;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EVENT_LOG: &str = "events.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Fresh,
    Planned,
    Stale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        scenario: String,
        opord: String,
    },
    ObservationInjected {
        observation: Observation,
    },
    Planned {
        config: PlanningConfig,
        report_digest: String,
    },
    Failed {
        operation: String,
        error: PipelineError,
    },
    Selected {
        coa_id: String,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Created { .. } => "created",
            Event::ObservationInjected { .. } => "observation_injected",
            Event::Planned { .. } => "planned",
            Event::Failed { .. } => "failed",
            Event::Selected { .. } => "selected",
        }
    }
}

/// One history line: the event and the ESM version after it was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    pub esm_version: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("session '{0}' not found")]
    NotFound(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("no planning report yet")]
    NoReport,
    #[error("CoA '{0}' is not in the current report")]
    UnknownCoa(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("session log: {0}")]
    Io(String),
    #[error("session log is inconsistent: {0}")]
    Corrupt(String),
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Io(e.to_string())
    }
}

/// Partial config for a replan; unset fields keep the session's last config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub k_enemy: Option<usize>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub weights: Option<Weights>,
}

impl ConfigOverrides {
    pub fn apply(&self, base: PlanningConfig) -> Result<PlanningConfig, SessionError> {
        let weights = match self.weights {
            Some(w) => {
                Weights::normalized(w.0).map_err(|e| SessionError::Invalid(e.to_string()))?
            }
            None => base.weights,
        };
        Ok(PlanningConfig {
            k: self.k.unwrap_or(base.k),
            k_enemy: self.k_enemy.unwrap_or(base.k_enemy),
            replications: self.replications.unwrap_or(base.replications),
            seed: self.seed.unwrap_or(base.seed),
            weights,
            threads: base.threads,
        })
    }
}

/// What `GET /sessions/{id}` returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub esm_version: u64,
    pub mission: MissionAnalysis,
    pub observations: Vec<Observation>,
    pub config: Option<PlanningConfig>,
    pub recommended: Option<String>,
    pub ranking: Vec<String>,
    pub selected: Option<String>,
    pub history: Vec<HistoryEntry>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub prepared: Prepared,
    pub status: Status,
    pub config: Option<PlanningConfig>,
    pub report: Option<PlanningReport>,
    pub selected: Option<String>,
    pub history: Vec<HistoryEntry>,
    pub cache: StatsCache,
    /// Base config for replans without a previous run.
    defaults: PlanningConfig,
    log: Option<PathBuf>,
}

impl Session {
    /// Loads and prepares the documents. Nothing is logged on failure.
    pub fn create(
        id: &str,
        scenario: &str,
        opord: &str,
        log: Option<PathBuf>,
    ) -> Result<Self, SessionError> {
        let prepared = prepare(scenario, opord)?;
        let mut s = Self::bare(id, prepared, log);
        s.record(Event::Created {
            scenario: scenario.to_string(),
            opord: opord.to_string(),
        })?;
        Ok(s)
    }

    fn bare(id: &str, prepared: Prepared, log: Option<PathBuf>) -> Self {
        Self {
            id: id.to_string(),
            prepared,
            status: Status::Fresh,
            config: None,
            report: None,
            selected: None,
            history: Vec::new(),
            cache: StatsCache::default(),
            defaults: PlanningConfig::default(),
            log,
        }
    }

    pub fn with_defaults(mut self, defaults: PlanningConfig) -> Self {
        self.defaults = defaults;
        self
    }

    pub fn esm(&self) -> &EnemySituationMap {
        &self.prepared.esm
    }

    fn record(&mut self, event: Event) -> Result<(), SessionError> {
        let entry = HistoryEntry {
            seq: self.history.len() as u64 + 1,
            esm_version: self.prepared.esm.version,
            event,
        };
        if let Some(path) = &self.log {
            let mut line =
                serde_json::to_string(&entry).map_err(|e| SessionError::Io(e.to_string()))?;
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(line.as_bytes())?;
        }
        self.history.push(entry);
        Ok(())
    }

    fn record_failure(&mut self, operation: &str, error: PipelineError) -> SessionError {
        if let Err(e) = self.record(Event::Failed {
            operation: operation.to_string(),
            error: error.clone(),
        }) {
            return e;
        }
        SessionError::Pipeline(error)
    }

    /// Re-assesses the enemy with the observation and marks the session stale.
    pub fn inject(&mut self, observation: Observation) -> Result<u64, SessionError> {
        match self.prepared.inject(observation.clone()) {
            Ok(version) => {
                self.status = Status::Stale;
                self.record(Event::ObservationInjected { observation })?;
                Ok(version)
            }
            Err(e) => Err(self.record_failure("inject_observation", e)),
        }
    }

    /// Runs enemy CoAs onward against the current ESM. The previous report is
    /// kept if planning fails.
    pub fn replan(&mut self, overrides: &ConfigOverrides) -> Result<&PlanningReport, SessionError> {
        let config = overrides.apply(self.config.unwrap_or(self.defaults))?;
        self.run_plan(config)
    }

    fn run_plan(&mut self, config: PlanningConfig) -> Result<&PlanningReport, SessionError> {
        match plan(&self.prepared, &config, &mut self.cache) {
            Ok(mut report) => {
                report.session_id = Some(self.id.clone());
                let report_digest = digest(&report);
                self.config = Some(config);
                self.status = Status::Planned;
                self.report = Some(report);
                self.record(Event::Planned {
                    config,
                    report_digest,
                })?;
                Ok(self.report.as_ref().expect("just set"))
            }
            Err(e) => Err(self.record_failure("replan", e)),
        }
    }

    /// Records the commander's choice. Nothing else happens.
    pub fn select(&mut self, coa_id: &str) -> Result<(), SessionError> {
        let report = self.report.as_ref().ok_or(SessionError::NoReport)?;
        if report.coa(coa_id).is_none() {
            return Err(SessionError::UnknownCoa(coa_id.to_string()));
        }
        self.selected = Some(coa_id.to_string());
        self.record(Event::Selected {
            coa_id: coa_id.to_string(),
        })
    }

    pub fn view(&self) -> SessionView {
        let mut diagnostics = self.prepared.diagnostics.clone();
        diagnostics.extend(self.prepared.esm.diagnostics.iter().cloned());
        SessionView {
            id: self.id.clone(),
            status: self.status,
            esm_version: self.prepared.esm.version,
            mission: self.prepared.mission.clone(),
            observations: self.prepared.observations.clone(),
            config: self.config,
            recommended: self.report.as_ref().map(|r| r.recommended.clone()),
            ranking: self
                .report
                .as_ref()
                .map(|r| r.coas.iter().map(|c| c.coa.id.clone()).collect())
                .unwrap_or_default(),
            selected: self.selected.clone(),
            history: self.history.clone(),
            diagnostics,
        }
    }

    /// Rebuilds a session by re-applying its history from scratch.
    pub fn replay(
        id: &str,
        entries: &[HistoryEntry],
        log: Option<PathBuf>,
    ) -> Result<Self, SessionError> {
        let mut iter = entries.iter();
        let first = iter
            .next()
            .ok_or_else(|| SessionError::Corrupt("empty history".into()))?;
        let Event::Created { scenario, opord } = &first.event else {
            return Err(SessionError::Corrupt(
                "history does not start with creation".into(),
            ));
        };
        let mut s = Self::bare(id, prepare(scenario, opord)?, None);
        s.history.push(first.clone());
        for entry in iter {
            if entry.seq != s.history.len() as u64 + 1 {
                return Err(SessionError::Corrupt(format!(
                    "sequence gap at {}",
                    entry.seq
                )));
            }
            match &entry.event {
                Event::Created { .. } => {
                    return Err(SessionError::Corrupt("repeated creation".into()))
                }
                Event::ObservationInjected { observation } => {
                    s.prepared.inject(observation.clone())?;
                    s.status = Status::Stale;
                }
                Event::Planned {
                    config,
                    report_digest,
                } => {
                    let mut report = plan(&s.prepared, config, &mut s.cache)?;
                    report.session_id = Some(id.to_string());
                    if &digest(&report) != report_digest {
                        return Err(SessionError::Corrupt(format!(
                            "replanned report differs at {}",
                            entry.seq
                        )));
                    }
                    s.config = Some(*config);
                    s.status = Status::Planned;
                    s.report = Some(report);
                }
                Event::Failed { .. } => {}
                Event::Selected { coa_id } => s.selected = Some(coa_id.clone()),
            }
            if entry.esm_version != s.prepared.esm.version {
                return Err(SessionError::Corrupt(format!(
                    "esm version mismatch at {}",
                    entry.seq
                )));
            }
            s.history.push(entry.clone());
        }
        s.log = log;
        Ok(s)
    }
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryEntry>, SessionError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| SessionError::Corrupt(format!("line {}: {e}", n + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// Sessions by id. With a root directory every session lives in
/// `<root>/<id>/events.jsonl` and is replayed on first access.
#[derive(Debug, Default)]
pub struct SessionStore {
    root: Option<PathBuf>,
    defaults: PlanningConfig,
    sessions: Mutex<BTreeMap<String, SessionHandle>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root: Some(root),
            ..Self::default()
        })
    }

    pub fn with_defaults(mut self, defaults: PlanningConfig) -> Self {
        self.defaults = defaults;
        self
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    fn session_dir(&self, id: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(id))
    }

    pub fn create(&self, scenario: &str, opord: &str) -> Result<SessionHandle, SessionError> {
        let id = uuid::Uuid::new_v4().to_string();
        self.create_with_id(&id, scenario, opord)
    }

    pub fn create_with_id(
        &self,
        id: &str,
        scenario: &str,
        opord: &str,
    ) -> Result<SessionHandle, SessionError> {
        // Validate before touching the disk.
        prepare(scenario, opord)?;
        let log = match self.session_dir(id) {
            Some(dir) => {
                fs::create_dir_all(&dir)?;
                Some(dir.join(EVENT_LOG))
            }
            None => None,
        };
        let session = Session::create(id, scenario, opord, log)?.with_defaults(self.defaults);
        let handle = Arc::new(Mutex::new(session));
        self.sessions
            .lock()
            .expect("store lock")
            .insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, SessionError> {
        let mut sessions = self.sessions.lock().expect("store lock");
        if let Some(h) = sessions.get(id) {
            return Ok(h.clone());
        }
        let valid_id = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        let path = match self.session_dir(id) {
            Some(dir) if valid_id => dir.join(EVENT_LOG),
            _ => return Err(SessionError::NotFound(id.to_string())),
        };
        if !path.is_file() {
            return Err(SessionError::NotFound(id.to_string()));
        }
        let history = read_history(&path)?;
        let session = Session::replay(id, &history, Some(path))?.with_defaults(self.defaults);
        let handle = Arc::new(Mutex::new(session));
        sessions.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    /// Ids of sessions in memory or on disk, sorted.
    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .lock()
            .expect("store lock")
            .keys()
            .cloned()
            .collect();
        if let Some(root) = &self.root {
            if let Ok(rd) = fs::read_dir(root) {
                for e in rd.flatten() {
                    if e.path().join(EVENT_LOG).is_file() {
                        if let Some(name) = e.file_name().to_str() {
                            ids.push(name.to_string());
                        }
                    }
                }
            }
        }
        ids.sort();
        ids.dedup();
        ids
    }
}
