// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use cpmr_core::{parse_dsl, serialize_dsl, ProcessModel};
use serde::Serialize;
use tokio::sync::Mutex;

/// One entry of a session's history.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub model: ProcessModel,
    pub dsl: String,
    /// Request that produced this snapshot; `None` for the initial model.
    pub request: Option<String>,
    pub flags: Option<String>,
    pub timestamp_ms: u64,
}

impl Snapshot {
    pub fn new(model: ProcessModel, request: Option<String>, flags: Option<String>) -> Self {
        let dsl = serialize_dsl(&model);
        Snapshot { model, dsl, request, flags, timestamp_ms: now_ms() }
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryEntry {
    pub index: usize,
    pub request: Option<String>,
    pub flags: Option<String>,
    pub timestamp_ms: u64,
}

/// History is never empty; the last snapshot is the current model.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    history: Vec<Snapshot>,
    dir: Option<PathBuf>,
}

impl Session {
    pub fn current(&self) -> &Snapshot {
        self.history.last().expect("history is never empty")
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    /// Always false; kept for the `len` convention.
    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn summaries(&self) -> Vec<HistoryEntry> {
        self.history
            .iter()
            .enumerate()
            .map(|(index, s)| HistoryEntry {
                index,
                request: s.request.clone(),
                flags: s.flags.clone(),
                timestamp_ms: s.timestamp_ms,
            })
            .collect()
    }

    fn file(&self, index: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{index:04}.cpm")))
    }

    /// Persists first so that a failed write leaves the session untouched.
    pub fn push(&mut self, snapshot: Snapshot) -> io::Result<()> {
        if let Some(path) = self.file(self.history.len()) {
            std::fs::write(path, &snapshot.dsl)?;
        }
        self.history.push(snapshot);
        Ok(())
    }

    /// Drops the last snapshot; `None` when only the initial model is left.
    pub fn undo(&mut self) -> io::Result<Option<&Snapshot>> {
        if self.history.len() <= 1 {
            return Ok(None);
        }
        if let Some(path) = self.file(self.history.len() - 1) {
            match std::fs::remove_file(path) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
                _ => {}
            }
        }
        self.history.pop();
        Ok(Some(self.current()))
    }
}

/// Sessions by id, each behind its own lock so that messages to one session
/// run one at a time while other sessions proceed.
#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    persist: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore::default()
    }

    /// Loads every session found under `dir` (one sub-directory per session,
    /// one `.cpm` file per snapshot) and persists new snapshots there.
    pub fn persistent(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if !path.is_dir() {
                continue;
            }
            let id = path.file_name().unwrap_or_default().to_string_lossy().to_string();
            if let Some(session) = load_session(&id, &path)? {
                sessions.insert(id, Arc::new(Mutex::new(session)));
            }
        }
        Ok(SessionStore { sessions: RwLock::new(sessions), persist: Some(dir) })
    }

    pub fn create(&self, model: ProcessModel) -> io::Result<String> {
        let id = uuid::Uuid::new_v4().to_string();
        let dir = match &self.persist {
            Some(root) => {
                let dir = root.join(&id);
                std::fs::create_dir_all(&dir)?;
                Some(dir)
            }
            None => None,
        };
        let mut session = Session { id: id.clone(), history: Vec::new(), dir };
        session.push(Snapshot::new(model, None, None))?;
        self.sessions.write().expect("store lock").insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn load_session(id: &str, dir: &Path) -> io::Result<Option<Session>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cpm"))
        .collect();
    files.sort();
    let mut history = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file)?;
        let model = parse_dsl(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", file.display())))?;
        history.push(Snapshot::new(model, None, None));
    }
    Ok((!history.is_empty()).then(|| Session { id: id.to_string(), history, dir: Some(dir.to_path_buf()) }))
}
