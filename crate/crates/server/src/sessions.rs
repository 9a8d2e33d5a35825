//! Pool of interactive prover sessions. Each session owns a FIFO command queue served by
//! its own task; commands run on blocking threads so sessions progress in parallel.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use micropvs_core::diagnostic::Diagnostic;
use micropvs_core::prover::{apply_text, save_script, start_proof, ProofScript, ProofTree, ProverError, ProverResult, TreeDelta, TreeView};
use micropvs_core::typecheck::TypecheckResult;
use micropvs_core::workspace::{FormulaStatus, Workspace};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::{mpsc, oneshot, Semaphore};

use crate::jsonrpc::{self, RpcError};

/// Directory under the workspace root where interactive proofs are saved.
pub const PROOFS_DIR: &str = "proofs";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormulaTarget {
    pub uri: String,
    pub theory: String,
    pub formula: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Done,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} is finished")]
    SessionDone(String),
    #[error("a proof session for {0} is already active")]
    DuplicateSession(String),
    #[error("theory {theory} is not typechecked")]
    NotTypechecked { theory: String, diagnostics: Vec<Diagnostic> },
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("no formula {0}")]
    UnknownFormula(String),
    #[error("{0}")]
    Prover(ProverError),
    #[error("request cancelled")]
    Cancelled,
    #[error("{0}")]
    Io(String),
}

impl From<SessionError> for RpcError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::UnknownSession(_) => RpcError::new(jsonrpc::UNKNOWN_SESSION, msg),
            SessionError::SessionDone(_) => RpcError::new(jsonrpc::SESSION_DONE, msg),
            SessionError::DuplicateSession(_) => RpcError::new(jsonrpc::DUPLICATE_SESSION, msg),
            SessionError::NotTypechecked { diagnostics, .. } => RpcError::new(jsonrpc::NOT_TYPECHECKED, msg)
                .with_data(json!({"diagnostics": diagnostics.iter().map(crate::lsp::diagnostic).collect::<Vec<_>>()})),
            SessionError::UnknownDocument(_) => RpcError::new(jsonrpc::UNKNOWN_DOCUMENT, msg),
            SessionError::UnknownFormula(_) => RpcError::new(jsonrpc::UNKNOWN_FORMULA, msg),
            SessionError::Prover(p) => RpcError::new(jsonrpc::PROVER_ERROR, msg).with_data(json!({"kind": p.code()})),
            SessionError::Cancelled => RpcError::cancelled(),
            SessionError::Io(_) => RpcError::new(jsonrpc::IO_ERROR, msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Created {
    pub session_id: String,
    pub sequent: String,
    pub tree: TreeView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommandReply {
    pub result: ProverResult,
    pub delta: TreeDelta,
    /// Active sequent after the command; `None` once nothing is left to prove.
    pub sequent: Option<String>,
    pub proved: bool,
    pub state: SessionState,
}

/// A queued command's eventual result.
pub struct Pending {
    id: String,
    rx: oneshot::Receiver<Result<CommandReply, SessionError>>,
}

impl Pending {
    pub async fn wait(self) -> Result<CommandReply, SessionError> {
        self.rx.await.map_err(|_| SessionError::UnknownSession(self.id))?
    }
}

enum Job {
    Command { text: String, cancel: Arc<AtomicBool>, reply: oneshot::Sender<Result<CommandReply, SessionError>> },
    Close { persist: bool, reply: oneshot::Sender<Result<Option<PathBuf>, SessionError>> },
}

struct Session {
    target: FormulaTarget,
    tx: mpsc::UnboundedSender<Job>,
    state: Arc<Mutex<SessionState>>,
    tree: Arc<Mutex<ProofTree>>,
}

#[derive(Default)]
struct Table {
    next_id: u64,
    sessions: HashMap<String, Session>,
}

/// Shared handle to the session table.
#[derive(Clone)]
pub struct SessionPool {
    table: Arc<Mutex<Table>>,
    exec: Arc<Semaphore>,
    size: Arc<Mutex<usize>>,
    workspace: Arc<RwLock<Workspace>>,
}

struct Worker {
    id: String,
    target: FormulaTarget,
    scope: Arc<TypecheckResult>,
    tree: Arc<Mutex<ProofTree>>,
    state: Arc<Mutex<SessionState>>,
    exec: Arc<Semaphore>,
    workspace: Arc<RwLock<Workspace>>,
}

/// Default number of commands allowed to execute at once.
pub fn default_pool_size() -> usize {
    std::thread::available_parallelism().map_or(2, |n| n.get()).max(2)
}

impl SessionPool {
    pub fn new(workspace: Arc<RwLock<Workspace>>, pool_size: usize) -> Self {
        let size = pool_size.max(1);
        SessionPool { table: Arc::default(), exec: Arc::new(Semaphore::new(size)), size: Arc::new(Mutex::new(size)), workspace }
    }

    /// Changes how many commands may execute at once. Shrinking waits for no running command;
    /// it takes effect as permits are returned.
    pub fn resize(&self, pool_size: usize) {
        let n = pool_size.max(1);
        let mut size = self.size.lock();
        if n > *size {
            self.exec.add_permits(n - *size);
        } else if n < *size {
            let exec = self.exec.clone();
            let k = (*size - n) as u32;
            match exec.clone().try_acquire_many_owned(k) {
                Ok(p) => p.forget(),
                Err(_) => {
                    tokio::spawn(async move {
                        if let Ok(p) = exec.acquire_many_owned(k).await {
                            p.forget();
                        }
                    });
                }
            }
        }
        *size = n;
    }

    pub fn pool_size(&self) -> usize {
        *self.size.lock()
    }

    pub fn workspace(&self) -> &Arc<RwLock<Workspace>> {
        &self.workspace
    }

    /// Typechecks the workspace if needed and opens a session on the formula.
    pub fn create(&self, target: FormulaTarget) -> Result<Created, SessionError> {
        let scope = {
            let mut ws = self.workspace.write();
            ws.analyze();
            if ws.document(&target.uri).is_none() {
                return Err(SessionError::UnknownDocument(target.uri.clone()));
            }
            if ws.theory_uri(&target.theory) != Some(target.uri.as_str()) {
                return Err(SessionError::NotTypechecked {
                    theory: target.theory.clone(),
                    diagnostics: ws.diagnostics(&target.uri),
                });
            }
            if !ws.is_typechecked(&target.theory) {
                return Err(SessionError::NotTypechecked {
                    theory: target.theory.clone(),
                    diagnostics: ws.diagnostics(&target.uri),
                });
            }
            ws.result(&target.theory).expect("typechecked theory has a result")
        };
        let tree = start_proof(&scope, &target.formula).map_err(|e| match e {
            ProverError::FormulaNotFound(f) => SessionError::UnknownFormula(format!("{}.{}", target.theory, f)),
            other => SessionError::Prover(other),
        })?;
        let sequent = tree.active_sequent().map(|s| s.render()).unwrap_or_default();
        let view = tree.view();
        let mut table = self.table.lock();
        let existing = table.sessions.iter().find(|(_, s)| s.target == target).map(|(id, s)| (id.clone(), *s.state.lock()));
        match existing {
            Some((_, SessionState::Active)) => {
                return Err(SessionError::DuplicateSession(format!("{}.{}", target.theory, target.formula)))
            }
            Some((old, _)) => {
                table.sessions.remove(&old);
            }
            None => {}
        }
        table.next_id += 1;
        let id = format!("s{}", table.next_id);
        let (tx, rx) = mpsc::unbounded_channel();
        let tree = Arc::new(Mutex::new(tree));
        let state = Arc::new(Mutex::new(SessionState::Active));
        let worker = Worker {
            id: id.clone(),
            target: target.clone(),
            scope,
            tree: tree.clone(),
            state: state.clone(),
            exec: self.exec.clone(),
            workspace: self.workspace.clone(),
        };
        tokio::spawn(worker.run(rx));
        table.sessions.insert(id.clone(), Session { target, tx, state, tree });
        Ok(Created { session_id: id, sequent, tree: view })
    }

    /// Queues a command behind earlier commands of the same session. A set `cancel` flag
    /// skips the command if it has not started yet.
    pub fn submit(&self, id: &str, text: &str, cancel: Arc<AtomicBool>) -> Result<Pending, SessionError> {
        let (reply, rx) = oneshot::channel();
        let table = self.table.lock();
        let s = table.sessions.get(id).ok_or_else(|| SessionError::UnknownSession(id.to_owned()))?;
        s.tx
            .send(Job::Command { text: text.to_owned(), cancel, reply })
            .map_err(|_| SessionError::UnknownSession(id.to_owned()))?;
        Ok(Pending { id: id.to_owned(), rx })
    }

    /// [`SessionPool::submit`] and wait for the result.
    pub async fn command(&self, id: &str, text: &str, cancel: Arc<AtomicBool>) -> Result<CommandReply, SessionError> {
        self.submit(id, text, cancel)?.wait().await
    }

    /// Removes the session after its queued commands; with `persist`, saves its script.
    pub async fn close(&self, id: &str, persist: bool) -> Result<Option<PathBuf>, SessionError> {
        let (reply, rx) = oneshot::channel();
        {
            let mut table = self.table.lock();
            let s = table.sessions.remove(id).ok_or_else(|| SessionError::UnknownSession(id.to_owned()))?;
            s.tx.send(Job::Close { persist, reply }).map_err(|_| SessionError::UnknownSession(id.to_owned()))?;
        }
        rx.await.map_err(|_| SessionError::UnknownSession(id.to_owned()))?
    }

    /// Abandons and drops every session, e.g. when the client disconnects.
    pub fn abandon_all(&self) {
        let mut table = self.table.lock();
        for s in table.sessions.values() {
            let mut st = s.state.lock();
            if *st == SessionState::Active {
                *st = SessionState::Abandoned;
            }
        }
        table.sessions.clear();
    }

    pub fn state(&self, id: &str) -> Option<SessionState> {
        self.table.lock().sessions.get(id).map(|s| *s.state.lock())
    }

    pub fn target(&self, id: &str) -> Option<FormulaTarget> {
        self.table.lock().sessions.get(id).map(|s| s.target.clone())
    }

    /// Current serialization of a session's tree.
    pub fn serialize(&self, id: &str) -> Option<String> {
        let tree = self.table.lock().sessions.get(id)?.tree.clone();
        let s = tree.lock().serialize();
        Some(s)
    }

    pub fn len(&self) -> usize {
        self.table.lock().sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Worker {
    async fn run(self, mut rx: mpsc::UnboundedReceiver<Job>) {
        while let Some(job) = rx.recv().await {
            match job {
                Job::Command { text, cancel, reply } => {
                    let r = self.command(text, cancel).await;
                    let _ = reply.send(r);
                }
                Job::Close { persist, reply } => {
                    let r = self.close(persist);
                    let _ = reply.send(r);
                    break;
                }
            }
        }
    }

    async fn command(&self, text: String, cancel: Arc<AtomicBool>) -> Result<CommandReply, SessionError> {
        if cancel.load(Ordering::SeqCst) {
            return Err(SessionError::Cancelled);
        }
        if *self.state.lock() != SessionState::Active {
            return Err(SessionError::SessionDone(self.id.clone()));
        }
        let permit = self.exec.clone().acquire_owned().await.expect("semaphore is never closed");
        if cancel.load(Ordering::SeqCst) {
            return Err(SessionError::Cancelled);
        }
        let tree = self.tree.clone();
        let scope = self.scope.clone();
        let out = tokio::task::spawn_blocking(move || {
            let _permit = permit;
            let mut t = tree.lock();
            let before = t.view();
            let result = apply_text(&mut t, &text, &scope)?;
            let delta = before.delta_to(&t.view());
            let sequent = t.active_sequent().map(|s| s.render());
            Ok::<_, ProverError>((result, delta, sequent, t.is_proved(), t.abandoned))
        })
        .await
        .map_err(|e| SessionError::Io(format!("prover task failed: {e}")))?;
        let (result, delta, sequent, proved, abandoned) = out.map_err(SessionError::Prover)?;
        let state = if proved {
            SessionState::Done
        } else if abandoned {
            SessionState::Abandoned
        } else {
            SessionState::Active
        };
        *self.state.lock() = state;
        if proved {
            let _ = self.workspace.write().set_formula_status(&self.target.theory, &self.target.formula, FormulaStatus::Proved);
        }
        Ok(CommandReply { result, delta, sequent, proved, state })
    }

    fn close(&self, persist: bool) -> Result<Option<PathBuf>, SessionError> {
        let tree = self.tree.lock();
        let proved = tree.is_proved();
        {
            let mut st = self.state.lock();
            if *st == SessionState::Active {
                *st = SessionState::Abandoned;
            }
        }
        let mut ws = self.workspace.write();
        let status = if proved { FormulaStatus::Proved } else { FormulaStatus::Unfinished };
        let _ = ws.set_formula_status(&self.target.theory, &self.target.formula, status);
        if !persist {
            return Ok(None);
        }
        let root = ws.root().ok_or_else(|| SessionError::Io("no workspace root to save the proof under".into()))?;
        let path = write_script(root, &save_script(&tree)).map_err(|e| SessionError::Io(e.to_string()))?;
        Ok(Some(path))
    }
}

/// Writes `<root>/proofs/<theory>.<formula>.proof.json`.
pub fn write_script(root: &Path, script: &ProofScript) -> std::io::Result<PathBuf> {
    let dir = root.join(PROOFS_DIR);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(ProofScript::file_name(&script.theory, &script.formula));
    std::fs::write(&path, script.to_json())?;
    Ok(path)
}
