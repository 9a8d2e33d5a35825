//! Connection manager: reads the wire, routes requests to providers, the workspace and the
//! session pool, and writes responses and notifications.

use std::collections::{HashMap, HashSet};
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use micropvs_core::diagnostic::Diagnostic;
use micropvs_core::eval::{evaluate, EvalError, EvalOptions, DEFAULT_FUEL};
use micropvs_core::syntax::LineIndex;
use micropvs_core::typecheck::prelude::PRELUDE_TEXT;
use micropvs_core::workspace::{path_to_uri, uri_to_path, Workspace, WorkspaceError};
use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::io::{AsyncRead, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::sync::mpsc;
use tokio::time::Instant;

use crate::debounce::{Debouncer, DEFAULT_WINDOW};
use crate::jsonrpc::{self, read_frame, Id, Message, RpcError};
use crate::lsp::{self, DidChangeParams, DidCloseParams, DidOpenParams, RenameParams, TextDocumentIdentifier, TextDocumentPositionParams};
use crate::providers;
use crate::sessions::{default_pool_size, FormulaTarget, SessionPool};

#[derive(Debug, Clone)]
pub struct Config {
    pub debounce: Duration,
    pub pool_size: usize,
    pub eval_fuel: u64,
    /// Write the prelude to a temporary file so hover links and definitions can open it.
    pub materialize_prelude: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { debounce: DEFAULT_WINDOW, pool_size: default_pool_size(), eval_fuel: DEFAULT_FUEL, materialize_prelude: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Uninitialized,
    Running,
    ShutDown,
}

/// How the connection ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// `exit` after `shutdown`.
    Clean,
    /// `exit` without `shutdown`, or the stream closed.
    Abrupt,
}

enum Outgoing {
    Message(Value),
    Close,
}

struct Shared {
    ws: Arc<RwLock<Workspace>>,
    pool: SessionPool,
    out: mpsc::UnboundedSender<Outgoing>,
    debouncer: Mutex<Debouncer>,
    open: Mutex<HashSet<String>>,
    published: Mutex<HashMap<String, Vec<Diagnostic>>>,
    cancels: Mutex<HashMap<Id, Arc<AtomicBool>>>,
    phase: Mutex<Phase>,
    eval_fuel: Mutex<u64>,
    materialize_prelude: bool,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct InitOptions {
    debounce_ms: Option<u64>,
    pool_size: Option<usize>,
    eval_fuel: Option<u64>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ProofCommandParams {
    session_id: String,
    cmd: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct InitializeParams {
    #[serde(default)]
    root_uri: Option<String>,
    #[serde(default)]
    root_path: Option<String>,
    #[serde(default)]
    initialization_options: Option<InitOptions>,
}

fn decode<T: DeserializeOwned>(v: Value) -> Result<T, RpcError> {
    serde_json::from_value(v).map_err(|e| RpcError::invalid_params(e.to_string()))
}

fn root_path(s: &str) -> PathBuf {
    uri_to_path(s).unwrap_or_else(|| PathBuf::from(s))
}

fn workspace_error(e: WorkspaceError) -> RpcError {
    let code = match e {
        WorkspaceError::UnknownDocument(_) => jsonrpc::UNKNOWN_DOCUMENT,
        WorkspaceError::UnknownFormula(_) => jsonrpc::UNKNOWN_FORMULA,
        WorkspaceError::StaleVersion { .. } => jsonrpc::INVALID_PARAMS,
        WorkspaceError::Io(_) => jsonrpc::IO_ERROR,
    };
    RpcError::new(code, e.to_string())
}

fn eval_error(e: EvalError) -> RpcError {
    let kind = match e {
        EvalError::Parse(_) => "parse-error",
        EvalError::Type(_) => "type-error",
        EvalError::DivisionByZero => "division-by-zero",
        EvalError::FuelExhausted(_) => "fuel-exhausted",
        EvalError::NonExecutable(_) => "non-executable",
        EvalError::Uninterpreted(_) => "uninterpreted",
        EvalError::Cancelled => return RpcError::cancelled(),
    };
    RpcError::new(jsonrpc::EVAL_ERROR, e.to_string()).with_data(json!({"kind": kind}))
}

/// Serves one connection until `exit` or end of stream.
pub async fn serve<R, W>(reader: R, writer: W, config: Config) -> io::Result<Exit>
where
    R: AsyncRead + Unpin + Send + 'static,
    W: AsyncWrite + Unpin + Send + 'static,
{
    let ws = Arc::new(RwLock::new(Workspace::new()));
    let (tx, mut rx) = mpsc::unbounded_channel::<Outgoing>();
    let writer_task = tokio::spawn(async move {
        let mut w = writer;
        while let Some(m) = rx.recv().await {
            match m {
                Outgoing::Message(v) => {
                    if w.write_all(&jsonrpc::encode_value(&v)).await.is_err() || w.flush().await.is_err() {
                        break;
                    }
                }
                Outgoing::Close => break,
            }
        }
        let _ = w.shutdown().await;
    });
    let statuses = ws.write().subscribe();
    let status_tx = tx.clone();
    std::thread::spawn(move || {
        while let Ok(d) = statuses.recv() {
            let msg = jsonrpc::notification("pvs/statusChanged", serde_json::to_value(&d).unwrap_or_default());
            if status_tx.send(Outgoing::Message(msg)).is_err() {
                break;
            }
        }
    });
    let shared = Arc::new(Shared {
        pool: SessionPool::new(ws.clone(), config.pool_size),
        ws,
        out: tx,
        debouncer: Mutex::new(Debouncer::new(config.debounce)),
        open: Mutex::default(),
        published: Mutex::default(),
        cancels: Mutex::default(),
        phase: Mutex::new(Phase::Uninitialized),
        eval_fuel: Mutex::new(config.eval_fuel),
        materialize_prelude: config.materialize_prelude,
    });
    let mut reader = BufReader::new(reader);
    let exit = loop {
        let body = match read_frame(&mut reader).await {
            Ok(Some(b)) => b,
            Ok(None) => break Exit::Abrupt,
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                shared.send(jsonrpc::response(None, Err(RpcError::new(jsonrpc::PARSE_ERROR, e.to_string()))));
                continue;
            }
            Err(_) => break Exit::Abrupt,
        };
        let value: Value = match serde_json::from_slice(&body) {
            Ok(v) => v,
            Err(e) => {
                shared.send(jsonrpc::response(None, Err(RpcError::new(jsonrpc::PARSE_ERROR, e.to_string()))));
                continue;
            }
        };
        match Message::from_value(value) {
            Err((id, e)) => shared.send(jsonrpc::response(id.as_ref(), Err(e))),
            Ok(Message::Response { .. }) => {}
            Ok(Message::Notification { method, params }) => {
                if method == "exit" {
                    break if *shared.phase.lock() == Phase::ShutDown { Exit::Clean } else { Exit::Abrupt };
                }
                shared.notification(&method, params);
            }
            Ok(Message::Request { id, method, params }) => shared.clone().request(id, method, params),
        }
    };
    shared.pool.abandon_all();
    let _ = shared.out.send(Outgoing::Close);
    let _ = writer_task.await;
    Ok(exit)
}

impl Shared {
    fn send(&self, v: Value) {
        let _ = self.out.send(Outgoing::Message(v));
    }

    fn request(self: Arc<Self>, id: Id, method: String, params: Value) {
        let phase = *self.phase.lock();
        let early = match (phase, method.as_str()) {
            (Phase::Uninitialized, "initialize") => Some(self.initialize(params.clone())),
            (Phase::Uninitialized, _) => {
                Some(Err(RpcError::new(jsonrpc::SERVER_NOT_INITIALIZED, "server not initialized")))
            }
            (Phase::ShutDown, _) => Some(Err(RpcError::new(jsonrpc::INVALID_REQUEST, "server is shutting down"))),
            (Phase::Running, "initialize") => {
                Some(Err(RpcError::new(jsonrpc::INVALID_REQUEST, "server already initialized")))
            }
            (Phase::Running, "shutdown") => {
                *self.phase.lock() = Phase::ShutDown;
                Some(Ok(Value::Null))
            }
            _ => None,
        };
        if let Some(r) = early {
            self.send(jsonrpc::response(Some(&id), r));
            return;
        }
        let cancel = Arc::new(AtomicBool::new(false));
        self.cancels.lock().insert(id.clone(), cancel.clone());
        // Proof commands are queued before the next message is read, keeping wire order.
        let queued = (method == "pvs/proof-command").then(|| {
            decode::<ProofCommandParams>(params.clone())
                .and_then(|p| self.pool.submit(&p.session_id, &p.cmd, cancel.clone()).map_err(RpcError::from))
        });
        tokio::spawn(async move {
            let r = match queued {
                Some(Ok(pending)) => pending.wait().await.map(|r| json!(r)).map_err(RpcError::from),
                Some(Err(e)) => Err(e),
                None => self.clone().handle(&method, params, cancel.clone()).await,
            };
            let r = if cancel.load(Ordering::SeqCst) { Err(RpcError::cancelled()) } else { r };
            self.cancels.lock().remove(&id);
            self.send(jsonrpc::response(Some(&id), r));
        });
    }

    fn initialize(&self, params: Value) -> Result<Value, RpcError> {
        let p: InitializeParams = decode::<Option<InitializeParams>>(params)?.unwrap_or(InitializeParams {
            root_uri: None,
            root_path: None,
            initialization_options: None,
        });
        let opts = p.initialization_options.unwrap_or_default();
        if let Some(ms) = opts.debounce_ms {
            self.debouncer.lock().set_window(Duration::from_millis(ms));
        }
        if let Some(n) = opts.pool_size {
            self.pool.resize(n);
        }
        if let Some(f) = opts.eval_fuel {
            *self.eval_fuel.lock() = f;
        }
        let mut ws = self.ws.write();
        if self.materialize_prelude {
            if let Some(uri) = materialize_prelude() {
                ws.set_prelude_uri(uri);
            }
        }
        if let Some(root) = p.root_uri.or(p.root_path) {
            ws.set_root(&root_path(&root)).map_err(workspace_error)?;
        }
        drop(ws);
        *self.phase.lock() = Phase::Running;
        Ok(json!({
            "capabilities": lsp::server_capabilities(),
            "serverInfo": {"name": "micropvs", "version": env!("CARGO_PKG_VERSION")},
        }))
    }

    fn notification(self: &Arc<Self>, method: &str, params: Value) {
        if *self.phase.lock() == Phase::Uninitialized {
            return;
        }
        match method {
            "$/cancelRequest" => {
                let id = params.get("id").cloned().and_then(|v| serde_json::from_value::<Id>(v).ok());
                if let Some(flag) = id.and_then(|id| self.cancels.lock().get(&id).cloned()) {
                    flag.store(true, Ordering::SeqCst);
                }
            }
            "textDocument/didOpen" => {
                let Ok(p) = serde_json::from_value::<DidOpenParams>(params) else { return };
                let uri = p.text_document.uri;
                {
                    let mut ws = self.ws.write();
                    ws.remove_document(&uri);
                    if ws.upsert_document(&uri, &p.text_document.text, p.text_document.version).is_err() {
                        return;
                    }
                    self.open.lock().insert(uri.clone());
                }
                self.schedule(uri);
            }
            "textDocument/didChange" => {
                let Ok(p) = serde_json::from_value::<DidChangeParams>(params) else { return };
                let uri = p.text_document.uri;
                {
                    let mut ws = self.ws.write();
                    let Some(doc) = ws.document(&uri) else { return };
                    let mut text = doc.text().to_owned();
                    for c in p.content_changes {
                        match c.range {
                            Some(r) => {
                                let idx = LineIndex::new(&text);
                                let span = idx.span(r);
                                text.replace_range(span.start as usize..span.end as usize, &c.text);
                            }
                            None => text = c.text,
                        }
                    }
                    if ws.upsert_document(&uri, &text, p.text_document.version).is_err() {
                        return;
                    }
                }
                self.schedule(uri);
            }
            "textDocument/didClose" => {
                if let Ok(p) = serde_json::from_value::<DidCloseParams>(params) {
                    self.open.lock().remove(&p.text_document.uri);
                    self.published.lock().remove(&p.text_document.uri);
                }
            }
            _ => {}
        }
    }

    fn schedule(self: &Arc<Self>, uri: String) {
        let (generation, deadline) = self.debouncer.lock().edit(&uri, Instant::now());
        let me = self.clone();
        tokio::spawn(async move {
            tokio::time::sleep_until(deadline).await;
            me.flush(&uri, generation);
        });
    }

    /// Analyzes and publishes unless a newer edit superseded `generation`. Runs under the
    /// workspace write lock so the published version is the latest applied one.
    fn flush(&self, uri: &str, generation: u64) {
        let mut ws = self.ws.write();
        if !self.debouncer.lock().fire(uri, generation, Instant::now()) {
            return;
        }
        ws.analyze();
        self.publish(&ws, uri, true);
        let open: Vec<String> = self.open.lock().iter().filter(|u| *u != uri).cloned().collect();
        for other in open {
            if ws.is_current(&other) {
                self.publish(&ws, &other, false);
            }
        }
    }

    fn publish(&self, ws: &Workspace, uri: &str, always: bool) {
        let Some(doc) = ws.document(uri) else { return };
        let diags = ws.diagnostics(uri);
        let mut published = self.published.lock();
        if !always && published.get(uri) == Some(&diags) {
            return;
        }
        self.send(jsonrpc::notification("textDocument/publishDiagnostics", lsp::publish_diagnostics(uri, doc.version, &diags)));
        published.insert(uri.to_owned(), diags);
    }

    async fn handle(self: Arc<Self>, method: &str, params: Value, cancel: Arc<AtomicBool>) -> Result<Value, RpcError> {
        match method {
            "textDocument/hover" => {
                let p: TextDocumentPositionParams = decode(params)?;
                let ws = self.ws.read();
                Ok(providers::hover(&ws, &p.text_document.uri, p.position).map_or(Value::Null, |h| json!(h)))
            }
            "textDocument/definition" => {
                let p: TextDocumentPositionParams = decode(params)?;
                Ok(providers::definition(&self.ws.read(), &p.text_document.uri, p.position))
            }
            "textDocument/completion" => {
                let p: TextDocumentPositionParams = decode(params)?;
                Ok(json!(providers::completion(&self.ws.read(), &p.text_document.uri, p.position)))
            }
            "textDocument/codeLens" => {
                #[derive(Deserialize)]
                #[serde(rename_all = "camelCase")]
                struct P {
                    text_document: TextDocumentIdentifier,
                }
                let p: P = decode(params)?;
                Ok(json!(providers::code_lens(&self.ws.read(), &p.text_document.uri)))
            }
            "textDocument/rename" => {
                let p: RenameParams = decode(params)?;
                let edit = providers::rename(&self.ws.read(), &p.text_document.uri, p.position, &p.new_name)?;
                Ok(json!(edit))
            }
            "pvs/typecheck" => {
                #[derive(Deserialize)]
                struct P {
                    uri: String,
                }
                let p: P = decode(params)?;
                self.typecheck(&p.uri)
            }
            "pvs/theories" => {
                #[derive(Deserialize)]
                struct P {
                    #[serde(default)]
                    root: Option<String>,
                }
                let p: P = decode::<Option<P>>(params)?.unwrap_or(P { root: None });
                let mut ws = self.ws.write();
                if let Some(root) = p.root {
                    let path = root_path(&root);
                    if ws.root() != Some(path.as_path()) {
                        ws.set_root(&path).map_err(workspace_error)?;
                    }
                }
                ws.analyze();
                Ok(json!(ws.theory_tree()))
            }
            "pvs/prove-formula" => {
                let target: FormulaTarget = decode(params)?;
                let pool = self.pool.clone();
                let created = tokio::task::spawn_blocking(move || pool.create(target))
                    .await
                    .map_err(|e| RpcError::new(jsonrpc::INTERNAL_ERROR, e.to_string()))??;
                Ok(json!(created))
            }
            "pvs/quit-proof" => {
                #[derive(Deserialize)]
                #[serde(rename_all = "camelCase")]
                struct P {
                    session_id: String,
                    #[serde(default)]
                    persist: bool,
                }
                let p: P = decode(params)?;
                let path = self.pool.close(&p.session_id, p.persist).await?;
                Ok(json!({"scriptPath": path.map(|p| p.display().to_string())}))
            }
            "pvs/evaluate" => {
                #[derive(Deserialize)]
                struct P {
                    uri: String,
                    #[serde(default)]
                    theory: Option<String>,
                    expr: String,
                    #[serde(default)]
                    fuel: Option<u64>,
                }
                let p: P = decode(params)?;
                let scope = {
                    let mut ws = self.ws.write();
                    ws.analyze();
                    let doc = ws.document(&p.uri).ok_or_else(|| RpcError::new(jsonrpc::UNKNOWN_DOCUMENT, format!("unknown document {}", p.uri)))?;
                    let theory = match p.theory {
                        Some(t) => t,
                        None => doc
                            .parse
                            .ast
                            .theories
                            .first()
                            .map(|t| t.name.name.clone())
                            .ok_or_else(|| RpcError::new(jsonrpc::UNKNOWN_THEORY, "document declares no theory"))?,
                    };
                    if !ws.is_typechecked(&theory) {
                        let diags: Vec<Value> = ws.diagnostics(&p.uri).iter().map(lsp::diagnostic).collect();
                        return Err(RpcError::new(jsonrpc::NOT_TYPECHECKED, format!("theory {theory} is not typechecked"))
                            .with_data(json!({"diagnostics": diags})));
                    }
                    ws.result(&theory).ok_or_else(|| RpcError::new(jsonrpc::UNKNOWN_THEORY, format!("unknown theory {theory}")))?
                };
                let opts = EvalOptions { fuel: p.fuel.unwrap_or(*self.eval_fuel.lock()), cancel: Some(cancel) };
                let expr = p.expr;
                let v = tokio::task::spawn_blocking(move || evaluate(&scope, &expr, &opts))
                    .await
                    .map_err(|e| RpcError::new(jsonrpc::INTERNAL_ERROR, e.to_string()))?
                    .map_err(eval_error)?;
                Ok(json!({"value": v.to_string()}))
            }
            _ => Err(RpcError::new(jsonrpc::METHOD_NOT_FOUND, format!("unknown method {method}"))),
        }
    }

    fn typecheck(&self, uri: &str) -> Result<Value, RpcError> {
        let mut ws = self.ws.write();
        ws.analyze();
        let doc = ws.document(uri).ok_or_else(|| RpcError::new(jsonrpc::UNKNOWN_DOCUMENT, format!("unknown document {uri}")))?;
        let version = doc.version;
        let diags = ws.diagnostics(uri);
        let mut tccs = Vec::new();
        let mut theories = Vec::new();
        for t in &doc.parse.ast.theories {
            let name = &t.name.name;
            theories.push(json!({"name": name, "typechecked": ws.is_typechecked(name)}));
            if ws.theory_uri(name) != Some(uri) {
                continue;
            }
            if let Some(r) = ws.result(name) {
                for c in &r.tccs {
                    tccs.push(json!({
                        "id": c.id,
                        "theory": name,
                        "kind": c.kind,
                        "decl": c.decl,
                        "obligation": c.text,
                        "origin": c.origin,
                        "status": ws.status(name, &c.id),
                    }));
                }
            }
        }
        if self.open.lock().contains(uri) {
            self.publish(&ws, uri, false);
        }
        Ok(json!({
            "uri": uri,
            "version": version,
            "theories": theories,
            "diagnostics": diags.iter().map(lsp::diagnostic).collect::<Vec<_>>(),
            "tccs": tccs,
        }))
    }
}

/// Writes the prelude source to a per-process temporary file and returns its uri.
fn materialize_prelude() -> Option<String> {
    let dir = std::env::temp_dir().join(format!("micropvs-{}", std::process::id()));
    let path = dir.join("prelude.pvs");
    if std::fs::read_to_string(&path).ok().as_deref() != Some(PRELUDE_TEXT) {
        std::fs::create_dir_all(&dir).ok()?;
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let tmp = dir.join(format!("prelude.{}.tmp", NEXT.fetch_add(1, Ordering::SeqCst)));
        std::fs::write(&tmp, PRELUDE_TEXT).ok()?;
        std::fs::rename(&tmp, &path).ok()?;
    }
    Some(path_to_uri(&path))
}
