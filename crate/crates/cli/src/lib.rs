//! `micropvs` command line: language server, batch typecheck, proof replay, evaluation and
//! index dump.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};
use micropvs_core::diagnostic::Diagnostic;
use micropvs_core::eval::{evaluate, EvalOptions, DEFAULT_FUEL};
use micropvs_core::prover::{load_and_replay, ProofScript};
use micropvs_core::workspace::{path_to_uri, FormulaStatus, Workspace};
use micropvs_server::sessions::{default_pool_size, PROOFS_DIR};
use micropvs_server::{Config, Exit};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "micropvs", version, about = "IDE backend and batch tools for the micro-PVS specification language")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run the language server.
    Serve {
        /// Speak the protocol on stdin/stdout (the default).
        #[arg(long, conflicts_with = "port")]
        stdio: bool,
        /// Accept one client on this TCP port instead.
        #[arg(long)]
        port: Option<u16>,
        /// Quiet period before re-analysis after an edit.
        #[arg(long, default_value_t = 250)]
        debounce_ms: u64,
        /// Prover commands allowed to run at once.
        #[arg(long)]
        pool_size: Option<usize>,
    },
    /// Typecheck files and list their TCCs.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Replay saved proof scripts for every formula and TCC of a file.
    Prove {
        file: PathBuf,
        /// Directory holding `<theory>.<formula>.proof.json` files (default: `proofs/` next to the file).
        #[arg(long)]
        scripts: Option<PathBuf>,
    },
    /// Evaluate a ground expression in the scope of a theory.
    Eval {
        file: PathBuf,
        #[arg(short = 'e', long = "expr")]
        expr: String,
        /// Theory to evaluate in (default: the first theory of the file).
        #[arg(long)]
        theory: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Print the declaration index of a directory as JSON.
    Index {
        #[arg(default_value = ".")]
        root: PathBuf,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let r = match cli.command {
        Cmd::Serve { stdio: _, port, debounce_ms, pool_size } => serve(port, debounce_ms, pool_size, err),
        Cmd::Check { files } => check(&files, out),
        Cmd::Prove { file, scripts } => prove(&file, scripts.as_deref(), out),
        Cmd::Eval { file, expr, theory, fuel } => eval(&file, &expr, theory.as_deref(), fuel, out),
        Cmd::Index { root } => index(&root, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

type CmdResult = Result<i32, String>;

fn serve(port: Option<u16>, debounce_ms: u64, pool_size: Option<usize>, err: &mut dyn Write) -> CmdResult {
    let config = Config {
        debounce: Duration::from_millis(debounce_ms),
        pool_size: pool_size.unwrap_or_else(default_pool_size),
        ..Config::default()
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let exit = rt.block_on(async move {
        let session = async {
            match port {
                None => micropvs_server::serve(tokio::io::stdin(), tokio::io::stdout(), config).await,
                Some(p) => {
                    let listener = tokio::net::TcpListener::bind(("127.0.0.1", p)).await?;
                    let (stream, _) = listener.accept().await?;
                    let (r, w) = stream.into_split();
                    micropvs_server::serve(r, w, config).await
                }
            }
        };
        tokio::select! {
            r = session => r.map(Some),
            _ = tokio::signal::ctrl_c() => Ok(None),
        }
    });
    rt.shutdown_timeout(Duration::from_millis(100));
    match exit {
        Ok(Some(Exit::Clean)) | Ok(None) => Ok(EXIT_OK),
        Ok(Some(Exit::Abrupt)) => Ok(EXIT_FAILURE),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Ok(EXIT_USAGE)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn uri_of(path: &Path) -> Result<String, String> {
    let abs = std::fs::canonicalize(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path_to_uri(&abs))
}

/// The given files plus the other `.pvs` files beside them, so imports resolve.
fn load_files(files: &[PathBuf]) -> Result<(Workspace, Vec<(PathBuf, String)>), String> {
    let mut ws = Workspace::new();
    let mut given = Vec::new();
    for f in files {
        let text = read(f)?;
        let uri = uri_of(f)?;
        ws.upsert_document(&uri, &text, 1).map_err(|e| e.to_string())?;
        given.push((f.clone(), uri));
    }
    let dirs: BTreeSet<PathBuf> = files
        .iter()
        .filter_map(|f| std::fs::canonicalize(f).ok()?.parent().map(Path::to_path_buf))
        .collect();
    for dir in dirs {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        let mut paths: Vec<PathBuf> = entries.filter_map(|e| Some(e.ok()?.path())).collect();
        paths.sort();
        for p in paths {
            if p.extension().is_some_and(|e| e == "pvs") {
                let uri = path_to_uri(&p);
                if ws.document(&uri).is_none() {
                    if let Ok(text) = std::fs::read_to_string(&p) {
                        let _ = ws.upsert_document(&uri, &text, 1);
                    }
                }
            }
        }
    }
    ws.analyze();
    Ok((ws, given))
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn print_diagnostics(out: &mut dyn Write, path: &Path, diags: &[Diagnostic]) -> std::io::Result<()> {
    for d in diags {
        writeln!(out, "{}", d.render_line(&path.display().to_string()))?;
    }
    Ok(())
}

/// Diagnostics of a file as `check` reports them.
pub fn check_diagnostics(ws: &Workspace, uri: &str) -> Vec<Diagnostic> {
    ws.diagnostics(uri)
}

fn check(files: &[PathBuf], out: &mut dyn Write) -> CmdResult {
    let (ws, given) = load_files(files)?;
    let io = |e: std::io::Error| e.to_string();
    let mut failed = false;
    for (path, uri) in &given {
        let diags = check_diagnostics(&ws, uri);
        print_diagnostics(out, path, &diags).map_err(io)?;
        let errors = diags.iter().filter(|d| d.is_error()).count();
        failed |= errors > 0;
        let doc = ws.document(uri).expect("loaded document");
        let mut tccs = Vec::new();
        for t in &doc.parse.ast.theories {
            if ws.is_current(uri) && ws.theory_uri(&t.name.name) == Some(uri.as_str()) {
                if let Some(r) = ws.result(&t.name.name) {
                    tccs.extend(r.tccs.iter().map(|c| (t.name.name.clone(), c.clone())));
                }
            }
        }
        writeln!(out, "{}: {}, {}", path.display(), plural(errors, "error"), plural(tccs.len(), "TCC")).map_err(io)?;
        for (theory, c) in tccs {
            writeln!(out, "  {theory}.{} ({}): {}", c.id, c.kind.as_str(), c.text).map_err(io)?;
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

/// Outcome of replaying one formula's script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub theory: String,
    pub formula: String,
    pub proved: bool,
    pub note: String,
}

/// Replays every formula and TCC of the theories in `file`, recording statuses.
pub fn replay_file(ws: &mut Workspace, uri: &str, scripts: &Path) -> Result<Vec<ReplayReport>, String> {
    let doc = ws.document(uri).ok_or_else(|| format!("unknown document {uri}"))?;
    let names: Vec<String> = doc.parse.ast.theories.iter().map(|t| t.name.name.clone()).collect();
    let tree = ws.theory_tree();
    let mut reports = Vec::new();
    for theory in names {
        let Some(node) = tree.theories.iter().find(|t| t.name == theory && t.uri == uri) else { continue };
        let scope = ws.is_typechecked(&theory).then(|| ws.result(&theory)).flatten();
        for f in &node.formulas {
            let path = scripts.join(ProofScript::file_name(&theory, &f.name));
            let (proved, note) = match (&scope, std::fs::read_to_string(&path)) {
                (None, _) => (false, "theory does not typecheck".to_owned()),
                (_, Err(_)) => (false, "no script".to_owned()),
                (Some(scope), Ok(text)) => match ProofScript::from_json(&text) {
                    Err(e) => (false, format!("bad script: {e}")),
                    Ok(script) => match load_and_replay(&script, scope) {
                        Ok(t) if t.is_proved() => (true, String::new()),
                        Ok(_) => (false, "script leaves open goals".to_owned()),
                        Err(e) => (false, e.to_string()),
                    },
                },
            };
            let status = if proved { FormulaStatus::Proved } else { FormulaStatus::Unfinished };
            ws.set_formula_status(&theory, &f.name, status).map_err(|e| e.to_string())?;
            reports.push(ReplayReport { theory: theory.clone(), formula: f.name.clone(), proved, note });
        }
    }
    Ok(reports)
}

fn prove(file: &Path, scripts: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let io = |e: std::io::Error| e.to_string();
    let abs = std::fs::canonicalize(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let dir = abs.parent().ok_or_else(|| format!("{}: no parent directory", file.display()))?;
    let mut ws = Workspace::open(dir).map_err(|e| e.to_string())?;
    let uri = path_to_uri(&abs);
    ws.analyze();
    let diags = ws.diagnostics(&uri);
    print_diagnostics(out, file, &diags).map_err(io)?;
    let scripts = scripts.map_or_else(|| dir.join(PROOFS_DIR), Path::to_path_buf);
    let reports = replay_file(&mut ws, &uri, &scripts)?;
    for r in &reports {
        let state = if r.proved { "proved" } else { "unfinished" };
        if r.note.is_empty() {
            writeln!(out, "{}.{}: {state}", r.theory, r.formula).map_err(io)?;
        } else {
            writeln!(out, "{}.{}: {state} ({})", r.theory, r.formula, r.note).map_err(io)?;
        }
    }
    let proved = reports.iter().filter(|r| r.proved).count();
    writeln!(out, "{} proved, {} unfinished", proved, reports.len() - proved).map_err(io)?;
    let ok = proved == reports.len() && !diags.iter().any(Diagnostic::is_error);
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

fn eval(file: &Path, expr: &str, theory: Option<&str>, fuel: u64, out: &mut dyn Write) -> CmdResult {
    let io = |e: std::io::Error| e.to_string();
    let (ws, given) = load_files(&[file.to_path_buf()])?;
    let uri = &given[0].1;
    let doc = ws.document(uri).expect("loaded document");
    let theory = match theory {
        Some(t) => t.to_owned(),
        None => doc.parse.ast.theories.first().map(|t| t.name.name.clone()).ok_or("file declares no theory")?,
    };
    if !ws.is_typechecked(&theory) {
        print_diagnostics(out, file, &ws.diagnostics(uri)).map_err(io)?;
        writeln!(out, "error: theory {theory} does not typecheck").map_err(io)?;
        return Ok(EXIT_FAILURE);
    }
    let scope = ws.result(&theory).ok_or_else(|| format!("unknown theory {theory}"))?;
    match evaluate(&scope, expr, &EvalOptions { fuel, cancel: None }) {
        Ok(v) => {
            writeln!(out, "{v}").map_err(io)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            writeln!(out, "error: {e}").map_err(io)?;
            Ok(EXIT_FAILURE)
        }
    }
}

fn index(root: &Path, out: &mut dyn Write) -> CmdResult {
    let mut ws = Workspace::open(root).map_err(|e| e.to_string())?;
    ws.analyze();
    let json = serde_json::to_string_pretty(ws.index()).map_err(|e| e.to_string())?;
    writeln!(out, "{json}").map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}
