//! Document store and workspace-wide analysis: typechecking in import order, the declaration
//! index, symbol resolution and formula statuses.

mod index;
mod status;
mod uri;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;

use thiserror::Error;
use walkdir::WalkDir;

pub use index::{DeclEntry, EntryKind, Location};
pub use status::{load_sidecar, save_sidecar, status_key, FormulaNode, FormulaStatus, StatusDelta, TheoryNode, TheoryTree, SIDECAR_FILE};
pub use uri::{path_to_uri, uri_to_path};

use crate::diagnostic::{Diagnostic, DiagnosticSource};
use crate::syntax::ast::Theory;
use crate::syntax::lexer::TokenKind;
use crate::syntax::span::{Position, Range, Span};
use crate::syntax::{parse_theory_file, ParseResult};
use crate::typecheck::{prelude, prelude_parse, typecheck, DeclRef, Resolution, Type, TypecheckResult, PRELUDE_THEORY, PRELUDE_URI};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkspaceError {
    #[error("stale version {got} for {uri} (current {current})")]
    StaleVersion { uri: String, current: i64, got: i64 },
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("unknown formula {0}")]
    UnknownFormula(String),
    #[error("{0}")]
    Io(String),
}

/// A stored document with its latest parse.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub uri: String,
    pub version: i64,
    pub parse: Arc<ParseResult>,
}

impl SourceUnit {
    pub fn text(&self) -> &str {
        self.parse.line_index.text()
    }

    /// The theory whose extent contains `offset`.
    pub fn theory_at(&self, offset: usize) -> Option<&Theory> {
        self.parse.ast.theories.iter().find(|t| t.span.contains_offset(offset))
    }
}

/// What a name occurrence denotes.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Exact(DeclEntry),
    Local { ty: Type, location: Location },
    Field { record: Type },
    /// The enclosing theory is not typechecked: every declaration sharing the name.
    Candidates(Vec<DeclEntry>),
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolAt {
    pub name: String,
    pub span: Span,
    pub range: Range,
    /// Whether the occurrence follows a backtick.
    pub after_backtick: bool,
    pub resolved: Resolved,
}

#[derive(Debug)]
pub struct Workspace {
    root: Option<PathBuf>,
    prelude_uri: String,
    docs: BTreeMap<String, SourceUnit>,
    analyzed: HashMap<String, i64>,
    results: BTreeMap<String, Arc<TypecheckResult>>,
    theory_uri: BTreeMap<String, String>,
    check_diags: HashMap<String, Vec<Diagnostic>>,
    index: Vec<DeclEntry>,
    statuses: BTreeMap<String, FormulaStatus>,
    subscribers: Vec<mpsc::Sender<StatusDelta>>,
    dirty: bool,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::new()
    }
}

impl Workspace {
    pub fn new() -> Self {
        let mut ws = Workspace {
            root: None,
            prelude_uri: PRELUDE_URI.to_owned(),
            docs: BTreeMap::new(),
            analyzed: HashMap::new(),
            results: BTreeMap::new(),
            theory_uri: BTreeMap::new(),
            check_diags: HashMap::new(),
            index: Vec::new(),
            statuses: BTreeMap::new(),
            subscribers: Vec::new(),
            dirty: false,
        };
        ws.rebuild_index();
        ws
    }

    /// Loads every `.pvs` file under `root` and the status sidecar.
    pub fn open(root: &Path) -> Result<Self, WorkspaceError> {
        let mut ws = Workspace::new();
        ws.set_root(root)?;
        Ok(ws)
    }

    pub fn set_root(&mut self, root: &Path) -> Result<(), WorkspaceError> {
        if !root.is_dir() {
            return Err(WorkspaceError::Io(format!("{}: not a directory", root.display())));
        }
        self.statuses = load_sidecar(root)?;
        self.root = Some(root.to_path_buf());
        self.scan()
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Reads `.pvs` files under the root that are not already open.
    pub fn scan(&mut self) -> Result<(), WorkspaceError> {
        let Some(root) = self.root.clone() else { return Ok(()) };
        let mut files: Vec<PathBuf> = Vec::new();
        for entry in WalkDir::new(&root).sort_by_file_name() {
            let entry = entry.map_err(|e| WorkspaceError::Io(e.to_string()))?;
            if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "pvs") {
                files.push(entry.path().to_path_buf());
            }
        }
        for path in files {
            let uri = path_to_uri(&path);
            if self.docs.contains_key(&uri) {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| WorkspaceError::Io(format!("{}: {e}", path.display())))?;
            self.store(uri, text, 0);
        }
        self.rebuild_index();
        Ok(())
    }

    /// Where the prelude's declarations are reported to live.
    pub fn set_prelude_uri(&mut self, uri: impl Into<String>) {
        self.prelude_uri = uri.into();
        self.rebuild_index();
    }

    pub fn prelude_uri(&self) -> &str {
        &self.prelude_uri
    }

    /// Stores a new version of a document. Versions must strictly increase per uri.
    pub fn upsert_document(&mut self, uri: &str, text: &str, version: i64) -> Result<&SourceUnit, WorkspaceError> {
        if let Some(old) = self.docs.get(uri) {
            if version <= old.version {
                return Err(WorkspaceError::StaleVersion { uri: uri.to_owned(), current: old.version, got: version });
            }
            if old.text() != text {
                let mut touched: BTreeSet<String> = old.parse.ast.theories.iter().map(|t| t.name.name.clone()).collect();
                let fresh = parse_theory_file(uri, text);
                touched.extend(fresh.ast.theories.iter().map(|t| t.name.name.clone()));
                self.invalidate(&touched);
            }
        }
        self.store(uri.to_owned(), text.to_owned(), version);
        self.rebuild_index();
        Ok(&self.docs[uri])
    }

    fn store(&mut self, uri: String, text: String, version: i64) {
        let parse = Arc::new(parse_theory_file(&uri, &text));
        self.docs.insert(uri.clone(), SourceUnit { uri, version, parse });
        self.dirty = true;
    }

    pub fn remove_document(&mut self, uri: &str) -> bool {
        let removed = self.docs.remove(uri).is_some();
        if removed {
            self.dirty = true;
            self.rebuild_index();
        }
        removed
    }

    pub fn document(&self, uri: &str) -> Option<&SourceUnit> {
        self.docs.get(uri)
    }

    pub fn documents(&self) -> impl Iterator<Item = &SourceUnit> {
        self.docs.values()
    }

    fn invalidate(&mut self, theories: &BTreeSet<String>) {
        let stale: Vec<String> = self
            .statuses
            .keys()
            .filter(|k| theories.iter().any(|t| k.strip_prefix(t.as_str()).is_some_and(|r| r.starts_with('.'))))
            .cloned()
            .collect();
        if stale.is_empty() {
            return;
        }
        for k in &stale {
            self.statuses.remove(k);
        }
        if let Some(root) = &self.root {
            let _ = save_sidecar(root, &self.statuses);
        }
        for k in stale {
            let (theory, formula) = k.split_once('.').unwrap_or((&k, ""));
            self.notify(StatusDelta { theory: theory.to_owned(), formula: formula.to_owned(), status: FormulaStatus::Unchecked });
        }
    }

    pub fn needs_analysis(&self) -> bool {
        self.dirty
    }

    /// Typechecks every theory in import order if anything changed since the last run.
    pub fn analyze(&mut self) {
        if !self.dirty {
            return;
        }
        let mut theories: Vec<(String, usize)> = Vec::new();
        for (uri, doc) in &self.docs {
            for i in 0..doc.parse.ast.theories.len() {
                theories.push((uri.clone(), i));
            }
        }
        let mut diags: HashMap<String, Vec<Diagnostic>> = HashMap::new();
        let mut by_name: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (uri, i) in &theories {
            let doc = &self.docs[uri];
            let t = &doc.parse.ast.theories[*i];
            let name = &t.name.name;
            if name == PRELUDE_THEORY {
                diags.entry(uri.clone()).or_default().push(Diagnostic::error(
                    &doc.parse.line_index,
                    t.name.span,
                    DiagnosticSource::Typechecker,
                    format!("'{name}' is reserved for the built-in theory"),
                ));
            } else if let Some((other, _)) = by_name.get(name) {
                diags.entry(uri.clone()).or_default().push(Diagnostic::error(
                    &doc.parse.line_index,
                    t.name.span,
                    DiagnosticSource::Typechecker,
                    format!("theory '{name}' is already declared in {other}"),
                ));
            } else {
                by_name.insert(name.clone(), (uri.clone(), *i));
            }
        }
        let mut run = Analysis { docs: &self.docs, by_name: &by_name, results: BTreeMap::new(), visiting: Vec::new(), diags };
        for name in by_name.keys() {
            run.check(name);
        }
        let Analysis { results, mut diags, .. } = run;
        for v in diags.values_mut() {
            v.sort_by_key(|a| a.span);
        }
        self.results = results;
        self.theory_uri = by_name.iter().map(|(n, (u, _))| (n.clone(), u.clone())).collect();
        self.check_diags = diags;
        self.analyzed = self.docs.iter().map(|(u, d)| (u.clone(), d.version)).collect();
        self.dirty = false;
        self.rebuild_index();
    }

    /// Whether the last analysis reflects the current text of `uri`.
    pub fn is_current(&self, uri: &str) -> bool {
        !self.dirty && self.docs.get(uri).is_some_and(|d| self.analyzed.get(uri) == Some(&d.version))
    }

    /// Parser diagnostics, followed by typechecker diagnostics when the file parses cleanly
    /// and has been analyzed at its current version.
    pub fn diagnostics(&self, uri: &str) -> Vec<Diagnostic> {
        let Some(doc) = self.docs.get(uri) else { return Vec::new() };
        let mut out = doc.parse.diagnostics.clone();
        if out.is_empty() && self.is_current(uri) {
            out.extend(self.check_diags.get(uri).into_iter().flatten().cloned());
            for t in &doc.parse.ast.theories {
                if self.theory_uri.get(&t.name.name).map(String::as_str) == Some(uri) {
                    if let Some(r) = self.results.get(&t.name.name) {
                        out.extend(r.diagnostics.iter().cloned());
                    }
                }
            }
            out.sort_by_key(|a| a.span);
        }
        out
    }

    pub fn result(&self, theory: &str) -> Option<Arc<TypecheckResult>> {
        if theory == PRELUDE_THEORY {
            return Some(prelude().clone());
        }
        self.results.get(theory).cloned()
    }

    pub fn theory_uri(&self, theory: &str) -> Option<&str> {
        if theory == PRELUDE_THEORY {
            return Some(&self.prelude_uri);
        }
        self.theory_uri.get(theory).map(String::as_str)
    }

    /// Typechecked without errors at the current text of its file, file parse included.
    pub fn is_typechecked(&self, theory: &str) -> bool {
        let Some(uri) = self.theory_uri.get(theory) else { return theory == PRELUDE_THEORY };
        self.is_current(uri)
            && self.docs[uri].parse.diagnostics.is_empty()
            && self.check_diags.get(uri).is_none_or(|d| !d.iter().any(Diagnostic::is_error))
            && self.results.get(theory).is_some_and(|r| !r.has_errors())
    }

    fn rebuild_index(&mut self) {
        let mut entries = Vec::new();
        let p = prelude_parse();
        for t in &p.ast.theories {
            entries.extend(index::theory_entries(&self.prelude_uri, t, &p.line_index));
        }
        for (uri, doc) in &self.docs {
            for t in &doc.parse.ast.theories {
                entries.extend(index::theory_entries(uri, t, &doc.parse.line_index));
                if self.is_current(uri) && self.theory_uri.get(&t.name.name) == Some(uri) {
                    if let Some(r) = self.results.get(&t.name.name) {
                        entries.extend(index::tcc_entries(uri, r));
                    }
                }
            }
        }
        entries.sort_by(|a, b| (&a.location.uri, a.offset).cmp(&(&b.location.uri, b.offset)));
        self.index = entries;
    }

    /// Every indexed declaration, ordered by uri then offset.
    pub fn index(&self) -> &[DeclEntry] {
        &self.index
    }

    pub fn find_declaration(&self, name: &str) -> Vec<DeclEntry> {
        self.index.iter().filter(|e| e.name == name).cloned().collect()
    }

    pub fn entry_for(&self, r: &DeclRef) -> Option<&DeclEntry> {
        let uri = self.theory_uri(&r.theory)?;
        self.index
            .iter()
            .find(|e| e.location.uri == uri && e.theory == r.theory && e.decl_index == Some(r.index))
    }

    /// The identifier at `pos` and what it refers to.
    pub fn symbol_at(&self, uri: &str, pos: Position) -> Option<SymbolAt> {
        let doc = self.docs.get(uri)?;
        let offset = doc.parse.line_index.offset(pos);
        let toks = &doc.parse.tokens;
        let i = toks
            .iter()
            .position(|t| t.span.start as usize <= offset && offset < t.span.end as usize)
            .or_else(|| toks.iter().position(|t| t.span.end as usize == offset && t.kind == TokenKind::Identifier))?;
        let tok = &toks[i];
        if tok.kind != TokenKind::Identifier {
            return None;
        }
        let after_backtick = i > 0 && toks[i - 1].kind == TokenKind::Backtick;
        let span = tok.span;
        let resolved = self.resolve_occurrence(doc, &tok.lexeme, span);
        Some(SymbolAt { name: tok.lexeme.clone(), span, range: tok.range, after_backtick, resolved })
    }

    fn resolve_occurrence(&self, doc: &SourceUnit, name: &str, span: Span) -> Resolved {
        let Some(theory) = doc.theory_at(span.start as usize) else { return Resolved::NotFound };
        let tname = &theory.name.name;
        if self.is_typechecked(tname) {
            let r = &self.results[tname];
            if let Some(d) = r.decls.iter().find(|d| d.site == span) {
                return self.entry_for(&d.decl_ref()).cloned().map_or(Resolved::NotFound, Resolved::Exact);
            }
            return match r.resolution_at(span) {
                Some(Resolution::Global { decl }) => {
                    self.entry_for(decl).cloned().map_or(Resolved::NotFound, Resolved::Exact)
                }
                Some(Resolution::Local { binder }) => match r.local_binder(*binder) {
                    Some(l) => Resolved::Local {
                        ty: l.ty.clone(),
                        location: Location { uri: doc.uri.clone(), range: doc.parse.line_index.range(l.binder) },
                    },
                    None => Resolved::NotFound,
                },
                None => match r.field_accesses.iter().find(|(s, _)| *s == span) {
                    Some((_, ty)) => Resolved::Field { record: ty.clone() },
                    None => Resolved::NotFound,
                },
            };
        }
        let cands = self.find_declaration(name);
        if cands.is_empty() {
            Resolved::NotFound
        } else {
            Resolved::Candidates(cands)
        }
    }

    pub fn status(&self, theory: &str, formula: &str) -> FormulaStatus {
        self.statuses.get(&status_key(theory, formula)).copied().unwrap_or_default()
    }

    /// Names of the formulas and TCCs of `theory`, in tree order.
    fn formulas_of(&self, theory: &str) -> Option<Vec<(String, String)>> {
        let uri = self.theory_uri.get(theory).cloned().or_else(|| {
            self.docs
                .iter()
                .find(|(_, d)| d.parse.ast.theories.iter().any(|t| t.name.name == theory))
                .map(|(u, _)| u.clone())
        })?;
        let t = self.docs[&uri].parse.ast.theories.iter().find(|t| t.name.name == theory)?;
        let mut out: Vec<(String, String)> =
            t.formulas().map(|(d, kind, _)| (d.name.name.clone(), kind.keyword().to_ascii_lowercase())).collect();
        if self.is_current(&uri) {
            if let Some(r) = self.results.get(theory) {
                out.extend(r.tccs.iter().map(|c| (c.id.clone(), "tcc".to_owned())));
            }
        }
        Some(out)
    }

    /// Records a formula's status, persists the sidecar and notifies subscribers.
    pub fn set_formula_status(&mut self, theory: &str, formula: &str, status: FormulaStatus) -> Result<StatusDelta, WorkspaceError> {
        let known = self.formulas_of(theory).is_some_and(|fs| fs.iter().any(|(n, _)| n == formula));
        if !known {
            return Err(WorkspaceError::UnknownFormula(status_key(theory, formula)));
        }
        self.statuses.insert(status_key(theory, formula), status);
        if let Some(root) = &self.root {
            save_sidecar(root, &self.statuses)?;
        }
        let delta = StatusDelta { theory: theory.to_owned(), formula: formula.to_owned(), status };
        self.notify(delta.clone());
        Ok(delta)
    }

    pub fn subscribe(&mut self) -> mpsc::Receiver<StatusDelta> {
        let (tx, rx) = mpsc::channel();
        self.subscribers.push(tx);
        rx
    }

    fn notify(&mut self, delta: StatusDelta) {
        self.subscribers.retain(|s| s.send(delta.clone()).is_ok());
    }

    /// Theories in (uri, position) order with their formulas and statuses.
    pub fn theory_tree(&self) -> TheoryTree {
        let mut theories = Vec::new();
        for (uri, doc) in &self.docs {
            for t in &doc.parse.ast.theories {
                let name = &t.name.name;
                let mut formulas: Vec<FormulaNode> = t
                    .formulas()
                    .map(|(d, kind, _)| FormulaNode {
                        name: d.name.name.clone(),
                        kind: kind.keyword().to_ascii_lowercase(),
                        status: self.status(name, &d.name.name),
                    })
                    .collect();
                if self.is_current(uri) && self.theory_uri.get(name) == Some(uri) {
                    if let Some(r) = self.results.get(name) {
                        formulas.extend(r.tccs.iter().map(|c| FormulaNode {
                            name: c.id.clone(),
                            kind: "tcc".to_owned(),
                            status: self.status(name, &c.id),
                        }));
                    }
                }
                theories.push(TheoryNode { name: name.clone(), uri: uri.clone(), formulas });
            }
        }
        TheoryTree { theories }
    }
}

struct Analysis<'a> {
    docs: &'a BTreeMap<String, SourceUnit>,
    by_name: &'a BTreeMap<String, (String, usize)>,
    results: BTreeMap<String, Arc<TypecheckResult>>,
    visiting: Vec<String>,
    diags: HashMap<String, Vec<Diagnostic>>,
}

impl Analysis<'_> {
    fn check(&mut self, name: &str) {
        if self.results.contains_key(name) || self.visiting.iter().any(|v| v == name) {
            return;
        }
        let Some((uri, i)) = self.by_name.get(name) else { return };
        let doc = &self.docs[uri];
        let theory = &doc.parse.ast.theories[*i];
        self.visiting.push(name.to_owned());
        let mut cyclic: Vec<(Span, String)> = Vec::new();
        for imp in &theory.importings {
            if let Some(pos) = self.visiting.iter().position(|v| v == &imp.name) {
                if imp.name != name {
                    let mut path: Vec<&str> = self.visiting[pos..].iter().map(String::as_str).collect();
                    path.push(&imp.name);
                    cyclic.push((imp.span, format!("circular IMPORTING: {}", path.join(" -> "))));
                }
            } else {
                self.check(&imp.name);
            }
        }
        self.visiting.pop();
        let results = &self.results;
        let blocked: Vec<&str> =
            theory.importings.iter().filter(|imp| cyclic.iter().any(|(s, _)| *s == imp.span)).map(|imp| imp.name.as_str()).collect();
        let resolver = |n: &str| if blocked.contains(&n) { None } else { results.get(n).cloned() };
        let mut r = typecheck(theory, &doc.parse.line_index, &resolver);
        for d in &mut r.diagnostics {
            if let Some((_, msg)) = cyclic.iter().find(|(s, _)| *s == d.span) {
                d.message = msg.clone();
            }
        }
        self.diags.entry(uri.clone()).or_default();
        self.results.insert(name.to_owned(), Arc::new(r));
    }
}
