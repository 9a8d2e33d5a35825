//! Read-only editor features computed from a workspace snapshot.

use std::collections::{BTreeMap, BTreeSet};

use micropvs_core::syntax::lexer::{is_identifier, KEYWORDS};
use micropvs_core::syntax::{parse_theory_file, Position, Span};
use micropvs_core::typecheck::{typecheck, DeclRef, Resolution, Type, TypecheckResult, PRELUDE_THEORY};
use micropvs_core::workspace::{DeclEntry, EntryKind, Location, Resolved, SymbolAt, Workspace};
use serde_json::{json, Value};
use thiserror::Error;

use crate::jsonrpc::{self, RpcError};
use crate::lsp::{completion_kind as kind, CodeLens, Command, CompletionItem, Hover, MarkupContent, TextEdit, WorkspaceEdit, INSERT_FORMAT_SNIPPET};

const PROBE: &str = "zzprobe";

/// Snippets for common modeling blocks: label, body.
pub const SNIPPETS: &[(&str, &str)] = &[
    ("if", "IF ${1:cond} THEN ${2:expr} ELSE ${3:expr} ENDIF"),
    ("let", "LET ${1:x} = ${2:expr} IN ${3:expr}"),
    ("forall", "FORALL (${1:x}: ${2:int}): ${3:expr}"),
    ("exists", "EXISTS (${1:x}: ${2:int}): ${3:expr}"),
    ("record", "[# ${1:x}: ${2:int} #]"),
    ("theorem", "${1:name}: THEOREM ${2:expr}"),
    ("theory", "${1:name}: THEORY\nBEGIN\n  $0\nEND ${1:name}"),
];

fn file_name(uri: &str) -> &str {
    uri.rsplit('/').next().unwrap_or(uri)
}

fn link(l: &Location) -> String {
    let line = l.range.start.line + 1;
    format!("[{}:{}]({}#L{})", file_name(&l.uri), line, l.uri, line)
}

fn markdown(description: &str, location: Option<&Location>, preview: &str) -> String {
    let mut s = format!("**{description}**\n\n");
    if let Some(l) = location {
        s.push_str(&link(l));
        s.push_str("\n\n");
    }
    s.push_str("```pvs\n");
    s.push_str(preview);
    s.push_str("\n```");
    s
}

fn field_type(record: &Type, name: &str) -> Option<Type> {
    record.record_fields()?.iter().find(|(n, _)| n == name).map(|(_, t)| t.clone())
}

/// Three-part markdown hover: description, location link, fenced preview.
pub fn hover(ws: &Workspace, uri: &str, pos: Position) -> Option<Hover> {
    let sym = ws.symbol_at(uri, pos)?;
    let value = match &sym.resolved {
        Resolved::Exact(e) => markdown(&e.description, Some(&e.location), &e.preview),
        Resolved::Candidates(cs) => {
            let e = &cs[0];
            let desc = if cs.len() > 1 { format!("{} ({} candidates)", e.description, cs.len()) } else { e.description.clone() };
            markdown(&desc, Some(&e.location), &e.preview)
        }
        Resolved::Local { ty, location } => markdown("local variable", Some(location), &format!("{}: {}", sym.name, ty)),
        Resolved::Field { record } => {
            let ty = field_type(record, &sym.name)?;
            markdown(&format!("field of {record}"), None, &format!("{}: {}", sym.name, ty))
        }
        Resolved::NotFound => return None,
    };
    Some(Hover { contents: MarkupContent { kind: "markdown".into(), value }, range: sym.range })
}

/// A single location when resolution is exact, an array of candidates otherwise.
pub fn definition(ws: &Workspace, uri: &str, pos: Position) -> Value {
    let Some(sym) = ws.symbol_at(uri, pos) else { return json!([]) };
    match sym.resolved {
        Resolved::Exact(e) => crate::lsp::location(&e.location),
        Resolved::Local { location, .. } => crate::lsp::location(&location),
        Resolved::Candidates(cs) => Value::Array(cs.iter().map(|e| crate::lsp::location(&e.location)).collect()),
        Resolved::Field { .. } | Resolved::NotFound => json!([]),
    }
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '?'
}

fn entry_kind(k: EntryKind) -> u8 {
    match k {
        EntryKind::Type => kind::TYPE_PARAMETER,
        EntryKind::Const => kind::CONSTANT,
        EntryKind::Function => kind::FUNCTION,
        EntryKind::Formula | EntryKind::Tcc => kind::PROPERTY,
    }
}

fn starts_with_ci(s: &str, prefix: &str) -> bool {
    s.len() >= prefix.len() && s[..prefix.len()].eq_ignore_ascii_case(prefix)
}

/// Completion items at `pos`.
pub fn completion(ws: &Workspace, uri: &str, pos: Position) -> Vec<CompletionItem> {
    let Some(doc) = ws.document(uri) else { return Vec::new() };
    let text = doc.text();
    let offset = doc.parse.line_index.offset(pos);
    let start = text[..offset].rfind(|c: char| !ident_char(c)).map_or(0, |i| i + 1);
    let prefix = &text[start..offset];
    if text[..start].ends_with('`') {
        return record_fields(ws, uri, text, start, prefix);
    }
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |item: CompletionItem, items: &mut Vec<CompletionItem>| {
        if starts_with_ci(&item.label, prefix) && seen.insert((item.label.clone(), item.kind)) {
            items.push(item);
        }
    };
    let theory = doc.theory_at(offset).or_else(|| doc.theory_at(offset.saturating_sub(1)));
    if let Some(t) = theory {
        let result = ws.is_current(uri).then(|| ws.result(&t.name.name)).flatten().filter(|r| r.theory == t.name.name);
        if let Some(r) = &result {
            for l in &r.locals {
                if l.scope.start as usize <= offset && offset <= l.scope.end as usize {
                    push(CompletionItem::new(&l.name, kind::VARIABLE).detail(l.ty.to_string()), &mut items);
                }
            }
        }
        let mut theories: Vec<String> = vec![t.name.name.clone()];
        theories.extend(t.importings.iter().map(|i| i.name.clone()));
        if let Some(r) = &result {
            theories.extend(r.imports.iter().map(|i| i.theory.clone()));
        }
        for e in ws.index() {
            if theories.contains(&e.theory) && !matches!(e.kind, EntryKind::Formula | EntryKind::Tcc) {
                let own = e.theory == t.name.name;
                if !own || e.location.uri == uri {
                    push(CompletionItem::new(&e.name, entry_kind(e.kind)).detail(e.preview.clone()), &mut items);
                }
            }
        }
    }
    for e in ws.index().iter().filter(|e| e.theory == PRELUDE_THEORY) {
        push(CompletionItem::new(&e.name, entry_kind(e.kind)).detail(e.preview.clone()), &mut items);
    }
    for kw in KEYWORDS {
        push(CompletionItem::new(*kw, kind::KEYWORD), &mut items);
    }
    for (label, body) in SNIPPETS {
        let mut item = CompletionItem::new(*label, kind::SNIPPET).detail(body.replace("\n", " "));
        item.insert_text = Some((*body).to_owned());
        item.insert_text_format = Some(INSERT_FORMAT_SNIPPET);
        push(item, &mut items);
    }
    items
}

/// Fields of the record projected at `start`, found by typechecking a copy of the theory
/// with a placeholder field name.
fn record_fields(ws: &Workspace, uri: &str, text: &str, start: usize, prefix: &str) -> Vec<CompletionItem> {
    let end = text[start..].find(|c: char| !ident_char(c)).map_or(text.len(), |i| start + i);
    let probed = format!("{}{}{}", &text[..start], PROBE, &text[end..]);
    let parsed = parse_theory_file(uri, &probed);
    let Some(theory) = parsed.ast.theories.iter().find(|t| t.span.contains_offset(start)) else {
        return Vec::new();
    };
    let result = typecheck(theory, &parsed.line_index, &|name: &str| ws.result(name));
    let probe_span = Span::new(start, start + PROBE.len());
    let Some((_, record)) = result.field_accesses.iter().find(|(s, _)| *s == probe_span) else {
        return Vec::new();
    };
    record
        .record_fields()
        .unwrap_or_default()
        .iter()
        .filter(|(n, _)| starts_with_ci(n, prefix))
        .map(|(n, t)| CompletionItem::new(n, kind::FIELD).detail(t.to_string()))
        .collect()
}

/// One `prove` lens per formula declaration, in source order.
pub fn code_lens(ws: &Workspace, uri: &str) -> Vec<CodeLens> {
    let Some(doc) = ws.document(uri) else { return Vec::new() };
    let mut out = Vec::new();
    for t in &doc.parse.ast.theories {
        for (d, _, _) in t.formulas() {
            out.push(CodeLens {
                range: doc.parse.line_index.range(d.name.span),
                command: Command {
                    title: "prove".into(),
                    command: "pvs.prove".into(),
                    arguments: vec![json!({"uri": uri, "theory": t.name.name, "formula": d.name.name})],
                },
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenameError {
    #[error("theory {0} is not typechecked")]
    NotTypechecked(String),
    #[error("renaming to '{0}' would capture or clash with an existing binding")]
    Capture(String),
    #[error("'{0}' is a built-in symbol and cannot be renamed")]
    ReadOnly(String),
    #[error("'{0}' is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("no renamable symbol at this position")]
    NotASymbol,
}

impl RenameError {
    pub fn code(&self) -> &'static str {
        match self {
            RenameError::NotTypechecked(_) => "not-typechecked",
            RenameError::Capture(_) => "capture",
            RenameError::ReadOnly(_) => "read-only-symbol",
            RenameError::InvalidIdentifier(_) => "invalid-identifier",
            RenameError::NotASymbol => "not-a-symbol",
        }
    }
}

impl From<RenameError> for RpcError {
    fn from(e: RenameError) -> Self {
        let code = match e {
            RenameError::NotTypechecked(_) => jsonrpc::NOT_TYPECHECKED,
            RenameError::Capture(_) => jsonrpc::RENAME_CAPTURE,
            RenameError::ReadOnly(_) => jsonrpc::READ_ONLY_SYMBOL,
            RenameError::InvalidIdentifier(_) => jsonrpc::INVALID_IDENTIFIER,
            RenameError::NotASymbol => jsonrpc::NOT_A_SYMBOL,
        };
        RpcError::new(code, e.to_string()).with_data(json!({"kind": e.code()}))
    }
}

enum Target {
    Global(DeclRef),
    Local { binder: Span, scope: Span },
}

fn overlaps(a: Span, b: Span) -> bool {
    a.start < b.end && b.start < a.end
}

fn inside(s: Span, scope: Span) -> bool {
    scope.start <= s.start && s.end <= scope.end
}

/// Scope-accurate rename of the symbol at `pos`.
pub fn rename(ws: &Workspace, uri: &str, pos: Position, new_name: &str) -> Result<WorkspaceEdit, RenameError> {
    if !is_identifier(new_name) {
        return Err(RenameError::InvalidIdentifier(new_name.to_owned()));
    }
    let doc = ws.document(uri).ok_or(RenameError::NotASymbol)?;
    let sym: SymbolAt = ws.symbol_at(uri, pos).ok_or(RenameError::NotASymbol)?;
    let theory = doc.theory_at(sym.span.start as usize).ok_or(RenameError::NotASymbol)?;
    let tname = theory.name.name.clone();
    if !ws.is_typechecked(&tname) {
        return Err(RenameError::NotTypechecked(tname));
    }
    let r = ws.result(&tname).ok_or_else(|| RenameError::NotTypechecked(tname.clone()))?;
    let target = if let Some(l) = r.local_binder(sym.span) {
        Target::Local { binder: l.binder, scope: l.scope }
    } else {
        match &sym.resolved {
            Resolved::Exact(e) if e.theory == PRELUDE_THEORY => return Err(RenameError::ReadOnly(sym.name)),
            Resolved::Exact(DeclEntry { theory, decl_index: Some(i), .. }) => {
                Target::Global(DeclRef { theory: theory.clone(), index: *i })
            }
            Resolved::Local { .. } => match r.resolution_at(sym.span) {
                Some(Resolution::Local { binder }) => {
                    let l = r.local_binder(*binder).ok_or(RenameError::NotASymbol)?;
                    Target::Local { binder: l.binder, scope: l.scope }
                }
                _ => return Err(RenameError::NotASymbol),
            },
            _ => return Err(RenameError::NotASymbol),
        }
    };
    let mut occurrences: BTreeMap<String, Vec<Span>> = BTreeMap::new();
    match &target {
        Target::Local { binder, scope } => {
            let spans = occurrences.entry(uri.to_owned()).or_default();
            spans.push(*binder);
            spans.extend(
                r.resolutions
                    .iter()
                    .filter(|(_, res)| matches!(res, Resolution::Local { binder: b } if b == binder))
                    .map(|(s, _)| *s),
            );
            let global_clash = r.lookup(new_name).into_iter().next().is_some();
            let local_clash = r
                .locals
                .iter()
                .any(|l| l.binder != *binder && l.name == new_name && overlaps(l.scope, *scope));
            if global_clash || local_clash {
                return Err(RenameError::Capture(new_name.to_owned()));
            }
        }
        Target::Global(dref) => {
            let site = r.decl(dref).ok_or(RenameError::NotASymbol)?.site;
            let def_uri = ws.theory_uri(&dref.theory).ok_or(RenameError::NotASymbol)?.to_owned();
            occurrences.entry(def_uri).or_default().push(site);
            let mut affected: Vec<std::sync::Arc<TypecheckResult>> = Vec::new();
            for d in ws.documents() {
                for t in &d.parse.ast.theories {
                    let Some(res) = ws.result(&t.name.name) else { continue };
                    if ws.theory_uri(&t.name.name) != Some(d.uri.as_str()) {
                        continue;
                    }
                    let uses: Vec<Span> = res
                        .resolutions
                        .iter()
                        .filter(|(_, x)| matches!(x, Resolution::Global { decl } if decl == dref))
                        .map(|(s, _)| *s)
                        .collect();
                    if res.theory == dref.theory || !uses.is_empty() {
                        if res.lookup(new_name).into_iter().next().is_some()
                            || res.locals.iter().any(|l| l.name == new_name && uses.iter().any(|u| inside(*u, l.scope)))
                        {
                            return Err(RenameError::Capture(new_name.to_owned()));
                        }
                        occurrences.entry(d.uri.clone()).or_default().extend(uses);
                        affected.push(res);
                    }
                }
            }
        }
    }
    let mut edit = WorkspaceEdit::default();
    for (u, mut spans) in occurrences {
        let Some(d) = ws.document(&u) else { continue };
        spans.sort();
        spans.dedup();
        let edits = spans
            .into_iter()
            .map(|s| TextEdit { range: d.parse.line_index.range(s), new_text: new_name.to_owned() })
            .collect();
        edit.changes.insert(u, edits);
    }
    Ok(edit)
}
