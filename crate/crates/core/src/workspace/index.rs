use serde::{Deserialize, Serialize};

use crate::syntax::ast::{DeclKind, Theory};
use crate::syntax::pretty::print_decl;
use crate::syntax::span::{LineIndex, Range};
use crate::typecheck::TypecheckResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Type,
    Const,
    Function,
    Formula,
    Tcc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Location {
    pub uri: String,
    pub range: Range,
}

/// A declaration known to the workspace, typechecked or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclEntry {
    pub name: String,
    pub kind: EntryKind,
    pub theory: String,
    pub location: Location,
    pub preview: String,
    pub description: String,
    #[serde(skip)]
    pub offset: u32,
    /// Position among the theory's declarations; `None` for TCCs.
    #[serde(skip)]
    pub decl_index: Option<usize>,
}

pub(crate) fn theory_entries(uri: &str, theory: &Theory, index: &LineIndex) -> Vec<DeclEntry> {
    theory
        .decls
        .iter()
        .enumerate()
        .map(|(i, d)| DeclEntry {
            name: d.name.name.clone(),
            kind: match d.kind {
                DeclKind::Type { .. } => EntryKind::Type,
                DeclKind::Const { .. } => EntryKind::Const,
                DeclKind::Fun { .. } => EntryKind::Function,
                DeclKind::Formula { .. } => EntryKind::Formula,
            },
            theory: theory.name.name.clone(),
            location: Location { uri: uri.to_owned(), range: index.range(d.name.span) },
            preview: print_decl(d),
            description: format!("{} ({})", d.kind.label(), theory.name.name),
            offset: d.span.start,
            decl_index: Some(i),
        })
        .collect()
}

pub(crate) fn tcc_entries(uri: &str, result: &TypecheckResult) -> Vec<DeclEntry> {
    result
        .tccs
        .iter()
        .map(|t| DeclEntry {
            name: t.id.clone(),
            kind: EntryKind::Tcc,
            theory: result.theory.clone(),
            location: Location { uri: uri.to_owned(), range: t.origin },
            preview: format!("{}: OBLIGATION {}", t.id, t.text),
            description: format!("{} TCC ({})", t.kind.as_str(), result.theory),
            offset: t.origin_span.start,
            decl_index: None,
        })
        .collect()
}
