use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::prelude::{prelude, PRELUDE_THEORY};
use super::tcc::Tcc;
use super::types::Type;
use crate::diagnostic::Diagnostic;
use crate::syntax::ast::{Decl, DeclKind, Expr, FormulaKind};
use crate::syntax::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclClass {
    Type,
    Const,
    Function,
    Formula,
}

impl DeclClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DeclClass::Type => "type",
            DeclClass::Const => "const",
            DeclClass::Function => "function",
            DeclClass::Formula => "formula",
        }
    }
}

/// Identifies a declaration by theory and position in that theory.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DeclRef {
    pub theory: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedDecl {
    pub name: String,
    pub class: DeclClass,
    pub theory: String,
    pub index: usize,
    /// Span of the declared name.
    pub site: Span,
    pub ty: Type,
    pub params: Vec<(String, Type)>,
    pub recursive: bool,
    pub ast: Decl,
}

impl TypedDecl {
    pub fn decl_ref(&self) -> DeclRef {
        DeclRef { theory: self.theory.clone(), index: self.index }
    }

    pub fn body(&self) -> Option<&Expr> {
        match &self.ast.kind {
            DeclKind::Const { body, .. } => body.as_ref(),
            DeclKind::Fun { body, .. } | DeclKind::Formula { body, .. } => Some(body),
            DeclKind::Type { .. } => None,
        }
    }

    pub fn formula_kind(&self) -> Option<FormulaKind> {
        match &self.ast.kind {
            DeclKind::Formula { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self.class, DeclClass::Const | DeclClass::Function)
    }

    /// Parameter count when used as a function, or `None` for non-callables.
    pub fn arity(&self) -> Option<usize> {
        match (&self.class, self.ty.base()) {
            (DeclClass::Function, _) => Some(self.params.len()),
            (DeclClass::Const, Type::Function { domain, .. }) => Some(domain.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Resolution {
    /// Bound by a parameter, quantifier, LET or subtype variable at `binder`.
    Local { binder: Span },
    Global { decl: DeclRef },
}

/// A bound variable and the region where it is visible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBinder {
    pub name: String,
    pub binder: Span,
    pub scope: Span,
    pub ty: Type,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypecheckResult {
    pub theory: String,
    pub decls: Vec<TypedDecl>,
    pub diagnostics: Vec<Diagnostic>,
    pub tccs: Vec<Tcc>,
    /// Name occurrence span to what it denotes, sorted by span.
    pub resolutions: Vec<(Span, Resolution)>,
    pub locals: Vec<LocalBinder>,
    /// Field-name span of each field access to the record type being projected.
    pub field_accesses: Vec<(Span, Type)>,
    /// Transitively imported theories, without the prelude.
    #[serde(skip)]
    pub imports: Vec<Arc<TypecheckResult>>,
}

impl TypecheckResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn decl_named(&self, name: &str) -> Option<&TypedDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn resolution_at(&self, span: Span) -> Option<&Resolution> {
        self.resolutions
            .binary_search_by(|(s, _)| s.cmp(&span))
            .ok()
            .map(|i| &self.resolutions[i].1)
    }

    /// The result for `theory` among this theory, its imports and the prelude.
    pub fn theory_result(&self, theory: &str) -> Option<&TypecheckResult> {
        if self.theory == theory {
            return Some(self);
        }
        if let Some(t) = self.imports.iter().find(|t| t.theory == theory) {
            return Some(t);
        }
        (theory == PRELUDE_THEORY).then(|| &**prelude())
    }

    pub fn decl(&self, r: &DeclRef) -> Option<&TypedDecl> {
        self.theory_result(&r.theory)?.decls.get(r.index)
    }

    /// Visible declarations named `name`: own theory first, then imports, then the prelude.
    pub fn lookup(&self, name: &str) -> Vec<&TypedDecl> {
        self.visible().filter(|d| d.name == name).collect()
    }

    pub fn visible(&self) -> impl Iterator<Item = &TypedDecl> {
        let prelude_decls: &[TypedDecl] =
            if self.theory == PRELUDE_THEORY { &[] } else { &prelude().decls };
        self.decls
            .iter()
            .chain(self.imports.iter().flat_map(|t| t.decls.iter()))
            .chain(prelude_decls.iter())
    }

    pub fn local_binder(&self, binder: Span) -> Option<&LocalBinder> {
        self.locals.iter().find(|l| l.binder == binder)
    }
}
