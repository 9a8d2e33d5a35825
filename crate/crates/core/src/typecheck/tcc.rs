use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::syntax::ast::{BinOp, Binding, Expr, ExprKind, Ident, Quantifier, TypeExpr, UnOp};
use crate::syntax::pretty::print_expr;
use crate::syntax::span::{Range, Span};
use crate::syntax::visit::{fresh_name, substitute};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TccKind {
    NonzeroDivisor,
    Subtype,
}

impl TccKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TccKind::NonzeroDivisor => "nonzero-divisor",
            TccKind::Subtype => "subtype",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TccStatus {
    #[default]
    Unproved,
    Proved,
}

/// A type-correctness condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tcc {
    pub id: String,
    pub kind: TccKind,
    /// Declaration the obligation arose in.
    pub decl: String,
    pub obligation: Expr,
    pub text: String,
    pub origin: Range,
    #[serde(skip)]
    pub origin_span: Span,
    pub status: TccStatus,
}

/// Context an obligation is closed over: bound variables, governing conditions and LET
/// bindings to substitute.
#[derive(Debug, Clone, Default)]
pub(crate) struct TccContext {
    pub vars: Vec<Binding>,
    pub conditions: Vec<Expr>,
    pub subst: HashMap<String, Expr>,
}

impl TccContext {
    /// Rewrites `e` into context terms (LET values inlined, shadowed binders renamed).
    pub fn apply(&self, e: &Expr) -> Expr {
        substitute(e, &self.subst)
    }

    pub fn bind_var(&mut self, name: &Ident, ty: &TypeExpr) {
        if self.vars.iter().any(|b| b.name.name == name.name) {
            let taken: Vec<String> = self.vars.iter().map(|b| b.name.name.clone()).collect();
            let fresh = fresh_name(&name.name, |n| taken.iter().any(|t| t == n));
            self.subst.insert(name.name.clone(), Expr::name(fresh.clone()));
            self.vars.push(Binding { name: Ident::synthetic(fresh), ty: ty.clone() });
        } else {
            self.subst.remove(&name.name);
            self.vars.push(Binding { name: name.clone(), ty: ty.clone() });
        }
    }

    pub fn bind_let(&mut self, name: &str, value: &Expr) {
        let v = self.apply(value);
        self.subst.insert(name.to_owned(), v);
    }

    pub fn assume(&mut self, cond: &Expr) {
        let c = self.apply(cond);
        self.conditions.push(c);
    }

    /// `FORALL (vars): c1 IMPLIES c2 IMPLIES goal`, with `goal` already in context terms.
    pub fn close(&self, goal: Expr) -> Expr {
        let body = self
            .conditions
            .iter()
            .rev()
            .fold(goal, |acc, c| Expr::binary(BinOp::Implies, c.clone(), acc));
        if self.vars.is_empty() {
            body
        } else {
            Expr::synthetic(ExprKind::Quant {
                quantifier: Quantifier::Forall,
                bindings: self.vars.clone(),
                body: Box::new(body),
            })
        }
    }
}

pub(crate) fn finish(decl: &str, kind: TccKind, obligation: Expr, origin: Range, origin_span: Span) -> Tcc {
    let text = print_expr(&obligation);
    Tcc { id: String::new(), kind, decl: decl.to_owned(), obligation, text, origin, origin_span, status: TccStatus::Unproved }
}

/// True for a numeric literal (optionally negated) other than zero.
pub(crate) fn is_nonzero_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Number(n) => n.chars().any(|c| c.is_ascii_digit() && c != '0'),
        ExprKind::Unary { op: UnOp::Neg, operand } => is_nonzero_literal(operand),
        _ => false,
    }
}
