use std::collections::HashMap;
use std::sync::Arc;

use super::prelude::{prelude, PRELUDE_THEORY};
use super::result::{DeclClass, DeclRef, LocalBinder, Resolution, TypecheckResult, TypedDecl};
use super::tcc::{finish, is_nonzero_literal, Tcc, TccContext, TccKind};
use super::types::{arith_join, assignable, join, Type};
use crate::diagnostic::{Diagnostic, DiagnosticSource};
use crate::eval::ground::ground_bool;
use crate::syntax::ast::*;
use crate::syntax::span::{LineIndex, Span};
use crate::syntax::visit::{free_names, substitute, EraseSpans};

/// Looks up an already-checked theory by name.
pub type ImportResolver<'a> = dyn Fn(&str) -> Option<Arc<TypecheckResult>> + 'a;

/// Typechecks one theory. Never fails: problems become diagnostics.
pub fn typecheck(theory: &Theory, index: &LineIndex, imports: &ImportResolver<'_>) -> TypecheckResult {
    let mut c = Checker::new(&theory.name.name, index, Vec::new(), Vec::new());
    c.resolve_imports(theory, imports);
    for (i, d) in theory.decls.iter().enumerate() {
        c.check_decl(i, d);
    }
    c.into_result()
}

/// Outcome of checking a standalone expression against a theory's scope.
#[derive(Debug, Clone)]
pub struct CheckedExpr {
    pub ty: Type,
    pub diagnostics: Vec<Diagnostic>,
    pub resolutions: Vec<(Span, Resolution)>,
}

impl CheckedExpr {
    pub fn is_ok(&self) -> bool {
        !self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

/// Checks `expr` in the scope of `scope` with extra variables in `locals`. When `expected` is
/// given the expression must be assignable to it.
pub fn check_expr_in(
    scope: &TypecheckResult,
    expr: &Expr,
    index: &LineIndex,
    locals: &[(String, Type)],
    expected: Option<&Type>,
) -> CheckedExpr {
    let mut c = Checker::new(&scope.theory, index, scope.decls.clone(), scope.imports.clone());
    c.emit_tccs = false;
    for (name, ty) in locals {
        c.scope.push((name.clone(), ty.clone(), Span::DUMMY));
    }
    let ty = match expected {
        Some(t) => {
            let actual = c.infer(expr);
            c.ascribe(expr, &actual, t);
            actual
        }
        None => c.infer(expr),
    };
    c.resolutions.sort_by_key(|a| a.0);
    CheckedExpr { ty, diagnostics: c.diagnostics, resolutions: c.resolutions }
}

/// Resolves a type expression in the scope of `scope`; subtype predicates may mention `locals`.
pub fn resolve_type_in(scope: &TypecheckResult, ty: &TypeExpr, locals: &[(String, Type)]) -> Result<Type, String> {
    let index = LineIndex::new("");
    let mut c = Checker::new(&scope.theory, &index, scope.decls.clone(), scope.imports.clone());
    c.emit_tccs = false;
    for (name, t) in locals {
        c.scope.push((name.clone(), t.clone(), Span::DUMMY));
    }
    let t = c.resolve_type(ty);
    match c.diagnostics.into_iter().next() {
        Some(d) => Err(d.message),
        None => Ok(t),
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    level: u8,
    decl: DeclRef,
    class: DeclClass,
    ty: Type,
    params: Option<Vec<Type>>,
}

struct Checker<'a> {
    theory: String,
    index: &'a LineIndex,
    own: Vec<TypedDecl>,
    imports: Vec<Arc<TypecheckResult>>,
    use_prelude: bool,
    diagnostics: Vec<Diagnostic>,
    pending_tccs: Vec<Tcc>,
    tccs: Vec<Tcc>,
    tcc_counters: HashMap<String, usize>,
    resolutions: Vec<(Span, Resolution)>,
    locals: Vec<LocalBinder>,
    field_accesses: Vec<(Span, Type)>,
    scope: Vec<(String, Type, Span)>,
    ctx: TccContext,
    decl_name: String,
    emit_tccs: bool,
}

impl<'a> Checker<'a> {
    fn new(theory: &str, index: &'a LineIndex, own: Vec<TypedDecl>, imports: Vec<Arc<TypecheckResult>>) -> Self {
        Checker {
            theory: theory.to_owned(),
            index,
            own,
            imports,
            use_prelude: theory != PRELUDE_THEORY,
            diagnostics: Vec::new(),
            pending_tccs: Vec::new(),
            tccs: Vec::new(),
            tcc_counters: HashMap::new(),
            resolutions: Vec::new(),
            locals: Vec::new(),
            field_accesses: Vec::new(),
            scope: Vec::new(),
            ctx: TccContext::default(),
            decl_name: String::new(),
            emit_tccs: true,
        }
    }

    fn into_result(mut self) -> TypecheckResult {
        self.resolutions.sort_by_key(|a| a.0);
        self.resolutions.dedup_by(|a, b| a.0 == b.0);
        self.diagnostics.sort_by_key(|d| (d.span.start, d.span.end));
        TypecheckResult {
            theory: self.theory,
            decls: self.own,
            diagnostics: self.diagnostics,
            tccs: self.tccs,
            resolutions: self.resolutions,
            locals: self.locals,
            field_accesses: self.field_accesses,
            imports: self.imports,
        }
    }

    fn error(&mut self, span: Span, msg: impl Into<String>) {
        self.diagnostics.push(Diagnostic::error(self.index, span, DiagnosticSource::Typechecker, msg));
    }

    fn mismatch(&mut self, span: Span, expected: &Type, found: &Type) {
        self.error(span, format!("expected {expected}, found {found}"));
    }

    // ----- imports and global lookup -----

    fn resolve_imports(&mut self, theory: &Theory, resolver: &ImportResolver<'_>) {
        let mut closure: Vec<Arc<TypecheckResult>> = Vec::new();
        for imp in &theory.importings {
            if imp.name == theory.name.name {
                self.error(imp.span, format!("theory '{}' cannot import itself", imp.name));
                continue;
            }
            if imp.name == PRELUDE_THEORY {
                continue;
            }
            match resolver(&imp.name) {
                Some(r) => {
                    for t in r.imports.iter().chain(std::iter::once(&r)) {
                        if !closure.iter().any(|c| c.theory == t.theory) {
                            closure.push(t.clone());
                        }
                    }
                }
                None => self.error(imp.span, format!("unknown theory '{}'", imp.name)),
            }
        }
        self.imports = closure;
    }

    fn candidates(&self, name: &str) -> Vec<Candidate> {
        let cand = |level: u8, d: &TypedDecl| Candidate {
            level,
            decl: d.decl_ref(),
            class: d.class,
            ty: d.ty.clone(),
            params: match (&d.class, d.ty.base()) {
                (DeclClass::Function, _) => Some(d.params.iter().map(|p| p.1.clone()).collect()),
                (DeclClass::Const, Type::Function { domain, .. }) => Some(domain.clone()),
                _ => None,
            },
        };
        let mut out: Vec<Candidate> = self.own.iter().filter(|d| d.name == name).map(|d| cand(0, d)).collect();
        for t in &self.imports {
            out.extend(t.decls.iter().filter(|d| d.name == name).map(|d| cand(1, d)));
        }
        if self.use_prelude {
            out.extend(prelude().decls.iter().filter(|d| d.name == name).map(|d| cand(2, d)));
        }
        out
    }

    fn lookup_local(&self, name: &str) -> Option<(Type, Span)> {
        self.scope.iter().rev().find(|(n, _, _)| n == name).map(|(_, t, s)| (t.clone(), *s))
    }

    fn resolve(&mut self, span: Span, r: Resolution) {
        if span != Span::DUMMY {
            self.resolutions.push((span, r));
        }
    }

    // ----- declarations -----

    fn check_decl(&mut self, index: usize, decl: &Decl) {
        self.decl_name = decl.name.name.clone();
        self.ctx = TccContext::default();
        self.scope.clear();
        let mut typed = TypedDecl {
            name: decl.name.name.clone(),
            class: DeclClass::Const,
            theory: self.theory.clone(),
            index,
            site: decl.name.span,
            ty: Type::Error,
            params: Vec::new(),
            recursive: false,
            ast: decl.clone(),
        };
        match &decl.kind {
            DeclKind::Type { definition } => {
                typed.class = DeclClass::Type;
                typed.ty = match definition {
                    Some(def) => self.resolve_type(def),
                    None => Type::Opaque { theory: self.theory.clone(), name: decl.name.name.clone() },
                };
                self.push_decl(typed);
            }
            DeclKind::Const { ty, body } => {
                typed.ty = self.resolve_type(ty);
                if let Some(b) = body {
                    let t = typed.ty.clone();
                    self.check_against(b, &t);
                }
                self.push_decl(typed);
            }
            DeclKind::Fun { params, ret, body, recursive } => {
                typed.class = DeclClass::Function;
                typed.recursive = *recursive;
                for p in params {
                    let t = self.resolve_type(&p.ty);
                    self.bind(&p.name, &p.ty, t.clone(), decl.span);
                    typed.params.push((p.name.name.clone(), t));
                }
                let range = self.resolve_type(ret);
                typed.ty = Type::Function {
                    domain: typed.params.iter().map(|p| p.1.clone()).collect(),
                    range: Box::new(range.clone()),
                };
                // visible in its own body
                self.push_decl(typed);
                self.check_against(body, &range);
            }
            DeclKind::Formula { body, .. } => {
                typed.class = DeclClass::Formula;
                typed.ty = Type::Bool;
                self.check_against(body, &Type::Bool);
                self.push_decl(typed);
            }
        }
        self.flush_tccs();
    }

    fn push_decl(&mut self, typed: TypedDecl) {
        let clash = self.own.iter().any(|d| {
            d.name == typed.name
                && !(d.class == DeclClass::Function
                    && typed.class == DeclClass::Function
                    && (d.params.len() != typed.params.len()
                        || d.params.iter().zip(&typed.params).any(|(a, b)| a.1.base() != b.1.base())))
        });
        if clash {
            self.error(typed.site, format!("'{}' is already declared in this theory", typed.name));
        }
        self.own.push(typed);
    }

    fn flush_tccs(&mut self) {
        let mut pending = std::mem::take(&mut self.pending_tccs);
        pending.sort_by_key(|t| (t.origin_span.start, t.origin_span.end));
        for mut t in pending {
            let n = self.tcc_counters.entry(t.decl.clone()).or_insert(0);
            *n += 1;
            t.id = format!("{}_TCC{}", t.decl, n);
            self.tccs.push(t);
        }
    }

    /// Brings a variable into scope for typing and for obligation contexts.
    fn bind(&mut self, name: &Ident, ty_expr: &TypeExpr, ty: Type, visible: Span) {
        self.scope.push((name.name.clone(), ty.clone(), name.span));
        self.ctx.bind_var(name, ty_expr);
        self.locals.push(LocalBinder { name: name.name.clone(), binder: name.span, scope: visible, ty });
    }

    // ----- types -----

    fn resolve_type(&mut self, t: &TypeExpr) -> Type {
        match &t.kind {
            TypeExprKind::Base(b) => Type::from_base(*b),
            TypeExprKind::Named(id) => {
                let cands = self.candidates(&id.name);
                match cands.iter().find(|c| c.class == DeclClass::Type) {
                    Some(c) => {
                        self.resolve(id.span, Resolution::Global { decl: c.decl.clone() });
                        c.ty.clone()
                    }
                    None if !cands.is_empty() || self.lookup_local(&id.name).is_some() => {
                        self.error(id.span, format!("'{}' is not a type", id.name));
                        Type::Error
                    }
                    None => {
                        self.error(id.span, format!("unknown type '{}'", id.name));
                        Type::Error
                    }
                }
            }
            TypeExprKind::Function { domain, range } => Type::Function {
                domain: domain.iter().map(|d| self.resolve_type(d)).collect(),
                range: Box::new(self.resolve_type(range)),
            },
            TypeExprKind::Record(fields) => {
                let mut out: Vec<(String, Type)> = Vec::new();
                for f in fields {
                    if out.iter().any(|(n, _)| n == &f.name.name) {
                        self.error(f.name.span, format!("duplicate field '{}'", f.name.name));
                        continue;
                    }
                    let ft = self.resolve_type(&f.ty);
                    out.push((f.name.name.clone(), ft));
                }
                Type::Record { fields: out }
            }
            TypeExprKind::Subtype { var, base, pred } => {
                let b = self.resolve_type(base);
                self.scope.push((var.name.clone(), b.clone(), var.span));
                self.locals.push(LocalBinder { name: var.name.clone(), binder: var.span, scope: t.span, ty: b.clone() });
                let saved = std::mem::replace(&mut self.emit_tccs, false);
                self.check_against(pred, &Type::Bool);
                self.emit_tccs = saved;
                self.scope.pop();
                Type::Subtype { base: Box::new(b), var: var.name.clone(), pred: pred.without_spans() }
            }
        }
    }

    // ----- expressions -----

    /// Checks `e` against `expected`, pushing the expectation into IF branches and LET bodies
    /// so that obligations carry the governing conditions.
    fn check_against(&mut self, e: &Expr, expected: &Type) {
        match &e.kind {
            ExprKind::If { cond, then_branch, else_branch } => {
                self.check_bool(cond);
                let saved = self.ctx.clone();
                self.ctx.assume(cond);
                self.check_against(then_branch, expected);
                self.ctx = saved.clone();
                self.ctx.assume(&Expr::not((**cond).clone()));
                self.check_against(else_branch, expected);
                self.ctx = saved;
            }
            ExprKind::Let { bindings, body } => {
                let (mark, saved) = self.enter_let(e, bindings);
                self.check_against(body, expected);
                self.scope.truncate(mark);
                self.ctx = saved;
            }
            _ => {
                let actual = self.infer(e);
                self.ascribe(e, &actual, expected);
            }
        }
    }

    fn check_bool(&mut self, e: &Expr) {
        let t = self.infer(e);
        if !t.is_bool() {
            self.mismatch(e.span, &Type::Bool, &t);
        }
    }

    /// Reports a mismatch, or records the subtype obligations of using `e` at `expected`.
    fn ascribe(&mut self, e: &Expr, actual: &Type, expected: &Type) {
        if !assignable(actual, expected) {
            self.mismatch(e.span, expected, actual);
            return;
        }
        if !self.emit_tccs || actual.is_error() || expected.is_error() {
            return;
        }
        let term = self.ctx.apply(e);
        let mut goals = Vec::new();
        let mut t = expected;
        loop {
            match t {
                Type::Subtype { base, var, pred } => {
                    if !subtype_chain_contains(actual, t) {
                        let mut m = HashMap::new();
                        m.insert(var.clone(), term.clone());
                        goals.push(substitute(pred, &m));
                    }
                    t = base;
                }
                Type::Nat => {
                    if !matches!(actual.base(), Type::Nat) {
                        goals.push(Expr::binary(BinOp::Ge, term.clone(), Expr::number(0)));
                    }
                    break;
                }
                _ => break,
            }
        }
        goals.reverse();
        goals.retain(|g| !(free_names(g).is_empty() && ground_bool(g) == Some(true)));
        let Some(goal) = goals.into_iter().reduce(|a, b| Expr::binary(BinOp::And, a, b)) else { return };
        let obligation = self.ctx.close(goal).without_spans();
        let tcc = finish(&self.decl_name, TccKind::Subtype, obligation, self.index.range(e.span), e.span);
        self.pending_tccs.push(tcc);
    }

    fn enter_let(&mut self, e: &Expr, bindings: &[LetBinding]) -> (usize, TccContext) {
        let mark = self.scope.len();
        let saved = self.ctx.clone();
        for b in bindings {
            let ty = match &b.ty {
                Some(te) => {
                    let t = self.resolve_type(te);
                    self.check_against(&b.value, &t);
                    t
                }
                None => self.infer(&b.value),
            };
            self.scope.push((b.name.name.clone(), ty.clone(), b.name.span));
            self.ctx.bind_let(&b.name.name, &b.value);
            let scope = Span { start: b.value.span.end, end: e.span.end };
            self.locals.push(LocalBinder { name: b.name.name.clone(), binder: b.name.span, scope, ty });
        }
        (mark, saved)
    }

    fn infer(&mut self, e: &Expr) -> Type {
        match &e.kind {
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Number(n) => {
                if n.contains('.') {
                    Type::Real
                } else {
                    Type::Nat
                }
            }
            ExprKind::Str(_) => Type::String,
            ExprKind::Name(id) => self.infer_name(id),
            ExprKind::App { func, args } => self.infer_app(e, func, args),
            ExprKind::Binary { op, lhs, rhs } => self.infer_binary(*op, lhs, rhs, e),
            ExprKind::Unary { op: UnOp::Not, operand } => {
                self.check_bool(operand);
                Type::Bool
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                let t = self.infer(operand);
                self.expect_numeric(operand, &t);
                match t.base() {
                    Type::Nat | Type::Int => Type::Int,
                    Type::Real => Type::Real,
                    _ => Type::Error,
                }
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                self.check_bool(cond);
                let saved = self.ctx.clone();
                self.ctx.assume(cond);
                let a = self.infer(then_branch);
                self.ctx = saved.clone();
                self.ctx.assume(&Expr::not((**cond).clone()));
                let b = self.infer(else_branch);
                self.ctx = saved;
                match join(&a, &b) {
                    Some(t) => t,
                    None => {
                        self.mismatch(else_branch.span, &a, &b);
                        Type::Error
                    }
                }
            }
            ExprKind::Quant { bindings, body, .. } => {
                let mark = self.scope.len();
                let saved = self.ctx.clone();
                for b in bindings {
                    let t = self.resolve_type(&b.ty);
                    self.bind(&b.name, &b.ty, t, e.span);
                }
                self.check_bool(body);
                self.scope.truncate(mark);
                self.ctx = saved;
                Type::Bool
            }
            ExprKind::Let { bindings, body } => {
                let (mark, saved) = self.enter_let(e, bindings);
                let t = self.infer(body);
                self.scope.truncate(mark);
                self.ctx = saved;
                t
            }
            ExprKind::Record(fields) => {
                let mut out: Vec<(String, Type)> = Vec::new();
                for f in fields {
                    let t = self.infer(&f.value);
                    if out.iter().any(|(n, _)| n == &f.name.name) {
                        self.error(f.name.span, format!("duplicate field '{}'", f.name.name));
                    } else {
                        out.push((f.name.name.clone(), t));
                    }
                }
                Type::Record { fields: out }
            }
            ExprKind::Field { record, field } => {
                let rt = self.infer(record);
                if rt.is_error() {
                    return Type::Error;
                }
                match rt.record_fields() {
                    Some(fields) => {
                        let found = fields.iter().find(|(n, _)| n == &field.name).map(|(_, t)| t.clone());
                        self.field_accesses.push((field.span, rt.clone()));
                        match found {
                            Some(t) => t,
                            None => {
                                self.error(field.span, format!("no field '{}' in {}", field.name, rt));
                                Type::Error
                            }
                        }
                    }
                    None => {
                        self.error(record.span, format!("expected a record, found {rt}"));
                        Type::Error
                    }
                }
            }
        }
    }

    fn expect_numeric(&mut self, e: &Expr, t: &Type) {
        if !t.is_numeric() && !t.is_error() {
            self.mismatch(e.span, &Type::Real, t);
        }
    }

    fn infer_name(&mut self, id: &Ident) -> Type {
        if let Some((t, binder)) = self.lookup_local(&id.name) {
            self.resolve(id.span, Resolution::Local { binder });
            return t;
        }
        let cands = self.candidates(&id.name);
        match cands.iter().find(|c| matches!(c.class, DeclClass::Const | DeclClass::Function)) {
            Some(c) => {
                self.resolve(id.span, Resolution::Global { decl: c.decl.clone() });
                c.ty.clone()
            }
            None => {
                let msg = match cands.first().map(|c| c.class) {
                    Some(DeclClass::Type) => format!("'{}' is a type, not a value", id.name),
                    Some(DeclClass::Formula) => format!("'{}' is a formula, not a value", id.name),
                    _ => format!("unknown name '{}'", id.name),
                };
                self.error(id.span, msg);
                Type::Error
            }
        }
    }

    fn infer_app(&mut self, e: &Expr, func: &Expr, args: &[Expr]) -> Type {
        let named = match &func.kind {
            ExprKind::Name(id) if self.lookup_local(&id.name).is_none() => Some(id),
            _ => None,
        };
        let Some(id) = named else {
            let ft = self.infer(func);
            let arg_tys: Vec<Type> = args.iter().map(|a| self.infer(a)).collect();
            return match ft.base() {
                Type::Function { domain, range } => {
                    if domain.len() != args.len() {
                        self.error(e.span, format!("expected {} arguments, found {}", domain.len(), args.len()));
                    } else {
                        for ((a, at), pt) in args.iter().zip(&arg_tys).zip(domain) {
                            self.ascribe(a, at, pt);
                        }
                    }
                    (**range).clone()
                }
                Type::Error => Type::Error,
                _ => {
                    self.error(func.span, format!("expected a function, found {ft}"));
                    Type::Error
                }
            };
        };
        let arg_tys: Vec<Type> = args.iter().map(|a| self.infer(a)).collect();
        let all = self.candidates(&id.name);
        let callable: Vec<&Candidate> = all.iter().filter(|c| c.params.is_some()).collect();
        if callable.is_empty() {
            let msg = match all.first() {
                Some(c) if c.class == DeclClass::Const => format!("'{}' is not a function", id.name),
                Some(c) if c.class == DeclClass::Type => format!("'{}' is a type, not a value", id.name),
                Some(_) => format!("'{}' is a formula, not a value", id.name),
                None => format!("unknown name '{}'", id.name),
            };
            self.error(id.span, msg);
            return Type::Error;
        }
        let by_arity: Vec<&Candidate> =
            callable.iter().copied().filter(|c| c.params.as_ref().is_some_and(|p| p.len() == args.len())).collect();
        if by_arity.is_empty() {
            let n = callable[0].params.as_ref().map_or(0, Vec::len);
            self.error(e.span, format!("'{}' expects {} arguments, found {}", id.name, n, args.len()));
            return Type::Error;
        }
        let mut matching: Vec<&Candidate> = by_arity
            .iter()
            .copied()
            .filter(|c| c.params.as_ref().is_some_and(|p| p.iter().zip(&arg_tys).all(|(pt, at)| assignable(at, pt))))
            .collect();
        // innermost level first, then the most specific signature
        matching.sort_by_key(|c| (c.level, c.params.as_ref().map_or(0, |p| p.iter().map(rank).sum::<u32>())));
        let chosen = match (matching.first(), by_arity.len()) {
            (Some(c), _) => (*c).clone(),
            (None, 1) => by_arity[0].clone(),
            (None, _) => {
                let tys: Vec<String> = arg_tys.iter().map(ToString::to_string).collect();
                self.error(e.span, format!("no declaration of '{}' accepts ({})", id.name, tys.join(", ")));
                return Type::Error;
            }
        };
        self.resolve(id.span, Resolution::Global { decl: chosen.decl.clone() });
        let params = chosen.params.clone().unwrap_or_default();
        for ((a, at), pt) in args.iter().zip(&arg_tys).zip(&params) {
            self.ascribe(a, at, pt);
        }
        match chosen.ty.base() {
            Type::Function { range, .. } => (**range).clone(),
            _ => Type::Error,
        }
    }

    fn infer_binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, whole: &Expr) -> Type {
        match op {
            BinOp::And | BinOp::Implies | BinOp::Or => {
                self.check_bool(lhs);
                let saved = self.ctx.clone();
                match op {
                    BinOp::Or => self.ctx.assume(&Expr::not(lhs.clone())),
                    _ => self.ctx.assume(lhs),
                }
                self.check_bool(rhs);
                self.ctx = saved;
                Type::Bool
            }
            BinOp::Iff => {
                self.check_bool(lhs);
                self.check_bool(rhs);
                Type::Bool
            }
            BinOp::Eq | BinOp::Neq => {
                let a = self.infer(lhs);
                let b = self.infer(rhs);
                if join(&a, &b).is_none() {
                    self.mismatch(rhs.span, &a, &b);
                }
                Type::Bool
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let a = self.infer(lhs);
                self.expect_numeric(lhs, &a);
                let b = self.infer(rhs);
                self.expect_numeric(rhs, &b);
                Type::Bool
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                let a = self.infer(lhs);
                self.expect_numeric(lhs, &a);
                let b = self.infer(rhs);
                self.expect_numeric(rhs, &b);
                if a.is_error() || b.is_error() || !a.is_numeric() || !b.is_numeric() {
                    return Type::Error;
                }
                match op {
                    BinOp::Add | BinOp::Mul => arith_join(&a, &b),
                    BinOp::Sub => match arith_join(&a, &b) {
                        Type::Nat => Type::Int,
                        t => t,
                    },
                    _ => {
                        if self.emit_tccs && !is_nonzero_literal(rhs) {
                            let goal = Expr::binary(BinOp::Neq, self.ctx.apply(rhs), Expr::number(0));
                            let obligation = self.ctx.close(goal).without_spans();
                            let tcc = finish(
                                &self.decl_name,
                                TccKind::NonzeroDivisor,
                                obligation,
                                self.index.range(whole.span),
                                whole.span,
                            );
                            self.pending_tccs.push(tcc);
                        }
                        Type::Real
                    }
                }
            }
        }
    }
}

fn rank(t: &Type) -> u32 {
    match t.base() {
        Type::Nat => 0,
        Type::Int => 1,
        Type::Real => 2,
        _ => 0,
    }
}

fn subtype_chain_contains(actual: &Type, target: &Type) -> bool {
    let mut t = actual;
    loop {
        if t == target {
            return true;
        }
        match t {
            Type::Subtype { base, .. } => t = base,
            _ => return false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::{parse_expr_text, parse_source};
    use crate::syntax::pretty::print_expr;

    fn check(src: &str) -> TypecheckResult {
        let text = format!("t: THEORY\nBEGIN\n{src}\nEND t\n");
        let parsed = parse_source(&text);
        assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
        typecheck(&parsed.ast.theories[0], &parsed.line_index, &|_: &str| None)
    }

    fn messages(r: &TypecheckResult) -> Vec<&str> {
        r.diagnostics.iter().map(|d| d.message.as_str()).collect()
    }

    fn tcc_texts(r: &TypecheckResult) -> Vec<(String, String)> {
        r.tccs.iter().map(|t| (t.id.clone(), t.text.clone())).collect()
    }

    #[test]
    fn constant_with_arithmetic() {
        let r = check("  y: int = 1 + 2");
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.decls[0].ty, Type::Int);
    }

    #[test]
    fn mismatch_reported_at_body() {
        let r = check("  y: int = true");
        assert_eq!(messages(&r), ["expected int, found bool"]);
        // "  y: int = " is 11 characters on line 2
        assert_eq!(r.diagnostics[0].range.start.line, 2);
        assert_eq!(r.diagnostics[0].range.start.character, 11);
        assert_eq!(r.diagnostics[0].range.end.character, 15);
    }

    #[test]
    fn division_obligations() {
        let r = check("  q(d: int): int = 10 / d");
        // real result does not fit int
        assert_eq!(messages(&r), ["expected int, found real"]);
        let r = check("  q(d: int): real = 10 / d");
        assert!(r.diagnostics.is_empty());
        assert_eq!(tcc_texts(&r), [("q_TCC1".to_string(), "FORALL (d: int): d /= 0".to_string())]);
        assert_eq!(r.tccs[0].kind, TccKind::NonzeroDivisor);
        assert!(check("  h(x: int): real = x / 2").tccs.is_empty());
        let r = check("  g(x, y: int): real = x / y");
        assert_eq!(r.tccs[0].text, "FORALL (x, y: int): y /= 0");
    }

    #[test]
    fn subtype_ascription_obligation() {
        let r = check("  m: int\n  n: {i: int | i > 0} = m");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert_eq!(tcc_texts(&r), [("n_TCC1".to_string(), "m > 0".to_string())]);
        assert_eq!(r.tccs[0].kind, TccKind::Subtype);
        // a literal that satisfies the predicate needs no obligation
        assert!(check("  k: {i: int | i > 0} = 3").tccs.is_empty());
    }

    #[test]
    fn governing_conditions_and_nat_downcast() {
        let r = check("  fact(n: nat): nat = IF n = 0 THEN 1 ELSE n * fact(n - 1) ENDIF");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        assert_eq!(tcc_texts(&r), [("fact_TCC1".to_string(), "FORALL (n: nat): NOT n = 0 IMPLIES n - 1 >= 0".to_string())]);
        let r = check("  q(d: int): real = IF d = 0 THEN 0 ELSE 10 / d ENDIF");
        assert_eq!(r.tccs[0].text, "FORALL (d: int): NOT d = 0 IMPLIES d /= 0");
    }

    #[test]
    fn let_values_are_inlined_into_obligations() {
        let r = check("  f(x: int): real = LET y = x + 1 IN 1 / y");
        assert_eq!(r.tccs[0].text, "FORALL (x: int): x + 1 /= 0");
    }

    #[test]
    fn shadowed_binders_are_renamed_in_obligations() {
        let r = check("  th: THEOREM FORALL (x: int): x > 0 IMPLIES (FORALL (x: int): 1 / x > 0)");
        assert_eq!(r.tccs[0].text, "FORALL (x, x_1: int): x > 0 IMPLIES x_1 /= 0");
    }

    #[test]
    fn application_argument_mismatch() {
        let r = check("  f(x: int): int = x\n  y: int = f(true)");
        assert_eq!(messages(&r), ["expected int, found bool"]);
        let d = &r.diagnostics[0];
        assert_eq!((d.range.start.line, d.range.start.character), (3, 13));
    }

    #[test]
    fn field_projection_and_record_errors() {
        let r = check("  r: [# x: int, y: int #] = (# x := 1, y := 2 #)\n  v: int = r`x\n  w: int = r`z");
        assert_eq!(messages(&r), ["no field 'z' in [# x: int, y: int #]"]);
        assert_eq!(r.field_accesses.len(), 2);
    }

    #[test]
    fn unknown_names_and_prelude_resolution() {
        let r = check("  a: real = abs(-3)\n  b: int = nosuch");
        assert_eq!(messages(&r), ["unknown name 'nosuch'"]);
        let abs_use = r.resolutions.iter().find(|(_, res)| matches!(res, Resolution::Global { decl } if decl.theory == "prelude"));
        assert!(abs_use.is_some());
    }

    #[test]
    fn overloads_resolve_by_argument_types() {
        let r = check("  f(x: int): int = x\n  f(b: bool): bool = b\n  u: bool = f(true)\n  v: int = f(3)");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        let targets: Vec<usize> = r
            .resolutions
            .iter()
            .filter_map(|(_, res)| match res {
                Resolution::Global { decl } if decl.theory == "t" => Some(decl.index),
                _ => None,
            })
            .collect();
        assert_eq!(targets, [1, 0]);
    }

    #[test]
    fn duplicate_constant_is_an_error() {
        let r = check("  a: int = 1\n  a: int = 2");
        assert_eq!(messages(&r), ["'a' is already declared in this theory"]);
    }

    #[test]
    fn opaque_types_and_aliases() {
        let r = check("  T: TYPE\n  P: TYPE = [# a: T #]\n  g(p: P): T = p`a\n  bad: T = 1");
        assert_eq!(messages(&r), ["expected T, found nat"]);
    }

    #[test]
    fn expression_in_scope() {
        let r = check("  f(x: int): int = x + 1");
        let e = parse_expr_text("f(2) * k").unwrap();
        let idx = LineIndex::new("f(2) * k");
        let c = check_expr_in(&r, &e, &idx, &[("k".into(), Type::Int)], None);
        assert!(c.is_ok(), "{:?}", c.diagnostics);
        assert_eq!(c.ty, Type::Int);
        let e = parse_expr_text("(# x := 1, y := 2 #)`x").unwrap();
        assert_eq!(check_expr_in(&r, &e, &idx, &[], None).ty, Type::Nat);
    }

    #[test]
    fn obligations_are_closed_and_deterministic() {
        let src = "  g(a: int, b: {n: nat | n > a}): real = IF a > 0 THEN b / a ELSE LET c = a - 1 IN 1 / c ENDIF";
        let r1 = check(src);
        let r2 = check(src);
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        for t in &r1.tccs {
            assert!(free_names(&t.obligation).is_empty(), "{}", print_expr(&t.obligation));
        }
    }
}
