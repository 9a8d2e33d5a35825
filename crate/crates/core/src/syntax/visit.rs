use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::span::Span;

/// Names occurring free in `expr`.
pub fn free_names(expr: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(expr, &mut Vec::new(), &mut out);
    out
}

pub fn mentions_free(expr: &Expr, name: &str) -> bool {
    free_names(expr).contains(name)
}

fn collect_free(expr: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &expr.kind {
        ExprKind::Name(id) => {
            if !bound.iter().any(|b| b == &id.name) {
                out.insert(id.name.clone());
            }
        }
        ExprKind::Quant { bindings, body, .. } => {
            // a binder's type may mention the binders before it
            let n = bound.len();
            for b in bindings {
                collect_free_type(&b.ty, bound, out);
                bound.push(b.name.name.clone());
            }
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        ExprKind::Let { bindings, body } => {
            // sequential: each binding sees the ones before it
            let n = bound.len();
            for b in bindings {
                if let Some(ty) = &b.ty {
                    collect_free_type(ty, bound, out);
                }
                collect_free(&b.value, bound, out);
                bound.push(b.name.name.clone());
            }
            collect_free(body, bound, out);
            bound.truncate(n);
        }
        _ => {
            for child in expr.children() {
                collect_free(child, bound, out);
            }
        }
    }
}

pub fn free_names_in_type(ty: &TypeExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_type(ty, &mut Vec::new(), &mut out);
    out
}

fn collect_free_type(ty: &TypeExpr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &ty.kind {
        TypeExprKind::Base(_) | TypeExprKind::Named(_) => {}
        TypeExprKind::Function { domain, range } => {
            for d in domain {
                collect_free_type(d, bound, out);
            }
            collect_free_type(range, bound, out);
        }
        TypeExprKind::Record(fields) => {
            for f in fields {
                collect_free_type(&f.ty, bound, out);
            }
        }
        TypeExprKind::Subtype { var, base, pred } => {
            collect_free_type(base, bound, out);
            bound.push(var.name.clone());
            collect_free(pred, bound, out);
            bound.pop();
        }
    }
}

/// A name of the form `base_N` not satisfying `taken`.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> String {
    let stem = base.split('!').next().unwrap_or(base);
    (1..)
        .map(|i| format!("{stem}_{i}"))
        .find(|n| !taken(n))
        .expect("unbounded supply of names")
}

/// Capture-avoiding simultaneous substitution of free names.
pub fn substitute(expr: &Expr, map: &HashMap<String, Expr>) -> Expr {
    if map.is_empty() {
        return expr.clone();
    }
    let replacement_free: BTreeSet<String> = map.values().flat_map(free_names).collect();
    subst(expr, map, &replacement_free)
}

fn subst(expr: &Expr, map: &HashMap<String, Expr>, repl_free: &BTreeSet<String>) -> Expr {
    let span = expr.span;
    let kind = match &expr.kind {
        ExprKind::Name(id) => {
            return match map.get(&id.name) {
                Some(r) => r.clone(),
                None => expr.clone(),
            }
        }
        ExprKind::Bool(_) | ExprKind::Number(_) | ExprKind::Str(_) => return expr.clone(),
        ExprKind::App { func, args } => ExprKind::App {
            func: Box::new(subst(func, map, repl_free)),
            args: args.iter().map(|a| subst(a, map, repl_free)).collect(),
        },
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op: *op,
            lhs: Box::new(subst(lhs, map, repl_free)),
            rhs: Box::new(subst(rhs, map, repl_free)),
        },
        ExprKind::Unary { op, operand } => ExprKind::Unary { op: *op, operand: Box::new(subst(operand, map, repl_free)) },
        ExprKind::If { cond, then_branch, else_branch } => ExprKind::If {
            cond: Box::new(subst(cond, map, repl_free)),
            then_branch: Box::new(subst(then_branch, map, repl_free)),
            else_branch: Box::new(subst(else_branch, map, repl_free)),
        },
        ExprKind::Record(fields) => ExprKind::Record(
            fields
                .iter()
                .map(|f| FieldInit { name: f.name.clone(), value: subst(&f.value, map, repl_free) })
                .collect(),
        ),
        ExprKind::Field { record, field } => {
            ExprKind::Field { record: Box::new(subst(record, map, repl_free)), field: field.clone() }
        }
        ExprKind::Quant { quantifier, bindings, body } => {
            let body_free = free_names(body);
            let mut inner = map.clone();
            let mut renames = HashMap::new();
            let mut new_bindings = Vec::with_capacity(bindings.len());
            for b in bindings {
                // earlier binders are in scope in this binder's type
                let renamed = if renames.is_empty() { b.ty.clone() } else { subst_type(&b.ty, &renames, &BTreeSet::new()) };
                let inner_free: BTreeSet<String> = inner.values().flat_map(free_names).collect();
                let ty = subst_type(&renamed, &inner, &inner_free);
                inner.remove(&b.name.name);
                let name = if repl_free.contains(&b.name.name) {
                    let fresh = fresh_name(&b.name.name, |n| {
                        repl_free.contains(n) || body_free.contains(n) || bindings.iter().any(|o| o.name.name == n)
                    });
                    renames.insert(b.name.name.clone(), Expr::new(ExprKind::Name(Ident::new(fresh.clone(), b.name.span)), b.name.span));
                    Ident::new(fresh, b.name.span)
                } else {
                    b.name.clone()
                };
                new_bindings.push(Binding { name, ty });
            }
            let body = if renames.is_empty() { (**body).clone() } else { substitute(body, &renames) };
            let inner_free: BTreeSet<String> = inner.values().flat_map(free_names).collect();
            ExprKind::Quant { quantifier: *quantifier, bindings: new_bindings, body: Box::new(subst(&body, &inner, &inner_free)) }
        }
        ExprKind::Let { bindings, body } => {
            // rewrite `LET a = x, b = y IN e` as nested single lets so each scope is handled once
            if bindings.len() > 1 {
                let nested = bindings.iter().rev().fold((**body).clone(), |acc, b| {
                    Expr::new(ExprKind::Let { bindings: vec![b.clone()], body: Box::new(acc) }, span)
                });
                return flatten_let(subst(&nested, map, repl_free));
            }
            let b = &bindings[0];
            let value = subst(&b.value, map, repl_free);
            let ty = b.ty.as_ref().map(|t| subst_type(t, map, repl_free));
            let mut inner = map.clone();
            inner.remove(&b.name.name);
            let (name, body) = if repl_free.contains(&b.name.name) && !inner.is_empty() {
                let body_free = free_names(body);
                let fresh = fresh_name(&b.name.name, |n| repl_free.contains(n) || body_free.contains(n));
                let mut rn = HashMap::new();
                rn.insert(b.name.name.clone(), Expr::new(ExprKind::Name(Ident::new(fresh.clone(), b.name.span)), b.name.span));
                (Ident::new(fresh, b.name.span), substitute(body, &rn))
            } else {
                (b.name.clone(), (**body).clone())
            };
            let inner_free: BTreeSet<String> = inner.values().flat_map(free_names).collect();
            ExprKind::Let {
                bindings: vec![LetBinding { name, ty, value }],
                body: Box::new(subst(&body, &inner, &inner_free)),
            }
        }
    };
    Expr::new(kind, span)
}

/// Collapses directly nested single-binding LETs back into one LET.
fn flatten_let(expr: Expr) -> Expr {
    let Expr { kind: ExprKind::Let { mut bindings, body }, span } = expr else { return expr };
    let mut body = *body;
    while let ExprKind::Let { bindings: inner, body: inner_body } = body.kind {
        bindings.extend(inner);
        body = *inner_body;
    }
    Expr::new(ExprKind::Let { bindings, body: Box::new(body) }, span)
}

/// Capture-avoiding substitution inside the predicates of a type.
pub fn substitute_in_type(ty: &TypeExpr, map: &HashMap<String, Expr>) -> TypeExpr {
    if map.is_empty() {
        return ty.clone();
    }
    let replacement_free: BTreeSet<String> = map.values().flat_map(free_names).collect();
    subst_type(ty, map, &replacement_free)
}

fn subst_type(ty: &TypeExpr, map: &HashMap<String, Expr>, repl_free: &BTreeSet<String>) -> TypeExpr {
    let kind = match &ty.kind {
        TypeExprKind::Base(_) | TypeExprKind::Named(_) => return ty.clone(),
        TypeExprKind::Function { domain, range } => TypeExprKind::Function {
            domain: domain.iter().map(|d| subst_type(d, map, repl_free)).collect(),
            range: Box::new(subst_type(range, map, repl_free)),
        },
        TypeExprKind::Record(fields) => TypeExprKind::Record(
            fields.iter().map(|f| Binding { name: f.name.clone(), ty: subst_type(&f.ty, map, repl_free) }).collect(),
        ),
        TypeExprKind::Subtype { var, base, pred } => {
            let mut inner = map.clone();
            inner.remove(&var.name);
            let inner_free: BTreeSet<String> = inner.values().flat_map(free_names).collect();
            TypeExprKind::Subtype {
                var: var.clone(),
                base: Box::new(subst_type(base, map, repl_free)),
                pred: Box::new(subst(pred, &inner, &inner_free)),
            }
        }
    };
    TypeExpr { kind, span: ty.span }
}

// ----- span erasure, for structural comparison -----

pub trait EraseSpans {
    fn erase_spans(&mut self);

    fn without_spans(&self) -> Self
    where
        Self: Clone,
    {
        let mut c = self.clone();
        c.erase_spans();
        c
    }
}

impl EraseSpans for Ident {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
    }
}

impl EraseSpans for Binding {
    fn erase_spans(&mut self) {
        self.name.erase_spans();
        self.ty.erase_spans();
    }
}

impl EraseSpans for TypeExpr {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        match &mut self.kind {
            TypeExprKind::Base(_) => {}
            TypeExprKind::Named(id) => id.erase_spans(),
            TypeExprKind::Function { domain, range } => {
                domain.iter_mut().for_each(EraseSpans::erase_spans);
                range.erase_spans();
            }
            TypeExprKind::Record(fields) => fields.iter_mut().for_each(EraseSpans::erase_spans),
            TypeExprKind::Subtype { var, base, pred } => {
                var.erase_spans();
                base.erase_spans();
                pred.erase_spans();
            }
        }
    }
}

impl EraseSpans for Expr {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        match &mut self.kind {
            ExprKind::Bool(_) | ExprKind::Number(_) | ExprKind::Str(_) => {}
            ExprKind::Name(id) => id.erase_spans(),
            ExprKind::App { func, args } => {
                func.erase_spans();
                args.iter_mut().for_each(EraseSpans::erase_spans);
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.erase_spans();
                rhs.erase_spans();
            }
            ExprKind::Unary { operand, .. } => operand.erase_spans(),
            ExprKind::If { cond, then_branch, else_branch } => {
                cond.erase_spans();
                then_branch.erase_spans();
                else_branch.erase_spans();
            }
            ExprKind::Quant { bindings, body, .. } => {
                bindings.iter_mut().for_each(EraseSpans::erase_spans);
                body.erase_spans();
            }
            ExprKind::Let { bindings, body } => {
                for b in bindings {
                    b.name.erase_spans();
                    if let Some(t) = &mut b.ty {
                        t.erase_spans();
                    }
                    b.value.erase_spans();
                }
                body.erase_spans();
            }
            ExprKind::Record(fields) => {
                for f in fields {
                    f.name.erase_spans();
                    f.value.erase_spans();
                }
            }
            ExprKind::Field { record, field } => {
                record.erase_spans();
                field.erase_spans();
            }
        }
    }
}

impl EraseSpans for Decl {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        self.name.erase_spans();
        match &mut self.kind {
            DeclKind::Type { definition } => {
                if let Some(d) = definition {
                    d.erase_spans();
                }
            }
            DeclKind::Const { ty, body } => {
                ty.erase_spans();
                if let Some(b) = body {
                    b.erase_spans();
                }
            }
            DeclKind::Fun { params, ret, body, .. } => {
                params.iter_mut().for_each(EraseSpans::erase_spans);
                ret.erase_spans();
                body.erase_spans();
            }
            DeclKind::Formula { body, .. } => body.erase_spans(),
        }
    }
}

impl EraseSpans for Theory {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        self.name.erase_spans();
        self.importings.iter_mut().for_each(EraseSpans::erase_spans);
        self.decls.iter_mut().for_each(EraseSpans::erase_spans);
    }
}

impl EraseSpans for SourceFile {
    fn erase_spans(&mut self) {
        self.theories.iter_mut().for_each(EraseSpans::erase_spans);
    }
}

/// Every (parent, child) span pair in the tree, for range-nesting checks.
pub fn span_edges(file: &SourceFile) -> Vec<(Span, Span)> {
    let mut out = Vec::new();
    for th in &file.theories {
        out.push((th.span, th.name.span));
        for i in &th.importings {
            out.push((th.span, i.span));
        }
        for d in &th.decls {
            out.push((th.span, d.span));
            out.push((d.span, d.name.span));
            match &d.kind {
                DeclKind::Type { definition } => {
                    if let Some(t) = definition {
                        out.push((d.span, t.span));
                        type_edges(t, &mut out);
                    }
                }
                DeclKind::Const { ty, body } => {
                    out.push((d.span, ty.span));
                    type_edges(ty, &mut out);
                    if let Some(b) = body {
                        out.push((d.span, b.span));
                        expr_edges(b, &mut out);
                    }
                }
                DeclKind::Fun { params, ret, body, .. } => {
                    for p in params {
                        out.push((d.span, p.name.span));
                        out.push((d.span, p.ty.span));
                        type_edges(&p.ty, &mut out);
                    }
                    out.push((d.span, ret.span));
                    type_edges(ret, &mut out);
                    out.push((d.span, body.span));
                    expr_edges(body, &mut out);
                }
                DeclKind::Formula { body, .. } => {
                    out.push((d.span, body.span));
                    expr_edges(body, &mut out);
                }
            }
        }
    }
    out
}

fn type_edges(ty: &TypeExpr, out: &mut Vec<(Span, Span)>) {
    match &ty.kind {
        TypeExprKind::Base(_) => {}
        TypeExprKind::Named(id) => out.push((ty.span, id.span)),
        TypeExprKind::Function { domain, range } => {
            for t in domain.iter().chain(std::iter::once(&**range)) {
                out.push((ty.span, t.span));
                type_edges(t, out);
            }
        }
        TypeExprKind::Record(fields) => {
            for f in fields {
                out.push((ty.span, f.name.span));
                out.push((ty.span, f.ty.span));
                type_edges(&f.ty, out);
            }
        }
        TypeExprKind::Subtype { var, base, pred } => {
            out.push((ty.span, var.span));
            out.push((ty.span, base.span));
            type_edges(base, out);
            out.push((ty.span, pred.span));
            expr_edges(pred, out);
        }
    }
}

fn expr_edges(e: &Expr, out: &mut Vec<(Span, Span)>) {
    match &e.kind {
        ExprKind::Name(id) => out.push((e.span, id.span)),
        ExprKind::Field { field, .. } => out.push((e.span, field.span)),
        ExprKind::Quant { bindings, .. } => {
            for b in bindings {
                out.push((e.span, b.name.span));
                out.push((e.span, b.ty.span));
                type_edges(&b.ty, out);
            }
        }
        ExprKind::Let { bindings, .. } => {
            for b in bindings {
                out.push((e.span, b.name.span));
                if let Some(t) = &b.ty {
                    out.push((e.span, t.span));
                    type_edges(t, out);
                }
            }
        }
        ExprKind::Record(fields) => {
            for f in fields {
                out.push((e.span, f.name.span));
            }
        }
        _ => {}
    }
    for c in e.children() {
        out.push((e.span, c.span));
        expr_edges(c, out);
    }
}
