//! Sequent rules. Each returns the child sequents, or `None` when it does not apply.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::error::ProverError;
use super::logic::{is_tautology, simplify_sequent, trivially_closed};
use super::sequent::{FormulaNumber, Sequent};
use crate::syntax::ast::{BinOp, Binding, Expr, ExprKind, FieldInit, LetBinding, Quantifier, UnOp};
use crate::syntax::span::LineIndex;
use crate::syntax::visit::{free_names, substitute, substitute_in_type};
use crate::syntax::{parse_expr_text, EraseSpans};
use crate::typecheck::{check_expr_in, resolve_type_in, DeclClass, Type, TypecheckResult, TypedDecl};

const EXPAND_ROUNDS: usize = 64;

/// Skolem constants introduced so far in a proof, with the counter naming the next one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Skolems {
    pub counter: u64,
    pub consts: Vec<(String, Type)>,
}

fn index_of(n: FormulaNumber) -> usize {
    (n.unsigned_abs() - 1) as usize
}

fn replace_at(s: &Sequent, n: FormulaNumber, with: Vec<Expr>) -> Sequent {
    let mut out = s.clone();
    let side = if n < 0 { &mut out.antecedents } else { &mut out.consequents };
    let i = index_of(n);
    side.splice(i..=i, with);
    out
}

fn prepend(list: &mut Vec<Expr>, items: Vec<Expr>) {
    list.splice(0..0, items);
}

fn flatten_step(s: &Sequent) -> Option<Sequent> {
    for (i, a) in s.antecedents.iter().enumerate() {
        let n = -(i as FormulaNumber) - 1;
        match &a.kind {
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                return Some(replace_at(s, n, vec![(**lhs).clone(), (**rhs).clone()]));
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                let mut out = replace_at(s, n, vec![]);
                prepend(&mut out.consequents, vec![(**operand).clone()]);
                return Some(out);
            }
            _ => {}
        }
    }
    for (i, c) in s.consequents.iter().enumerate() {
        let n = i as FormulaNumber + 1;
        match &c.kind {
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                return Some(replace_at(s, n, vec![(**lhs).clone(), (**rhs).clone()]));
            }
            ExprKind::Binary { op: BinOp::Implies, lhs, rhs } => {
                let mut out = replace_at(s, n, vec![(**rhs).clone()]);
                prepend(&mut out.antecedents, vec![(**lhs).clone()]);
                return Some(out);
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                let mut out = replace_at(s, n, vec![]);
                prepend(&mut out.antecedents, vec![(**operand).clone()]);
                return Some(out);
            }
            _ => {}
        }
    }
    None
}

pub fn flatten(s: &Sequent) -> Option<Sequent> {
    let mut cur = flatten_step(s)?;
    while let Some(next) = flatten_step(&cur) {
        cur = next;
    }
    Some(cur)
}

fn split_at(s: &Sequent, n: FormulaNumber) -> Option<Vec<Sequent>> {
    let e = s.get(n)?;
    let two = |a: Sequent, b: Sequent| Some(vec![a, b]);
    if n > 0 {
        match &e.kind {
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                two(replace_at(s, n, vec![(**lhs).clone()]), replace_at(s, n, vec![(**rhs).clone()]))
            }
            ExprKind::Binary { op: BinOp::Iff, lhs, rhs } => two(
                replace_at(s, n, vec![Expr::binary(BinOp::Implies, (**lhs).clone(), (**rhs).clone())]),
                replace_at(s, n, vec![Expr::binary(BinOp::Implies, (**rhs).clone(), (**lhs).clone())]),
            ),
            ExprKind::If { cond, then_branch, else_branch } => {
                let mut a = replace_at(s, n, vec![(**then_branch).clone()]);
                prepend(&mut a.antecedents, vec![(**cond).clone()]);
                let mut b = replace_at(s, n, vec![(**else_branch).clone()]);
                prepend(&mut b.antecedents, vec![Expr::not((**cond).clone())]);
                two(a, b)
            }
            _ => None,
        }
    } else {
        match &e.kind {
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                two(replace_at(s, n, vec![(**lhs).clone()]), replace_at(s, n, vec![(**rhs).clone()]))
            }
            ExprKind::Binary { op: BinOp::Implies, lhs, rhs } => {
                let mut a = replace_at(s, n, vec![]);
                prepend(&mut a.consequents, vec![(**lhs).clone()]);
                two(a, replace_at(s, n, vec![(**rhs).clone()]))
            }
            ExprKind::Binary { op: BinOp::Iff, lhs, rhs } => {
                let a = replace_at(s, n, vec![(**lhs).clone(), (**rhs).clone()]);
                let mut b = replace_at(s, n, vec![]);
                prepend(&mut b.consequents, vec![(**lhs).clone(), (**rhs).clone()]);
                two(a, b)
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                let mut a = replace_at(s, n, vec![(**then_branch).clone()]);
                prepend(&mut a.antecedents, vec![(**cond).clone()]);
                let mut b = replace_at(s, n, vec![(**else_branch).clone()]);
                prepend(&mut b.antecedents, vec![Expr::not((**cond).clone())]);
                two(a, b)
            }
            _ => None,
        }
    }
}

/// Splits the first splittable formula in `|number|` order.
pub fn split(s: &Sequent) -> Option<Vec<Sequent>> {
    s.numbers_by_magnitude().into_iter().find_map(|n| split_at(s, n))
}

/// `assert`: closes tautologies, otherwise keeps the simplified sequent if it changed.
pub fn assert(s: &Sequent) -> Option<Vec<Sequent>> {
    if is_tautology(s) {
        return Some(vec![]);
    }
    let simple = simplify_sequent(s);
    (simple.without_spans() != s.without_spans()).then(|| vec![simple])
}

impl EraseSpans for Sequent {
    fn erase_spans(&mut self) {
        self.antecedents.iter_mut().chain(self.consequents.iter_mut()).for_each(EraseSpans::erase_spans);
    }
}

fn collect_names(e: &Expr, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Name(id) => {
            out.insert(id.name.clone());
        }
        ExprKind::Quant { bindings, .. } => {
            out.extend(bindings.iter().map(|b| b.name.name.clone()));
        }
        ExprKind::Let { bindings, .. } => {
            out.extend(bindings.iter().map(|b| b.name.name.clone()));
        }
        _ => {}
    }
    for c in e.children() {
        collect_names(c, out);
    }
}

/// Every identifier in the sequent, free or bound.
fn sequent_names(s: &Sequent) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in s.antecedents.iter().chain(&s.consequents) {
        collect_names(e, &mut out);
    }
    out
}

fn skolemizable(s: &Sequent, n: FormulaNumber) -> bool {
    matches!(
        (&s.get(n).map(|e| &e.kind), n > 0),
        (Some(ExprKind::Quant { quantifier: Quantifier::Forall, .. }), true)
            | (Some(ExprKind::Quant { quantifier: Quantifier::Exists, .. }), false)
    )
}

/// Replaces the bound variables of the first FORALL consequent or EXISTS antecedent with
/// fresh constants `x!k`.
pub fn skolem(s: &Sequent, scope: &TypecheckResult, sk: &mut Skolems) -> Option<Vec<Sequent>> {
    let n = s.numbers_by_magnitude().into_iter().find(|&n| skolemizable(s, n))?;
    let ExprKind::Quant { bindings, body, .. } = &s.get(n)?.kind else { return None };
    let mut taken = sequent_names(s);
    taken.extend(scope.visible().map(|d| d.name.clone()));
    taken.extend(sk.consts.iter().map(|(c, _)| c.clone()));
    let mut map = HashMap::new();
    for b in bindings {
        let stem = b.name.name.split('!').next().unwrap_or(&b.name.name).to_owned();
        let fresh = loop {
            sk.counter += 1;
            let cand = format!("{stem}!{}", sk.counter);
            if !taken.contains(&cand) {
                break cand;
            }
        };
        taken.insert(fresh.clone());
        let ty_expr = substitute_in_type(&b.ty, &map);
        let ty = resolve_type_in(scope, &ty_expr, &sk.consts).unwrap_or(Type::Error);
        sk.consts.push((fresh.clone(), ty));
        map.insert(b.name.name.clone(), Expr::name(fresh));
    }
    Some(vec![replace_at(s, n, vec![substitute(body, &map)])])
}

/// Instantiates the leading bound variables of a FORALL antecedent or EXISTS consequent.
pub fn inst(
    s: &Sequent,
    n: FormulaNumber,
    terms: &[String],
    scope: &TypecheckResult,
    sk: &Skolems,
) -> Result<Vec<Sequent>, ProverError> {
    let e = s.get(n).ok_or_else(|| ProverError::BadFnum(n, "does not exist".into()))?;
    let (bindings, body) = match (&e.kind, n < 0) {
        (ExprKind::Quant { quantifier: Quantifier::Forall, bindings, body }, true)
        | (ExprKind::Quant { quantifier: Quantifier::Exists, bindings, body }, false) => (bindings, body),
        _ => {
            let what = if n < 0 { "is not a FORALL antecedent" } else { "is not an EXISTS consequent" };
            return Err(ProverError::BadFnum(n, what.into()));
        }
    };
    if terms.len() > bindings.len() {
        return Err(ProverError::BadArguments(format!(
            "{} terms given for {} bound variables",
            terms.len(),
            bindings.len()
        )));
    }
    let mut map = HashMap::new();
    for (b, text) in bindings.iter().zip(terms) {
        let term = parse_expr_text(text)
            .map_err(|d| ProverError::IllTyped(d.first().map_or_else(String::new, |d| d.message.clone())))?;
        let ty_expr = substitute_in_type(&b.ty, &map);
        let ty = resolve_type_in(scope, &ty_expr, &sk.consts).map_err(ProverError::IllTyped)?;
        let checked = check_expr_in(scope, &term, &LineIndex::new(text), &sk.consts, Some(&ty));
        if let Some(d) = checked.diagnostics.first() {
            return Err(ProverError::IllTyped(d.message.clone()));
        }
        map.insert(b.name.name.clone(), term.without_spans());
    }
    let rest: Vec<Binding> = bindings[terms.len()..].to_vec();
    let quantifier = if n < 0 { Quantifier::Forall } else { Quantifier::Exists };
    let partial = if rest.is_empty() {
        (**body).clone()
    } else {
        Expr::synthetic(ExprKind::Quant { quantifier, bindings: rest, body: body.clone() })
    };
    Ok(vec![replace_at(s, n, vec![substitute(&partial, &map)])])
}

fn map_children(e: &Expr, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
    let kind = match &e.kind {
        ExprKind::Bool(_) | ExprKind::Number(_) | ExprKind::Str(_) | ExprKind::Name(_) => return e.clone(),
        ExprKind::App { func, args } => {
            ExprKind::App { func: Box::new(f(func)), args: args.iter().map(&mut *f).collect() }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            ExprKind::Binary { op: *op, lhs: Box::new(f(lhs)), rhs: Box::new(f(rhs)) }
        }
        ExprKind::Unary { op, operand } => ExprKind::Unary { op: *op, operand: Box::new(f(operand)) },
        ExprKind::If { cond, then_branch, else_branch } => ExprKind::If {
            cond: Box::new(f(cond)),
            then_branch: Box::new(f(then_branch)),
            else_branch: Box::new(f(else_branch)),
        },
        ExprKind::Quant { quantifier, bindings, body } => {
            ExprKind::Quant { quantifier: *quantifier, bindings: bindings.clone(), body: Box::new(f(body)) }
        }
        ExprKind::Let { bindings, body } => ExprKind::Let {
            bindings: bindings
                .iter()
                .map(|b| LetBinding { name: b.name.clone(), ty: b.ty.clone(), value: f(&b.value) })
                .collect(),
            body: Box::new(f(body)),
        },
        ExprKind::Record(fields) => ExprKind::Record(
            fields.iter().map(|fi| FieldInit { name: fi.name.clone(), value: f(&fi.value) }).collect(),
        ),
        ExprKind::Field { record, field } => ExprKind::Field { record: Box::new(f(record)), field: field.clone() },
    };
    Expr::new(kind, e.span)
}

struct Expander<'a> {
    name: &'a str,
    defs: Vec<&'a TypedDecl>,
    changed: bool,
}

impl Expander<'_> {
    fn unfold(&mut self, d: &TypedDecl, args: &[Expr], bound: &[String]) -> Option<Expr> {
        let body = d.body()?.without_spans();
        let params: Vec<&str> = d.params.iter().map(|p| p.0.as_str()).collect();
        let globals = free_names(&body);
        if globals.iter().any(|g| !params.contains(&g.as_str()) && bound.contains(g)) {
            return None;
        }
        let map: HashMap<String, Expr> = params.iter().map(|p| p.to_string()).zip(args.iter().cloned()).collect();
        self.changed = true;
        Some(substitute(&body, &map))
    }

    fn expr(&mut self, e: &Expr, bound: &mut Vec<String>) -> Expr {
        match &e.kind {
            ExprKind::Name(id) if id.name == self.name && !bound.contains(&id.name) => {
                let def = self.defs.iter().copied().find(|d| d.class == DeclClass::Const);
                def.and_then(|d| self.unfold(d, &[], bound)).unwrap_or_else(|| e.clone())
            }
            ExprKind::App { func, args } if func.as_name() == Some(self.name) && !bound.iter().any(|b| b == self.name) => {
                let args: Vec<Expr> = args.iter().map(|a| self.expr(a, bound)).collect();
                let def = self
                    .defs
                    .iter()
                    .copied()
                    .find(|d| d.class == DeclClass::Function && d.params.len() == args.len());
                def.and_then(|d| self.unfold(d, &args, bound)).unwrap_or_else(|| {
                    Expr::new(ExprKind::App { func: func.clone(), args }, e.span)
                })
            }
            ExprKind::Quant { quantifier, bindings, body } => {
                let n = bound.len();
                bound.extend(bindings.iter().map(|b| b.name.name.clone()));
                let body = self.expr(body, bound);
                bound.truncate(n);
                Expr::new(ExprKind::Quant { quantifier: *quantifier, bindings: bindings.clone(), body: Box::new(body) }, e.span)
            }
            ExprKind::Let { bindings, body } => {
                let n = bound.len();
                let mut out = Vec::with_capacity(bindings.len());
                for b in bindings {
                    let value = self.expr(&b.value, bound);
                    out.push(LetBinding { name: b.name.clone(), ty: b.ty.clone(), value });
                    bound.push(b.name.name.clone());
                }
                let body = self.expr(body, bound);
                bound.truncate(n);
                Expr::new(ExprKind::Let { bindings: out, body: Box::new(body) }, e.span)
            }
            _ => map_children(e, &mut |c| self.expr(c, bound)),
        }
    }
}

fn expandable<'a>(scope: &'a TypecheckResult, name: &str) -> Vec<&'a TypedDecl> {
    scope.lookup(name).into_iter().filter(|d| d.is_value() && d.body().is_some()).collect()
}

/// Unfolds every occurrence of the definition `name`, or `Ok(None)` if there is none.
pub fn expand(s: &Sequent, name: &str, scope: &TypecheckResult) -> Result<Option<Vec<Sequent>>, ProverError> {
    if scope.lookup(name).is_empty() {
        return Err(ProverError::Expand(format!("no declaration named '{name}'")));
    }
    let defs = expandable(scope, name);
    if defs.is_empty() {
        return Err(ProverError::Expand(format!("'{name}' has no definition to expand")));
    }
    Ok(expand_with(s, name, defs).map(|s| vec![s]))
}

fn expand_with<'a>(s: &Sequent, name: &'a str, defs: Vec<&'a TypedDecl>) -> Option<Sequent> {
    let mut x = Expander { name, defs, changed: false };
    let out = Sequent {
        antecedents: s.antecedents.iter().map(|e| x.expr(e, &mut Vec::new())).collect(),
        consequents: s.consequents.iter().map(|e| x.expr(e, &mut Vec::new())).collect(),
    };
    x.changed.then_some(out)
}

/// Unfolds non-recursive definitions until none remain (bounded by a round limit).
pub fn expand_all(s: &Sequent, scope: &TypecheckResult) -> Sequent {
    let mut cur = s.clone();
    for _ in 0..EXPAND_ROUNDS {
        let names: BTreeSet<String> =
            cur.antecedents.iter().chain(&cur.consequents).flat_map(free_names).collect();
        let mut progressed = false;
        for name in &names {
            let defs: Vec<&TypedDecl> = expandable(scope, name).into_iter().filter(|d| !d.recursive).collect();
            if defs.is_empty() {
                continue;
            }
            if let Some(next) = expand_with(&cur, name, defs) {
                cur = next;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    cur
}

/// Full propositional decomposition; returns the goals left open.
pub fn prop_goals(s: &Sequent) -> Vec<Sequent> {
    let mut out = Vec::new();
    decompose(s, None, &mut out);
    out
}

fn decompose(s: &Sequent, mut skolems: Option<(&TypecheckResult, &mut Skolems)>, out: &mut Vec<Sequent>) {
    let s = simplify_sequent(s);
    if trivially_closed(&s) {
        return;
    }
    let s = flatten(&s).unwrap_or(s);
    if trivially_closed(&s) {
        return;
    }
    if let Some(children) = split(&s) {
        for c in &children {
            decompose(c, skolems.as_mut().map(|(sc, sk)| (*sc, &mut **sk)), out);
        }
        return;
    }
    if let Some((scope, sk)) = skolems.as_mut() {
        if let Some(next) = skolem(&s, scope, sk) {
            decompose(&next[0], skolems, out);
            return;
        }
    }
    if !is_tautology(&s) {
        out.push(s);
    }
}

/// Expands definitions, then decomposes while skolemizing; returns the goals left open.
pub fn grind_goals(s: &Sequent, scope: &TypecheckResult, sk: &mut Skolems) -> Vec<Sequent> {
    let expanded = expand_all(s, scope);
    let mut out = Vec::new();
    decompose(&expanded, Some((scope, sk)), &mut out);
    out
}
