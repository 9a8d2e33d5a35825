//! Ground-literal simplification and the propositional decision procedure behind `assert`.

use std::collections::HashMap;

use super::sequent::Sequent;
use crate::eval::ground_bool;
use crate::syntax::ast::{BinOp, Expr, ExprKind, UnOp};
use crate::syntax::pretty::print_expr;
use crate::syntax::EraseSpans;

pub(crate) fn is_true(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Bool(true))
}

pub(crate) fn is_false(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Bool(false))
}

/// Canonical text of a formula, used to identify atoms.
pub(crate) fn key(e: &Expr) -> String {
    print_expr(&e.without_spans())
}

fn same(a: &Expr, b: &Expr) -> bool {
    a.without_spans() == b.without_spans()
}

/// Evaluates ground literals, rewrites `a /= b` to `NOT a = b`, decides reflexive
/// comparisons and folds the resulting boolean constants.
pub fn simplify(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Bool(_) => e.clone(),
        ExprKind::Unary { op: UnOp::Not, operand } => {
            let a = simplify(operand);
            match a.kind {
                ExprKind::Bool(b) => Expr::boolean(!b),
                _ => Expr::not(a),
            }
        }
        ExprKind::Binary { op, lhs, rhs } if op.is_logical() => {
            let (a, b) = (simplify(lhs), simplify(rhs));
            fold(*op, a, b)
        }
        ExprKind::Binary { op: BinOp::Neq, lhs, rhs } => {
            simplify(&Expr::not(Expr::binary(BinOp::Eq, (**lhs).clone(), (**rhs).clone())))
        }
        ExprKind::Binary { op: BinOp::Eq | BinOp::Le | BinOp::Ge, lhs, rhs } if same(lhs, rhs) => {
            Expr::boolean(true)
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            let c = simplify(cond);
            match c.kind {
                ExprKind::Bool(true) => simplify(then_branch),
                ExprKind::Bool(false) => simplify(else_branch),
                _ => match ground_bool(e) {
                    Some(b) => Expr::boolean(b),
                    None => Expr::synthetic(ExprKind::If {
                        cond: Box::new(c),
                        then_branch: Box::new(simplify(then_branch)),
                        else_branch: Box::new(simplify(else_branch)),
                    }),
                },
            }
        }
        ExprKind::Quant { .. } => e.clone(),
        _ => match ground_bool(e) {
            Some(b) => Expr::boolean(b),
            None => e.clone(),
        },
    }
}

fn fold(op: BinOp, a: Expr, b: Expr) -> Expr {
    use ExprKind::Bool;
    match (op, &a.kind, &b.kind) {
        (BinOp::And, Bool(false), _) | (BinOp::And, _, Bool(false)) => Expr::boolean(false),
        (BinOp::And, Bool(true), _) => b,
        (BinOp::And, _, Bool(true)) => a,
        (BinOp::Or, Bool(true), _) | (BinOp::Or, _, Bool(true)) => Expr::boolean(true),
        (BinOp::Or, Bool(false), _) => b,
        (BinOp::Or, _, Bool(false)) => a,
        (BinOp::Implies, Bool(false), _) | (BinOp::Implies, _, Bool(true)) => Expr::boolean(true),
        (BinOp::Implies, Bool(true), _) => b,
        (BinOp::Implies, _, Bool(false)) => Expr::not(a),
        (BinOp::Iff, Bool(true), _) => b,
        (BinOp::Iff, _, Bool(true)) => a,
        (BinOp::Iff, Bool(false), _) => Expr::not(b),
        (BinOp::Iff, _, Bool(false)) => Expr::not(a),
        _ => Expr::binary(op, a, b),
    }
}

/// Simplifies every formula, dropping `TRUE` antecedents and `FALSE` consequents.
pub fn simplify_sequent(s: &Sequent) -> Sequent {
    Sequent {
        antecedents: s.antecedents.iter().map(simplify).filter(|e| !is_true(e)).collect(),
        consequents: s.consequents.iter().map(simplify).filter(|e| !is_false(e)).collect(),
    }
}

/// Closed by a `FALSE` antecedent, a `TRUE` consequent, or a formula on both sides.
pub fn trivially_closed(s: &Sequent) -> bool {
    if s.antecedents.iter().any(is_false) || s.consequents.iter().any(is_true) {
        return true;
    }
    let ants: std::collections::HashSet<String> = s.antecedents.iter().map(key).collect();
    s.consequents.iter().any(|c| ants.contains(&key(c)))
}

#[derive(Debug, Clone)]
enum Prop {
    Const(bool),
    Atom(usize),
    Not(Box<Prop>),
    Bin(BinOp, Box<Prop>, Box<Prop>),
    Ite(Box<Prop>, Box<Prop>, Box<Prop>),
}

struct Atoms(HashMap<String, usize>);

impl Atoms {
    fn prop(&mut self, e: &Expr) -> Prop {
        match &e.kind {
            ExprKind::Bool(b) => Prop::Const(*b),
            ExprKind::Unary { op: UnOp::Not, operand } => Prop::Not(Box::new(self.prop(operand))),
            ExprKind::Binary { op, lhs, rhs } if op.is_logical() => {
                Prop::Bin(*op, Box::new(self.prop(lhs)), Box::new(self.prop(rhs)))
            }
            ExprKind::If { cond, then_branch, else_branch } => Prop::Ite(
                Box::new(self.prop(cond)),
                Box::new(self.prop(then_branch)),
                Box::new(self.prop(else_branch)),
            ),
            _ => {
                let n = self.0.len();
                Prop::Atom(*self.0.entry(key(e)).or_insert(n))
            }
        }
    }
}

fn first_atom(p: &Prop) -> Option<usize> {
    match p {
        Prop::Const(_) => None,
        Prop::Atom(a) => Some(*a),
        Prop::Not(x) => first_atom(x),
        Prop::Bin(_, a, b) => first_atom(a).or_else(|| first_atom(b)),
        Prop::Ite(c, a, b) => first_atom(c).or_else(|| first_atom(a)).or_else(|| first_atom(b)),
    }
}

/// `p` with atom `a` fixed to `v`, constants folded.
fn restrict(p: &Prop, a: usize, v: bool) -> Prop {
    use Prop::Const;
    match p {
        Const(_) => p.clone(),
        Prop::Atom(x) if *x == a => Const(v),
        Prop::Atom(_) => p.clone(),
        Prop::Not(x) => match restrict(x, a, v) {
            Const(b) => Const(!b),
            x => Prop::Not(Box::new(x)),
        },
        Prop::Bin(op, l, r) => {
            let l = restrict(l, a, v);
            let r = restrict(r, a, v);
            match (op, &l, &r) {
                (BinOp::And, Const(false), _) | (BinOp::And, _, Const(false)) => Const(false),
                (BinOp::And, Const(true), _) => r,
                (BinOp::And, _, Const(true)) => l,
                (BinOp::Or, Const(true), _) | (BinOp::Or, _, Const(true)) => Const(true),
                (BinOp::Or, Const(false), _) => r,
                (BinOp::Or, _, Const(false)) => l,
                (BinOp::Implies, Const(false), _) | (BinOp::Implies, _, Const(true)) => Const(true),
                (BinOp::Implies, Const(true), _) => r,
                (BinOp::Implies, _, Const(false)) => Prop::Not(Box::new(l)),
                (BinOp::Iff, Const(x), Const(y)) => Const(x == y),
                (BinOp::Iff, Const(true), _) => r,
                (BinOp::Iff, _, Const(true)) => l,
                (BinOp::Iff, Const(false), _) => Prop::Not(Box::new(r)),
                (BinOp::Iff, _, Const(false)) => Prop::Not(Box::new(l)),
                _ => Prop::Bin(*op, Box::new(l), Box::new(r)),
            }
        }
        Prop::Ite(c, t, e) => match restrict(c, a, v) {
            Const(true) => restrict(t, a, v),
            Const(false) => restrict(e, a, v),
            c => Prop::Ite(Box::new(c), Box::new(restrict(t, a, v)), Box::new(restrict(e, a, v))),
        },
    }
}

fn valid(p: &Prop) -> bool {
    match p {
        Prop::Const(b) => *b,
        _ => match first_atom(p) {
            Some(a) => valid(&restrict(p, a, true)) && valid(&restrict(p, a, false)),
            None => matches!(restrict(p, usize::MAX, false), Prop::Const(true)),
        },
    }
}

/// Whether the sequent is a propositional tautology over its atoms once ground literals are
/// evaluated. Quantified formulas, applications and comparisons are atoms.
pub fn is_tautology(s: &Sequent) -> bool {
    let s = simplify_sequent(s);
    if trivially_closed(&s) {
        return true;
    }
    let mut atoms = Atoms(HashMap::new());
    let ants = s
        .antecedents
        .iter()
        .map(|e| atoms.prop(e))
        .reduce(|a, b| Prop::Bin(BinOp::And, Box::new(a), Box::new(b)))
        .unwrap_or(Prop::Const(true));
    let cons = s
        .consequents
        .iter()
        .map(|e| atoms.prop(e))
        .reduce(|a, b| Prop::Bin(BinOp::Or, Box::new(a), Box::new(b)))
        .unwrap_or(Prop::Const(false));
    let goal = Prop::Bin(BinOp::Implies, Box::new(ants), Box::new(cons));
    valid(&goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr_text;

    fn goal(src: &str) -> Sequent {
        Sequent::goal(parse_expr_text(src).unwrap())
    }

    #[test]
    fn decides_small_formulas() {
        assert!(is_tautology(&goal("p OR NOT p")));
        assert!(is_tautology(&goal("(a AND b) IMPLIES a")));
        assert!(is_tautology(&goal("(a IFF b) IFF (b IFF a)")));
        assert!(is_tautology(&goal("IF c THEN a ELSE a ENDIF IMPLIES a")));
        assert!(!is_tautology(&goal("a IMPLIES b")));
        assert!(!is_tautology(&goal("p")));
    }

    #[test]
    fn ground_literals_are_evaluated() {
        assert!(is_tautology(&goal("1 + 1 = 2")));
        assert!(is_tautology(&goal("x + 1 = x + 1")));
        assert!(!is_tautology(&goal("2 < 1")));
        assert!(is_tautology(&goal("f(x) /= 3 OR f(x) = 3")));
        assert_eq!(print_expr(&simplify(&parse_expr_text("a AND 3 > 2").unwrap())), "a");
        assert_eq!(print_expr(&simplify(&parse_expr_text("d /= 0").unwrap())), "NOT d = 0");
    }
}
