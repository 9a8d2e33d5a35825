//! Evaluation of closed literal expressions, shared by the prover and the typechecker.

use super::value::{apply_binop, apply_unop, Value};
use crate::syntax::ast::{BinOp, Expr, ExprKind};

/// Value of an expression built only from literals and operators, or `None` if it mentions
/// a name or fails to evaluate.
pub fn eval_ground(e: &Expr) -> Option<Value> {
    match &e.kind {
        ExprKind::Bool(b) => Some(Value::Bool(*b)),
        ExprKind::Number(n) => Value::from_literal(n),
        ExprKind::Str(s) => Some(Value::Str(s.clone())),
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_ground(lhs)?;
            match (op, a.as_bool()) {
                (BinOp::And, Some(false)) => return Some(Value::Bool(false)),
                (BinOp::Or, Some(true)) => return Some(Value::Bool(true)),
                (BinOp::Implies, Some(false)) => return Some(Value::Bool(true)),
                _ => {}
            }
            let b = eval_ground(rhs)?;
            apply_binop(*op, &a, &b).ok()
        }
        ExprKind::Unary { op, operand } => apply_unop(*op, &eval_ground(operand)?).ok(),
        ExprKind::If { cond, then_branch, else_branch } => {
            if eval_ground(cond)?.as_bool()? {
                eval_ground(then_branch)
            } else {
                eval_ground(else_branch)
            }
        }
        ExprKind::Record(fields) => {
            let mut out = Vec::with_capacity(fields.len());
            for f in fields {
                out.push((f.name.name.clone(), eval_ground(&f.value)?));
            }
            Some(Value::Record(out))
        }
        ExprKind::Field { record, field } => match eval_ground(record)? {
            Value::Record(fs) => fs.into_iter().find(|(n, _)| n == &field.name).map(|(_, v)| v),
            _ => None,
        },
        ExprKind::Name(_) | ExprKind::App { .. } | ExprKind::Quant { .. } | ExprKind::Let { .. } => None,
    }
}

pub fn ground_bool(e: &Expr) -> Option<bool> {
    eval_ground(e)?.as_bool()
}
