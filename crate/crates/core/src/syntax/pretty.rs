//! Canonical single-line rendering of AST nodes.

use std::fmt::Write;

use super::ast::*;
use super::lexer::escape_string;
use super::visit::EraseSpans;

const QUANT: u8 = 0;
const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const CMP: u8 = 6;
const ADD: u8 = 7;
const MUL: u8 = 8;
const NEG: u8 = 9;
const POSTFIX: u8 = 10;
const ATOM: u8 = 11;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Quant { .. } | ExprKind::Let { .. } => QUANT,
        ExprKind::Binary { op, .. } => binop_level(*op),
        ExprKind::Unary { op: UnOp::Not, .. } => NOT,
        ExprKind::Unary { op: UnOp::Neg, .. } => NEG,
        ExprKind::App { .. } | ExprKind::Field { .. } => POSTFIX,
        _ => ATOM,
    }
}

fn binop_level(op: BinOp) -> u8 {
    match op {
        BinOp::Iff => IFF,
        BinOp::Implies => IMPLIES,
        BinOp::Or => OR,
        BinOp::And => AND,
        BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => CMP,
        BinOp::Add | BinOp::Sub => ADD,
        BinOp::Mul | BinOp::Div => MUL,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, QUANT);
    out
}

pub fn print_type(t: &TypeExpr) -> String {
    let mut out = String::new();
    ty(&mut out, t);
    out
}

pub fn print_decl(d: &Decl) -> String {
    let mut out = String::new();
    decl(&mut out, d);
    out
}

pub fn print_theory(t: &Theory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}: THEORY", t.name.name);
    out.push_str("BEGIN\n");
    if !t.importings.is_empty() {
        let names: Vec<_> = t.importings.iter().map(|i| i.name.as_str()).collect();
        let _ = writeln!(out, "  IMPORTING {}", names.join(", "));
        if !t.decls.is_empty() {
            out.push('\n');
        }
    }
    for d in &t.decls {
        out.push_str("  ");
        decl(&mut out, d);
        out.push('\n');
    }
    let _ = writeln!(out, "END {}", t.name.name);
    out
}

pub fn print_source(file: &SourceFile) -> String {
    file.theories.iter().map(print_theory).collect::<Vec<_>>().join("\n")
}

fn decl(out: &mut String, d: &Decl) {
    out.push_str(&d.name.name);
    match &d.kind {
        DeclKind::Type { definition } => {
            out.push_str(": TYPE");
            if let Some(def) = definition {
                out.push_str(" = ");
                ty(out, def);
            }
        }
        DeclKind::Const { ty: t, body } => {
            out.push_str(": ");
            ty(out, t);
            if let Some(b) = body {
                out.push_str(" = ");
                expr(out, b, QUANT);
            }
        }
        DeclKind::Fun { params, ret, body, recursive } => {
            out.push('(');
            bindings(out, params);
            out.push_str("): ");
            if *recursive {
                out.push_str("RECURSIVE ");
            }
            ty(out, ret);
            out.push_str(" = ");
            expr(out, body, QUANT);
        }
        DeclKind::Formula { kind, body } => {
            let _ = write!(out, ": {} ", kind.keyword());
            expr(out, body, QUANT);
        }
    }
}

/// Adjacent bindings of the same type share it: `x, y: int`.
fn bindings(out: &mut String, bs: &[Binding]) {
    let mut i = 0;
    while i < bs.len() {
        let key = bs[i].ty.without_spans();
        let mut j = i + 1;
        while j < bs.len() && bs[j].ty.without_spans() == key {
            j += 1;
        }
        if i > 0 {
            out.push_str(", ");
        }
        let names: Vec<_> = bs[i..j].iter().map(|b| b.name.name.as_str()).collect();
        out.push_str(&names.join(", "));
        out.push_str(": ");
        ty(out, &bs[i].ty);
        i = j;
    }
}

fn ty(out: &mut String, t: &TypeExpr) {
    match &t.kind {
        TypeExprKind::Base(b) => out.push_str(b.name()),
        TypeExprKind::Named(id) => out.push_str(&id.name),
        TypeExprKind::Function { domain, range } => {
            out.push('[');
            for (i, d) in domain.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                ty(out, d);
            }
            out.push_str(" -> ");
            ty(out, range);
            out.push(']');
        }
        TypeExprKind::Record(fields) => {
            out.push_str("[# ");
            for (i, f) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: ", f.name.name);
                ty(out, &f.ty);
            }
            out.push_str(" #]");
        }
        TypeExprKind::Subtype { var, base, pred } => {
            let _ = write!(out, "{{{}: ", var.name);
            ty(out, base);
            out.push_str(" | ");
            expr(out, pred, QUANT);
            out.push('}');
        }
    }
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    let paren = level(e) < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Bool(true) => out.push_str("TRUE"),
        ExprKind::Bool(false) => out.push_str("FALSE"),
        ExprKind::Number(n) => out.push_str(n),
        ExprKind::Str(s) => out.push_str(&escape_string(s)),
        ExprKind::Name(id) => out.push_str(&id.name),
        ExprKind::App { func, args } => {
            expr(out, func, POSTFIX);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, QUANT);
            }
            out.push(')');
        }
        ExprKind::Field { record, field } => {
            expr(out, record, POSTFIX);
            out.push('`');
            out.push_str(&field.name);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let l = binop_level(*op);
            let (lmin, rmin) = match op {
                BinOp::Iff | BinOp::Implies => (l + 1, l),
                _ if op.is_comparison() => (l + 1, l + 1),
                _ => (l, l + 1),
            };
            expr(out, lhs, lmin);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, rhs, rmin);
        }
        ExprKind::Unary { op: UnOp::Not, operand } => {
            out.push_str("NOT ");
            expr(out, operand, NOT);
        }
        ExprKind::Unary { op: UnOp::Neg, operand } => {
            out.push('-');
            // keep `- -x` from reading as a single token pair that looks odd
            if matches!(operand.kind, ExprKind::Unary { op: UnOp::Neg, .. }) {
                out.push(' ');
            }
            expr(out, operand, NEG);
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            out.push_str("IF ");
            expr(out, cond, QUANT);
            out.push_str(" THEN ");
            expr(out, then_branch, QUANT);
            out.push_str(" ELSE ");
            expr(out, else_branch, QUANT);
            out.push_str(" ENDIF");
        }
        ExprKind::Quant { quantifier, bindings: bs, body } => {
            let _ = write!(out, "{} (", quantifier.keyword());
            bindings(out, bs);
            out.push_str("): ");
            expr(out, body, QUANT);
        }
        ExprKind::Let { bindings: bs, body } => {
            out.push_str("LET ");
            for (i, b) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&b.name.name);
                if let Some(t) = &b.ty {
                    out.push_str(": ");
                    ty(out, t);
                }
                out.push_str(" = ");
                expr(out, &b.value, QUANT);
            }
            out.push_str(" IN ");
            expr(out, body, QUANT);
        }
        ExprKind::Record(fields) => {
            out.push_str("(# ");
            for (i, f) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} := ", f.name.name);
                expr(out, &f.value, QUANT);
            }
            out.push_str(" #)");
        }
    }
    if paren {
        out.push(')');
    }
}
