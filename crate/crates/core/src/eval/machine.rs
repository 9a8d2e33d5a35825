//! Explicit-stack evaluator: deep recursion in the evaluated program never grows the native
//! stack, and calls in tail position consume no continuation frames.

use std::sync::atomic::Ordering;
use std::sync::Arc;

use super::value::{apply_binop, apply_unop, Closure, Value};
use super::{EvalError, EvalOptions};
use crate::syntax::ast::{BinOp, Expr, ExprKind, FieldInit, LetBinding, UnOp};
use crate::syntax::span::Span;
use crate::typecheck::{DeclClass, Resolution, TypecheckResult, TypedDecl};

const CANCEL_CHECK_INTERVAL: u64 = 1024;

#[derive(Debug)]
struct EnvNode {
    name: String,
    value: Value,
    next: Env,
}

type Env = Option<Arc<EnvNode>>;

fn extend(env: &Env, name: &str, value: Value) -> Env {
    Some(Arc::new(EnvNode { name: name.to_owned(), value, next: env.clone() }))
}

fn lookup(mut env: &Env, name: &str) -> Option<Value> {
    while let Some(node) = env {
        if node.name == name {
            return Some(node.value.clone());
        }
        env = &node.next;
    }
    None
}

/// Where names in the expression under evaluation were resolved.
type Res<'a> = &'a [(Span, Resolution)];

enum Frame<'a> {
    BinLeft { op: BinOp, rhs: &'a Expr, env: Env, res: Res<'a> },
    BinRight { op: BinOp, lhs: Value },
    Unary(UnOp),
    If { then_branch: &'a Expr, else_branch: &'a Expr, env: Env, res: Res<'a> },
    Args { callee: &'a TypedDecl, done: Vec<Value>, rest: &'a [Expr], env: Env, res: Res<'a> },
    Callee { args: &'a [Expr], env: Env, res: Res<'a> },
    Let { name: &'a str, rest: &'a [LetBinding], body: &'a Expr, env: Env, res: Res<'a> },
    Record { done: Vec<(String, Value)>, name: &'a str, rest: &'a [FieldInit], env: Env, res: Res<'a> },
    Field(&'a str),
}

enum Control<'a> {
    Eval(&'a Expr, Env, Res<'a>),
    Return(Value),
}

struct Machine<'a> {
    root: &'a TypecheckResult,
    stack: Vec<Frame<'a>>,
}

pub(super) fn run(
    root: &TypecheckResult,
    expr: &Expr,
    resolutions: &[(Span, Resolution)],
    opts: &EvalOptions,
) -> Result<Value, EvalError> {
    let mut m = Machine { root, stack: Vec::new() };
    let mut control = Control::Eval(expr, None, resolutions);
    let mut steps: u64 = 0;
    loop {
        steps += 1;
        if steps > opts.fuel {
            return Err(EvalError::FuelExhausted(opts.fuel));
        }
        if steps % CANCEL_CHECK_INTERVAL == 1 {
            if let Some(flag) = &opts.cancel {
                if flag.load(Ordering::Relaxed) {
                    return Err(EvalError::Cancelled);
                }
            }
        }
        control = match control {
            Control::Eval(e, env, res) => m.eval(e, env, res)?,
            Control::Return(v) => match m.stack.pop() {
                None => return Ok(v),
                Some(frame) => m.resume(frame, v)?,
            },
        };
    }
}

impl<'a> Machine<'a> {
    fn resolutions_of(&self, theory: &str) -> Res<'a> {
        self.root.theory_result(theory).map_or(&[], |t| &t.resolutions[..])
    }

    /// The global declaration a name occurrence refers to.
    fn global(&self, name: &str, span: Span, res: Res<'a>, arity: Option<usize>) -> Option<&'a TypedDecl> {
        if let Ok(i) = res.binary_search_by(|(s, _)| s.cmp(&span)) {
            if let Resolution::Global { decl } = &res[i].1 {
                return self.root.decl(decl);
            }
        }
        let root: &'a TypecheckResult = self.root;
        let mut cands = root.lookup(name).into_iter();
        match arity {
            Some(n) => cands.find(|d| d.arity() == Some(n)),
            None => cands.find(|d| d.is_value()),
        }
    }

    fn eval(&mut self, e: &'a Expr, env: Env, res: Res<'a>) -> Result<Control<'a>, EvalError> {
        Ok(match &e.kind {
            ExprKind::Bool(b) => Control::Return(Value::Bool(*b)),
            ExprKind::Number(n) => Control::Return(
                Value::from_literal(n).ok_or_else(|| EvalError::Type(format!("bad numeral '{n}'")))?,
            ),
            ExprKind::Str(s) => Control::Return(Value::Str(s.clone())),
            ExprKind::Name(id) => {
                if let Some(v) = lookup(&env, &id.name) {
                    return Ok(Control::Return(v));
                }
                let d = self
                    .global(&id.name, id.span, res, None)
                    .ok_or_else(|| EvalError::Type(format!("unknown name '{}'", id.name)))?;
                self.global_value(d)?
            }
            ExprKind::App { func, args } => {
                let direct = match &func.kind {
                    ExprKind::Name(id) if lookup(&env, &id.name).is_none() => {
                        self.global(&id.name, id.span, res, Some(args.len())).filter(|d| d.class == DeclClass::Function)
                    }
                    _ => None,
                };
                match direct {
                    Some(callee) => {
                        self.stack.push(Frame::Args { callee, done: Vec::new(), rest: &args[1..], env: env.clone(), res });
                        Control::Eval(&args[0], env, res)
                    }
                    None => {
                        self.stack.push(Frame::Callee { args, env: env.clone(), res });
                        Control::Eval(func, env, res)
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.stack.push(Frame::BinLeft { op: *op, rhs, env: env.clone(), res });
                Control::Eval(lhs, env, res)
            }
            ExprKind::Unary { op, operand } => {
                self.stack.push(Frame::Unary(*op));
                Control::Eval(operand, env, res)
            }
            ExprKind::If { cond, then_branch, else_branch } => {
                self.stack.push(Frame::If { then_branch, else_branch, env: env.clone(), res });
                Control::Eval(cond, env, res)
            }
            ExprKind::Quant { quantifier, .. } => {
                return Err(EvalError::NonExecutable(format!("{} quantifier", quantifier.keyword())));
            }
            ExprKind::Let { bindings, body } => {
                let first = &bindings[0];
                self.stack.push(Frame::Let { name: &first.name.name, rest: &bindings[1..], body, env: env.clone(), res });
                Control::Eval(&first.value, env, res)
            }
            ExprKind::Record(fields) => {
                let first = &fields[0];
                self.stack.push(Frame::Record {
                    done: Vec::with_capacity(fields.len()),
                    name: &first.name.name,
                    rest: &fields[1..],
                    env: env.clone(),
                    res,
                });
                Control::Eval(&first.value, env, res)
            }
            ExprKind::Field { record, field } => {
                self.stack.push(Frame::Field(&field.name));
                Control::Eval(record, env, res)
            }
        })
    }

    fn global_value(&self, d: &'a TypedDecl) -> Result<Control<'a>, EvalError> {
        match d.class {
            DeclClass::Function => Ok(Control::Return(Value::Closure(Arc::new(Closure {
                name: d.name.clone(),
                params: d.params.iter().map(|p| p.0.clone()).collect(),
                decl: d.decl_ref(),
            })))),
            DeclClass::Const => match d.body() {
                Some(body) => Ok(Control::Eval(body, None, self.resolutions_of(&d.theory))),
                None => Err(EvalError::Uninterpreted(d.name.clone())),
            },
            DeclClass::Type | DeclClass::Formula => {
                Err(EvalError::NonExecutable(format!("'{}' is not a value", d.name)))
            }
        }
    }

    fn call(&self, callee: &'a TypedDecl, args: Vec<Value>) -> Result<Control<'a>, EvalError> {
        let body = callee.body().ok_or_else(|| EvalError::Uninterpreted(callee.name.clone()))?;
        let mut env: Env = None;
        for ((name, _), v) in callee.params.iter().zip(args) {
            env = extend(&env, name, v);
        }
        Ok(Control::Eval(body, env, self.resolutions_of(&callee.theory)))
    }

    fn resume(&mut self, frame: Frame<'a>, v: Value) -> Result<Control<'a>, EvalError> {
        Ok(match frame {
            Frame::BinLeft { op, rhs, env, res } => {
                let short = match (op, v.as_bool()) {
                    (BinOp::And, Some(false)) => Some(false),
                    (BinOp::Or, Some(true)) => Some(true),
                    (BinOp::Implies, Some(false)) => Some(true),
                    _ => None,
                };
                match short {
                    Some(b) => Control::Return(Value::Bool(b)),
                    None => {
                        self.stack.push(Frame::BinRight { op, lhs: v });
                        Control::Eval(rhs, env, res)
                    }
                }
            }
            Frame::BinRight { op, lhs } => Control::Return(apply_binop(op, &lhs, &v)?),
            Frame::Unary(op) => Control::Return(apply_unop(op, &v)?),
            Frame::If { then_branch, else_branch, env, res } => match v.as_bool() {
                Some(true) => Control::Eval(then_branch, env, res),
                Some(false) => Control::Eval(else_branch, env, res),
                None => return Err(EvalError::Type("IF condition is not a boolean".into())),
            },
            Frame::Args { callee, mut done, rest, env, res } => {
                done.push(v);
                match rest.split_first() {
                    Some((next, rest)) => {
                        self.stack.push(Frame::Args { callee, done, rest, env: env.clone(), res });
                        Control::Eval(next, env, res)
                    }
                    None => self.call(callee, done)?,
                }
            }
            Frame::Callee { args, env, res } => {
                let Value::Closure(c) = v else {
                    return Err(EvalError::Type(format!("cannot apply a {}", v.type_name())));
                };
                let callee =
                    self.root.decl(&c.decl).ok_or_else(|| EvalError::Uninterpreted(c.name.clone()))?;
                self.stack.push(Frame::Args { callee, done: Vec::new(), rest: &args[1..], env: env.clone(), res });
                Control::Eval(&args[0], env, res)
            }
            Frame::Let { name, rest, body, env, res } => {
                let env = extend(&env, name, v);
                match rest.split_first() {
                    Some((next, rest)) => {
                        self.stack.push(Frame::Let { name: &next.name.name, rest, body, env: env.clone(), res });
                        Control::Eval(&next.value, env, res)
                    }
                    None => Control::Eval(body, env, res),
                }
            }
            Frame::Record { mut done, name, rest, env, res } => {
                done.push((name.to_owned(), v));
                match rest.split_first() {
                    Some((next, rest)) => {
                        self.stack.push(Frame::Record { done, name: &next.name.name, rest, env: env.clone(), res });
                        Control::Eval(&next.value, env, res)
                    }
                    None => Control::Return(Value::Record(done)),
                }
            }
            Frame::Field(name) => match v {
                Value::Record(fields) => {
                    let found = fields.into_iter().find(|(n, _)| n == name).map(|(_, v)| v);
                    Control::Return(found.ok_or_else(|| EvalError::Type(format!("no field '{name}'")))?)
                }
                other => return Err(EvalError::Type(format!("field access on a {}", other.type_name()))),
            },
        })
    }
}
