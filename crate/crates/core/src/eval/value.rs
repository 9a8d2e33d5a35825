use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::EvalError;
use crate::syntax::ast::{BinOp, UnOp};
use crate::syntax::lexer::escape_string;
use crate::typecheck::DeclRef;

/// A reference to a named function, the only kind of function value the language has.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub name: String,
    pub params: Vec<String>,
    pub decl: DeclRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    /// Always has a denominator other than one.
    Rational(BigRational),
    Str(String),
    Record(Vec<(String, Value)>),
    Closure(Arc<Closure>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn from_rational(r: BigRational) -> Value {
        if r.is_integer() {
            Value::Int(r.to_integer())
        } else {
            Value::Rational(r)
        }
    }

    /// Parses numeric literal text such as `42` or `1.25`.
    pub fn from_literal(text: &str) -> Option<Value> {
        match text.split_once('.') {
            None => text.parse::<BigInt>().ok().map(Value::Int),
            Some((whole, frac)) => {
                let digits: BigInt = format!("{whole}{frac}").parse().ok()?;
                let denom = BigInt::from(10u32).pow(frac.len() as u32);
                Some(Value::from_rational(BigRational::new(digits, denom)))
            }
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(i) => Some(BigRational::from_integer(i.clone())),
            Value::Rational(r) => Some(r.clone()),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Int(_) => "integer",
            Value::Rational(_) => "rational",
            Value::Str(_) => "string",
            Value::Record(_) => "record",
            Value::Closure(_) => "function",
        }
    }
}

fn numbers(op: BinOp, a: &Value, b: &Value) -> Result<(BigRational, BigRational), EvalError> {
    match (a.as_rational(), b.as_rational()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(EvalError::Type(format!(
            "operator {} needs numbers, found {} and {}",
            op.symbol(),
            a.type_name(),
            b.type_name()
        ))),
    }
}

fn equal(a: &Value, b: &Value) -> Result<bool, EvalError> {
    match (a, b) {
        (Value::Closure(_), _) | (_, Value::Closure(_)) => {
            Err(EvalError::NonExecutable("equality of functions".into()))
        }
        (Value::Record(x), Value::Record(y)) => {
            if x.len() != y.len() {
                return Ok(false);
            }
            for (n, v) in x {
                match y.iter().find(|(m, _)| m == n) {
                    Some((_, w)) if equal(v, w)? => {}
                    _ => return Ok(false),
                }
            }
            Ok(true)
        }
        _ => Ok(a == b),
    }
}

/// Strict binary operators. The logical connectives take already-evaluated operands.
pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    let logic = |f: fn(bool, bool) -> bool| match (a.as_bool(), b.as_bool()) {
        (Some(x), Some(y)) => Ok(Value::Bool(f(x, y))),
        _ => Err(EvalError::Type(format!("operator {} needs booleans", op.symbol()))),
    };
    Ok(match op {
        BinOp::And => logic(|x, y| x && y)?,
        BinOp::Or => logic(|x, y| x || y)?,
        BinOp::Implies => logic(|x, y| !x || y)?,
        BinOp::Iff => logic(|x, y| x == y)?,
        BinOp::Eq => Value::Bool(equal(a, b)?),
        BinOp::Neq => Value::Bool(!equal(a, b)?),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let (x, y) = numbers(op, a, b)?;
            Value::Bool(match op {
                BinOp::Lt => x < y,
                BinOp::Le => x <= y,
                BinOp::Gt => x > y,
                _ => x >= y,
            })
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
            if let (Value::Int(x), Value::Int(y)) = (a, b) {
                match op {
                    BinOp::Add => return Ok(Value::Int(x + y)),
                    BinOp::Sub => return Ok(Value::Int(x - y)),
                    BinOp::Mul => return Ok(Value::Int(x * y)),
                    _ => {}
                }
            }
            let (x, y) = numbers(op, a, b)?;
            Value::from_rational(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                _ => {
                    if y.is_zero() {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
            })
        }
    })
}

pub fn apply_unop(op: UnOp, v: &Value) -> Result<Value, EvalError> {
    match (op, v) {
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
        (UnOp::Neg, Value::Rational(r)) => Ok(Value::Rational(-r)),
        (UnOp::Not, _) => Err(EvalError::Type(format!("NOT needs a boolean, found {}", v.type_name()))),
        (UnOp::Neg, _) => Err(EvalError::Type(format!("negation needs a number, found {}", v.type_name()))),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Rational(r) => {
                if r.is_negative() {
                    write!(f, "-{}/{}", -r.numer(), r.denom())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Str(s) => f.write_str(&escape_string(s)),
            Value::Record(fields) => {
                f.write_str("(# ")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} := {v}")?;
                }
                f.write_str(" #)")
            }
            Value::Closure(c) => write!(f, "<function {}>", c.name),
        }
    }
}
