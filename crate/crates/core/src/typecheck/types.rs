use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::ast::{BaseType, Binding, Expr, Ident, TypeExpr, TypeExprKind};
use crate::syntax::pretty::print_expr;
use crate::syntax::span::Span;

/// A structural type with aliases expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Type {
    Bool,
    Nat,
    Int,
    Real,
    String,
    /// An uninterpreted `T: TYPE`.
    Opaque { theory: std::string::String, name: std::string::String },
    Function { domain: Vec<Type>, range: Box<Type> },
    Record { fields: Vec<(std::string::String, Type)> },
    /// `{var: base | pred}`; `pred` is stored without spans.
    Subtype { base: Box<Type>, var: std::string::String, pred: Expr },
    /// Stands in for an expression that already has a diagnostic.
    Error,
}

impl Type {
    pub fn base(&self) -> &Type {
        match self {
            Type::Subtype { base, .. } => base.base(),
            t => t,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self.base(), Type::Error)
    }

    fn numeric_rank(&self) -> Option<u8> {
        match self.base() {
            Type::Nat => Some(0),
            Type::Int => Some(1),
            Type::Real => Some(2),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.numeric_rank().is_some()
    }

    pub fn is_bool(&self) -> bool {
        matches!(self.base(), Type::Bool | Type::Error)
    }

    pub fn from_base(b: BaseType) -> Type {
        match b {
            BaseType::Bool => Type::Bool,
            BaseType::Int => Type::Int,
            BaseType::Nat => Type::Nat,
            BaseType::Real => Type::Real,
            BaseType::String => Type::String,
        }
    }

    pub fn record_fields(&self) -> Option<&[(std::string::String, Type)]> {
        match self.base() {
            Type::Record { fields } => Some(fields),
            _ => None,
        }
    }

    /// Syntax that denotes this type, for printing binders.
    pub fn to_type_expr(&self) -> TypeExpr {
        let kind = match self {
            Type::Bool => TypeExprKind::Base(BaseType::Bool),
            Type::Nat => TypeExprKind::Base(BaseType::Nat),
            Type::Int => TypeExprKind::Base(BaseType::Int),
            Type::Real | Type::Error => TypeExprKind::Base(BaseType::Real),
            Type::String => TypeExprKind::Base(BaseType::String),
            Type::Opaque { name, .. } => TypeExprKind::Named(Ident::synthetic(name.clone())),
            Type::Function { domain, range } => TypeExprKind::Function {
                domain: domain.iter().map(Type::to_type_expr).collect(),
                range: Box::new(range.to_type_expr()),
            },
            Type::Record { fields } => TypeExprKind::Record(
                fields
                    .iter()
                    .map(|(n, t)| Binding { name: Ident::synthetic(n.clone()), ty: t.to_type_expr() })
                    .collect(),
            ),
            Type::Subtype { base, var, pred } => TypeExprKind::Subtype {
                var: Ident::synthetic(var.clone()),
                base: Box::new(base.to_type_expr()),
                pred: Box::new(pred.clone()),
            },
        };
        TypeExpr { kind, span: Span::DUMMY }
    }
}

/// Whether a value of type `actual` may be used where `expected` is required, ignoring
/// subtype predicates. `int` to `nat` is allowed; the caller emits the obligation.
pub fn assignable(actual: &Type, expected: &Type) -> bool {
    let (a, e) = (actual.base(), expected.base());
    if matches!(a, Type::Error) || matches!(e, Type::Error) {
        return true;
    }
    if let (Some(ra), Some(re)) = (a.numeric_rank(), e.numeric_rank()) {
        return ra <= re || (ra == 1 && re == 0);
    }
    match (a, e) {
        (Type::Bool, Type::Bool) | (Type::String, Type::String) => true,
        (Type::Opaque { theory: t1, name: n1 }, Type::Opaque { theory: t2, name: n2 }) => t1 == t2 && n1 == n2,
        (Type::Function { domain: d1, range: r1 }, Type::Function { domain: d2, range: r2 }) => {
            d1.len() == d2.len() && d1.iter().zip(d2).all(|(x, y)| equivalent(x, y)) && assignable(r1, r2)
        }
        (Type::Record { fields: f1 }, Type::Record { fields: f2 }) => {
            f1.len() == f2.len()
                && f2.iter().all(|(n, t2)| f1.iter().any(|(m, t1)| m == n && assignable(t1, t2)))
        }
        _ => false,
    }
}

/// Same underlying structure, ignoring predicates.
pub fn equivalent(a: &Type, b: &Type) -> bool {
    match (a.base(), b.base()) {
        (Type::Function { domain: d1, range: r1 }, Type::Function { domain: d2, range: r2 }) => {
            d1.len() == d2.len() && d1.iter().zip(d2).all(|(x, y)| equivalent(x, y)) && equivalent(r1, r2)
        }
        (Type::Record { fields: f1 }, Type::Record { fields: f2 }) => {
            f1.len() == f2.len() && f2.iter().all(|(n, t2)| f1.iter().any(|(m, t1)| m == n && equivalent(t1, t2)))
        }
        (x, y) => x == y || matches!(x, Type::Error) || matches!(y, Type::Error),
    }
}

/// Least common supertype, used for IF branches and equality operands.
pub fn join(a: &Type, b: &Type) -> Option<Type> {
    if a == b {
        return Some(a.clone());
    }
    if a.is_error() {
        return Some(b.clone());
    }
    if b.is_error() {
        return Some(a.clone());
    }
    if let (Some(ra), Some(rb)) = (a.numeric_rank(), b.numeric_rank()) {
        return Some(if ra >= rb { a.base().clone() } else { b.base().clone() });
    }
    if assignable(a, b) {
        Some(b.base().clone())
    } else if assignable(b, a) {
        Some(a.base().clone())
    } else {
        None
    }
}

/// Result type of `+` and `*`.
pub fn arith_join(a: &Type, b: &Type) -> Type {
    match (a.numeric_rank(), b.numeric_rank()) {
        (Some(0), Some(0)) => Type::Nat,
        (Some(x), Some(y)) if x.max(y) == 1 => Type::Int,
        (Some(_), Some(_)) => Type::Real,
        _ => Type::Error,
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("bool"),
            Type::Nat => f.write_str("nat"),
            Type::Int => f.write_str("int"),
            Type::Real => f.write_str("real"),
            Type::String => f.write_str("string"),
            Type::Opaque { name, .. } => f.write_str(name),
            Type::Error => f.write_str("<error>"),
            Type::Function { domain, range } => {
                f.write_str("[")?;
                for (i, d) in domain.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, " -> {range}]")
            }
            Type::Record { fields } => {
                f.write_str("[# ")?;
                for (i, (n, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n}: {t}")?;
                }
                f.write_str(" #]")
            }
            Type::Subtype { base, var, pred } => write!(f, "{{{var}: {base} | {}}}", print_expr(pred)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_tower() {
        assert!(assignable(&Type::Nat, &Type::Real));
        assert!(assignable(&Type::Int, &Type::Nat));
        assert!(!assignable(&Type::Real, &Type::Int));
        assert!(!assignable(&Type::Bool, &Type::Int));
        assert_eq!(join(&Type::Nat, &Type::Int), Some(Type::Int));
        assert_eq!(arith_join(&Type::Nat, &Type::Nat), Type::Nat);
        assert_eq!(arith_join(&Type::Nat, &Type::Real), Type::Real);
    }

    #[test]
    fn display_forms() {
        let r = Type::Record { fields: vec![("x".into(), Type::Int), ("y".into(), Type::Int)] };
        assert_eq!(r.to_string(), "[# x: int, y: int #]");
        let f = Type::Function { domain: vec![Type::Int], range: Box::new(Type::Bool) };
        assert_eq!(f.to_string(), "[int -> bool]");
    }
}
