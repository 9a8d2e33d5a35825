use serde::{Deserialize, Serialize};

use super::span::Span;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }

    pub fn synthetic(name: impl Into<String>) -> Self {
        Ident { name: name.into(), span: Span::DUMMY }
    }
}

/// A parsed `.pvs` file: one or more theories.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceFile {
    pub theories: Vec<Theory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    pub name: Ident,
    pub importings: Vec<Ident>,
    pub decls: Vec<Decl>,
    pub span: Span,
}

impl Theory {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name.name == name)
    }

    pub fn formulas(&self) -> impl Iterator<Item = (&Decl, FormulaKind, &Expr)> {
        self.decls.iter().filter_map(|d| match &d.kind {
            DeclKind::Formula { kind, body } => Some((d, *kind, body)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decl {
    pub name: Ident,
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FormulaKind {
    Theorem,
    Lemma,
    Conjecture,
}

impl FormulaKind {
    pub fn keyword(self) -> &'static str {
        match self {
            FormulaKind::Theorem => "THEOREM",
            FormulaKind::Lemma => "LEMMA",
            FormulaKind::Conjecture => "CONJECTURE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DeclKind {
    Type { definition: Option<TypeExpr> },
    Const { ty: TypeExpr, body: Option<Expr> },
    Fun { params: Vec<Binding>, ret: TypeExpr, body: Expr, recursive: bool },
    Formula { kind: FormulaKind, body: Expr },
}

impl DeclKind {
    pub fn label(&self) -> &'static str {
        match self {
            DeclKind::Type { .. } => "type",
            DeclKind::Const { .. } => "constant",
            DeclKind::Fun { .. } => "function",
            DeclKind::Formula { kind: FormulaKind::Theorem, .. } => "theorem",
            DeclKind::Formula { kind: FormulaKind::Lemma, .. } => "lemma",
            DeclKind::Formula { kind: FormulaKind::Conjecture, .. } => "conjecture",
        }
    }
}

/// `name: type`, as in parameters, quantifier binders and record fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub name: Ident,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseType {
    Bool,
    Int,
    Nat,
    Real,
    String,
}

impl BaseType {
    pub fn name(self) -> &'static str {
        match self {
            BaseType::Bool => "bool",
            BaseType::Int => "int",
            BaseType::Nat => "nat",
            BaseType::Real => "real",
            BaseType::String => "string",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "bool" => BaseType::Bool,
            "int" => BaseType::Int,
            "nat" => BaseType::Nat,
            "real" => BaseType::Real,
            "string" => BaseType::String,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TypeExprKind {
    Base(BaseType),
    Named(Ident),
    Function { domain: Vec<TypeExpr>, range: Box<TypeExpr> },
    Record(Vec<Binding>),
    Subtype { var: Ident, base: Box<TypeExpr>, pred: Box<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Iff,
    Implies,
    Or,
    And,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Iff => "IFF",
            BinOp::Implies => "IMPLIES",
            BinOp::Or => "OR",
            BinOp::And => "AND",
            BinOp::Eq => "=",
            BinOp::Neq => "/=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::Iff | BinOp::Implies | BinOp::Or | BinOp::And)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "FORALL",
            Quantifier::Exists => "EXISTS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetBinding {
    pub name: Ident,
    pub ty: Option<TypeExpr>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInit {
    pub name: Ident,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Bool(bool),
    /// Numeric literal text as written: digits with an optional fraction.
    Number(String),
    Str(String),
    Name(Ident),
    App { func: Box<Expr>, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    If { cond: Box<Expr>, then_branch: Box<Expr>, else_branch: Box<Expr> },
    Quant { quantifier: Quantifier, bindings: Vec<Binding>, body: Box<Expr> },
    Let { bindings: Vec<LetBinding>, body: Box<Expr> },
    Record(Vec<FieldInit>),
    Field { record: Box<Expr>, field: Ident },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn synthetic(kind: ExprKind) -> Self {
        Expr { kind, span: Span::DUMMY }
    }

    pub fn name(name: impl Into<String>) -> Self {
        Expr::synthetic(ExprKind::Name(Ident::synthetic(name)))
    }

    pub fn boolean(b: bool) -> Self {
        Expr::synthetic(ExprKind::Bool(b))
    }

    pub fn number(n: impl ToString) -> Self {
        Expr::synthetic(ExprKind::Number(n.to_string()))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::synthetic(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    pub fn not(operand: Expr) -> Self {
        Expr::synthetic(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) })
    }

    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(id) => Some(&id.name),
            _ => None,
        }
    }

    /// Immediate subexpressions in source order (types inside binders are not included).
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Bool(_) | ExprKind::Number(_) | ExprKind::Str(_) | ExprKind::Name(_) => vec![],
            ExprKind::App { func, args } => std::iter::once(&**func).chain(args.iter()).collect(),
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::If { cond, then_branch, else_branch } => vec![cond, then_branch, else_branch],
            ExprKind::Quant { body, .. } => vec![body],
            ExprKind::Let { bindings, body } => {
                bindings.iter().map(|b| &b.value).chain(std::iter::once(&**body)).collect()
            }
            ExprKind::Record(fields) => fields.iter().map(|f| &f.value).collect(),
            ExprKind::Field { record, .. } => vec![record],
        }
    }
}
