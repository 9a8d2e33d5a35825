//! Name resolution, type inference and proof obligations.

pub mod check;
pub mod prelude;
pub mod result;
pub mod tcc;
pub mod types;

pub use check::{check_expr_in, resolve_type_in, typecheck, CheckedExpr, ImportResolver};
pub use prelude::{prelude, prelude_parse, PRELUDE_THEORY, PRELUDE_URI};
pub use result::{DeclClass, DeclRef, LocalBinder, Resolution, TypecheckResult, TypedDecl};
pub use tcc::{Tcc, TccKind, TccStatus};
pub use types::Type;
