//! Language core for micro-PVS: syntax, typechecking, workspace index, prover and evaluator.

pub mod diagnostic;
pub mod eval;
pub mod prover;
pub mod syntax;
pub mod typecheck;
pub mod workspace;

pub use diagnostic::{Diagnostic, DiagnosticSource, Severity};
