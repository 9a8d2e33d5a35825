//! Evaluation of ground expressions against typechecked theories.

pub mod ground;
mod machine;
pub mod value;

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::parser::parse_expr_text;
use crate::syntax::span::LineIndex;
use crate::typecheck::{check_expr_in, TypecheckResult};
pub use ground::{eval_ground, ground_bool};
pub use value::Value;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("fuel exhausted after {0} steps (the evaluation may not terminate)")]
    FuelExhausted(u64),
    #[error("not executable: {0}")]
    NonExecutable(String),
    #[error("'{0}' has no definition")]
    Uninterpreted(String),
    #[error("evaluation cancelled")]
    Cancelled,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub fuel: u64,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { fuel: DEFAULT_FUEL, cancel: None }
    }
}

/// Parses, typechecks and evaluates `text` in the scope of `theory`.
pub fn evaluate(theory: &TypecheckResult, text: &str, opts: &EvalOptions) -> Result<Value, EvalError> {
    let expr = parse_expr_text(text).map_err(|d| {
        EvalError::Parse(d.first().map(|d| d.message.clone()).unwrap_or_else(|| "invalid expression".into()))
    })?;
    let checked = check_expr_in(theory, &expr, &LineIndex::new(text), &[], None);
    if let Some(d) = checked.diagnostics.iter().find(|d| d.is_error()) {
        return Err(EvalError::Type(d.message.clone()));
    }
    machine::run(theory, &expr, &checked.resolutions, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_source;
    use crate::typecheck::typecheck;

    fn theory(src: &str) -> TypecheckResult {
        let text = format!("t: THEORY\nBEGIN\n{src}\nEND t\n");
        let p = parse_source(&text);
        assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
        let r = typecheck(&p.ast.theories[0], &p.line_index, &|_: &str| None);
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        r
    }

    fn eval(th: &TypecheckResult, text: &str) -> Result<String, EvalError> {
        evaluate(th, text, &EvalOptions::default()).map(|v| v.to_string())
    }

    const FACT: &str = "  fact(n: nat): nat = IF n = 0 THEN 1 ELSE n * fact(n - 1) ENDIF";

    #[test]
    fn arithmetic() {
        let th = theory("");
        assert_eq!(eval(&th, "1 + 2 * 3").unwrap(), "7");
        assert_eq!(eval(&th, "7 / 2").unwrap(), "7/2");
        assert_eq!(eval(&th, "abs(-3) + max(1, 2)").unwrap(), "5");
        assert_eq!(eval(&th, "1 / (2 - 2)"), Err(EvalError::DivisionByZero));
        assert_eq!(eval(&th, "xor(TRUE, FALSE)").unwrap(), "TRUE");
    }

    #[test]
    fn recursion_against_iterative_oracle() {
        let th = theory(FACT);
        for n in 0..25u32 {
            let expected: num_bigint::BigInt = (1..=n).map(num_bigint::BigInt::from).product();
            assert_eq!(eval(&th, &format!("fact({n})")).unwrap(), expected.to_string());
        }
    }

    #[test]
    fn divergence_exhausts_fuel() {
        let th = theory("  loop(n: int): int = loop(n)");
        let opts = EvalOptions { fuel: 10_000, cancel: None };
        assert_eq!(evaluate(&th, "loop(0)", &opts), Err(EvalError::FuelExhausted(10_000)));
    }

    #[test]
    fn deep_non_tail_recursion_does_not_overflow() {
        let th = theory("  sum(n: nat): nat = IF n = 0 THEN 0 ELSE n + sum(n - 1) ENDIF");
        let opts = EvalOptions { fuel: 50_000_000, cancel: None };
        assert_eq!(evaluate(&th, "sum(100000)", &opts).unwrap().to_string(), "5000050000");
    }

    #[test]
    fn quantifiers_are_not_executable() {
        let th = theory("");
        assert!(matches!(eval(&th, "FORALL (x: int): x = x"), Err(EvalError::NonExecutable(_))));
    }

    #[test]
    fn records_lets_and_constants() {
        let th = theory("  p: [# x: int, y: int #] = (# x := 3, y := 4 #)\n  c: int = p`x * p`y\n  sq(v: int): int = v * v\n  u: int");
        assert_eq!(eval(&th, "LET a = c, b = a + 1 IN b").unwrap(), "13");
        assert_eq!(eval(&th, "p").unwrap(), "(# x := 3, y := 4 #)");
        assert_eq!(eval(&th, "sq(sq(2))").unwrap(), "16");
        assert_eq!(eval(&th, "u + 1"), Err(EvalError::Uninterpreted("u".into())));
        assert!(matches!(eval(&th, "1 + TRUE"), Err(EvalError::Type(_))));
        assert!(matches!(eval(&th, "1 +"), Err(EvalError::Parse(_))));
    }

    #[test]
    fn functions_as_values() {
        let th = theory("  twice(f: [int -> int], x: int): int = f(f(x))\n  inc(x: int): int = x + 1");
        assert_eq!(eval(&th, "twice(inc, 5)").unwrap(), "7");
        assert_eq!(eval(&th, "inc").unwrap(), "<function inc>");
    }

    #[test]
    fn fuel_is_monotone() {
        let th = theory(FACT);
        let at = |fuel| evaluate(&th, "fact(8)", &EvalOptions { fuel, cancel: None });
        let first_ok = (1..10_000u64).find(|f| at(*f).is_ok()).unwrap();
        for f in [first_ok, first_ok + 1, first_ok * 3] {
            assert_eq!(at(f).unwrap().to_string(), "40320");
        }
        assert!(at(first_ok - 1).is_err());
    }

    #[test]
    fn cancellation_flag_stops_evaluation() {
        let th = theory("  loop(n: int): int = loop(n)");
        let flag = Arc::new(AtomicBool::new(true));
        let opts = EvalOptions { fuel: u64::MAX, cancel: Some(flag) };
        assert_eq!(evaluate(&th, "loop(0)", &opts), Err(EvalError::Cancelled));
    }
}
