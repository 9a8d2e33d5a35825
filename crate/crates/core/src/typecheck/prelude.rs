use std::sync::{Arc, OnceLock};

use super::check::typecheck;
use super::result::TypecheckResult;
use crate::syntax::parser::{parse_source, ParseResult};

pub const PRELUDE_THEORY: &str = "prelude";
pub const PRELUDE_URI: &str = "pvs:///prelude.pvs";
pub const PRELUDE_TEXT: &str = include_str!("prelude.pvs");

pub fn prelude_parse() -> &'static ParseResult {
    static PARSE: OnceLock<ParseResult> = OnceLock::new();
    PARSE.get_or_init(|| parse_source(PRELUDE_TEXT))
}

pub fn prelude() -> &'static Arc<TypecheckResult> {
    static RESULT: OnceLock<Arc<TypecheckResult>> = OnceLock::new();
    RESULT.get_or_init(|| {
        let parsed = prelude_parse();
        let theory = &parsed.ast.theories[0];
        Arc::new(typecheck(theory, &parsed.line_index, &|_: &str| None))
    })
}
