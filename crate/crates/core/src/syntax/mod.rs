pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod span;
pub mod visit;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_expr_text, parse_source, parse_theory_file, ParseResult};
pub use pretty::{print_decl, print_expr, print_source, print_theory, print_type};
pub use span::{LineIndex, Position, Range, Span};
pub use visit::EraseSpans;
