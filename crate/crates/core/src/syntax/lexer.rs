use serde::{Deserialize, Serialize};

use super::span::{LineIndex, Range, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    String,
    Operator,
    Backtick,
    Punctuation,
    Comment,
    /// A character the lexer does not recognize. Always paired with a diagnostic.
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub range: Range,
    pub span: Span,
}

impl Token {
    pub fn is_trivia(&self) -> bool {
        self.kind == TokenKind::Comment
    }

    /// True for a keyword token spelling `kw` (keywords are case-insensitive).
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.lexeme.eq_ignore_ascii_case(kw)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.kind, TokenKind::Punctuation | TokenKind::Operator | TokenKind::Backtick)
            && self.lexeme == p
    }
}

pub const KEYWORDS: &[&str] = &[
    "THEORY", "BEGIN", "END", "IMPORTING", "TYPE", "THEOREM", "LEMMA", "CONJECTURE", "IF", "THEN",
    "ELSE", "ENDIF", "FORALL", "EXISTS", "LET", "IN", "AND", "OR", "NOT", "IMPLIES", "IFF", "TRUE",
    "FALSE", "RECURSIVE", "MEASURE",
];

pub const BASE_TYPE_NAMES: &[&str] = &["bool", "int", "nat", "real", "string"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().chain(BASE_TYPE_NAMES).any(|k| k.eq_ignore_ascii_case(word))
}

// Longest first so that maximal munch falls out of a linear scan.
const SYMBOLS: &[(&str, TokenKind)] = &[
    ("<=>", TokenKind::Operator),
    ("[#", TokenKind::Punctuation),
    ("#]", TokenKind::Punctuation),
    ("(#", TokenKind::Punctuation),
    ("#)", TokenKind::Punctuation),
    (":=", TokenKind::Punctuation),
    ("/=", TokenKind::Operator),
    ("<=", TokenKind::Operator),
    (">=", TokenKind::Operator),
    ("=>", TokenKind::Operator),
    ("->", TokenKind::Operator),
    ("+", TokenKind::Operator),
    ("-", TokenKind::Operator),
    ("*", TokenKind::Operator),
    ("/", TokenKind::Operator),
    ("=", TokenKind::Operator),
    ("<", TokenKind::Operator),
    (">", TokenKind::Operator),
    ("&", TokenKind::Operator),
    ("`", TokenKind::Backtick),
    ("(", TokenKind::Punctuation),
    (")", TokenKind::Punctuation),
    ("[", TokenKind::Punctuation),
    ("]", TokenKind::Punctuation),
    ("{", TokenKind::Punctuation),
    ("}", TokenKind::Punctuation),
    (",", TokenKind::Punctuation),
    (":", TokenKind::Punctuation),
    (";", TokenKind::Punctuation),
    ("|", TokenKind::Punctuation),
    (".", TokenKind::Punctuation),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

/// Token stream plus lexical problems. Whitespace is the only text not covered by a token.
#[derive(Debug, Clone)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    pub errors: Vec<LexError>,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    lex(text, &LineIndex::new(text)).tokens
}

pub fn lex(text: &str, index: &LineIndex) -> Lexed {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c == b'%' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            TokenKind::Comment
        } else if c.is_ascii_alphabetic() {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'?') {
                i += 1;
            }
            // skolem-style suffix: x!1
            if i + 1 < bytes.len() && bytes[i] == b'!' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if is_keyword(&text[start..i]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            TokenKind::Number
        } else if c == b'"' {
            i += 1;
            let mut closed = false;
            while i < bytes.len() && bytes[i] != b'\n' {
                match bytes[i] {
                    b'\\' if i + 1 < bytes.len() && bytes[i + 1] != b'\n' => i += 2,
                    b'"' => {
                        i += 1;
                        closed = true;
                        break;
                    }
                    _ => i += 1,
                }
            }
            // an escape may have stepped into the middle of a multi-byte char
            while !text.is_char_boundary(i) {
                i += 1;
            }
            if !closed {
                errors.push(LexError { span: Span::new(start, i), message: "unterminated string literal".into() });
            }
            TokenKind::String
        } else if let Some((sym, kind)) = SYMBOLS.iter().find(|(s, _)| text[i..].starts_with(s)) {
            i += sym.len();
            *kind
        } else {
            let ch = text[i..].chars().next().expect("non-empty remainder");
            i += ch.len_utf8();
            errors.push(LexError { span: Span::new(start, i), message: format!("unexpected character '{}'", ch.escape_debug()) });
            TokenKind::Error
        };
        let span = Span::new(start, i);
        tokens.push(Token { kind, lexeme: text[start..i].to_owned(), range: index.range(span), span });
    }
    Lexed { tokens, errors }
}

/// Decodes the contents of a string literal lexeme, quotes included.
pub fn unescape_string(lexeme: &str) -> String {
    let inner = lexeme.strip_prefix('"').unwrap_or(lexeme);
    let inner = inner.strip_suffix('"').unwrap_or(inner);
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn is_identifier(name: &str) -> bool {
    let toks = tokenize(name);
    toks.len() == 1 && toks[0].kind == TokenKind::Identifier && toks[0].lexeme == name
}
