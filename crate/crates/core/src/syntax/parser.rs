//! Recursive-descent parser for micro-PVS.
//!
//! Errors inside a declaration abandon that declaration and resynchronize at the next
//! declaration head: a line-initial identifier followed by `:`, `,` or `(`, or at `END` /
//! `IMPORTING`. Everything parsed before the failure point is kept.

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use super::span::{LineIndex, Span};
use super::visit::mentions_free;
use crate::diagnostic::{Diagnostic, DiagnosticSource};

/// Deepest expression/type nesting accepted before the parser gives up on a declaration.
pub const MAX_NESTING: usize = 200;

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub ast: SourceFile,
    pub diagnostics: Vec<Diagnostic>,
    /// Every token, comments included.
    pub tokens: Vec<Token>,
    pub line_index: LineIndex,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn theory(&self, name: &str) -> Option<&Theory> {
        self.ast.theories.iter().find(|t| t.name.name == name)
    }
}

#[derive(Debug, Clone)]
struct ParseError {
    span: Span,
    message: String,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse_theory_file(_uri: &str, text: &str) -> ParseResult {
    parse_source(text)
}

pub fn parse_source(text: &str) -> ParseResult {
    let line_index = LineIndex::new(text);
    let lexed = lex(text, &line_index);
    let mut diagnostics: Vec<Diagnostic> = lexed
        .errors
        .iter()
        .map(|e| Diagnostic::error(&line_index, e.span, DiagnosticSource::Parser, e.message.clone()))
        .collect();
    let significant: Vec<Token> = lexed
        .tokens
        .iter()
        .filter(|t| !matches!(t.kind, TokenKind::Comment | TokenKind::Error))
        .cloned()
        .collect();
    let mut parser = Parser::new(&significant, text.len());
    let ast = parser.parse_file();
    diagnostics.extend(
        parser
            .errors
            .into_iter()
            .map(|e| Diagnostic::error(&line_index, e.span, DiagnosticSource::Parser, e.message)),
    );
    diagnostics.sort_by_key(|d| (d.span.start, d.span.end));
    ParseResult { ast, diagnostics, tokens: lexed.tokens, line_index }
}

/// Parses a standalone expression; the whole text must be consumed.
pub fn parse_expr_text(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let line_index = LineIndex::new(text);
    let lexed = lex(text, &line_index);
    let to_diag = |span, msg: String| Diagnostic::error(&line_index, span, DiagnosticSource::Parser, msg);
    if let Some(e) = lexed.errors.first() {
        return Err(vec![to_diag(e.span, e.message.clone())]);
    }
    let toks: Vec<Token> = lexed.tokens.into_iter().filter(|t| !t.is_trivia()).collect();
    let mut p = Parser::new(&toks, text.len());
    let result = p.parse_expr().and_then(|e| {
        if p.at_eof() {
            Ok(e)
        } else {
            Err(p.unexpected("end of expression"))
        }
    });
    result.map_err(|e| vec![to_diag(e.span, e.message)])
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: Span,
    depth: usize,
    errors: Vec<ParseError>,
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token], len: usize) -> Self {
        Parser { tokens, pos: 0, eof: Span::new(len, len), depth: 0, errors: Vec::new() }
    }

    // ----- token plumbing -----

    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn cur_span(&self) -> Span {
        self.peek().map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            Span::DUMMY
        } else {
            self.tokens[self.pos - 1].span
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError { span: t.span, message: format!("expected {expected}, found '{}'", t.lexeme) },
            None => ParseError { span: self.eof, message: format!("expected {expected}, found end of file") },
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("'{p}'")))
        }
    }

    fn expect_ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(Ident::new(t.lexeme.clone(), t.span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(ParseError { span: self.cur_span(), message: "expression nested too deeply".into() });
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.enter()?;
        let r = f(self);
        self.leave();
        r
    }

    /// Line-initial identifier followed by `:`, `,` or `(`.
    fn at_decl_head(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        if t.kind != TokenKind::Identifier {
            return false;
        }
        let line_initial = self.pos == 0 || self.tokens[self.pos - 1].range.end.line < t.range.start.line;
        line_initial && self.peek_at(1).is_some_and(|n| n.is_punct(":") || n.is_punct(",") || n.is_punct("("))
    }

    fn at_theory_head(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
            && self.peek_at(1).is_some_and(|t| t.is_punct(":"))
            && self.peek_at(2).is_some_and(|t| t.is_keyword("THEORY"))
    }

    /// Rescans from just after the failed item's first token, so a declaration swallowed by an
    /// unterminated expression is still found.
    fn recover_to_decl(&mut self, started_at: usize) {
        self.pos = (started_at + 1).min(self.tokens.len());
        while !self.at_eof() && !self.at_kw("END") && !self.at_kw("IMPORTING") && !self.at_decl_head() {
            self.pos += 1;
        }
    }

    // ----- file / theory -----

    fn parse_file(&mut self) -> SourceFile {
        let mut theories = Vec::new();
        while !self.at_eof() {
            let start = self.pos;
            match self.parse_theory() {
                Ok(t) => theories.push(t),
                Err(e) => {
                    self.errors.push(e);
                    if self.pos == start {
                        self.pos += 1;
                    }
                    while !self.at_eof() && !self.at_theory_head() {
                        self.pos += 1;
                    }
                }
            }
        }
        SourceFile { theories }
    }

    fn parse_theory(&mut self) -> PResult<Theory> {
        let name = self.expect_ident()?;
        self.expect_punct(":")?;
        self.expect_kw("THEORY")?;
        self.expect_kw("BEGIN")?;
        let mut theory = Theory { name, importings: Vec::new(), decls: Vec::new(), span: Span::DUMMY };
        loop {
            while self.eat_punct(";") {}
            if self.at_kw("END") || self.at_eof() || self.at_theory_head() {
                break;
            }
            let start = self.pos;
            let item = if self.at_kw("IMPORTING") { self.parse_importing() } else { self.parse_decl() };
            match item {
                Ok(Item::Importing(names)) => theory.importings.extend(names),
                Ok(Item::Decls(decls)) => theory.decls.extend(decls),
                Err(e) => {
                    self.errors.push(e);
                    self.recover_to_decl(start);
                }
            }
        }
        if !self.at_kw("END") {
            // keep the declarations parsed so far
            self.errors.push(self.unexpected("END"));
            theory.span = theory.name.span.to(self.prev_span());
            return Ok(theory);
        }
        self.bump();
        match self.expect_ident() {
            Ok(end_name) => {
                if end_name.name != theory.name.name {
                    self.errors.push(ParseError {
                        span: end_name.span,
                        message: format!(
                            "theory name '{}' after END does not match '{}'",
                            end_name.name, theory.name.name
                        ),
                    });
                }
            }
            Err(e) => self.errors.push(e),
        }
        theory.span = theory.name.span.to(self.prev_span());
        Ok(theory)
    }

    fn parse_importing(&mut self) -> PResult<Item> {
        self.expect_kw("IMPORTING")?;
        let mut names = vec![self.expect_ident()?];
        while self.eat_punct(",") {
            names.push(self.expect_ident()?);
        }
        Ok(Item::Importing(names))
    }

    fn parse_decl(&mut self) -> PResult<Item> {
        let name = self.expect_ident()?;
        if self.at_punct("(") {
            return self.parse_fun_decl(name).map(|d| Item::Decls(vec![d]));
        }
        let mut names = vec![name];
        while self.eat_punct(",") {
            names.push(self.expect_ident()?);
        }
        self.expect_punct(":")?;
        let kind = if self.eat_kw("TYPE") {
            let definition = if self.eat_punct("=") { Some(self.parse_type()?) } else { None };
            DeclKind::Type { definition }
        } else if let Some(kind) = self.formula_kind() {
            self.pos += 1;
            if names.len() > 1 {
                return Err(ParseError { span: names[1].span, message: "a formula declaration names a single formula".into() });
            }
            DeclKind::Formula { kind, body: self.parse_expr()? }
        } else {
            let ty = self.parse_type()?;
            let body = if self.eat_punct("=") { Some(self.parse_expr()?) } else { None };
            DeclKind::Const { ty, body }
        };
        let end = self.prev_span();
        Ok(Item::Decls(
            names
                .into_iter()
                .map(|name| Decl { span: name.span.to(end), name, kind: kind.clone() })
                .collect(),
        ))
    }

    fn formula_kind(&self) -> Option<FormulaKind> {
        let t = self.peek()?;
        if t.is_keyword("THEOREM") {
            Some(FormulaKind::Theorem)
        } else if t.is_keyword("LEMMA") {
            Some(FormulaKind::Lemma)
        } else if t.is_keyword("CONJECTURE") {
            Some(FormulaKind::Conjecture)
        } else {
            None
        }
    }

    fn parse_fun_decl(&mut self, name: Ident) -> PResult<Decl> {
        self.expect_punct("(")?;
        let params = self.parse_bindings(")")?;
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let marked = self.eat_kw("RECURSIVE");
        let ret = self.parse_type()?;
        self.expect_punct("=")?;
        let body = self.parse_expr()?;
        if self.eat_kw("MEASURE") {
            self.parse_expr()?;
        }
        let shadowed = params.iter().any(|p| p.name.name == name.name);
        let recursive = marked || (!shadowed && mentions_free(&body, &name.name));
        Ok(Decl { span: name.span.to(self.prev_span()), name, kind: DeclKind::Fun { params, ret, body, recursive } })
    }

    /// `a, b: T, c: U` up to (not including) `close`.
    fn parse_bindings(&mut self, close: &str) -> PResult<Vec<Binding>> {
        let mut out = Vec::new();
        loop {
            let mut names = vec![self.expect_ident()?];
            while self.eat_punct(",") {
                names.push(self.expect_ident()?);
            }
            self.expect_punct(":")?;
            let ty = self.parse_type()?;
            out.extend(names.into_iter().map(|name| Binding { name, ty: ty.clone() }));
            if self.at_punct(close) || !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    // ----- types -----

    fn parse_type(&mut self) -> PResult<TypeExpr> {
        self.nested(Self::parse_type_inner)
    }

    fn parse_type_inner(&mut self) -> PResult<TypeExpr> {
        let start = self.cur_span();
        let Some(t) = self.peek() else { return Err(self.unexpected("type")) };
        if t.kind == TokenKind::Keyword {
            if let Some(base) = BaseType::from_name(&t.lexeme) {
                self.pos += 1;
                return Ok(TypeExpr { kind: TypeExprKind::Base(base), span: t.span });
            }
            return Err(self.unexpected("type"));
        }
        if t.kind == TokenKind::Identifier {
            let id = self.expect_ident()?;
            let span = id.span;
            return Ok(TypeExpr { kind: TypeExprKind::Named(id), span });
        }
        if self.eat_punct("[#") {
            let fields = self.parse_bindings("#]")?;
            let end = self.expect_punct("#]")?;
            return Ok(TypeExpr { kind: TypeExprKind::Record(fields), span: start.to(end) });
        }
        if self.eat_punct("[") {
            let mut domain = vec![self.parse_type()?];
            while self.eat_punct(",") {
                domain.push(self.parse_type()?);
            }
            self.expect_punct("->")?;
            let range = Box::new(self.parse_type()?);
            let end = self.expect_punct("]")?;
            return Ok(TypeExpr { kind: TypeExprKind::Function { domain, range }, span: start.to(end) });
        }
        if self.eat_punct("{") {
            let var = self.expect_ident()?;
            self.expect_punct(":")?;
            let base = Box::new(self.parse_type()?);
            self.expect_punct("|")?;
            let pred = Box::new(self.parse_expr()?);
            let end = self.expect_punct("}")?;
            return Ok(TypeExpr { kind: TypeExprKind::Subtype { var, base, pred }, span: start.to(end) });
        }
        if self.eat_punct("(") {
            let inner = self.parse_type()?;
            self.expect_punct(")")?;
            return Ok(inner);
        }
        Err(self.unexpected("type"))
    }

    // ----- expressions -----

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.nested(Self::parse_iff)
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = lhs.span.to(rhs.span);
        Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span)
    }

    fn parse_iff(&mut self) -> PResult<Expr> {
        let lhs = self.parse_implies()?;
        if self.eat_kw("IFF") || self.eat_punct("<=>") {
            let rhs = self.nested(Self::parse_iff)?;
            return Ok(Self::binary(BinOp::Iff, lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_implies(&mut self) -> PResult<Expr> {
        let lhs = self.parse_or()?;
        if self.eat_kw("IMPLIES") || self.eat_punct("=>") {
            let rhs = self.nested(Self::parse_implies)?;
            return Ok(Self::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    /// Left-associative chain; each link counts toward the nesting limit.
    fn left_chain(
        &mut self,
        operand: fn(&mut Self) -> PResult<Expr>,
        op_at: fn(&Self) -> Option<BinOp>,
    ) -> PResult<Expr> {
        let mut lhs = operand(self)?;
        let mut links = 0;
        while let Some(op) = op_at(self) {
            self.pos += 1;
            links += 1;
            if self.depth + links > MAX_NESTING {
                return Err(ParseError { span: self.cur_span(), message: "expression nested too deeply".into() });
            }
            let rhs = operand(self)?;
            lhs = Self::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> PResult<Expr> {
        self.left_chain(Self::parse_and, |p| p.at_kw("OR").then_some(BinOp::Or))
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        self.left_chain(Self::parse_not, |p| (p.at_kw("AND") || p.at_punct("&")).then_some(BinOp::And))
    }

    fn parse_not(&mut self) -> PResult<Expr> {
        if self.at_kw("NOT") {
            let start = self.bump().span;
            let operand = self.nested(Self::parse_not)?;
            let span = start.to(operand.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, span));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> PResult<Expr> {
        let lhs = self.parse_additive()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.lexeme.as_str() {
                "=" => BinOp::Eq,
                "/=" => BinOp::Neq,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                ">=" => BinOp::Ge,
                _ => return Ok(lhs),
            },
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.parse_additive()?;
        Ok(Self::binary(op, lhs, rhs))
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        self.left_chain(Self::parse_multiplicative, |p| {
            if p.at_punct("+") {
                Some(BinOp::Add)
            } else if p.at_punct("-") {
                Some(BinOp::Sub)
            } else {
                None
            }
        })
    }

    fn parse_multiplicative(&mut self) -> PResult<Expr> {
        self.left_chain(Self::parse_unary, |p| {
            if p.at_punct("*") {
                Some(BinOp::Mul)
            } else if p.at_punct("/") {
                Some(BinOp::Div)
            } else {
                None
            }
        })
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.at_punct("-") {
            let start = self.bump().span;
            let operand = self.nested(Self::parse_unary)?;
            let span = start.to(operand.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, span));
        }
        self.parse_postfix()
    }

    fn parse_postfix(&mut self) -> PResult<Expr> {
        let mut e = self.parse_primary()?;
        let mut links = 0;
        loop {
            if self.at_punct("(") {
                self.pos += 1;
                let mut args = vec![self.parse_expr()?];
                while self.eat_punct(",") {
                    args.push(self.parse_expr()?);
                }
                let end = self.expect_punct(")")?;
                let span = e.span.to(end);
                e = Expr::new(ExprKind::App { func: Box::new(e), args }, span);
            } else if self.at_punct("`") {
                self.pos += 1;
                let field = self.expect_ident()?;
                let span = e.span.to(field.span);
                e = Expr::new(ExprKind::Field { record: Box::new(e), field }, span);
            } else {
                return Ok(e);
            }
            links += 1;
            if self.depth + links > MAX_NESTING {
                return Err(ParseError { span: self.cur_span(), message: "expression nested too deeply".into() });
            }
        }
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else { return Err(self.unexpected("expression")) };
        let start = t.span;
        match t.kind {
            TokenKind::Number => {
                self.pos += 1;
                return Ok(Expr::new(ExprKind::Number(t.lexeme.clone()), t.span));
            }
            TokenKind::String => {
                self.pos += 1;
                return Ok(Expr::new(ExprKind::Str(super::lexer::unescape_string(&t.lexeme)), t.span));
            }
            TokenKind::Identifier => {
                let id = self.expect_ident()?;
                let span = id.span;
                return Ok(Expr::new(ExprKind::Name(id), span));
            }
            _ => {}
        }
        if self.eat_kw("TRUE") {
            return Ok(Expr::new(ExprKind::Bool(true), start));
        }
        if self.eat_kw("FALSE") {
            return Ok(Expr::new(ExprKind::Bool(false), start));
        }
        if self.eat_kw("IF") {
            let cond = self.parse_expr()?;
            self.expect_kw("THEN")?;
            let then_branch = self.parse_expr()?;
            self.expect_kw("ELSE")?;
            let else_branch = self.parse_expr()?;
            let end = self.expect_kw("ENDIF")?;
            return Ok(Expr::new(
                ExprKind::If {
                    cond: Box::new(cond),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                start.to(end),
            ));
        }
        let quantifier = if self.at_kw("FORALL") {
            Some(Quantifier::Forall)
        } else if self.at_kw("EXISTS") {
            Some(Quantifier::Exists)
        } else {
            None
        };
        if let Some(quantifier) = quantifier {
            self.pos += 1;
            self.expect_punct("(")?;
            let bindings = self.parse_bindings(")")?;
            self.expect_punct(")")?;
            self.expect_punct(":")?;
            let body = self.parse_expr()?;
            let span = start.to(body.span);
            return Ok(Expr::new(ExprKind::Quant { quantifier, bindings, body: Box::new(body) }, span));
        }
        if self.eat_kw("LET") {
            let mut bindings = Vec::new();
            loop {
                let name = self.expect_ident()?;
                let ty = if self.eat_punct(":") { Some(self.parse_type()?) } else { None };
                self.expect_punct("=")?;
                let value = self.parse_expr()?;
                bindings.push(LetBinding { name, ty, value });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_kw("IN")?;
            let body = self.parse_expr()?;
            let span = start.to(body.span);
            return Ok(Expr::new(ExprKind::Let { bindings, body: Box::new(body) }, span));
        }
        if self.eat_punct("(#") {
            let mut fields = Vec::new();
            loop {
                let name = self.expect_ident()?;
                self.expect_punct(":=")?;
                let value = self.parse_expr()?;
                fields.push(FieldInit { name, value });
                if !self.eat_punct(",") {
                    break;
                }
            }
            let end = self.expect_punct("#)")?;
            return Ok(Expr::new(ExprKind::Record(fields), start.to(end)));
        }
        if self.eat_punct("(") {
            let mut inner = self.parse_expr()?;
            let end = self.expect_punct(")")?;
            inner.span = start.to(end);
            return Ok(inner);
        }
        Err(self.unexpected("expression"))
    }
}

enum Item {
    Importing(Vec<Ident>),
    Decls(Vec<Decl>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::span::{Position, Range};

    #[test]
    fn minimal_theory() {
        let r = parse_source("sum: THEORY BEGIN END sum");
        assert!(r.diagnostics.is_empty());
        assert_eq!(r.ast.theories.len(), 1);
        assert_eq!(r.ast.theories[0].name.name, "sum");
        assert!(r.ast.theories[0].decls.is_empty());
    }

    #[test]
    fn function_with_if_body() {
        let r = parse_source("t: THEORY BEGIN\n  abs1(x: int): int = IF x > 0 THEN x ELSE -x ENDIF\nEND t");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        let decls = &r.ast.theories[0].decls;
        assert_eq!(decls.len(), 1);
        match &decls[0].kind {
            DeclKind::Fun { params, body, recursive, .. } => {
                assert_eq!(params.len(), 1);
                assert!(matches!(body.kind, ExprKind::If { .. }));
                assert!(!recursive);
            }
            other => panic!("expected function, got {other:?}"),
        }
    }

    #[test]
    fn missing_type_reports_at_end_token() {
        let r = parse_source("sum: THEORY BEGIN x : END sum");
        assert_eq!(r.diagnostics.len(), 1);
        // "sum: THEORY BEGIN x : " is 22 characters; END spans 22..25
        assert_eq!(r.diagnostics[0].range, Range::new(Position::new(0, 22), Position::new(0, 25)));
        assert_eq!(r.ast.theories.len(), 1);
        assert!(r.ast.theories[0].decls.is_empty());
    }

    #[test]
    fn recovery_keeps_later_declarations() {
        let text = "t: THEORY\nBEGIN\n  a: int = 1\n  b: int = (2 +\n  c: int = 3\n  th: THEOREM c = 3\nEND t\n";
        let r = parse_source(text);
        assert_eq!(r.diagnostics.len(), 1, "{:?}", r.diagnostics);
        let names: Vec<_> = r.ast.theories[0].decls.iter().map(|d| d.name.name.as_str()).collect();
        assert_eq!(names, ["a", "c", "th"]);
    }

    #[test]
    fn end_name_mismatch_is_reported() {
        let r = parse_source("a: THEORY BEGIN END b");
        assert_eq!(r.diagnostics.len(), 1);
        assert!(r.diagnostics[0].message.contains("does not match"));
    }

    #[test]
    fn multi_name_declarations_and_importing() {
        let r = parse_source("t: THEORY BEGIN IMPORTING u, v\n p, q: bool\n T: TYPE\n END t");
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
        let th = &r.ast.theories[0];
        assert_eq!(th.importings.len(), 2);
        assert_eq!(th.decls.len(), 3);
    }

    #[test]
    fn recursion_detected_from_self_reference() {
        let r = parse_source("t: THEORY BEGIN\n fact(n: nat): nat = IF n = 0 THEN 1 ELSE n * fact(n - 1) ENDIF\nEND t");
        assert!(matches!(r.ast.theories[0].decls[0].kind, DeclKind::Fun { recursive: true, .. }));
    }

    #[test]
    fn precedence_shapes() {
        let e = parse_expr_text("a OR b AND NOT c = d IMPLIES e").unwrap();
        let ExprKind::Binary { op: BinOp::Implies, lhs, .. } = &e.kind else { panic!("{e:?}") };
        let ExprKind::Binary { op: BinOp::Or, rhs, .. } = &lhs.kind else { panic!() };
        let ExprKind::Binary { op: BinOp::And, rhs, .. } = &rhs.kind else { panic!() };
        let ExprKind::Unary { op: UnOp::Not, operand } = &rhs.kind else { panic!() };
        assert!(matches!(operand.kind, ExprKind::Binary { op: BinOp::Eq, .. }));
    }

    #[test]
    fn field_access_and_record_literal() {
        let e = parse_expr_text("(# x := 1, y := 2 #)`x").unwrap();
        assert!(matches!(e.kind, ExprKind::Field { .. }));
    }

    #[test]
    fn trailing_garbage_in_expression() {
        assert!(parse_expr_text("1 + 2 )").is_err());
        assert!(parse_expr_text("").is_err());
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let text = format!("t: THEORY BEGIN x: int = {}1{} END t", "(".repeat(5000), ")".repeat(5000));
        let r = parse_source(&text);
        assert!(r.diagnostics.iter().any(|d| d.message.contains("nested too deeply")));
        let chain = format!("t: THEORY BEGIN x: int = 1{} END t", " + 1".repeat(5000));
        let r = parse_source(&chain);
        assert!(!r.diagnostics.is_empty());
    }
}
