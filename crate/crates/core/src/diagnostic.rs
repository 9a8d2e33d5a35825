use serde::{Deserialize, Serialize};

use crate::syntax::{LineIndex, Range, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Information,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Information => "information",
        }
    }

    /// LSP `DiagnosticSeverity` number.
    pub fn lsp_code(self) -> u8 {
        match self {
            Severity::Error => 1,
            Severity::Warning => 2,
            Severity::Information => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSource {
    Parser,
    Typechecker,
}

impl DiagnosticSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticSource::Parser => "parser",
            DiagnosticSource::Typechecker => "typechecker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub range: Range,
    #[serde(skip)]
    pub span: Span,
    pub severity: Severity,
    pub message: String,
    pub source: DiagnosticSource,
}

impl Diagnostic {
    pub fn error(index: &LineIndex, span: Span, source: DiagnosticSource, message: impl Into<String>) -> Self {
        Diagnostic {
            range: index.range(span),
            span,
            severity: Severity::Error,
            message: message.into(),
            source,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `path:line:col: severity: message` with 1-based line and column.
    pub fn render_line(&self, path: &str) -> String {
        format!(
            "{}:{}:{}: {}: {}",
            path,
            self.range.start.line + 1,
            self.range.start.character + 1,
            self.severity.as_str(),
            self.message
        )
    }
}
