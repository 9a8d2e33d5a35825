//! LSP wire shapes used by the server.

use std::collections::BTreeMap;

use micropvs_core::diagnostic::Diagnostic;
use micropvs_core::syntax::{Position, Range};
use micropvs_core::workspace::Location;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub mod completion_kind {
    pub const FUNCTION: u8 = 3;
    pub const FIELD: u8 = 5;
    pub const VARIABLE: u8 = 6;
    pub const PROPERTY: u8 = 10;
    pub const KEYWORD: u8 = 14;
    pub const SNIPPET: u8 = 15;
    pub const CONSTANT: u8 = 21;
    pub const TYPE_PARAMETER: u8 = 25;
}

pub const INSERT_FORMAT_SNIPPET: u8 = 2;

/// LSP form of a diagnostic: numeric severity, string source.
pub fn diagnostic(d: &Diagnostic) -> Value {
    json!({
        "range": d.range,
        "severity": d.severity.lsp_code(),
        "source": d.source.as_str(),
        "message": d.message,
    })
}

pub fn publish_diagnostics(uri: &str, version: i64, diags: &[Diagnostic]) -> Value {
    json!({
        "uri": uri,
        "version": version,
        "diagnostics": diags.iter().map(diagnostic).collect::<Vec<_>>(),
    })
}

pub fn location(l: &Location) -> Value {
    json!({"uri": l.uri, "range": l.range})
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextDocumentPositionParams {
    pub text_document: TextDocumentIdentifier,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextDocumentIdentifier {
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextDocumentItem {
    pub uri: String,
    #[serde(default)]
    pub language_id: String,
    pub version: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionedTextDocumentIdentifier {
    pub uri: String,
    pub version: i64,
}

/// Only full-document changes are supported (`textDocumentSync` = 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentChange {
    #[serde(default)]
    pub range: Option<Range>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DidOpenParams {
    pub text_document: TextDocumentItem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DidChangeParams {
    pub text_document: VersionedTextDocumentIdentifier,
    pub content_changes: Vec<ContentChange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DidCloseParams {
    pub text_document: TextDocumentIdentifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RenameParams {
    pub text_document: TextDocumentIdentifier,
    pub position: Position,
    pub new_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletionItem {
    pub label: String,
    pub kind: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insert_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insert_text_format: Option<u8>,
}

impl CompletionItem {
    pub fn new(label: impl Into<String>, kind: u8) -> Self {
        CompletionItem { label: label.into(), kind, detail: None, insert_text: None, insert_text_format: None }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub title: String,
    pub command: String,
    #[serde(default)]
    pub arguments: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLens {
    pub range: Range,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextEdit {
    pub range: Range,
    pub new_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceEdit {
    pub changes: BTreeMap<String, Vec<TextEdit>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkupContent {
    pub kind: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hover {
    pub contents: MarkupContent,
    pub range: Range,
}

/// Custom requests, advertised under `experimental.pvs.methods`.
pub const CUSTOM_METHODS: &[&str] = &[
    "pvs/typecheck",
    "pvs/theories",
    "pvs/prove-formula",
    "pvs/proof-command",
    "pvs/quit-proof",
    "pvs/evaluate",
];

pub fn server_capabilities() -> Value {
    json!({
        "textDocumentSync": {"openClose": true, "change": 1},
        "hoverProvider": true,
        "definitionProvider": true,
        "completionProvider": {"triggerCharacters": ["`", "."], "resolveProvider": false},
        "codeLensProvider": {"resolveProvider": false},
        "renameProvider": true,
        "experimental": {
            "pvs": {
                "methods": CUSTOM_METHODS,
                "pushDiagnostics": true,
                "notifications": ["pvs/statusChanged"],
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use micropvs_core::diagnostic::{DiagnosticSource, Severity};

    #[test]
    fn diagnostic_uses_numeric_severity() {
        let d = Diagnostic {
            range: Range::new(Position::new(1, 2), Position::new(1, 5)),
            span: Default::default(),
            severity: Severity::Warning,
            message: "m".into(),
            source: DiagnosticSource::Parser,
        };
        let v = diagnostic(&d);
        assert_eq!(v["severity"], 2);
        assert_eq!(v["source"], "parser");
        assert_eq!(v["range"]["start"]["character"], 2);
    }

    #[test]
    fn capabilities_list_features_and_methods() {
        let c = server_capabilities();
        for k in ["hoverProvider", "definitionProvider", "completionProvider", "codeLensProvider", "renameProvider"] {
            assert!(c.get(k).is_some(), "{k}");
        }
        assert_eq!(c["completionProvider"]["triggerCharacters"], json!(["`", "."]));
        assert_eq!(c["experimental"]["pvs"]["methods"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn completion_item_omits_empty_fields() {
        let v = serde_json::to_value(CompletionItem::new("x", completion_kind::FIELD)).unwrap();
        assert_eq!(v, json!({"label": "x", "kind": 5}));
    }
}
