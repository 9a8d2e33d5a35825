use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::WorkspaceError;

pub const SIDECAR_FILE: &str = ".pvsstatus.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulaStatus {
    #[default]
    Unchecked,
    Unfinished,
    Proved,
    Failed,
}

impl FormulaStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaStatus::Unchecked => "unchecked",
            FormulaStatus::Unfinished => "unfinished",
            FormulaStatus::Proved => "proved",
            FormulaStatus::Failed => "failed",
        }
    }
}

pub fn status_key(theory: &str, formula: &str) -> String {
    format!("{theory}.{formula}")
}

/// Reads the sidecar; a missing file means every formula is unchecked.
pub fn load_sidecar(root: &Path) -> Result<BTreeMap<String, FormulaStatus>, WorkspaceError> {
    let path = root.join(SIDECAR_FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str(&text).map_err(|e| WorkspaceError::Io(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(WorkspaceError::Io(format!("{}: {e}", path.display()))),
    }
}

pub fn save_sidecar(root: &Path, statuses: &BTreeMap<String, FormulaStatus>) -> Result<(), WorkspaceError> {
    let path = root.join(SIDECAR_FILE);
    let kept: BTreeMap<&String, &FormulaStatus> =
        statuses.iter().filter(|(_, s)| **s != FormulaStatus::Unchecked).collect();
    let mut text = serde_json::to_string_pretty(&kept).expect("statuses serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| WorkspaceError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaNode {
    pub name: String,
    /// `theorem`, `lemma`, `conjecture` or `tcc`.
    pub kind: String,
    pub status: FormulaStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryNode {
    pub name: String,
    pub uri: String,
    pub formulas: Vec<FormulaNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TheoryTree {
    pub theories: Vec<TheoryNode>,
}

/// Sent to subscribers when a status changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusDelta {
    pub theory: String,
    pub formula: String,
    pub status: FormulaStatus,
}
