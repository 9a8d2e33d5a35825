use serde::{Deserialize, Serialize};

use super::tree::ProofTree;

/// Saved command sequence of a proof, stored as `<theory>.<formula>.proof.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofScript {
    pub theory: String,
    pub formula: String,
    pub commands: Vec<String>,
}

impl ProofScript {
    pub fn file_name(theory: &str, formula: &str) -> String {
        format!("{theory}.{formula}.proof.json")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("script serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn save_script(tree: &ProofTree) -> ProofScript {
    ProofScript {
        theory: tree.formula.theory.clone(),
        formula: tree.formula.formula.clone(),
        commands: tree.history.clone(),
    }
}
