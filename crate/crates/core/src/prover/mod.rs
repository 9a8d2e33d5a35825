//! Sequent-calculus proof engine with interactive proof trees and replayable scripts.

mod command;
mod error;
mod logic;
mod rules;
mod script;
mod sequent;
mod tree;

use serde::{Deserialize, Serialize};

pub use command::{Command, COMMAND_NAMES};
pub use error::ProverError;
pub use logic::{is_tautology, simplify};
pub use rules::Skolems;
pub use script::{save_script, ProofScript};
pub use sequent::{FormulaNumber, Sequent};
pub use tree::{FormulaRef, NodeState, NodeView, ProofNode, ProofTree, TreeDelta, TreeView};

use crate::syntax::ast::Expr;
use crate::syntax::EraseSpans;
use crate::typecheck::{DeclClass, TypecheckResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    Branched { children: Vec<usize> },
    Closed,
    NoChange,
    Undone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProverResult {
    pub outcome: Outcome,
    pub new_active_leaf: Option<usize>,
}

/// The statement of a formula declaration or TCC of `theory`.
pub fn formula_body(theory: &TypecheckResult, formula: &str) -> Option<Expr> {
    if let Some(d) = theory.decls.iter().find(|d| d.name == formula && d.class == DeclClass::Formula) {
        return d.body().map(EraseSpans::without_spans);
    }
    theory.tccs.iter().find(|t| t.id == formula).map(|t| t.obligation.without_spans())
}

/// A fresh tree with the formula as its only consequent.
pub fn start_proof(theory: &TypecheckResult, formula: &str) -> Result<ProofTree, ProverError> {
    if theory.has_errors() {
        return Err(ProverError::NotTypechecked(theory.theory.clone()));
    }
    let body = formula_body(theory, formula).ok_or_else(|| ProverError::FormulaNotFound(formula.to_owned()))?;
    let formula = FormulaRef { theory: theory.theory.clone(), formula: formula.to_owned() };
    Ok(ProofTree::new(formula, Sequent::goal(body)))
}

pub fn is_proved(tree: &ProofTree) -> bool {
    tree.is_proved()
}

/// Applies one command to the active leaf. Commands that change the tree are recorded in the
/// history and can be undone.
pub fn apply_command(tree: &mut ProofTree, cmd: &Command, scope: &TypecheckResult) -> Result<ProverResult, ProverError> {
    let unchanged = |tree: &ProofTree| Ok(ProverResult { outcome: Outcome::NoChange, new_active_leaf: tree.active });
    match cmd {
        Command::Undo => {
            if !tree.restore() {
                return Err(ProverError::UndoAtRoot);
            }
            return Ok(ProverResult { outcome: Outcome::Undone, new_active_leaf: tree.active });
        }
        Command::Quit => {
            tree.abandoned = true;
            return unchanged(tree);
        }
        _ => {}
    }
    let active = tree.active.ok_or(ProverError::NoActiveGoal)?;
    let seq = tree.nodes[active].sequent.clone();
    let mut skolems = tree.skolems.clone();
    let children = match cmd {
        Command::Postpone => {
            let Some(next) = tree.next_open_leaf(active) else { return unchanged(tree) };
            tree.checkpoint();
            tree.history.push(cmd.to_string());
            tree.active = Some(next);
            return unchanged(tree);
        }
        Command::Flatten => rules::flatten(&seq).map(|s| vec![s]),
        Command::Split => rules::split(&seq),
        Command::Skolem => rules::skolem(&seq, scope, &mut skolems),
        Command::Inst { fnum, terms } => Some(rules::inst(&seq, *fnum, terms, scope, &skolems)?),
        Command::Expand { name } => rules::expand(&seq, name, scope)?,
        Command::Assert => rules::assert(&seq),
        Command::Prop => Some(rules::prop_goals(&seq)),
        Command::Grind => Some(rules::grind_goals(&seq, scope, &mut skolems)),
        Command::Undo | Command::Quit => unreachable!("handled above"),
    };
    let Some(children) = children else { return unchanged(tree) };
    if let [only] = children.as_slice() {
        if only.without_spans() == seq.without_spans() {
            return unchanged(tree);
        }
    }
    tree.checkpoint();
    tree.history.push(cmd.to_string());
    tree.skolems = skolems;
    tree.nodes[active].command = Some(cmd.to_string());
    if children.is_empty() {
        tree.close(active);
        tree.active = tree.next_open_leaf(active);
        Ok(ProverResult { outcome: Outcome::Closed, new_active_leaf: tree.active })
    } else {
        let ids = tree.add_children(active, children);
        tree.active = Some(ids[0]);
        Ok(ProverResult { outcome: Outcome::Branched { children: ids }, new_active_leaf: tree.active })
    }
}

/// Parses and applies a command given as text.
pub fn apply_text(tree: &mut ProofTree, text: &str, scope: &TypecheckResult) -> Result<ProverResult, ProverError> {
    let cmd: Command = text.parse()?;
    apply_command(tree, &cmd, scope)
}

/// Runs a script from a fresh tree. Each command must succeed and change the tree.
pub fn load_and_replay(script: &ProofScript, scope: &TypecheckResult) -> Result<ProofTree, ProverError> {
    let mut tree = start_proof(scope, &script.formula)?;
    for (i, text) in script.commands.iter().enumerate() {
        let before = tree.history.len();
        let fail = |tree: &ProofTree, message: String| ProverError::StepFailed {
            step: i + 1,
            command: text.clone(),
            message,
            sequent: tree.active_sequent().map(Sequent::render).unwrap_or_default(),
        };
        match apply_text(&mut tree, text, scope) {
            Err(e) => return Err(fail(&tree, e.to_string())),
            Ok(_) if tree.history.len() == before => {
                return Err(fail(&tree, "the command made no progress".into()));
            }
            Ok(_) => {}
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests;
