use serde::{Deserialize, Serialize};

use super::rules::Skolems;
use super::sequent::Sequent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub sequent: Sequent,
    /// Command applied at this node, once it has been.
    pub command: Option<String>,
    pub children: Vec<usize>,
    pub state: NodeState,
}

/// The formula a proof is about: a named formula or a TCC id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormulaRef {
    pub theory: String,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    nodes: Vec<ProofNode>,
    active: Option<usize>,
    history: Vec<String>,
    skolems: Skolems,
}

/// Node arena; the root is node 0 and ids are indices.
#[derive(Debug, Clone)]
pub struct ProofTree {
    pub formula: FormulaRef,
    pub nodes: Vec<ProofNode>,
    pub active: Option<usize>,
    pub history: Vec<String>,
    pub skolems: Skolems,
    pub abandoned: bool,
    undo: Vec<Snapshot>,
}

impl ProofTree {
    pub fn new(formula: FormulaRef, root: Sequent) -> Self {
        ProofTree {
            formula,
            nodes: vec![ProofNode {
                id: 0,
                parent: None,
                sequent: root,
                command: None,
                children: vec![],
                state: NodeState::Open,
            }],
            active: Some(0),
            history: vec![],
            skolems: Skolems::default(),
            abandoned: false,
            undo: vec![],
        }
    }

    pub fn root(&self) -> &ProofNode {
        &self.nodes[0]
    }

    pub fn is_proved(&self) -> bool {
        self.root().state == NodeState::Closed
    }

    pub fn active_node(&self) -> Option<&ProofNode> {
        self.active.map(|i| &self.nodes[i])
    }

    pub fn active_sequent(&self) -> Option<&Sequent> {
        self.active_node().map(|n| &n.sequent)
    }

    pub(crate) fn checkpoint(&mut self) {
        self.undo.push(Snapshot {
            nodes: self.nodes.clone(),
            active: self.active,
            history: self.history.clone(),
            skolems: self.skolems.clone(),
        });
    }

    /// Restores the state before the last recorded command.
    pub(crate) fn restore(&mut self) -> bool {
        match self.undo.pop() {
            Some(s) => {
                self.nodes = s.nodes;
                self.active = s.active;
                self.history = s.history;
                self.skolems = s.skolems;
                true
            }
            None => false,
        }
    }

    /// Node ids in depth-first preorder.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    pub fn open_leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&n| self.nodes[n].state == NodeState::Open && self.nodes[n].children.is_empty())
            .collect()
    }

    /// First open leaf after `from` in depth-first order, wrapping around; never `from` itself.
    pub(crate) fn next_open_leaf(&self, from: usize) -> Option<usize> {
        let order = self.preorder();
        let pos = order.iter().position(|&n| n == from).unwrap_or(0);
        let is_open_leaf = |n: usize| self.nodes[n].state == NodeState::Open && self.nodes[n].children.is_empty();
        order[pos + 1..].iter().chain(&order[..pos]).copied().find(|&n| is_open_leaf(n))
    }

    pub(crate) fn close(&mut self, node: usize) {
        self.nodes[node].state = NodeState::Closed;
        let mut cur = self.nodes[node].parent;
        while let Some(p) = cur {
            if self.nodes[p].children.iter().all(|&c| self.nodes[c].state == NodeState::Closed) {
                self.nodes[p].state = NodeState::Closed;
                cur = self.nodes[p].parent;
            } else {
                break;
            }
        }
    }

    pub(crate) fn add_children(&mut self, parent: usize, sequents: Vec<Sequent>) -> Vec<usize> {
        let mut ids = Vec::with_capacity(sequents.len());
        for sequent in sequents {
            let id = self.nodes.len();
            self.nodes.push(ProofNode { id, parent: Some(parent), sequent, command: None, children: vec![], state: NodeState::Open });
            ids.push(id);
        }
        self.nodes[parent].children = ids.clone();
        ids
    }

    pub fn view(&self) -> TreeView {
        TreeView {
            theory: self.formula.theory.clone(),
            formula: self.formula.formula.clone(),
            active: self.active,
            proved: self.is_proved(),
            history: self.history.clone(),
            nodes: self.nodes.iter().map(|n| NodeView::of(n, self.active)).collect(),
        }
    }

    /// Canonical JSON text of the tree.
    pub fn serialize(&self) -> String {
        serde_json::to_string_pretty(&self.view()).expect("tree view serializes")
    }
}

/// Printable form of a node, as sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: usize,
    pub parent: Option<usize>,
    pub command: Option<String>,
    pub children: Vec<usize>,
    pub state: NodeState,
    pub active: bool,
    pub antecedents: Vec<String>,
    pub consequents: Vec<String>,
}

impl NodeView {
    fn of(n: &ProofNode, active: Option<usize>) -> Self {
        NodeView {
            id: n.id,
            parent: n.parent,
            command: n.command.clone(),
            children: n.children.clone(),
            state: n.state,
            active: active == Some(n.id),
            antecedents: n.sequent.antecedent_texts(),
            consequents: n.sequent.consequent_texts(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub theory: String,
    pub formula: String,
    pub active: Option<usize>,
    pub proved: bool,
    pub history: Vec<String>,
    pub nodes: Vec<NodeView>,
}

/// Nodes added or changed and nodes removed between two views.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeDelta {
    pub changed: Vec<NodeView>,
    pub removed: Vec<usize>,
    pub active: Option<usize>,
    pub proved: bool,
    pub history: Vec<String>,
}

impl TreeView {
    pub fn delta_to(&self, next: &TreeView) -> TreeDelta {
        let changed = next
            .nodes
            .iter()
            .filter(|n| self.nodes.get(n.id) != Some(n))
            .cloned()
            .collect();
        let removed = self.nodes.iter().map(|n| n.id).filter(|&id| id >= next.nodes.len()).collect();
        TreeDelta { changed, removed, active: next.active, proved: next.proved, history: next.history.clone() }
    }

    /// Applies a delta produced by [`TreeView::delta_to`].
    pub fn apply(&mut self, delta: &TreeDelta) {
        self.nodes.retain(|n| !delta.removed.contains(&n.id));
        for n in &delta.changed {
            match self.nodes.iter_mut().find(|m| m.id == n.id) {
                Some(m) => *m = n.clone(),
                None => self.nodes.push(n.clone()),
            }
        }
        self.nodes.sort_by_key(|n| n.id);
        self.active = delta.active;
        self.proved = delta.proved;
        self.history = delta.history.clone();
    }
}
