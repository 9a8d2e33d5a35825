use serde::{Deserialize, Serialize};

use crate::syntax::ast::Expr;
use crate::syntax::pretty::print_expr;

/// `antecedents |- consequents`: the conjunction of the antecedents entails the disjunction of
/// the consequents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sequent {
    pub antecedents: Vec<Expr>,
    pub consequents: Vec<Expr>,
}

/// A formula position: negative for antecedents, positive for consequents.
pub type FormulaNumber = i64;

impl Sequent {
    pub fn goal(formula: Expr) -> Self {
        Sequent { antecedents: Vec::new(), consequents: vec![formula] }
    }

    pub fn get(&self, n: FormulaNumber) -> Option<&Expr> {
        match n {
            n if n < 0 => self.antecedents.get((-n - 1) as usize),
            n if n > 0 => self.consequents.get((n - 1) as usize),
            _ => None,
        }
    }

    /// Formula numbers ordered by absolute value, antecedent first: -1, 1, -2, 2, ...
    pub fn numbers_by_magnitude(&self) -> Vec<FormulaNumber> {
        let max = self.antecedents.len().max(self.consequents.len()) as i64;
        let mut out = Vec::new();
        for k in 1..=max {
            if (k as usize) <= self.antecedents.len() {
                out.push(-k);
            }
            if (k as usize) <= self.consequents.len() {
                out.push(k);
            }
        }
        out
    }

    pub fn antecedent_texts(&self) -> Vec<String> {
        self.antecedents.iter().map(print_expr).collect()
    }

    pub fn consequent_texts(&self) -> Vec<String> {
        self.consequents.iter().map(print_expr).collect()
    }

    /// Terminal layout: `[-1] a`, a `|-------` separator, then `[1] b`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.antecedent_texts().iter().enumerate() {
            out.push_str(&format!("[-{}] {t}\n", i + 1));
        }
        out.push_str("|-------\n");
        for (i, t) in self.consequent_texts().iter().enumerate() {
            out.push_str(&format!("[{}] {t}\n", i + 1));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_expr_text;

    #[test]
    fn renders_numbered_formulas() {
        let s = Sequent {
            antecedents: vec![parse_expr_text("a").unwrap()],
            consequents: vec![parse_expr_text("b OR c").unwrap()],
        };
        assert_eq!(s.render(), "[-1] a\n|-------\n[1] b OR c\n");
        assert_eq!(s.numbers_by_magnitude(), vec![-1, 1]);
        assert!(s.get(0).is_none());
        assert!(s.get(-2).is_none());
    }
}
