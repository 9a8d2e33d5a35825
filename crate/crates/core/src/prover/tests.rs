use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::syntax::ast::{BinOp, ExprKind, UnOp};
use crate::syntax::{parse_expr_text, parse_source, LineIndex};
use crate::typecheck::typecheck;

fn theory(src: &str) -> Arc<TypecheckResult> {
    let parsed = parse_source(src);
    assert!(!parsed.has_errors(), "{:?}", parsed.diagnostics);
    Arc::new(typecheck(&parsed.ast.theories[0], &LineIndex::new(src), &|_| None))
}

fn atoms_theory() -> Arc<TypecheckResult> {
    let decls: String = (0..12).map(|i| format!("  p{i}: bool\n")).collect();
    theory(&format!("A: THEORY\nBEGIN\n{decls}  a, b, c: bool\nEND A\n"))
}

fn goal_tree(src: &str) -> ProofTree {
    ProofTree::new(
        FormulaRef { theory: "A".into(), formula: "goal".into() },
        Sequent::goal(parse_expr_text(src).unwrap()),
    )
}

fn run(tree: &mut ProofTree, cmd: &str, scope: &TypecheckResult) -> ProverResult {
    apply_text(tree, cmd, scope).unwrap()
}

fn active_render(tree: &ProofTree) -> String {
    tree.active_sequent().unwrap().render()
}

#[test]
fn flatten_moves_hypotheses() {
    let s = atoms_theory();
    let mut t = goal_tree("a IMPLIES b");
    let r = run(&mut t, "flatten", &s);
    assert_eq!(r.outcome, Outcome::Branched { children: vec![1] });
    assert_eq!(active_render(&t), "[-1] a\n|-------\n[1] b\n");
}

#[test]
fn split_conjunction() {
    let s = atoms_theory();
    let mut t = goal_tree("a AND b");
    run(&mut t, "split", &s);
    assert_eq!(t.nodes[1].sequent.render(), "|-------\n[1] a\n");
    assert_eq!(t.nodes[2].sequent.render(), "|-------\n[1] b\n");
    assert_eq!(t.active, Some(1));
}

#[test]
fn assert_closes_excluded_middle() {
    let s = atoms_theory();
    let mut t = goal_tree("p0 OR NOT p0");
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
    assert!(t.is_proved());
    assert_eq!(t.active, None);
}

#[test]
fn skolem_then_reflexivity() {
    let s = atoms_theory();
    let mut t = goal_tree("FORALL (x: int): x = x");
    run(&mut t, "skolem", &s);
    assert_eq!(active_render(&t), "|-------\n[1] x!1 = x!1\n");
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
    assert_eq!(t.skolems.consts, vec![("x!1".to_string(), crate::typecheck::Type::Int)]);
}

#[test]
fn skolem_names_avoid_existing_identifiers() {
    let s = theory("S: THEORY\nBEGIN\n  f: [int -> bool]\nEND S\n");
    let mut t = goal_tree("FORALL (x: int): f(x) OR f(x!1)");
    run(&mut t, "skolem", &s);
    assert_eq!(active_render(&t), "|-------\n[1] f(x!2) OR f(x!1)\n");
}

#[test]
fn grind_proves_quantified_tautology() {
    let s = atoms_theory();
    let mut t = goal_tree("FORALL (a, b: bool): (a AND b) IMPLIES a");
    assert_eq!(run(&mut t, "grind", &s).outcome, Outcome::Closed);
    assert!(is_proved(&t));
}

#[test]
fn undo_restores_previous_state() {
    let s = atoms_theory();
    let mut t = goal_tree("a IMPLIES b");
    let before = t.serialize();
    run(&mut t, "flatten", &s);
    assert_eq!(run(&mut t, "undo", &s).outcome, Outcome::Undone);
    assert_eq!(t.serialize(), before);
    assert_eq!(apply_text(&mut t, "undo", &s), Err(ProverError::UndoAtRoot));
}

#[test]
fn command_errors() {
    let s = theory("S: THEORY\nBEGIN\n  f: [nat -> bool]\nEND S\n");
    let mut t = goal_tree("(FORALL (n: nat): f(n)) IMPLIES f(3)");
    assert!(matches!(apply_text(&mut t, "frobnicate", &s), Err(ProverError::UnknownCommand(_))));
    run(&mut t, "flatten", &s);
    assert!(matches!(apply_text(&mut t, "inst 1 \"3\"", &s), Err(ProverError::BadFnum(1, _))));
    assert!(matches!(apply_text(&mut t, "inst -4 \"3\"", &s), Err(ProverError::BadFnum(-4, _))));
    assert!(matches!(apply_text(&mut t, "inst -1 \"TRUE\"", &s), Err(ProverError::IllTyped(_))));
    assert!(matches!(apply_text(&mut t, "inst -1 \"zz\"", &s), Err(ProverError::IllTyped(_))));
    run(&mut t, "inst -1 \"3\"", &s);
    assert_eq!(active_render(&t), "[-1] f(3)\n|-------\n[1] f(3)\n");
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
}

#[test]
fn inst_uses_skolem_constants() {
    let s = theory("S: THEORY\nBEGIN\n  f: [int -> bool]\nEND S\n");
    let mut t = goal_tree("(FORALL (n: int): f(n)) IMPLIES (FORALL (m: int): f(m + 1))");
    run(&mut t, "flatten", &s);
    run(&mut t, "skolem", &s);
    run(&mut t, "inst -1 \"m!1 + 1\"", &s);
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
}

#[test]
fn expand_beta_reduces() {
    let s = theory("S: THEORY\nBEGIN\n  sq(x: int): int = x * x\n  k: int = 4\n  u: int\nEND S\n");
    let mut t = goal_tree("sq(k) = 16");
    run(&mut t, "expand sq", &s);
    assert_eq!(active_render(&t), "|-------\n[1] k * k = 16\n");
    run(&mut t, "expand k", &s);
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
    let mut t = goal_tree("u = 1");
    assert!(matches!(apply_text(&mut t, "expand u", &s), Err(ProverError::Expand(_))));
    assert!(matches!(apply_text(&mut t, "expand nope", &s), Err(ProverError::Expand(_))));
    assert_eq!(run(&mut t, "expand sq", &s).outcome, Outcome::NoChange);
}

#[test]
fn expand_respects_shadowing() {
    let s = theory("S: THEORY\nBEGIN\n  k: int = 4\nEND S\n");
    let mut t = goal_tree("(FORALL (k: int): k = k) AND k = 4");
    run(&mut t, "expand k", &s);
    assert_eq!(active_render(&t), "|-------\n[1] (FORALL (k: int): k = k) AND 4 = 4\n");
}

#[test]
fn grind_expands_definitions() {
    let s = theory("S: THEORY\nBEGIN\n  big(x: int): bool = x > 10\n  bigger(x: int): bool = big(x) AND x > 20\n  th: THEOREM FORALL (y: int): bigger(y) IMPLIES big(y)\nEND S\n");
    let mut t = start_proof(&s, "th").unwrap();
    assert_eq!(run(&mut t, "grind", &s).outcome, Outcome::Closed);
}

#[test]
fn prop_leaves_unprovable_goals() {
    let s = atoms_theory();
    let mut t = goal_tree("(a IMPLIES b) AND (b OR c)");
    let r = run(&mut t, "prop", &s);
    let Outcome::Branched { children } = r.outcome else { panic!("{r:?}") };
    assert_eq!(children.len(), 2);
    assert_eq!(t.nodes[children[0]].sequent.render(), "[-1] a\n|-------\n[1] b\n");
    assert_eq!(run(&mut t, "prop", &s).outcome, Outcome::NoChange);
}

#[test]
fn postpone_wraps_in_depth_first_order() {
    let s = atoms_theory();
    let mut t = goal_tree("a AND b AND c");
    run(&mut t, "split", &s);
    assert_eq!(t.open_leaves(), vec![1, 2]);
    run(&mut t, "postpone", &s);
    assert_eq!(t.active, Some(2));
    run(&mut t, "postpone", &s);
    assert_eq!(t.active, Some(1));
    assert_eq!(t.history, vec!["split", "postpone", "postpone"]);
}

#[test]
fn closing_advances_to_next_open_leaf() {
    let s = atoms_theory();
    let mut t = goal_tree("(a OR NOT a) AND (b AND (c IMPLIES c))");
    run(&mut t, "split", &s);
    run(&mut t, "postpone", &s);
    let r = run(&mut t, "split", &s);
    assert_eq!(r.new_active_leaf, Some(3));
    assert_eq!(run(&mut t, "postpone", &s).new_active_leaf, Some(4));
    let r = run(&mut t, "assert", &s);
    assert_eq!((r.outcome, r.new_active_leaf), (Outcome::Closed, Some(1)));
    run(&mut t, "assert", &s);
    assert_eq!(t.active, Some(3));
    assert!(!t.is_proved());
}

#[test]
fn quit_keeps_tree() {
    let s = atoms_theory();
    let mut t = goal_tree("a AND b");
    run(&mut t, "split", &s);
    run(&mut t, "quit", &s);
    assert!(t.abandoned);
    assert_eq!(t.nodes.len(), 3);
    assert!(!t.is_proved());
}

#[test]
fn start_proof_requirements() {
    let s = theory("S: THEORY\nBEGIN\n  t1: THEOREM TRUE\n  q(d: int): real = 1 / d\nEND S\n");
    let mut t = start_proof(&s, "t1").unwrap();
    assert!(!t.is_proved());
    assert_eq!(t.active, Some(0));
    assert!(t.history.is_empty());
    assert_eq!(run(&mut t, "assert", &s).outcome, Outcome::Closed);
    let tcc = start_proof(&s, "q_TCC1").unwrap();
    assert_eq!(tcc.root().sequent.render(), "|-------\n[1] FORALL (d: int): d /= 0\n");
    assert_eq!(start_proof(&s, "nope").unwrap_err(), ProverError::FormulaNotFound("nope".into()));
    let bad = theory("B: THEORY\nBEGIN\n  x: int = TRUE\n  t: THEOREM TRUE\nEND B\n");
    assert!(matches!(start_proof(&bad, "t"), Err(ProverError::NotTypechecked(_))));
}

#[test]
fn replay_reproduces_tree() {
    let s = theory("S: THEORY\nBEGIN\n  g: THEOREM FORALL (a, b: bool): (a AND b) IMPLIES a\nEND S\n");
    let mut t = start_proof(&s, "g").unwrap();
    run(&mut t, "skolem", &s);
    run(&mut t, "flatten", &s);
    run(&mut t, "assert", &s);
    let script = save_script(&t);
    assert_eq!(script.commands, vec!["skolem", "flatten", "assert"]);
    let text = script.to_json();
    let again = load_and_replay(&ProofScript::from_json(&text).unwrap(), &s).unwrap();
    assert!(again.is_proved());
    assert_eq!(again.serialize(), t.serialize());
}

#[test]
fn replay_reports_failing_step() {
    let s = theory("S: THEORY\nBEGIN\n  g: THEOREM FORALL (a: bool): a\nEND S\n");
    let script = ProofScript { theory: "S".into(), formula: "g".into(), commands: vec!["skolem".into(), "assert".into()] };
    match load_and_replay(&script, &s) {
        Err(ProverError::StepFailed { step, sequent, .. }) => {
            assert_eq!(step, 2);
            assert_eq!(sequent, "|-------\n[1] a!1\n");
        }
        other => panic!("{other:?}"),
    }
    let empty = ProofScript { theory: "S".into(), formula: "g".into(), commands: vec![] };
    assert!(!load_and_replay(&empty, &s).unwrap().is_proved());
    let missing = ProofScript { theory: "S".into(), formula: "h".into(), commands: vec![] };
    assert!(matches!(load_and_replay(&missing, &s), Err(ProverError::FormulaNotFound(_))));
}

#[test]
fn tree_delta_reconstructs_view() {
    let s = atoms_theory();
    let mut t = goal_tree("(a IMPLIES a) AND b");
    let mut view = t.view();
    for cmd in ["split", "flatten", "assert", "undo", "postpone", "undo", "undo"] {
        run(&mut t, cmd, &s);
        let next = t.view();
        view.apply(&view.delta_to(&next));
        assert_eq!(view, next, "after {cmd}");
    }
}

// Independent oracle: brute-force truth tables over named atoms.

fn eval_prop(e: &Expr, env: &BTreeMap<String, bool>) -> bool {
    match &e.kind {
        ExprKind::Bool(b) => *b,
        ExprKind::Name(id) => env[&id.name],
        ExprKind::Unary { op: UnOp::Not, operand } => !eval_prop(operand, env),
        ExprKind::Binary { op, lhs, rhs } => {
            let (a, b) = (eval_prop(lhs, env), eval_prop(rhs, env));
            match op {
                BinOp::And => a && b,
                BinOp::Or => a || b,
                BinOp::Implies => !a || b,
                BinOp::Iff => a == b,
                _ => panic!("not propositional"),
            }
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            if eval_prop(cond, env) {
                eval_prop(then_branch, env)
            } else {
                eval_prop(else_branch, env)
            }
        }
        _ => panic!("not propositional"),
    }
}

fn sequent_holds(s: &Sequent, env: &BTreeMap<String, bool>) -> bool {
    !s.antecedents.iter().all(|a| eval_prop(a, env)) || s.consequents.iter().any(|c| eval_prop(c, env))
}

fn oracle_valid(s: &Sequent) -> bool {
    let names: Vec<String> =
        s.antecedents.iter().chain(&s.consequents).flat_map(crate::syntax::visit::free_names).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    (0u32..1 << names.len()).all(|bits| {
        let env = names.iter().enumerate().map(|(i, n)| (n.clone(), bits >> i & 1 == 1)).collect();
        sequent_holds(s, &env)
    })
}

fn arb_formula(atoms: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        8 => (0..atoms).prop_map(|i| Expr::name(format!("p{i}"))),
        1 => any::<bool>().prop_map(Expr::boolean),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (inner.clone(), inner.clone(), 0..4usize).prop_map(|(a, b, k)| {
                Expr::binary([BinOp::And, BinOp::Or, BinOp::Implies, BinOp::Iff][k], a, b)
            }),
            (inner.clone(), inner.clone(), inner).prop_map(|(c, a, b)| Expr::synthetic(ExprKind::If {
                cond: Box::new(c),
                then_branch: Box::new(a),
                else_branch: Box::new(b),
            })),
        ]
    })
}

fn dense(s: &Sequent) -> bool {
    let r = s.render();
    let lines: Vec<&str> = r.lines().collect();
    let sep = lines.iter().position(|l| *l == "|-------").unwrap();
    lines[..sep].iter().enumerate().all(|(i, l)| l.starts_with(&format!("[-{}] ", i + 1)))
        && lines[sep + 1..].iter().enumerate().all(|(i, l)| l.starts_with(&format!("[{}] ", i + 1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grind_agrees_with_truth_tables(f in arb_formula(6)) {
        let s = atoms_theory();
        let mut t = goal_tree(&crate::syntax::print_expr(&f));
        let _ = apply_text(&mut t, "grind", &s).unwrap();
        prop_assert_eq!(t.is_proved(), oracle_valid(&Sequent::goal(f)));
    }

    #[test]
    fn assert_closes_only_tautologies(f in arb_formula(4), g in arb_formula(4)) {
        let seq = Sequent { antecedents: vec![f], consequents: vec![g] };
        prop_assert_eq!(is_tautology(&seq), oracle_valid(&seq));
    }

    #[test]
    fn children_entail_parent(f in arb_formula(5), cmds in proptest::collection::vec(0..5usize, 1..6)) {
        let s = atoms_theory();
        let mut t = goal_tree(&crate::syntax::print_expr(&f));
        for c in cmds {
            let Some(active) = t.active else { break };
            let cmd = ["flatten", "split", "assert", "prop", "postpone"][c];
            let r = apply_text(&mut t, cmd, &s).unwrap();
            let node = &t.nodes[active];
            prop_assert!(dense(&node.sequent));
            if matches!(r.outcome, Outcome::Closed | Outcome::Branched { .. }) {
                let kids: Vec<&Sequent> = node.children.iter().map(|&c| &t.nodes[c].sequent).collect();
                for k in &kids {
                    prop_assert!(dense(k));
                }
                if kids.iter().all(|k| oracle_valid(k)) {
                    prop_assert!(oracle_valid(&node.sequent), "{} from {}", cmd, node.sequent.render());
                }
            }
        }
    }

    #[test]
    fn command_then_undo_is_identity(f in arb_formula(4), cmds in proptest::collection::vec(0..6usize, 0..5), last in 0..6usize) {
        let s = atoms_theory();
        let names = ["flatten", "split", "assert", "prop", "grind", "postpone"];
        let mut t = goal_tree(&crate::syntax::print_expr(&f));
        for c in cmds {
            if t.active.is_some() {
                apply_text(&mut t, names[c], &s).unwrap();
            }
        }
        prop_assume!(t.active.is_some());
        let before = t.serialize();
        let history = t.history.len();
        apply_text(&mut t, names[last], &s).unwrap();
        if t.history.len() > history {
            apply_text(&mut t, "undo", &s).unwrap();
        }
        prop_assert_eq!(t.serialize(), before);
    }
}
