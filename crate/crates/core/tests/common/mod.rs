//! Random programs, goals and graphs shared by the integration tests.
#![allow(dead_code)]

pub mod states;

use std::collections::BTreeSet;

use chr_core::bang::{self, RunOptions, Verdict};
use chr_core::encode::{is_trivially_pathological, suspected_pathological};
use chr_core::{BuiltinConstraint, Goal, Program, Rule, Term, UserConstraint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Constraint symbols in stratification order: a simplification body only
/// uses symbols after every symbol it removes, so linear rewriting ends.
pub const SYMBOLS: [(&str, usize); 6] = [("a", 0), ("p", 1), ("q", 1), ("r", 2), ("b", 0), ("s", 1)];
const HEAD_VARS: [&str; 3] = ["X", "Y", "Z"];
const CONSTANTS: [&str; 2] = ["k", "m"];
const GOAL_VARS: [&str; 2] = ["A", "B"];

fn pick_symbol(rng: &mut ChaCha8Rng, after: usize) -> Option<(usize, &'static str, usize)> {
    if after >= SYMBOLS.len() {
        return None;
    }
    let i = rng.gen_range(after..SYMBOLS.len());
    Some((i, SYMBOLS[i].0, SYMBOLS[i].1))
}

fn head(rng: &mut ChaCha8Rng, symbol: &str, arity: usize) -> UserConstraint {
    let args = (0..arity)
        .map(|_| {
            if rng.gen_bool(0.8) {
                Term::var(HEAD_VARS.choose(rng).unwrap())
            } else {
                Term::atom(CONSTANTS.choose(rng).unwrap())
            }
        })
        .collect();
    UserConstraint::new(symbol, args)
}

fn term_over(rng: &mut ChaCha8Rng, vars: &[Term]) -> Term {
    if !vars.is_empty() && rng.gen_bool(0.8) {
        vars.choose(rng).unwrap().clone()
    } else {
        Term::atom(CONSTANTS.choose(rng).unwrap())
    }
}

/// One range-restricted rule: propagation, simplification or simpagation.
pub fn random_rule(rng: &mut ChaCha8Rng, name: &str) -> Rule {
    let kind = rng.gen_range(0..3);
    let (n_kept, n_removed) = match kind {
        0 => (rng.gen_range(1..=2), 0),
        1 => (0, rng.gen_range(1..=2)),
        _ => (1, 1),
    };
    let mut removed_max = 0;
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for _ in 0..n_kept {
        let (_, s, n) = pick_symbol(rng, 0).unwrap();
        kept.push(head(rng, s, n));
    }
    for _ in 0..n_removed {
        let (i, s, n) = pick_symbol(rng, 0).unwrap();
        removed_max = removed_max.max(i + 1);
        removed.push(head(rng, s, n));
    }
    let mut rule = Rule { name: Some(name.to_string()), kept, removed, ..Rule::default() };
    let vars: Vec<Term> = rule.head_vars().into_iter().map(Term::Var).collect();
    if !vars.is_empty() && rng.gen_bool(0.25) {
        let lhs = vars.choose(rng).unwrap().clone();
        let rhs = term_over(rng, &vars);
        rule.guard.push(BuiltinConstraint::Eq(lhs, rhs));
    }
    let floor = if n_removed > 0 { removed_max } else { 0 };
    let n_body = rng.gen_range(if n_removed > 0 { 0 } else { 1 }..=2);
    for _ in 0..n_body {
        if let Some((_, s, n)) = pick_symbol(rng, floor) {
            let args = (0..n).map(|_| term_over(rng, &vars)).collect();
            rule.body_user.push(UserConstraint::new(s, args));
        }
    }
    if !vars.is_empty() && rng.gen_bool(0.1) {
        let lhs = vars.choose(rng).unwrap().clone();
        rule.body_builtin.push(BuiltinConstraint::Eq(lhs, Term::atom(CONSTANTS.choose(rng).unwrap())));
    }
    rule
}

pub fn random_program(rng: &mut ChaCha8Rng, max_rules: usize) -> Program {
    let n = rng.gen_range(1..=max_rules);
    Program::new((1..=n).map(|i| random_rule(rng, &format!("r{i}"))).collect()).unwrap()
}

pub fn random_goal(rng: &mut ChaCha8Rng, max_constraints: usize) -> Goal {
    let n = rng.gen_range(1..=max_constraints);
    let user = (0..n)
        .map(|_| {
            let (_, s, k) = pick_symbol(rng, 0).unwrap();
            let args = (0..k)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        Term::var(GOAL_VARS.choose(rng).unwrap())
                    } else {
                        Term::atom(CONSTANTS.choose(rng).unwrap())
                    }
                })
                .collect();
            UserConstraint::new(s, args)
        })
        .collect();
    let mut builtin = Vec::new();
    if rng.gen_bool(0.1) {
        builtin.push(BuiltinConstraint::Eq(Term::var("A"), Term::atom("k")));
    }
    Goal { user, builtin }
}

pub fn non_pathological(p: &Program) -> bool {
    !p.rules.iter().any(is_trivially_pathological) && suspected_pathological(p).is_empty()
}

/// `count` seeded program/goal pairs whose run with persistent constraints
/// fires at least once and quiesces within `max_steps`.
pub fn corpus(seed: u64, count: usize, max_rules: usize, max_goal: usize, max_steps: usize) -> Vec<(Program, Goal)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let p = random_program(&mut rng, max_rules);
        let g = random_goal(&mut rng, max_goal);
        if !non_pathological(&p) {
            continue;
        }
        let r = bang::run(&g, &p, &RunOptions::with_max_steps(max_steps)).unwrap();
        if r.verdict == Verdict::Quiescent && r.transitions() > 0 {
            out.push((p, g));
        }
    }
    out
}

/// A directed graph on nodes `0..n` as an edge set.
pub type Graph = BTreeSet<(usize, usize)>;

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Graph {
    let mut g = Graph::new();
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                g.insert((i, j));
            }
        }
    }
    g
}

pub fn complete_graph(n: usize) -> Graph {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

pub fn node(i: usize) -> Term {
    Term::var(["A", "B", "C", "D", "E", "F"][i])
}

pub fn edge(i: usize, j: usize) -> UserConstraint {
    UserConstraint::new("e", vec![node(i), node(j)])
}

pub fn graph_goal(g: &Graph) -> Goal {
    Goal { user: g.iter().map(|&(i, j)| edge(i, j)).collect(), builtin: Vec::new() }
}

/// Floyd–Warshall reachability over `n` nodes.
pub fn closure(g: &Graph, n: usize) -> Graph {
    let mut reach = vec![vec![false; n]; n];
    for &(i, j) in g {
        reach[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| reach[i][j]).collect()
}

/// Edges the transitivity rule can derive, by brute-force fixpoint. Two
/// premises may be one and the same constraint only when it is derived
/// (persistent), never when it is a single linear goal edge.
pub fn derivable(g: &Graph) -> Graph {
    let mut derived = Graph::new();
    loop {
        let known: Graph = g.union(&derived).copied().collect();
        let mut next = derived.clone();
        for &(i, k) in &known {
            for &(k2, j) in &known {
                let same_linear = (i, k) == (k2, j) && !derived.contains(&(i, k));
                if k == k2 && !same_linear {
                    next.insert((i, j));
                }
            }
        }
        if next == derived {
            return derived;
        }
        derived = next;
    }
}

pub fn edges_of(cs: &[UserConstraint]) -> Graph {
    let index = |t: &Term| ["A", "B", "C", "D", "E", "F"].iter().position(|n| Term::var(n) == *t).unwrap();
    cs.iter().map(|c| (index(&c.args[0]), index(&c.args[1]))).collect()
}
