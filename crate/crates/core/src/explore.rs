//! Bounded exploration of the equivalence-based semantics, and the checks
//! that relate its reachable states to executions with persistent
//! constraints.
//!
//! Without persistent constraints a propagation rule can fire on the same
//! constraints forever, so every exploration here takes explicit depth and
//! state budgets.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::bang::{self, check_guard, fire as fire_bang, match_heads, Matching, Mode, RunOptions};
use crate::error::EngineError;
use crate::parser::Goal;
use crate::state::{embed_multiset, match_bindings, normalize_e, AlphaMap, EState, NormalForm, NormalState};
use crate::syntax::{check_range_restricted, Program};
use crate::term::{Term, UserConstraint};

/// Limits for a bounded search. Both are mandatory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_depth: usize,
    pub max_states: usize,
}

impl Budget {
    pub fn new(max_depth: usize, max_states: usize) -> Self {
        Budget { max_depth, max_states }
    }
}

/// `<goal ; goal built-ins ; vars(goal)>`
pub fn init_e(goal: &Goal) -> EState {
    let s = bang::init_state(goal);
    EState::new(s.linear, s.builtins, s.globals)
}

/// One representative per equivalence class reachable in one step.
pub fn successors_e(state: &EState, program: &Program) -> Vec<(NormalForm, EState)> {
    let Some(bindings) = state.builtins.bindings() else {
        return Vec::new();
    };
    let store: Vec<UserConstraint> = state.store.iter().map(|c| c.apply(bindings)).collect();
    let avoid = state.vars();
    let mut seen = BTreeMap::new();
    for (rule_index, rule) in program.rules.iter().enumerate() {
        let fresh = rule.freshen(&avoid);
        let heads: Vec<&UserConstraint> = fresh.heads().collect();
        for (slots, theta) in match_heads(&heads, &store, &[], false) {
            let Some(theta) = check_guard(&state.builtins, &fresh, theta) else {
                continue;
            };
            // A firing in which every head is linear behaves exactly like a
            // plain rule application.
            let m = Matching { rule_index, rule: fresh.clone(), slots, theta, mode: Mode::Linear };
            let as_bang = crate::state::BangState {
                linear: state.store.clone(),
                persistent: Vec::new(),
                builtins: state.builtins.clone(),
                globals: state.globals.clone(),
            };
            let post = fire_bang(&as_bang, &m);
            let next = EState::new(post.linear, post.builtins, post.globals);
            seen.entry(normalize_e(&next)).or_insert(next);
        }
    }
    seen.into_iter().collect()
}

/// The classes reached by a bounded breadth-first search.
#[derive(Clone, Debug, Default)]
pub struct Reachable {
    /// Each class with the depth at which it was first reached.
    pub states: BTreeMap<NormalForm, usize>,
    /// `sizes[d]` counts the classes reached within `d` steps.
    pub sizes: Vec<usize>,
    /// Set when the state budget stopped the search before `max_depth`.
    pub truncated: bool,
}

impl Reachable {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of classes within `depth` steps, if that depth was completed.
    pub fn size_at(&self, depth: usize) -> Option<usize> {
        self.sizes.get(depth).copied()
    }
}

pub fn reachable(initial: &EState, program: &Program, budget: Budget) -> Reachable {
    let mut out = Reachable::default();
    search_e(initial, program, budget, |nf, depth| {
        out.states.insert(nf.clone(), depth);
        false
    });
    let mut by_depth = vec![0usize; budget.max_depth + 1];
    for &d in out.states.values() {
        by_depth[d] += 1;
    }
    out.truncated = out.states.len() >= budget.max_states;
    let mut total = 0;
    for n in by_depth {
        total += n;
        out.sizes.push(total);
    }
    if out.truncated {
        // the deepest level was cut short
        let last = out.states.values().copied().max().unwrap_or(0);
        out.sizes.truncate(last);
    }
    out
}

/// How a bounded search ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchEnd {
    /// The visitor accepted a state first reached at this depth.
    Found(usize),
    /// Every reachable class was visited.
    Exhausted,
    /// Depth or state budget reached with states left unexplored.
    Budget,
}

/// Breadth-first search calling `visit(class, depth)` once per class until
/// it returns `true`.
pub fn search_e(
    initial: &EState,
    program: &Program,
    budget: Budget,
    mut visit: impl FnMut(&NormalForm, usize) -> bool,
) -> SearchEnd {
    let first = normalize_e(initial);
    if visit(&first, 0) {
        return SearchEnd::Found(0);
    }
    let mut depth = BTreeMap::new();
    depth.insert(first, 0usize);
    let mut queue = VecDeque::from([(initial.clone(), 0usize)]);
    let mut cut = false;
    while let Some((state, d)) = queue.pop_front() {
        let succ = successors_e(&state, program);
        if d == budget.max_depth {
            cut |= succ.iter().any(|(nf, _)| !depth.contains_key(nf));
            continue;
        }
        for (nf, next) in succ {
            if depth.contains_key(&nf) {
                continue;
            }
            if depth.len() >= budget.max_states {
                return SearchEnd::Budget;
            }
            if visit(&nf, d + 1) {
                return SearchEnd::Found(d + 1);
            }
            depth.insert(nf, d + 1);
            queue.push_back((next, d + 1));
        }
    }
    if cut {
        SearchEnd::Budget
    } else {
        SearchEnd::Exhausted
    }
}

fn terms(cs: &[UserConstraint]) -> Vec<Term> {
    cs.iter().map(UserConstraint::to_term).collect()
}

fn states<'a>(a: &'a NormalForm, b: &'a NormalForm) -> Result<(&'a NormalState, &'a NormalState), bool> {
    match (a, b) {
        (NormalForm::Failed, NormalForm::Failed) => Err(true),
        (NormalForm::State(a), NormalForm::State(b)) => Ok((a, b)),
        _ => Err(false),
    }
}

/// `e` has the built-in store of `bang` and a store containing
/// `L ⊎ n·P`.
pub fn soundness_witness(bang: &NormalForm, e: &NormalForm, n: usize) -> bool {
    let (b, e) = match states(bang, e) {
        Ok(pair) => pair,
        Err(verdict) => return verdict,
    };
    let Some(map) = match_bindings(b, e, &AlphaMap::default()) else {
        return false;
    };
    let mut items = terms(&b.linear);
    for _ in 0..n {
        items.extend(terms(&b.persistent));
    }
    let pool = terms(&e.linear);
    if items.len() > pool.len() {
        return false;
    }
    let mut used = vec![false; pool.len()];
    embed_multiset(&items, &pool, &mut used, &map, &mut |_, _| true)
}

/// `bang` has the built-in store of `e`, and `L ⊆ G' ⊆ P ⊎ L` where the
/// persistent store is read as a set: every constraint of `G'` not covered
/// by `L` is a copy of some persistent constraint.
pub fn completeness_witness(e: &NormalForm, bang: &NormalForm) -> bool {
    let (e, b) = match states(e, bang) {
        Ok(pair) => pair,
        Err(verdict) => return verdict,
    };
    let Some(map) = match_bindings(b, e, &AlphaMap::default()) else {
        return false;
    };
    let items = terms(&b.linear);
    let pool = terms(&e.linear);
    let persistent = terms(&b.persistent);
    let mut used = vec![false; pool.len()];
    embed_multiset(&items, &pool, &mut used, &map, &mut |m, used| {
        let rest: Vec<&Term> = pool.iter().zip(used).filter(|(_, u)| !**u).map(|(t, _)| t).collect();
        covered(&rest, &persistent, m)
    })
}

fn covered(rest: &[&Term], persistent: &[Term], map: &AlphaMap) -> bool {
    let Some((first, rest)) = rest.split_first() else {
        return true;
    };
    persistent.iter().any(|p| {
        let mut m = map.clone();
        m.unify(p, first) && covered(rest, persistent, &m)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Holds => "holds",
            Outcome::Violated => "violated",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

fn require_range_restricted(program: &Program) -> Result<(), EngineError> {
    let d = check_range_restricted(program);
    if d.is_empty() {
        Ok(())
    } else {
        Err(EngineError::NotRangeRestricted(d))
    }
}

/// For every quiescent state reachable with persistent constraints (up to
/// `bang_budget`), searches the equivalence-based semantics for a state
/// holding the linear store plus `n` copies of the persistent store.
pub fn check_soundness(
    goal: &Goal,
    program: &Program,
    n: usize,
    bang_budget: Budget,
    e_budget: Budget,
) -> Result<Outcome, EngineError> {
    require_range_restricted(program)?;
    let space = bang::explore(&bang::init_state(goal), program, bang_budget.max_depth, bang_budget.max_states);
    if space.quiescent.is_empty() {
        return Ok(Outcome::Inconclusive);
    }
    let initial = init_e(goal);
    let mut outcome = if space.truncated { Outcome::Inconclusive } else { Outcome::Holds };
    for q in &space.quiescent {
        match search_e(&initial, program, e_budget, |nf, _| soundness_witness(q, nf, n)) {
            SearchEnd::Found(_) => {}
            SearchEnd::Exhausted => return Ok(Outcome::Violated),
            SearchEnd::Budget => outcome = Outcome::Inconclusive,
        }
    }
    Ok(outcome)
}

/// For every class reachable in the equivalence-based semantics within
/// `e_budget`, searches the derivations with persistent constraints (up to
/// `bang_budget`) for a matching state.
pub fn check_completeness(
    goal: &Goal,
    program: &Program,
    e_budget: Budget,
    bang_budget: Budget,
) -> Result<Outcome, EngineError> {
    require_range_restricted(program)?;
    let space = bang::explore(&bang::init_state(goal), program, bang_budget.max_depth, bang_budget.max_states);
    let reached = reachable(&init_e(goal), program, e_budget);
    let mut outcome = if reached.truncated { Outcome::Inconclusive } else { Outcome::Holds };
    for e in reached.states.keys() {
        if !space.depth.keys().any(|b| completeness_witness(e, b)) {
            if !space.truncated {
                return Ok(Outcome::Violated);
            }
            outcome = Outcome::Inconclusive;
        }
    }
    Ok(outcome)
}

/// Runs with persistent constraints and reports the single derivation's
/// final state, for callers that only need one quiescent state.
pub fn quiescent_state(goal: &Goal, program: &Program, max_steps: usize) -> Result<Option<NormalForm>, EngineError> {
    let r = bang::run(goal, program, &RunOptions::with_max_steps(max_steps))?;
    Ok((r.verdict == bang::Verdict::Quiescent).then(|| r.final_state.normalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_goal, parse_program};

    const HULL: &str = "t @ e(X,Y), e(Y,Z) ==> e(X,Z).";

    fn e_state(g: &str) -> EState {
        init_e(&parse_goal(g).unwrap())
    }

    fn nf(g: &str) -> NormalForm {
        normalize_e(&e_state(g))
    }

    #[test]
    fn two_cycle_successors() {
        let p = parse_program(HULL).unwrap();
        let succ: Vec<NormalForm> = successors_e(&e_state("e(A,B), e(B,A)"), &p).into_iter().map(|(n, _)| n).collect();
        assert_eq!(succ.len(), 2);
        assert!(succ.contains(&nf("e(A,B), e(B,A), e(A,A)")));
        assert!(succ.contains(&nf("e(A,B), e(B,A), e(B,B)")));
    }

    #[test]
    fn empty_store_has_no_successors() {
        let p = parse_program(HULL).unwrap();
        assert!(successors_e(&e_state(""), &p).is_empty());
    }

    #[test]
    fn symmetric_matchings_collapse() {
        let p = parse_program("r1 @ a ==> b.").unwrap();
        let succ = successors_e(&e_state("a, a"), &p);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, nf("a, a, b"));
    }

    #[test]
    fn depth_zero_is_the_start() {
        let p = parse_program(HULL).unwrap();
        let r = reachable(&e_state("e(A,B), e(B,A)"), &p, Budget::new(0, 100));
        assert_eq!(r.len(), 1);
        assert!(r.states.contains_key(&nf("e(A,B), e(B,A)")));
    }

    #[test]
    fn depth_one_adds_the_loops() {
        let p = parse_program(HULL).unwrap();
        let r = reachable(&e_state("e(A,B), e(B,A)"), &p, Budget::new(1, 100));
        assert_eq!(r.len(), 3);
        assert_eq!(r.sizes, vec![1, 3]);
    }

    #[test]
    fn two_cycle_keeps_growing() {
        let p = parse_program(HULL).unwrap();
        let r = reachable(&e_state("e(A,B), e(B,A)"), &p, Budget::new(4, 100_000));
        assert!(!r.truncated);
        assert!(r.sizes.windows(2).all(|w| w[0] < w[1]), "{:?}", r.sizes);
    }

    #[test]
    fn state_budget_truncates() {
        let p = parse_program(HULL).unwrap();
        let r = reachable(&e_state("e(A,B), e(B,A)"), &p, Budget::new(10, 5));
        assert!(r.truncated);
        assert!(r.len() <= 5);
    }

    #[test]
    fn witnesses() {
        let bang = crate::state::BangState::new(
            parse_goal("a").unwrap().user,
            parse_goal("b").unwrap().user,
            Default::default(),
            Default::default(),
        )
        .normalize();
        assert!(soundness_witness(&bang, &nf("a, b, b, c"), 2));
        assert!(!soundness_witness(&bang, &nf("a, b, c"), 2));
        assert!(completeness_witness(&nf("a, b, b"), &bang));
        assert!(!completeness_witness(&nf("a, b, c"), &bang));
        assert!(!completeness_witness(&nf("b"), &bang));
        assert!(soundness_witness(&NormalForm::Failed, &NormalForm::Failed, 3));
    }

    #[test]
    fn soundness_and_completeness_on_the_indirect_program() {
        let p = parse_program("r1 @ a ==> b.\nr2 @ b <=> c.").unwrap();
        let g = parse_goal("a").unwrap();
        for n in 1..=2 {
            assert_eq!(check_soundness(&g, &p, n, Budget::new(16, 1000), Budget::new(8, 10_000)).unwrap(), Outcome::Holds);
        }
        // a, b, b, b, c, c, c needs three firings of each rule plus three more of r1
        let shallow = check_soundness(&g, &p, 3, Budget::new(16, 1000), Budget::new(8, 10_000)).unwrap();
        assert_eq!(shallow, Outcome::Inconclusive);
        assert_eq!(check_soundness(&g, &p, 3, Budget::new(16, 1000), Budget::new(9, 10_000)).unwrap(), Outcome::Holds);
        assert_eq!(check_completeness(&g, &p, Budget::new(4, 10_000), Budget::new(8, 1000)).unwrap(), Outcome::Holds);
    }

    #[test]
    fn soundness_and_completeness_on_the_two_cycle() {
        let p = parse_program(HULL).unwrap();
        let g = parse_goal("e(A,B), e(B,A)").unwrap();
        assert_eq!(check_soundness(&g, &p, 1, Budget::new(16, 1000), Budget::new(8, 10_000)).unwrap(), Outcome::Holds);
        assert_eq!(check_completeness(&g, &p, Budget::new(3, 10_000), Budget::new(8, 1000)).unwrap(), Outcome::Holds);
    }
}
