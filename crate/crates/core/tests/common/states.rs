//! Random states and the equivalence axioms as literal rewrites.

use std::collections::BTreeSet;

use chr_core::{BangState, BuiltinConstraint, BuiltinStore, EState, Term, UserConstraint, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const ATOMS: [&str; 2] = ["k", "m"];
const SYMBOLS: [(&str, usize); 4] = [("a", 0), ("p", 1), ("q", 1), ("r", 2)];

pub fn random_term(rng: &mut ChaCha8Rng, depth: usize, ground: bool) -> Term {
    match rng.gen_range(0..if depth == 0 { 2 } else { 3 }) {
        0 if !ground => Term::var(VARS.choose(rng).unwrap()),
        2 => Term::app("f", vec![random_term(rng, depth - 1, ground)]),
        _ => Term::atom(ATOMS.choose(rng).unwrap()),
    }
}

pub fn random_constraint(rng: &mut ChaCha8Rng, ground: bool) -> UserConstraint {
    let (s, n) = *SYMBOLS.choose(rng).unwrap();
    UserConstraint::new(s, (0..n).map(|_| random_term(rng, 1, ground)).collect())
}

pub fn random_constraints(rng: &mut ChaCha8Rng, max: usize, ground: bool) -> Vec<UserConstraint> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| random_constraint(rng, ground)).collect()
}

/// A satisfiable store built from up to two equations.
pub fn random_store(rng: &mut ChaCha8Rng) -> BuiltinStore {
    loop {
        let n = rng.gen_range(0..=2);
        let eqs: Vec<BuiltinConstraint> = (0..n)
            .map(|_| BuiltinConstraint::Eq(Term::var(VARS.choose(rng).unwrap()), random_term(rng, 1, false)))
            .collect();
        let s = BuiltinStore::from_constraints(&eqs);
        if !s.is_failed() {
            return s;
        }
    }
}

fn random_globals(rng: &mut ChaCha8Rng) -> BTreeSet<Var> {
    VARS.iter().filter(|_| rng.gen_bool(0.5)).map(Var::new).collect()
}

pub fn random_bang(rng: &mut ChaCha8Rng) -> BangState {
    BangState::new(random_constraints(rng, 3, false), random_constraints(rng, 3, false), random_store(rng), random_globals(rng))
}

pub fn random_e(rng: &mut ChaCha8Rng) -> EState {
    EState::new(random_constraints(rng, 4, false), random_store(rng), random_globals(rng))
}

fn substitute_one(rng: &mut ChaCha8Rng, cs: &[UserConstraint], store: &BuiltinStore) -> Vec<UserConstraint> {
    let bindings = store.bindings().unwrap();
    let Some((v, t)) = bindings.iter().collect::<Vec<_>>().choose(rng).map(|(v, t)| ((*v).clone(), (*t).clone())) else {
        return cs.to_vec();
    };
    let single = [(v, t)].into_iter().collect();
    cs.iter().map(|c| if rng.gen_bool(0.7) { c.apply(&single) } else { c.clone() }).collect()
}

fn fresh_name(taken: &BTreeSet<Var>, base: &str) -> Var {
    (0..).map(|i| Var::new(format!("{base}{i}"))).find(|v| !taken.contains(v)).unwrap()
}

/// Replaces a variable by its binding in some constraints.
pub fn e_substitution(rng: &mut ChaCha8Rng, s: &EState) -> EState {
    EState { store: substitute_one(rng, &s.store, &s.builtins), ..s.clone() }
}

/// Conjoins an equation over a variable that occurs nowhere else, or
/// restates the store from its solved form in a different order.
pub fn e_store_transformation(rng: &mut ChaCha8Rng, s: &EState) -> EState {
    let mut eqs = s.builtins.constraints();
    if rng.gen_bool(0.5) {
        let fresh = fresh_name(&s.vars(), "S");
        eqs.push(BuiltinConstraint::Eq(Term::Var(fresh), random_term(rng, 1, false)));
    }
    eqs.shuffle(rng);
    let eqs: Vec<BuiltinConstraint> = eqs
        .into_iter()
        .map(|e| match e {
            BuiltinConstraint::Eq(l, r) if rng.gen_bool(0.5) => BuiltinConstraint::Eq(r, l),
            e => e,
        })
        .collect();
    EState { builtins: BuiltinStore::from_constraints(&eqs), ..s.clone() }
}

/// Adds a global variable that occurs nowhere.
pub fn e_global_omission(s: &EState) -> EState {
    let mut out = s.clone();
    out.globals.insert(fresh_name(&s.vars(), "G"));
    out
}

/// Two failed states with unrelated stores.
pub fn e_failed_pair(rng: &mut ChaCha8Rng) -> (EState, EState) {
    let v = random_globals(rng);
    (
        EState::new(random_constraints(rng, 3, false), BuiltinStore::Failed, v.clone()),
        EState::new(random_constraints(rng, 3, false), BuiltinStore::Failed, v),
    )
}

pub fn bang_substitution(rng: &mut ChaCha8Rng, s: &BangState) -> BangState {
    BangState {
        linear: substitute_one(rng, &s.linear, &s.builtins),
        persistent: substitute_one(rng, &s.persistent, &s.builtins),
        ..s.clone()
    }
}

pub fn bang_store_transformation(rng: &mut ChaCha8Rng, s: &BangState) -> BangState {
    let as_e = EState::new(s.linear.iter().chain(&s.persistent).cloned().collect(), s.builtins.clone(), s.globals.clone());
    BangState { builtins: e_store_transformation(rng, &as_e).builtins, ..s.clone() }
}

pub fn bang_global_omission(s: &BangState) -> BangState {
    let mut out = s.clone();
    out.globals.insert(fresh_name(&s.vars(), "G"));
    out
}

pub fn bang_failed_pair(rng: &mut ChaCha8Rng) -> (BangState, BangState) {
    let v = random_globals(rng);
    (
        BangState::new(random_constraints(rng, 3, false), vec![], BuiltinStore::Failed, v.clone()),
        BangState::new(vec![], random_constraints(rng, 3, false), BuiltinStore::Failed, v),
    )
}

/// A state with a non-empty persistent store and the same state with one
/// persistent constraint duplicated, the copy possibly spelled with the
/// store's bindings applied.
pub fn bang_contraction(rng: &mut ChaCha8Rng, s: &BangState) -> (BangState, BangState) {
    let mut base = s.clone();
    if base.persistent.is_empty() {
        base.persistent.push(random_constraint(rng, false));
    }
    let c = base.persistent.choose(rng).unwrap().clone();
    let copy = if rng.gen_bool(0.5) { c.apply(base.builtins.bindings().unwrap()) } else { c };
    let mut out = base.clone();
    out.persistent.insert(rng.gen_range(0..=out.persistent.len()), copy);
    (base, out)
}

/// Swaps variable names consistently, leaving the globals' names alone
/// only when they are not renamed.
pub fn rename_all(s: &BangState, map: &std::collections::BTreeMap<Var, Var>) -> BangState {
    chr_core::state::rename_bang(s, map)
}

/// A ground state: `(L, P)` with no variables.
pub fn random_ground_bang(rng: &mut ChaCha8Rng) -> BangState {
    BangState::new(random_constraints(rng, 3, true), random_constraints(rng, 3, true), BuiltinStore::top(), BTreeSet::new())
}

/// Sorted multiset of `L` and sorted set of `P`.
pub fn ground_key(s: &BangState) -> (Vec<UserConstraint>, Vec<UserConstraint>) {
    let mut l = s.linear.clone();
    l.sort();
    let p: BTreeSet<UserConstraint> = s.persistent.iter().cloned().collect();
    (l, p.into_iter().collect())
}
