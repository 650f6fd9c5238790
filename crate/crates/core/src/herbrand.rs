//! Syntactic equality over finite trees: satisfiability, entailment and
//! projection of conjunctions of equations.
//!
//! A satisfiable store is kept in solved form, an idempotent substitution
//! whose right-hand sides mention no bound variable. Variable-variable
//! equations bind the variable with the larger name; callers that care about
//! a different orientation (global variables first) re-orient with
//! [`reorient`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{BuiltinConstraint, Subst, Term, Var};

#[derive(Clone, Default)]
pub struct SolvedForm {
    bindings: Subst,
    told: Vec<BuiltinConstraint>,
}

impl SolvedForm {
    pub fn bindings(&self) -> &Subst {
        &self.bindings
    }

    /// The conjuncts told so far, in order.
    pub fn told(&self) -> &[BuiltinConstraint] {
        &self.told
    }
}

/// A conjunction of built-in constraints: `Failed` or a solved form.
#[derive(Clone)]
pub enum BuiltinStore {
    Failed,
    Solved(SolvedForm),
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore::top()
    }
}

// Two stores are equal when their solved forms are; the told history is
// informational.
impl PartialEq for BuiltinStore {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (BuiltinStore::Failed, BuiltinStore::Failed) => true,
            (BuiltinStore::Solved(a), BuiltinStore::Solved(b)) => a.bindings == b.bindings,
            _ => false,
        }
    }
}

impl Eq for BuiltinStore {}

impl BuiltinStore {
    pub fn top() -> Self {
        BuiltinStore::Solved(SolvedForm::default())
    }

    pub fn from_bindings(bindings: Subst) -> Self {
        let mut s = BuiltinStore::top();
        for (v, t) in bindings {
            s = s.tell(&BuiltinConstraint::Eq(Term::Var(v), t));
        }
        s
    }

    pub fn from_constraints<'a>(cs: impl IntoIterator<Item = &'a BuiltinConstraint>) -> Self {
        BuiltinStore::top().tell_all(cs)
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, BuiltinStore::Failed)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, BuiltinStore::Solved(s) if s.bindings.is_empty())
    }

    pub fn bindings(&self) -> Option<&Subst> {
        match self {
            BuiltinStore::Solved(s) => Some(&s.bindings),
            BuiltinStore::Failed => None,
        }
    }

    pub fn apply(&self, t: &Term) -> Term {
        match self {
            BuiltinStore::Solved(s) => t.apply(&s.bindings),
            BuiltinStore::Failed => t.clone(),
        }
    }

    /// Variables mentioned by the solved form, bound or in a right-hand side.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        if let BuiltinStore::Solved(s) = self {
            for (v, t) in &s.bindings {
                out.insert(v.clone());
                t.collect_vars(&mut out);
            }
        }
        out
    }

    /// The solved form as a list of equations, `[fail]` when failed.
    pub fn constraints(&self) -> Vec<BuiltinConstraint> {
        match self {
            BuiltinStore::Failed => vec![BuiltinConstraint::False],
            BuiltinStore::Solved(s) => s
                .bindings
                .iter()
                .map(|(v, t)| BuiltinConstraint::Eq(Term::Var(v.clone()), t.clone()))
                .collect(),
        }
    }

    /// Conjoins `c`, returning `Failed` if the result is unsatisfiable.
    pub fn tell(&self, c: &BuiltinConstraint) -> BuiltinStore {
        let solved = match self {
            BuiltinStore::Failed => return BuiltinStore::Failed,
            BuiltinStore::Solved(s) => s,
        };
        let mut bindings = solved.bindings.clone();
        let ok = match c {
            BuiltinConstraint::True => true,
            BuiltinConstraint::False => false,
            BuiltinConstraint::Eq(l, r) => unify(&mut bindings, l, r, &|_| true),
        };
        if !ok {
            return BuiltinStore::Failed;
        }
        let mut told = solved.told.clone();
        told.push(c.clone());
        BuiltinStore::Solved(SolvedForm { bindings: make_idempotent(&bindings), told })
    }

    pub fn tell_all<'a>(&self, cs: impl IntoIterator<Item = &'a BuiltinConstraint>) -> BuiltinStore {
        let mut s = self.clone();
        for c in cs {
            s = s.tell(c);
            if s.is_failed() {
                break;
            }
        }
        s
    }

    /// Decides `CT |= forall(store -> exists locals. goal)`.
    pub fn entails(&self, goal: &[BuiltinConstraint], locals: &BTreeSet<Var>) -> bool {
        self.entails_with(goal, locals).is_some()
    }

    /// Like [`entails`](Self::entails), returning the bindings the goal forces
    /// on `locals` when it is entailed.
    pub fn entails_with(&self, goal: &[BuiltinConstraint], locals: &BTreeSet<Var>) -> Option<Subst> {
        let solved = match self {
            BuiltinStore::Failed => return Some(Subst::new()),
            BuiltinStore::Solved(s) => s,
        };
        let mut bindings = solved.bindings.clone();
        let bindable = |v: &Var| locals.contains(v);
        for c in goal {
            match c {
                BuiltinConstraint::True => {}
                BuiltinConstraint::False => return None,
                BuiltinConstraint::Eq(l, r) => {
                    if !unify(&mut bindings, l, r, &bindable) {
                        return None;
                    }
                }
            }
        }
        Some(
            locals
                .iter()
                .filter_map(|v| bindings.get(v).map(|_| (v.clone(), Term::Var(v.clone()).resolve(&bindings))))
                .collect(),
        )
    }

    /// Existentially quantifies every variable outside `keep`. The result
    /// binds only variables of `keep`; right-hand sides may still mention
    /// other (implicitly existential) variables.
    pub fn project(&self, keep: &BTreeSet<Var>) -> BuiltinStore {
        let solved = match self {
            BuiltinStore::Failed => return BuiltinStore::Failed,
            BuiltinStore::Solved(s) => s,
        };
        let oriented = reorient(&solved.bindings, |v| keep.contains(v));
        let bindings: Subst = oriented.into_iter().filter(|(v, _)| keep.contains(v)).collect();
        let told = bindings.iter().map(|(v, t)| BuiltinConstraint::Eq(Term::Var(v.clone()), t.clone())).collect();
        BuiltinStore::Solved(SolvedForm { bindings, told })
    }
}

impl fmt::Debug for BuiltinStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BuiltinStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinStore::Failed => f.write_str("fail"),
            BuiltinStore::Solved(s) => {
                let eqs = s.bindings.iter().map(|(v, t)| format!("{v} = {t}"));
                crate::term::write_list(f, eqs, "true")
            }
        }
    }
}

fn walk(bindings: &Subst, t: &Term) -> Term {
    let mut cur = t.clone();
    while let Term::Var(v) = &cur {
        match bindings.get(v) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

fn occurs_resolved(bindings: &Subst, var: &Var, t: &Term) -> bool {
    match walk(bindings, t) {
        Term::Var(v) => &v == var,
        Term::App(_, args) => args.iter().any(|a| occurs_resolved(bindings, var, a)),
    }
}

/// Robinson unification with occurs check over a triangular substitution.
/// Only variables accepted by `bindable` may receive a binding.
fn unify(bindings: &mut Subst, a: &Term, b: &Term, bindable: &dyn Fn(&Var) -> bool) -> bool {
    let a = walk(bindings, a);
    let b = walk(bindings, b);
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), Term::Var(y)) => {
            let (hi, lo) = if x > y { (x, y) } else { (y, x) };
            if bindable(hi) {
                bindings.insert(hi.clone(), Term::Var(lo.clone()));
                true
            } else if bindable(lo) {
                bindings.insert(lo.clone(), Term::Var(hi.clone()));
                true
            } else {
                false
            }
        }
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if !bindable(x) || occurs_resolved(bindings, x, t) {
                return false;
            }
            bindings.insert(x.clone(), t.clone());
            true
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(bindings, x, y, bindable))
        }
    }
}

fn make_idempotent(bindings: &Subst) -> Subst {
    bindings.iter().map(|(v, t)| (v.clone(), t.resolve(bindings))).collect()
}

/// Re-orients variable-variable bindings of an idempotent substitution so
/// that each class of aliased variables is represented by its least
/// preferred member (by name), when it has one.
pub fn reorient(bindings: &Subst, preferred: impl Fn(&Var) -> bool) -> Subst {
    // root variable -> members aliased to it
    let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
    for (v, t) in bindings {
        if let Term::Var(root) = t {
            classes.entry(root.clone()).or_default().push(v.clone());
        }
    }
    let mut rename: BTreeMap<Var, Var> = BTreeMap::new();
    for (root, members) in &classes {
        let rep = members.iter().chain(std::iter::once(root)).filter(|m| preferred(m)).min();
        if let Some(rep) = rep.filter(|rep| *rep != root) {
            rename.insert(root.clone(), rep.clone());
        }
    }
    if rename.is_empty() {
        return bindings.clone();
    }
    let mut out = Subst::new();
    for (v, t) in bindings {
        let t = t.rename(&rename);
        if t != Term::Var(v.clone()) {
            out.insert(v.clone(), t);
        }
    }
    for (root, rep) in rename {
        out.insert(root, Term::Var(rep));
    }
    out
}

pub fn tell(store: &BuiltinStore, c: &BuiltinConstraint) -> BuiltinStore {
    store.tell(c)
}

pub fn entails(store: &BuiltinStore, goal: &[BuiltinConstraint], locals: &BTreeSet<Var>) -> bool {
    store.entails(goal, locals)
}

pub fn project(store: &BuiltinStore, keep: &BTreeSet<Var>) -> BuiltinStore {
    store.project(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_goal;

    fn eqs(s: &str) -> Vec<BuiltinConstraint> {
        parse_goal(s).unwrap().builtin
    }

    fn store(s: &str) -> BuiltinStore {
        BuiltinStore::from_constraints(&eqs(s))
    }

    fn vars(names: &[&str]) -> BTreeSet<Var> {
        names.iter().map(Var::new).collect()
    }

    #[test]
    fn single_binding() {
        let s = store("X = f(Y)");
        assert_eq!(s.to_string(), "X = f(Y)");
    }

    #[test]
    fn occurs_check_fails() {
        let s = store("X = f(Y)").tell(&eqs("Y = X")[0]);
        assert!(s.is_failed());
        assert!(store("X = f(X)").is_failed());
    }

    #[test]
    fn failed_absorbs_tells() {
        let s = store("a = b");
        assert!(s.is_failed());
        assert!(s.tell(&BuiltinConstraint::True).is_failed());
    }

    #[test]
    fn aliasing_store_from_transitivity_variant() {
        let s = store("A = A_1, B = B_1, A = C_1");
        let b = s.bindings().unwrap();
        assert_eq!(b.get(&Var::new("A_1")), Some(&Term::var("A")));
        assert_eq!(b.get(&Var::new("B_1")), Some(&Term::var("B")));
        assert_eq!(b.get(&Var::new("C_1")), Some(&Term::var("A")));
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn solved_form_is_idempotent() {
        let s = store("X = f(Y), Y = g(Z), Z = a");
        let b = s.bindings().unwrap();
        for t in b.values() {
            assert_eq!(t.apply(b), *t);
        }
        assert_eq!(b[&Var::new("X")].to_string(), "f(g(a))");
    }

    #[test]
    fn entailment() {
        assert!(store("X = a").entails(&eqs("X = a"), &BTreeSet::new()));
        assert!(!BuiltinStore::top().entails(&eqs("X = a"), &BTreeSet::new()));
        assert!(BuiltinStore::top().entails(&eqs("Y = f(X)"), &vars(&["Y"])));
        assert!(!BuiltinStore::top().entails(&eqs("X = Y"), &BTreeSet::new()));
        assert!(store("X = Y").entails(&eqs("Y = X"), &BTreeSet::new()));
        assert!(!BuiltinStore::top().entails(&eqs("Y = f(Y)"), &vars(&["Y"])));
    }

    #[test]
    fn entails_with_reports_local_bindings() {
        let got = store("X = f(a)").entails_with(&eqs("X = f(Z)"), &vars(&["Z"])).unwrap();
        assert_eq!(got.get(&Var::new("Z")), Some(&Term::atom("a")));
    }

    #[test]
    fn projection() {
        let p = store("X = f(Z), Z = a").project(&vars(&["X"]));
        assert_eq!(p.to_string(), "X = f(a)");
        assert!(store("Z = a").project(&BTreeSet::new()).is_top());
        let p = store("A = A_1, B = B_1, A = C_1").project(&vars(&["A", "B"]));
        assert!(p.is_top());
        // the alias survives when both ends are kept
        let p = store("A = B").project(&vars(&["A", "B"]));
        assert_eq!(p.to_string(), "B = A");
    }

    #[test]
    fn reorient_prefers_given_vars() {
        let b = store("Z = Y, X = f(Y)");
        let r = reorient(b.bindings().unwrap(), |v| v.name() == "Z");
        assert_eq!(r.get(&Var::new("Y")), Some(&Term::var("Z")));
        assert_eq!(r.get(&Var::new("X")).unwrap().to_string(), "f(Z)");
        assert!(!r.contains_key(&Var::new("Z")));
    }
}
