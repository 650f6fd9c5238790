//! Execution states and their equivalence.
//!
//! Equivalence of states is the least equivalence closed under a handful of
//! axioms: equations act as substitutions, the built-in store may be replaced
//! by any store equivalent modulo strictly local variables, non-occurring
//! global variables may be dropped, all failed states coincide, and (for the
//! persistent store only) duplicates contract. For the Herbrand theory these
//! axioms admit a canonical representative, computed by [`normalize_bang`] and
//! [`normalize_e`]. Two states are equivalent iff their normal forms are
//! equal.
//!
//! Local variables in a normal form are renamed `_0, _1, ...` by a canonical
//! labeling that explores every tie between structurally identical positions
//! and keeps the least encoding, so the result does not depend on the names
//! the state happened to use.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::herbrand::{reorient, BuiltinStore};
use crate::term::{write_list, Subst, Symbol, Term, UserConstraint, Var};

/// `<L ; P ; B ; V>`: linear store, persistent store, built-ins, globals.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct BangState {
    pub linear: Vec<UserConstraint>,
    pub persistent: Vec<UserConstraint>,
    pub builtins: BuiltinStore,
    pub globals: BTreeSet<Var>,
}

/// `<G ; B ; V>`: one multiset of user constraints, built-ins, globals.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct EState {
    pub store: Vec<UserConstraint>,
    pub builtins: BuiltinStore,
    pub globals: BTreeSet<Var>,
}

impl BangState {
    pub fn new(
        linear: Vec<UserConstraint>,
        persistent: Vec<UserConstraint>,
        builtins: BuiltinStore,
        globals: BTreeSet<Var>,
    ) -> Self {
        BangState { linear, persistent, builtins, globals }
    }

    pub fn is_failed(&self) -> bool {
        self.builtins.is_failed()
    }

    /// All variables mentioned anywhere in the state.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.globals.clone();
        self.linear.iter().chain(&self.persistent).for_each(|c| c.collect_vars(&mut out));
        out.extend(self.builtins.vars());
        out
    }

    /// An equivalent representative with the built-in bindings applied to
    /// both stores and syntactic duplicates removed from the persistent one.
    pub fn simplified(&self) -> BangState {
        let Some(b) = self.builtins.bindings() else {
            return self.clone();
        };
        let linear = self.linear.iter().map(|c| c.apply(b)).collect();
        let mut persistent: Vec<UserConstraint> = Vec::new();
        for c in &self.persistent {
            let c = c.apply(b);
            if !persistent.contains(&c) {
                persistent.push(c);
            }
        }
        BangState { linear, persistent, builtins: self.builtins.clone(), globals: self.globals.clone() }
    }

    pub fn normalize(&self) -> NormalForm {
        normalize_bang(self)
    }
}

impl EState {
    pub fn new(store: Vec<UserConstraint>, builtins: BuiltinStore, globals: BTreeSet<Var>) -> Self {
        EState { store, builtins, globals }
    }

    pub fn is_failed(&self) -> bool {
        self.builtins.is_failed()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.globals.clone();
        self.store.iter().for_each(|c| c.collect_vars(&mut out));
        out.extend(self.builtins.vars());
        out
    }

    pub fn normalize(&self) -> NormalForm {
        normalize_e(self)
    }
}

fn write_globals(f: &mut fmt::Formatter<'_>, globals: impl IntoIterator<Item = impl fmt::Display>) -> fmt::Result {
    f.write_str("{")?;
    write_list(f, globals, "")?;
    f.write_str("}")
}

impl fmt::Display for BangState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        write_list(f, &self.linear, "")?;
        f.write_str(" ; ")?;
        write_list(f, &self.persistent, "")?;
        write!(f, " ; {} ; ", self.builtins)?;
        write_globals(f, &self.globals)?;
        f.write_str(">")
    }
}

impl fmt::Debug for BangState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for EState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        write_list(f, &self.store, "")?;
        write!(f, " ; {} ; ", self.builtins)?;
        write_globals(f, &self.globals)?;
        f.write_str(">")
    }
}

impl fmt::Debug for EState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Which family of states a normal form was computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateKind {
    Bang,
    E,
}

/// Canonical representative of an equivalence class of states.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalForm {
    /// Every failed state, whatever its stores and globals.
    Failed,
    State(NormalState),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalState {
    pub kind: StateKind,
    /// Sorted multiset (the only store for `StateKind::E`).
    pub linear: Vec<UserConstraint>,
    /// Sorted set; always empty for `StateKind::E`.
    pub persistent: Vec<UserConstraint>,
    /// Bindings of global variables, sorted by variable.
    pub bindings: Vec<(Var, Term)>,
    pub globals: Vec<Var>,
    /// Number of canonically renamed local variables.
    pub locals: usize,
}

impl NormalForm {
    pub fn is_failed(&self) -> bool {
        matches!(self, NormalForm::Failed)
    }

    pub fn as_state(&self) -> Option<&NormalState> {
        match self {
            NormalForm::State(s) => Some(s),
            NormalForm::Failed => None,
        }
    }

    /// The normal form read back as an ω! state.
    pub fn to_bang_state(&self) -> BangState {
        match self {
            NormalForm::Failed => BangState { builtins: BuiltinStore::Failed, ..BangState::default() },
            NormalForm::State(s) => BangState {
                linear: s.linear.clone(),
                persistent: s.persistent.clone(),
                builtins: BuiltinStore::from_bindings(s.bindings.iter().cloned().collect()),
                globals: s.globals.iter().cloned().collect(),
            },
        }
    }

    /// The normal form read back as an ωe state; persistent constraints, if
    /// any, are merged into the single store.
    pub fn to_e_state(&self) -> EState {
        match self {
            NormalForm::Failed => EState { builtins: BuiltinStore::Failed, ..EState::default() },
            NormalForm::State(s) => EState {
                store: s.linear.iter().chain(&s.persistent).cloned().collect(),
                builtins: BuiltinStore::from_bindings(s.bindings.iter().cloned().collect()),
                globals: s.globals.iter().cloned().collect(),
            },
        }
    }

    /// FNV-1a over the printed form; stable across runs and platforms.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.to_string().bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NormalForm::Failed => return f.write_str("FAILED"),
            NormalForm::State(s) => s,
        };
        f.write_str("<")?;
        write_list(f, &s.linear, "")?;
        if s.kind == StateKind::Bang {
            f.write_str(" ; ")?;
            write_list(f, &s.persistent, "")?;
        }
        f.write_str(" ; ")?;
        write_list(f, s.bindings.iter().map(|(v, t)| format!("{v} = {t}")), "true")?;
        f.write_str(" ; ")?;
        write_globals(f, &s.globals)?;
        f.write_str(">")
    }
}

impl fmt::Debug for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Canonical local variable names can never clash with parsed variables,
/// which start with an uppercase letter.
pub fn is_canonical_local(v: &Var) -> bool {
    v.name().starts_with('_')
}

pub fn normalize_bang(s: &BangState) -> NormalForm {
    normalize(StateKind::Bang, &s.linear, &s.persistent, &s.builtins, &s.globals)
}

pub fn normalize_e(s: &EState) -> NormalForm {
    normalize(StateKind::E, &s.store, &[], &s.builtins, &s.globals)
}

pub fn equiv_bang(a: &BangState, b: &BangState) -> bool {
    normalize_bang(a) == normalize_bang(b)
}

pub fn equiv_e(a: &EState, b: &EState) -> bool {
    normalize_e(a) == normalize_e(b)
}

fn normalize(
    kind: StateKind,
    linear: &[UserConstraint],
    persistent: &[UserConstraint],
    builtins: &BuiltinStore,
    globals: &BTreeSet<Var>,
) -> NormalForm {
    let Some(bindings) = builtins.bindings() else {
        return NormalForm::Failed;
    };
    // equality as substitution, oriented towards global variables
    let oriented = reorient(bindings, |v| globals.contains(v));
    let linear: Vec<Term> = linear.iter().map(|c| c.to_term().apply(&oriented)).collect();
    let mut persistent: Vec<Term> = persistent.iter().map(|c| c.to_term().apply(&oriented)).collect();
    // contraction
    persistent.sort();
    persistent.dedup();
    // bound locals no longer occur anywhere once substituted: drop them
    let kept: Vec<(Var, Term)> =
        oriented.iter().filter(|(v, _)| globals.contains(*v)).map(|(v, t)| (v.clone(), t.clone())).collect();

    let mut occurring = BTreeSet::new();
    linear.iter().chain(&persistent).for_each(|t| t.collect_vars(&mut occurring));
    for (v, t) in &kept {
        occurring.insert(v.clone());
        t.collect_vars(&mut occurring);
    }
    let live_globals: Vec<Var> = globals.iter().filter(|v| occurring.contains(*v)).cloned().collect();
    let is_global = |v: &Var| globals.contains(v);

    let binding_terms: Vec<Term> =
        kept.iter().map(|(v, t)| Term::app("=", vec![Term::Var(v.clone()), t.clone()])).collect();
    let sections = [linear, persistent, binding_terms];
    let labels = canonical_labels(&sections, &is_global);
    let rename: BTreeMap<Var, Var> =
        labels.iter().map(|(v, i)| (v.clone(), Var::new(format!("_{i}")))).collect();

    let sorted = |items: &[Term]| -> Vec<Term> {
        let mut keyed: Vec<(Key, Term)> =
            items.iter().map(|t| (render(t, &is_global, &labels), t.rename(&rename))).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.into_iter().map(|(_, t)| t).collect()
    };
    let to_constraints =
        |ts: Vec<Term>| ts.iter().map(|t| UserConstraint::from_term(t).expect("constraint term")).collect();
    let linear = to_constraints(sorted(&sections[0]));
    let persistent = to_constraints(sorted(&sections[1]));
    let bindings = sorted(&sections[2])
        .into_iter()
        .map(|t| match t {
            Term::App(_, mut args) => {
                let rhs = args.pop().expect("binding rhs");
                let lhs = args.pop().and_then(|l| l.as_var().cloned()).expect("binding lhs");
                (lhs, rhs)
            }
            Term::Var(_) => unreachable!(),
        })
        .collect();
    NormalForm::State(NormalState { kind, linear, persistent, bindings, globals: live_globals, locals: labels.len() })
}

/// Sort key of a term under a partial labeling of its local variables.
/// Variant order gives globals < labeled locals < unlabeled locals <
/// compounds; compounds compare by functor, arity, then arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Global(Var),
    Local(usize),
    Hole,
    App(Symbol, usize, Vec<Key>),
}

fn render(t: &Term, is_global: &dyn Fn(&Var) -> bool, labels: &BTreeMap<Var, usize>) -> Key {
    match t {
        Term::Var(v) if is_global(v) => Key::Global(v.clone()),
        Term::Var(v) => labels.get(v).map_or(Key::Hole, |i| Key::Local(*i)),
        Term::App(f, args) => Key::App(f.clone(), args.len(), args.iter().map(|a| render(a, is_global, labels)).collect()),
    }
}

fn first_hole(key: &Key, path: &mut Vec<usize>) -> bool {
    match key {
        Key::Hole => true,
        Key::App(_, _, args) => {
            for (i, a) in args.iter().enumerate() {
                path.push(i);
                if first_hole(a, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        _ => false,
    }
}

fn subterm<'a>(t: &'a Term, path: &[usize]) -> &'a Term {
    path.iter().fold(t, |t, &i| match t {
        Term::App(_, args) => &args[i],
        Term::Var(_) => unreachable!("path leads through a variable"),
    })
}

type Encoding = Vec<Vec<Key>>;

/// Labels every local variable of `sections` with `0..n` such that the
/// sorted, rendered sections are lexicographically least among all labelings
/// reachable by individualizing the first unlabeled position.
fn canonical_labels(sections: &[Vec<Term>], is_global: &dyn Fn(&Var) -> bool) -> BTreeMap<Var, usize> {
    let mut best: Option<(Encoding, BTreeMap<Var, usize>)> = None;
    label_search(sections, is_global, BTreeMap::new(), &mut best);
    best.map(|(_, l)| l).unwrap_or_default()
}

fn label_search(
    sections: &[Vec<Term>],
    is_global: &dyn Fn(&Var) -> bool,
    labels: BTreeMap<Var, usize>,
    best: &mut Option<(Encoding, BTreeMap<Var, usize>)>,
) {
    let mut encoding = Vec::with_capacity(sections.len());
    let mut candidates: Option<BTreeSet<Var>> = None;
    for items in sections {
        let mut keyed: Vec<(Key, &Term)> = items.iter().map(|t| (render(t, is_global, &labels), t)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        if candidates.is_none() {
            let mut path = Vec::new();
            if let Some(pos) = keyed.iter().position(|(k, _)| {
                path.clear();
                first_hole(k, &mut path)
            }) {
                let key = &keyed[pos].0;
                let tied = keyed.iter().filter(|(k, _)| k == key);
                let vars = tied
                    .map(|(_, t)| subterm(t, &path).as_var().expect("hole is a variable").clone())
                    .collect();
                candidates = Some(vars);
            }
        }
        encoding.push(keyed.into_iter().map(|(k, _)| k).collect());
    }
    match candidates {
        None => {
            if best.as_ref().is_none_or(|(b, _)| encoding < *b) {
                *best = Some((encoding, labels));
            }
        }
        Some(vars) => {
            let next = labels.len();
            for v in vars {
                let mut l = labels.clone();
                l.insert(v, next);
                label_search(sections, is_global, l, best);
            }
        }
    }
}

/// A partial bijection between the local variables of two states.
#[derive(Clone, Debug, Default)]
pub struct AlphaMap {
    forward: BTreeMap<Var, Var>,
    backward: BTreeMap<Var, Var>,
}

impl AlphaMap {
    /// Extends the map so that `a` renames to `b`, treating canonical locals
    /// as renamable and every other variable as fixed.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => match (is_canonical_local(x), is_canonical_local(y)) {
                (false, false) => x == y,
                (true, true) => match (self.forward.get(x), self.backward.get(y)) {
                    (Some(fx), Some(by)) => fx == y && by == x,
                    (None, None) => {
                        self.forward.insert(x.clone(), y.clone());
                        self.backward.insert(y.clone(), x.clone());
                        true
                    }
                    _ => false,
                },
                _ => false,
            },
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }
}

/// Finds an injective assignment of `items` into `pool` consistent with
/// `map`, then calls `k`; backtracks over assignments until `k` accepts.
pub fn embed_multiset(
    items: &[Term],
    pool: &[Term],
    used: &mut Vec<bool>,
    map: &AlphaMap,
    k: &mut dyn FnMut(&AlphaMap, &[bool]) -> bool,
) -> bool {
    let Some((first, rest)) = items.split_first() else {
        return k(map, used);
    };
    for j in 0..pool.len() {
        if used[j] {
            continue;
        }
        let mut m = map.clone();
        if m.unify(first, &pool[j]) {
            used[j] = true;
            let ok = embed_multiset(rest, pool, used, &m, k);
            used[j] = false;
            if ok {
                return true;
            }
        }
    }
    false
}

/// Matches the global bindings of two normal states pairwise.
pub fn match_bindings(a: &NormalState, b: &NormalState, map: &AlphaMap) -> Option<AlphaMap> {
    if a.bindings.len() != b.bindings.len() {
        return None;
    }
    let mut m = map.clone();
    for ((va, ta), (vb, tb)) in a.bindings.iter().zip(&b.bindings) {
        if va != vb || !m.unify(ta, tb) {
            return None;
        }
    }
    Some(m)
}

fn terms(cs: &[UserConstraint]) -> Vec<Term> {
    cs.iter().map(UserConstraint::to_term).collect()
}

/// Decides whether two normal forms differ only by a renaming of local
/// variables, by backtracking search. Independent of the canonical labeling.
pub fn alpha_equivalent(a: &NormalForm, b: &NormalForm) -> bool {
    let (a, b) = match (a, b) {
        (NormalForm::Failed, NormalForm::Failed) => return true,
        (NormalForm::State(a), NormalForm::State(b)) => (a, b),
        _ => return false,
    };
    if a.kind != b.kind
        || a.globals != b.globals
        || a.locals != b.locals
        || a.linear.len() != b.linear.len()
        || a.persistent.len() != b.persistent.len()
    {
        return false;
    }
    let Some(map) = match_bindings(a, b, &AlphaMap::default()) else {
        return false;
    };
    let (al, bl, ap, bp) = (terms(&a.linear), terms(&b.linear), terms(&a.persistent), terms(&b.persistent));
    let mut used = vec![false; bl.len()];
    embed_multiset(&al, &bl, &mut used, &map, &mut |m, _| {
        let mut used_p = vec![false; bp.len()];
        embed_multiset(&ap, &bp, &mut used_p, m, &mut |_, _| true)
    })
}

/// Renames every variable of a state through `map`, leaving unmapped
/// variables alone.
pub fn rename_bang(s: &BangState, map: &BTreeMap<Var, Var>) -> BangState {
    let builtins = match s.builtins.bindings() {
        None => BuiltinStore::Failed,
        Some(b) => {
            let renamed: Subst = b.iter().map(|(v, t)| (map.get(v).cloned().unwrap_or_else(|| v.clone()), t.rename(map))).collect();
            BuiltinStore::from_bindings(renamed)
        }
    };
    BangState {
        linear: s.linear.iter().map(|c| c.rename(map)).collect(),
        persistent: s.persistent.iter().map(|c| c.rename(map)).collect(),
        builtins,
        globals: s.globals.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
    }
}
