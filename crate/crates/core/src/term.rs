//! First-order Herbrand terms and the two kinds of constraints built from them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// A logic variable, identified by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A function or constraint symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: impl AsRef<str>) -> Self {
        Symbol(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A variable binding environment.
pub type Subst = BTreeMap<Var, Term>;

/// A Herbrand term. Constants are compounds of arity zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    App(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: impl AsRef<str>) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn atom(name: impl AsRef<str>) -> Self {
        Term::App(Symbol::new(name), Vec::new())
    }

    pub fn app(name: impl AsRef<str>, args: Vec<Term>) -> Self {
        Term::App(Symbol::new(name), args)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::App(..) => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn occurs(&self, var: &Var) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::App(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Variables in left-to-right first-occurrence order, without repeats.
    pub fn collect_vars_ordered(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars_ordered(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Applies a substitution once. For an idempotent substitution this is a
    /// full resolution.
    pub fn apply(&self, subst: &Subst) -> Term {
        match self {
            Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.apply(subst)).collect()),
        }
    }

    /// Applies a triangular substitution until no bound variable remains.
    pub fn resolve(&self, subst: &Subst) -> Term {
        match self {
            Term::Var(v) => match subst.get(v) {
                Some(t) => t.resolve(subst),
                None => self.clone(),
            },
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.resolve(subst)).collect()),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.rename(map)).collect()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

// Variables first, then compounds by functor name, arity, and arguments.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => a.cmp(b),
            (Term::Var(_), Term::App(..)) => Ordering::Less,
            (Term::App(..), Term::Var(_)) => Ordering::Greater,
            (Term::App(f, xs), Term::App(g, ys)) => f
                .cmp(g)
                .then(xs.len().cmp(&ys.len()))
                .then_with(|| xs.cmp(ys)),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(name, args) => write_compound(f, name, args),
        }
    }
}

fn write_compound(f: &mut fmt::Formatter<'_>, name: &Symbol, args: &[Term]) -> fmt::Result {
    write!(f, "{name}")?;
    if !args.is_empty() {
        f.write_str("(")?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")?;
    }
    Ok(())
}

/// A user-defined (CHR) constraint `c(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserConstraint {
    pub symbol: Symbol,
    pub args: Vec<Term>,
}

impl UserConstraint {
    pub fn new(symbol: impl AsRef<str>, args: Vec<Term>) -> Self {
        UserConstraint { symbol: Symbol::new(symbol), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The `c/n` pair identifying the constraint symbol.
    pub fn signature(&self) -> (Symbol, usize) {
        (self.symbol.clone(), self.args.len())
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, subst: &Subst) -> Self {
        UserConstraint { symbol: self.symbol.clone(), args: self.args.iter().map(|a| a.apply(subst)).collect() }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Self {
        UserConstraint { symbol: self.symbol.clone(), args: self.args.iter().map(|a| a.rename(map)).collect() }
    }

    /// Views the constraint as a term with the same functor and arguments.
    pub fn to_term(&self) -> Term {
        Term::App(self.symbol.clone(), self.args.clone())
    }

    pub fn from_term(term: &Term) -> Option<Self> {
        match term {
            Term::App(f, args) => Some(UserConstraint { symbol: f.clone(), args: args.clone() }),
            Term::Var(_) => None,
        }
    }
}

impl fmt::Debug for UserConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for UserConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_compound(f, &self.symbol, &self.args)
    }
}

/// A built-in constraint: syntactic equality, truth, or falsity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuiltinConstraint {
    Eq(Term, Term),
    True,
    False,
}

impl BuiltinConstraint {
    pub fn eq(lhs: Term, rhs: Term) -> Self {
        BuiltinConstraint::Eq(lhs, rhs)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        if let BuiltinConstraint::Eq(l, r) = self {
            l.collect_vars(out);
            r.collect_vars(out);
        }
    }

    pub fn apply(&self, subst: &Subst) -> Self {
        match self {
            BuiltinConstraint::Eq(l, r) => BuiltinConstraint::Eq(l.apply(subst), r.apply(subst)),
            other => other.clone(),
        }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Self {
        match self {
            BuiltinConstraint::Eq(l, r) => BuiltinConstraint::Eq(l.rename(map), r.rename(map)),
            other => other.clone(),
        }
    }
}

impl fmt::Debug for BuiltinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BuiltinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinConstraint::Eq(l, r) => write!(f, "{l} = {r}"),
            BuiltinConstraint::True => f.write_str("true"),
            BuiltinConstraint::False => f.write_str("fail"),
        }
    }
}

pub fn vars_of_constraints<'a>(cs: impl IntoIterator<Item = &'a UserConstraint>) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for c in cs {
        c.collect_vars(&mut out);
    }
    out
}

pub fn vars_of_builtins<'a>(cs: impl IntoIterator<Item = &'a BuiltinConstraint>) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for c in cs {
        c.collect_vars(&mut out);
    }
    out
}

/// Writes `items` separated by `", "`, or `empty` when there are none.
pub(crate) fn write_list<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl IntoIterator<Item = T>,
    empty: &str,
) -> fmt::Result {
    let mut any = false;
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
        any = true;
    }
    if !any {
        f.write_str(empty)?;
    }
    Ok(())
}
