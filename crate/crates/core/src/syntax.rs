//! Rules, programs, and the variable analyses defined over them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ParseError;
use crate::term::{write_list, BuiltinConstraint, Symbol, UserConstraint, Var};

/// `name @ prio :: kept \ removed <=> guard | body_user, body_builtin`
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Rule {
    pub name: Option<String>,
    pub priority: Option<u32>,
    pub kept: Vec<UserConstraint>,
    pub removed: Vec<UserConstraint>,
    pub guard: Vec<BuiltinConstraint>,
    pub body_user: Vec<UserConstraint>,
    pub body_builtin: Vec<BuiltinConstraint>,
}

impl Rule {
    pub fn is_propagation(&self) -> bool {
        self.removed.is_empty()
    }

    /// Kept heads followed by removed heads, in head-position order.
    pub fn heads(&self) -> impl Iterator<Item = &UserConstraint> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn head_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.heads().for_each(|c| c.collect_vars(&mut out));
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.head_vars();
        self.guard.iter().for_each(|g| g.collect_vars(&mut out));
        self.body_user.iter().for_each(|c| c.collect_vars(&mut out));
        self.body_builtin.iter().for_each(|c| c.collect_vars(&mut out));
        out
    }

    /// Variables in first-occurrence order: heads, guard, then body.
    pub fn vars_ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for c in self.heads().chain(self.body_user.iter()) {
            c.args.iter().for_each(|a| a.collect_vars_ordered(&mut out));
        }
        for b in self.guard.iter().chain(self.body_builtin.iter()) {
            if let BuiltinConstraint::Eq(l, r) = b {
                l.collect_vars_ordered(&mut out);
                r.collect_vars_ordered(&mut out);
            }
        }
        out
    }

    /// Variables of guard and body that do not occur in the head.
    pub fn local_variables(&self) -> BTreeSet<Var> {
        let mut rest = BTreeSet::new();
        self.guard.iter().for_each(|g| g.collect_vars(&mut rest));
        self.body_user.iter().for_each(|c| c.collect_vars(&mut rest));
        self.body_builtin.iter().for_each(|c| c.collect_vars(&mut rest));
        let head = self.head_vars();
        rest.difference(&head).cloned().collect()
    }

    pub fn is_range_restricted(&self) -> bool {
        self.local_variables().is_empty()
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Rule {
        Rule {
            name: self.name.clone(),
            priority: self.priority,
            kept: self.kept.iter().map(|c| c.rename(map)).collect(),
            removed: self.removed.iter().map(|c| c.rename(map)).collect(),
            guard: self.guard.iter().map(|c| c.rename(map)).collect(),
            body_user: self.body_user.iter().map(|c| c.rename(map)).collect(),
            body_builtin: self.body_builtin.iter().map(|c| c.rename(map)).collect(),
        }
    }

    /// Returns a variant whose variables are pairwise distinct and disjoint
    /// from `avoid`.
    pub fn freshen(&self, avoid: &BTreeSet<Var>) -> Rule {
        let mut taken: BTreeSet<String> = avoid.iter().map(|v| v.name().to_owned()).collect();
        let mut map = BTreeMap::new();
        for v in self.vars_ordered() {
            let base = strip_fresh_suffix(v.name());
            let mut k = 1usize;
            let fresh = loop {
                let candidate = format!("{base}_{k}");
                if !taken.contains(&candidate) {
                    break candidate;
                }
                k += 1;
            };
            taken.insert(fresh.clone());
            map.insert(v, Var::new(fresh));
        }
        self.rename(&map)
    }

    /// Renames variables to `V0, V1, ...` in first-occurrence order. Two rules
    /// are alpha-equivalent iff their canonical forms are equal.
    pub fn canonical(&self) -> Rule {
        let map = self
            .vars_ordered()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, Var::new(format!("V{i}"))))
            .collect();
        let mut r = self.rename(&map);
        r.name = None;
        r
    }

    pub fn symbols(&self) -> BTreeSet<(Symbol, usize)> {
        self.heads().chain(self.body_user.iter()).map(UserConstraint::signature).collect()
    }
}

fn strip_fresh_suffix(name: &str) -> &str {
    match name.rfind('_') {
        Some(i) if i > 0 && name[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < name.len() => &name[..i],
        _ => name,
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = &self.name {
            write!(f, "{name} @ ")?;
        }
        if let Some(p) = self.priority {
            write!(f, "{p} :: ")?;
        }
        if self.removed.is_empty() {
            write_list(f, &self.kept, "")?;
            f.write_str(" ==> ")?;
        } else {
            if !self.kept.is_empty() {
                write_list(f, &self.kept, "")?;
                f.write_str(" \\ ")?;
            }
            write_list(f, &self.removed, "")?;
            f.write_str(" <=> ")?;
        }
        if !self.guard.is_empty() {
            write_list(f, &self.guard, "")?;
            f.write_str(" | ")?;
        }
        let body = self
            .body_user
            .iter()
            .map(ToString::to_string)
            .chain(self.body_builtin.iter().map(ToString::to_string));
        write_list(f, body, "true")?;
        f.write_str(".")
    }
}

/// An ordered list of rules.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Result<Self, ParseError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if let Some(n) = &r.name {
                if !seen.insert(n.clone()) {
                    return Err(ParseError::DuplicateRuleName(n.clone()));
                }
            }
        }
        Ok(Program { rules })
    }

    /// The name used for rule `index` in traces and tokens: the declared
    /// name, or `rule<k>` (1-based) for anonymous rules.
    pub fn rule_name(&self, index: usize) -> String {
        self.rules[index].name.clone().unwrap_or_else(|| format!("rule{}", index + 1))
    }

    /// Every `c/n` occurring in a head or body.
    pub fn symbols(&self) -> BTreeSet<(Symbol, usize)> {
        self.rules.iter().flat_map(Rule::symbols).collect()
    }

    pub fn is_priority_program(&self) -> bool {
        !self.rules.is_empty() && self.rules.iter().all(|r| r.priority.is_some())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// A rule whose guard or body mentions variables its head does not bind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeDiagnostic {
    pub rule: String,
    pub unbound: BTreeSet<Var>,
}

impl fmt::Display for RangeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule `{}` uses variables not bound by its head: ", self.rule)?;
        write_list(f, &self.unbound, "")
    }
}

pub fn local_variables(rule: &Rule) -> BTreeSet<Var> {
    rule.local_variables()
}

/// One diagnostic per rule with local variables; empty iff the program is
/// range-restricted.
pub fn check_range_restricted(program: &Program) -> Vec<RangeDiagnostic> {
    program
        .rules
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            let unbound = r.local_variables();
            (!unbound.is_empty()).then(|| RangeDiagnostic { rule: program.rule_name(i), unbound })
        })
        .collect()
}

pub fn freshen(rule: &Rule, avoid: &BTreeSet<Var>) -> Rule {
    rule.freshen(avoid)
}
