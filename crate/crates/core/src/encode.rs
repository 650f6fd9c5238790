//! Translation of programs with persistent constraints into priority
//! programs.
//!
//! Every constraint `c(t1,...,tn)` becomes `c(tag,t1,...,tn)` where the tag
//! says whether it is linear (`l`), persistent (`p`) or a candidate for
//! persistence (`c`). A rule becomes one priority-3 rule per way of reading
//! its heads as linear or persistent. Candidates are settled first: a
//! priority-1 rule drops a candidate whose persistent copy already exists,
//! and a priority-2 rule promotes it otherwise. The token store then plays
//! the role of the equivalence side condition.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{DecodeError, EncodeError};
use crate::herbrand::BuiltinStore;
use crate::parser::Goal;
use crate::priority::{IdConstraint, PState};
use crate::state::{equiv_e, BangState, EState};
use crate::syntax::{check_range_restricted, Program, Rule};
use crate::term::{BuiltinConstraint, Term, UserConstraint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Linear,
    Persistent,
    Candidate,
}

impl Tag {
    pub fn atom(self) -> &'static str {
        match self {
            Tag::Linear => "l",
            Tag::Persistent => "p",
            Tag::Candidate => "c",
        }
    }

    pub fn from_atom(name: &str) -> Option<Tag> {
        match name {
            "l" => Some(Tag::Linear),
            "p" => Some(Tag::Persistent),
            "c" => Some(Tag::Candidate),
            _ => None,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.atom())
    }
}

pub fn tag(c: &UserConstraint, t: Tag) -> UserConstraint {
    let mut args = Vec::with_capacity(c.args.len() + 1);
    args.push(Term::atom(t.atom()));
    args.extend(c.args.iter().cloned());
    UserConstraint { symbol: c.symbol.clone(), args }
}

fn tag_all(cs: &[UserConstraint], t: Tag) -> Vec<UserConstraint> {
    cs.iter().map(|c| tag(c, t)).collect()
}

/// Splits a tagged constraint into its tag and the original constraint.
pub fn untag(c: &UserConstraint) -> Option<(Tag, UserConstraint)> {
    let (first, rest) = c.args.split_first()?;
    let Term::App(name, args) = first else {
        return None;
    };
    if !args.is_empty() {
        return None;
    }
    let t = Tag::from_atom(name.name())?;
    Some((t, UserConstraint { symbol: c.symbol.clone(), args: rest.to_vec() }))
}

fn tag_of(c: &UserConstraint) -> Option<Tag> {
    untag(c).map(|(t, _)| t)
}

fn pathological_under(rule: &Rule, store: &[BuiltinConstraint]) -> bool {
    let mut pre = store.to_vec();
    pre.extend(rule.guard.iter().cloned());
    let mut post = store.to_vec();
    post.extend(rule.body_builtin.iter().cloned());
    let before = EState::new(rule.removed.clone(), BuiltinStore::from_constraints(&pre), BTreeSet::new());
    let after = EState::new(rule.body_user.clone(), BuiltinStore::from_constraints(&post), BTreeSet::new());
    equiv_e(&before, &after)
}

/// `<H2 ; G ; {}>` is equivalent to `<Bc ; Bb ; {}>`.
pub fn is_trivially_pathological(rule: &Rule) -> bool {
    pathological_under(rule, &[])
}

/// Rules that are pathological when the guard itself is taken as the
/// built-in store: `<H2 ; G ; {}>` against `<Bc ; G, Bb ; {}>`. Only a
/// warning, since other stores are not examined.
pub fn suspected_pathological(program: &Program) -> Vec<String> {
    program
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| !is_trivially_pathological(r) && pathological_under(r, &r.guard))
        .map(|(i, _)| program.rule_name(i))
        .collect()
}

/// Masks over `n` positions in emission order: bit `n-1-k` set means
/// position `k` is persistent, so all-linear comes first.
fn splits(n: usize) -> impl Iterator<Item = Vec<Tag>> {
    (0..1usize << n).map(move |mask| {
        (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { Tag::Persistent } else { Tag::Linear }).collect()
    })
}

fn tagged(heads: &[UserConstraint], tags: &[Tag], want: Tag) -> Vec<UserConstraint> {
    heads.iter().zip(tags).filter(|(_, t)| **t == want).map(|(c, _)| tag(c, want)).collect()
}

fn all_tagged(heads: &[UserConstraint], tags: &[Tag]) -> Vec<UserConstraint> {
    heads.iter().zip(tags).map(|(c, t)| tag(c, *t)).collect()
}

/// Rules for one source rule: every linear reading of its removed heads,
/// then every reading with persistent removed heads.
fn encode_rule(rule: &Rule, name: &str) -> Vec<Rule> {
    let mut out = Vec::new();
    let mut k = 0;
    for h1 in splits(rule.kept.len()) {
        for h2 in splits(rule.removed.len()) {
            if !h2.contains(&Tag::Linear) {
                continue;
            }
            k += 1;
            let mut kept = all_tagged(&rule.kept, &h1);
            kept.extend(tagged(&rule.removed, &h2, Tag::Persistent));
            out.push(Rule {
                name: Some(format!("{name}_lin{k}")),
                priority: Some(3),
                kept,
                removed: tagged(&rule.removed, &h2, Tag::Linear),
                guard: rule.guard.clone(),
                body_user: tag_all(&rule.body_user, Tag::Linear),
                body_builtin: rule.body_builtin.clone(),
            });
        }
    }
    for (k, h1) in splits(rule.kept.len()).enumerate() {
        let mut kept = all_tagged(&rule.kept, &h1);
        kept.extend(tag_all(&rule.removed, Tag::Persistent));
        out.push(Rule {
            name: Some(format!("{name}_per{}", k + 1)),
            priority: Some(3),
            kept,
            removed: Vec::new(),
            guard: rule.guard.clone(),
            body_user: tag_all(&rule.body_user, Tag::Candidate),
            body_builtin: rule.body_builtin.clone(),
        });
    }
    out
}

/// Merges the persistent kept heads `keep` and `drop`, equating their
/// arguments in the guard.
fn collapse(rule: &Rule, keep: usize, drop: usize) -> Rule {
    let mut r = rule.clone();
    let kept = &rule.kept[keep];
    let dropped = &rule.kept[drop];
    for (a, b) in kept.args.iter().zip(&dropped.args).skip(1) {
        r.guard.push(BuiltinConstraint::eq(a.clone(), b.clone()));
    }
    r.kept.remove(drop);
    r
}

/// Adds, to a fixpoint, every rule obtained by merging two persistent kept
/// heads of the same constraint symbol, keeping either one.
fn close_under_collapse(rules: Vec<Rule>) -> Vec<Rule> {
    let mut seen: BTreeSet<String> = rules.iter().map(|r| r.canonical().to_string()).collect();
    let mut out = Vec::new();
    let mut pending: std::collections::VecDeque<Rule> = rules.into();
    while let Some(rule) = pending.pop_front() {
        let parent = rule.name.clone().unwrap_or_default();
        let mut k = 0;
        let persistent: Vec<usize> =
            (0..rule.kept.len()).filter(|&i| tag_of(&rule.kept[i]) == Some(Tag::Persistent)).collect();
        for (x, &i) in persistent.iter().enumerate() {
            for &j in &persistent[x + 1..] {
                if rule.kept[i].signature() != rule.kept[j].signature() {
                    continue;
                }
                for (keep, drop) in [(i, j), (j, i)] {
                    let mut variant = collapse(&rule, keep, drop);
                    if seen.insert(variant.canonical().to_string()) {
                        k += 1;
                        variant.name = Some(format!("{parent}_col{k}"));
                        pending.push_back(variant);
                    }
                }
            }
        }
        out.push(rule);
    }
    out
}

fn settle_rules(program: &Program) -> Vec<Rule> {
    let mut out = Vec::new();
    for (symbol, arity) in program.symbols() {
        let xs: Vec<Term> = (1..=arity).map(|i| Term::var(format!("X{i}"))).collect();
        let at = |t: Tag| {
            let mut args = vec![Term::atom(t.atom())];
            args.extend(xs.iter().cloned());
            UserConstraint { symbol: symbol.clone(), args }
        };
        let base = format!("{}_{}", symbol.name(), arity);
        out.push(Rule {
            name: Some(format!("{base}_keep")),
            priority: Some(1),
            kept: vec![at(Tag::Persistent)],
            removed: vec![at(Tag::Candidate)],
            ..Rule::default()
        });
        out.push(Rule {
            name: Some(format!("{base}_promote")),
            priority: Some(2),
            removed: vec![at(Tag::Candidate)],
            body_user: vec![at(Tag::Persistent)],
            ..Rule::default()
        });
    }
    out
}

/// The priority program simulating `program`. Priorities in the input are
/// ignored.
pub fn encode_program(program: &Program) -> Result<Program, EncodeError> {
    let diagnostics = check_range_restricted(program);
    if !diagnostics.is_empty() {
        return Err(EncodeError::NotRangeRestricted(diagnostics));
    }
    if let Some(i) = program.rules.iter().position(is_trivially_pathological) {
        return Err(EncodeError::TriviallyPathological(program.rule_name(i)));
    }
    let mut rules = Vec::new();
    for (i, rule) in program.rules.iter().enumerate() {
        rules.extend(encode_rule(rule, &program.rule_name(i)));
    }
    let mut rules = close_under_collapse(rules);
    rules.extend(settle_rules(program));
    Ok(Program { rules })
}

/// `<l(G), B ; {} ; true ; {} ; 0 ; vars(G, B)>`
pub fn encode_goal(goal: &Goal) -> PState {
    PState::from_goal(&Goal { user: tag_all(&goal.user, Tag::Linear), builtin: goal.builtin.clone() })
}

/// Strips tags from a store: linear constraints first, persistent second.
pub fn decode_store(store: &[IdConstraint]) -> Result<(Vec<UserConstraint>, Vec<UserConstraint>), DecodeError> {
    let mut linear = Vec::new();
    let mut persistent = Vec::new();
    for c in store {
        match untag(&c.constraint) {
            Some((Tag::Linear, u)) => linear.push(u),
            Some((Tag::Persistent, u)) => persistent.push(u),
            Some((Tag::Candidate, _)) => return Err(DecodeError::ResidualCandidateConstraint(c.to_string())),
            None => return Err(DecodeError::MissingTag(c.to_string())),
        }
    }
    Ok((linear, persistent))
}

/// The state with persistent constraints that a quiescent run of the
/// encoded program stands for.
pub fn decode_state(state: &PState) -> Result<BangState, DecodeError> {
    let (linear, persistent) = decode_store(&state.store)?;
    Ok(BangState { linear, persistent, builtins: state.builtins.clone(), globals: state.globals.clone() })
}
