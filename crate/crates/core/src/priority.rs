//! Execution with rule priorities and a token store.
//!
//! The goal is processed front to back: built-ins are solved into the
//! store, user constraints receive the next identifier. Rules fire only once
//! the goal is empty, always at the best (numerically smallest) priority
//! available, and each firing records a token so the same rule never fires
//! twice on the same identifiers.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::bang::{apply_all, apply_builtins, check_guard, match_heads, Slot};
use crate::error::EngineError;
use crate::herbrand::BuiltinStore;
use crate::parser::Goal;
use crate::syntax::Program;
use crate::term::{vars_of_builtins, vars_of_constraints, write_list, BuiltinConstraint, UserConstraint, Var};

/// `c#i`
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdConstraint {
    pub constraint: UserConstraint,
    pub id: usize,
}

impl fmt::Display for IdConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.constraint, self.id)
    }
}

impl fmt::Debug for IdConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A fired rule instance: the rule name and the identifiers of its kept
/// heads followed by its removed heads.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub rule: String,
    pub ids: Vec<usize>,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},[", self.rule)?;
        for (i, id) in self.ids.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        f.write_str("])")
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum GoalItem {
    User(UserConstraint),
    Builtin(BuiltinConstraint),
}

impl fmt::Display for GoalItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalItem::User(c) => c.fmt(f),
            GoalItem::Builtin(b) => b.fmt(f),
        }
    }
}

/// `<G ; S ; B ; T ; n ; V>`
#[derive(Clone, PartialEq, Eq)]
pub struct PState {
    pub goal: VecDeque<GoalItem>,
    /// Ascending identifiers.
    pub store: Vec<IdConstraint>,
    pub builtins: BuiltinStore,
    pub tokens: BTreeSet<Token>,
    pub next_id: usize,
    pub globals: BTreeSet<Var>,
}

impl PState {
    /// User constraints first, then built-ins; `V` is the goal's variables.
    pub fn from_goal(goal: &Goal) -> PState {
        let mut globals = vars_of_constraints(&goal.user);
        globals.extend(vars_of_builtins(&goal.builtin));
        let items = goal
            .user
            .iter()
            .cloned()
            .map(GoalItem::User)
            .chain(goal.builtin.iter().cloned().map(GoalItem::Builtin))
            .collect();
        PState {
            goal: items,
            store: Vec::new(),
            builtins: BuiltinStore::top(),
            tokens: BTreeSet::new(),
            next_id: 0,
            globals,
        }
    }

    /// The store's constraints with the built-in bindings applied.
    pub fn constraints(&self) -> Vec<UserConstraint> {
        let store: Vec<UserConstraint> = self.store.iter().map(|c| c.constraint.clone()).collect();
        match self.builtins.bindings() {
            Some(b) => apply_all(&store, b),
            None => store,
        }
    }
}

impl fmt::Display for PState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        write_list(f, &self.goal, "")?;
        f.write_str(" ; ")?;
        write_list(f, &self.store, "")?;
        write!(f, " ; {} ; ", self.builtins)?;
        f.write_str("{")?;
        write_list(f, &self.tokens, "")?;
        write!(f, "}} ; {} ; {{", self.next_id)?;
        write_list(f, &self.globals, "")?;
        f.write_str("}>")
    }
}

impl fmt::Debug for PState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    Solve,
    Introduce,
    Apply { rule: String, priority: u32, token: Token },
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Solve => f.write_str("solve"),
            Transition::Introduce => f.write_str("introduce"),
            Transition::Apply { rule, priority, .. } => write!(f, "apply {rule} {priority}"),
        }
    }
}

/// Rejects programs with a rule that has no priority.
pub fn require_priorities(program: &Program) -> Result<(), EngineError> {
    match program.rules.iter().position(|r| r.priority.is_none()) {
        Some(i) => Err(EngineError::MissingPriority(program.rule_name(i))),
        None => Ok(()),
    }
}

/// Performs one transition, or returns `None` when none applies.
///
/// Among rule instances of the best priority, program order decides first,
/// then the lexicographically smallest identifier sequence.
pub fn step_p(state: &PState, program: &Program) -> Option<(PState, Transition)> {
    let mut next = state.clone();
    if let Some(item) = next.goal.pop_front() {
        return Some(match item {
            GoalItem::Builtin(b) => {
                next.builtins = next.builtins.tell(&b);
                (next, Transition::Solve)
            }
            GoalItem::User(c) => {
                next.store.push(IdConstraint { constraint: c, id: next.next_id });
                next.next_id += 1;
                (next, Transition::Introduce)
            }
        });
    }
    let firing = best_firing(state, program)?;
    let removed: BTreeSet<usize> = firing.removed_ids.iter().copied().collect();
    next.store.retain(|c| !removed.contains(&c.id));
    let rule = &firing.rule;
    next.builtins = next.builtins.tell_all(&apply_builtins(&rule.guard, &firing.theta));
    next.goal.extend(apply_builtins(&rule.body_builtin, &firing.theta).into_iter().map(GoalItem::Builtin));
    next.goal.extend(apply_all(&rule.body_user, &firing.theta).into_iter().map(GoalItem::User));
    next.tokens.insert(firing.token.clone());
    let priority = rule.priority.unwrap_or(0);
    Some((next, Transition::Apply { rule: firing.token.rule.clone(), priority, token: firing.token }))
}

struct Firing {
    rule: crate::syntax::Rule,
    theta: crate::term::Subst,
    token: Token,
    removed_ids: Vec<usize>,
}

/// Every applicable instance at the best priority, in selection order.
pub fn applicable(state: &PState, program: &Program) -> Vec<(usize, Token)> {
    firings(state, program, true).into_iter().map(|(i, f)| (i, f.token)).collect()
}

fn best_firing(state: &PState, program: &Program) -> Option<Firing> {
    firings(state, program, false).into_iter().next().map(|(_, f)| f)
}

/// Applicable instances of the best available priority. With `all` unset
/// only the first is computed.
fn firings(state: &PState, program: &Program, all: bool) -> Vec<(usize, Firing)> {
    if state.builtins.is_failed() {
        return Vec::new();
    }
    let store = state.constraints();
    let avoid: BTreeSet<Var> = store.iter().flat_map(|c| c.vars()).chain(state.builtins.vars()).collect();
    let mut order: Vec<usize> = (0..program.len()).collect();
    order.sort_by_key(|&i| (program.rules[i].priority.unwrap_or(u32::MAX), i));
    let mut out = Vec::new();
    let mut best: Option<u32> = None;
    for i in order {
        let rule = &program.rules[i];
        if best.is_some_and(|b| rule.priority != Some(b)) {
            break;
        }
        let fresh = rule.freshen(&avoid);
        let heads: Vec<&UserConstraint> = fresh.heads().collect();
        let name = program.rule_name(i);
        let mut found: Vec<Firing> = Vec::new();
        for (slots, theta) in match_heads(&heads, &store, &[], false) {
            let ids: Vec<usize> = slots
                .iter()
                .map(|s| match s {
                    Slot::Linear(j) => state.store[*j].id,
                    Slot::Persistent(_) => unreachable!(),
                })
                .collect();
            let token = Token { rule: name.clone(), ids };
            if state.tokens.contains(&token) {
                continue;
            }
            let Some(theta) = check_guard(&state.builtins, &fresh, theta) else {
                continue;
            };
            let removed_ids = token.ids[fresh.kept.len()..].to_vec();
            found.push(Firing { rule: fresh.clone(), theta, token, removed_ids });
        }
        found.sort_by(|a, b| a.token.ids.cmp(&b.token.ids));
        if !found.is_empty() {
            best = rule.priority;
            out.extend(found.into_iter().map(|f| (i, f)));
            if !all {
                break;
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PTraceStep {
    /// 1-based.
    pub index: usize,
    pub transition: Transition,
    pub state: PState,
}

impl fmt::Display for PTraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} :: {}", self.index, self.transition, self.state)
    }
}

#[derive(Clone, Debug)]
pub struct PRun {
    pub final_state: PState,
    pub steps: usize,
    /// Empty unless tracing was requested.
    pub trace: Vec<PTraceStep>,
    pub verdict: crate::bang::Verdict,
}

/// Runs to quiescence or `max_steps` transitions.
pub fn run_p(initial: PState, program: &Program, max_steps: usize, trace: bool) -> Result<PRun, EngineError> {
    require_priorities(program)?;
    let mut state = initial;
    let mut steps = 0;
    let mut lines = Vec::new();
    loop {
        let Some((next, transition)) = step_p(&state, program) else {
            return Ok(PRun { final_state: state, steps, trace: lines, verdict: crate::bang::Verdict::Quiescent });
        };
        if steps == max_steps {
            return Ok(PRun { final_state: state, steps, trace: lines, verdict: crate::bang::Verdict::StepLimit });
        }
        steps += 1;
        if trace {
            lines.push(PTraceStep { index: steps, transition, state: next.clone() });
        }
        state = next;
    }
}
