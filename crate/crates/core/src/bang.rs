//! Execution with persistent constraints.
//!
//! A rule fires on a matching of its head positions against the linear
//! store `L` and the persistent store `P`. If some removed head is matched
//! in `L` the firing is *linear*: those constraints are consumed and the body
//! joins `L`. Otherwise it is *persistent*: nothing is consumed and the body
//! joins `P`. Either way a firing is only allowed when the resulting state is
//! not equivalent to the one it started from, which is what makes
//! propagation rules terminate.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EngineError;
use crate::herbrand::BuiltinStore;
use crate::parser::Goal;
use crate::state::{normalize_bang, BangState, NormalForm};
use crate::syntax::{check_range_restricted, Program, Rule};
use crate::term::{vars_of_builtins, vars_of_constraints, BuiltinConstraint, Subst, Term, UserConstraint, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Persistent,
    Linear,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Persistent => "persistent",
            Mode::Linear => "linear",
        })
    }
}

/// Where a head position was matched. Persistent slots sort first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Persistent(usize),
    Linear(usize),
}

/// A rule variant together with an assignment of its head positions (kept
/// heads first, then removed heads) to store constraints.
#[derive(Clone, Debug)]
pub struct Matching {
    pub rule_index: usize,
    pub rule: Rule,
    pub slots: Vec<Slot>,
    pub theta: Subst,
    pub mode: Mode,
}

impl Matching {
    fn sort_key(&self) -> (usize, Mode, &[Slot]) {
        (self.rule_index, self.mode, &self.slots)
    }

    /// Linear store indices consumed by this firing.
    pub fn consumed(&self) -> Vec<usize> {
        if self.mode == Mode::Persistent {
            return Vec::new();
        }
        self.slots[self.rule.kept.len()..]
            .iter()
            .filter_map(|s| match s {
                Slot::Linear(i) => Some(*i),
                Slot::Persistent(_) => None,
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub max_steps: usize,
    /// 0 keeps the canonical matching order; any other value shuffles the
    /// candidates of every step with a generator seeded from it.
    pub seed: u64,
    /// Let several persistent head positions share one store element (the
    /// persistent store is a set, so a single element stands for many
    /// copies).
    pub collapse_persistent_heads: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_steps: 10_000, seed: 0, collapse_persistent_heads: true }
    }
}

impl RunOptions {
    pub fn with_max_steps(max_steps: usize) -> Self {
        RunOptions { max_steps, ..RunOptions::default() }
    }
}

/// `<goal ; {} ; goal built-ins ; vars(goal)>`
pub fn init_state(goal: &Goal) -> BangState {
    let mut globals = vars_of_constraints(&goal.user);
    globals.extend(vars_of_builtins(&goal.builtin));
    BangState {
        linear: goal.user.clone(),
        persistent: Vec::new(),
        builtins: BuiltinStore::from_constraints(&goal.builtin),
        globals,
    }
}

fn match_term(pattern: &Term, target: &Term, theta: &mut Subst) -> bool {
    match pattern {
        Term::Var(v) => match theta.get(v) {
            Some(bound) => bound == target,
            None => {
                theta.insert(v.clone(), target.clone());
                true
            }
        },
        Term::App(f, xs) => match target {
            Term::App(g, ys) if f == g && xs.len() == ys.len() => {
                xs.iter().zip(ys).all(|(x, y)| match_term(x, y, theta))
            }
            _ => false,
        },
    }
}

/// One-sided matching of a head against a store constraint: only the head's
/// variables are bound.
pub(crate) fn match_constraint(head: &UserConstraint, target: &UserConstraint, theta: &Subst) -> Option<Subst> {
    if head.symbol != target.symbol || head.args.len() != target.args.len() {
        return None;
    }
    let mut t = theta.clone();
    head.args.iter().zip(&target.args).all(|(p, a)| match_term(p, a, &mut t)).then_some(t)
}

pub(crate) fn apply_all(cs: &[UserConstraint], theta: &Subst) -> Vec<UserConstraint> {
    cs.iter().map(|c| c.apply(theta)).collect()
}

pub(crate) fn apply_builtins(cs: &[BuiltinConstraint], theta: &Subst) -> Vec<BuiltinConstraint> {
    cs.iter().map(|c| c.apply(theta)).collect()
}

/// Checks the guard of a matched variant, binding any guard-local variables.
pub(crate) fn check_guard(store: &BuiltinStore, rule: &Rule, theta: Subst) -> Option<Subst> {
    if rule.guard.is_empty() {
        return Some(theta);
    }
    let head = rule.head_vars();
    let mut locals = BTreeSet::new();
    rule.guard.iter().for_each(|g| g.collect_vars(&mut locals));
    let locals: BTreeSet<Var> = locals.into_iter().filter(|v| !head.contains(v)).collect();
    let guard = apply_builtins(&rule.guard, &theta);
    let extra = store.entails_with(&guard, &locals)?;
    let mut theta = theta;
    for (v, t) in extra {
        theta.insert(v, t);
    }
    // resolve guard locals inside earlier bindings too
    let snapshot = theta.clone();
    Some(theta.into_iter().map(|(v, t)| (v, t.resolve(&snapshot))).collect())
}

/// All ways to fire a rule of `program` in `state`, in the canonical order:
/// program rule order, persistent firings before linear ones, then
/// ascending store positions (persistent positions before linear ones).
pub fn candidate_matchings(state: &BangState, program: &Program, opts: &RunOptions) -> Vec<Matching> {
    let Some(bindings) = state.builtins.bindings() else {
        return Vec::new();
    };
    let linear = apply_all(&state.linear, bindings);
    let persistent = apply_all(&state.persistent, bindings);
    let avoid = state.vars();
    let mut out = Vec::new();
    for (rule_index, rule) in program.rules.iter().enumerate() {
        let fresh = rule.freshen(&avoid);
        let heads: Vec<&UserConstraint> = fresh.heads().collect();
        for (slots, theta) in match_heads(&heads, &linear, &persistent, opts.collapse_persistent_heads) {
            let Some(theta) = check_guard(&state.builtins, &fresh, theta) else {
                continue;
            };
            let removed_linear = slots[fresh.kept.len()..].iter().any(|s| matches!(s, Slot::Linear(_)));
            let mode = if removed_linear { Mode::Linear } else { Mode::Persistent };
            out.push(Matching { rule_index, rule: fresh.clone(), slots, theta, mode });
        }
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

/// Every assignment of `heads` to store positions with its matching
/// substitution. Linear positions are used at most once.
pub(crate) fn match_heads(
    heads: &[&UserConstraint],
    linear: &[UserConstraint],
    persistent: &[UserConstraint],
    collapse: bool,
) -> Vec<(Vec<Slot>, Subst)> {
    let mut search = MatchSearch { heads, linear, persistent, collapse, found: Vec::new() };
    let mut used_l = vec![false; linear.len()];
    let mut used_p = vec![false; persistent.len()];
    search.dfs(0, &Subst::new(), &mut Vec::with_capacity(heads.len()), &mut used_l, &mut used_p);
    search.found
}

struct MatchSearch<'a> {
    heads: &'a [&'a UserConstraint],
    linear: &'a [UserConstraint],
    persistent: &'a [UserConstraint],
    collapse: bool,
    found: Vec<(Vec<Slot>, Subst)>,
}

impl MatchSearch<'_> {
    fn dfs(&mut self, k: usize, theta: &Subst, slots: &mut Vec<Slot>, used_l: &mut [bool], used_p: &mut [bool]) {
        if k == self.heads.len() {
            self.found.push((slots.clone(), theta.clone()));
            return;
        }
        let head = self.heads[k];
        for j in 0..self.persistent.len() {
            if !self.collapse && used_p[j] {
                continue;
            }
            if let Some(t) = match_constraint(head, &self.persistent[j], theta) {
                let was = used_p[j];
                used_p[j] = true;
                slots.push(Slot::Persistent(j));
                self.dfs(k + 1, &t, slots, used_l, used_p);
                slots.pop();
                used_p[j] = was;
            }
        }
        for i in 0..self.linear.len() {
            if used_l[i] {
                continue;
            }
            if let Some(t) = match_constraint(head, &self.linear[i], theta) {
                used_l[i] = true;
                slots.push(Slot::Linear(i));
                self.dfs(k + 1, &t, slots, used_l, used_p);
                slots.pop();
                used_l[i] = false;
            }
        }
    }
}

/// The state a matching leads to, without the equivalence side condition.
pub fn fire(state: &BangState, m: &Matching) -> BangState {
    let body = apply_all(&m.rule.body_user, &m.theta);
    let mut told = apply_builtins(&m.rule.guard, &m.theta);
    told.extend(apply_builtins(&m.rule.body_builtin, &m.theta));
    let builtins = state.builtins.tell_all(&told);
    let (linear, persistent) = match m.mode {
        Mode::Linear => {
            let consumed: BTreeSet<usize> = m.consumed().into_iter().collect();
            let mut linear: Vec<UserConstraint> = state
                .linear
                .iter()
                .enumerate()
                .filter(|(i, _)| !consumed.contains(i))
                .map(|(_, c)| c.clone())
                .collect();
            linear.extend(body);
            (linear, state.persistent.clone())
        }
        Mode::Persistent => {
            let mut persistent = state.persistent.clone();
            persistent.extend(body);
            (state.linear.clone(), persistent)
        }
    };
    BangState { linear, persistent, builtins, globals: state.globals.clone() }
}

/// Fires `m`, or returns `None` when the result is equivalent to `state`
/// (the transition is forbidden).
pub fn apply(state: &BangState, m: &Matching) -> Option<BangState> {
    let post = fire(state, m);
    (normalize_bang(&post) != normalize_bang(state)).then(|| post.simplified())
}

/// Decides the equivalence side condition without normalizing, for the
/// common case of a persistent firing that leaves the built-in store
/// unchanged: the post-state adds to `P` only, so it is equivalent iff every
/// added constraint is already in `P`.
fn blocked_fast(state: &BangState, m: &Matching, persistent_set: &BTreeSet<UserConstraint>) -> Option<bool> {
    if m.mode != Mode::Persistent {
        return None;
    }
    let bindings = state.builtins.bindings()?;
    let mut told = apply_builtins(&m.rule.guard, &m.theta);
    told.extend(apply_builtins(&m.rule.body_builtin, &m.theta));
    if !told.is_empty() && !state.builtins.entails(&told, &BTreeSet::new()) {
        return None;
    }
    Some(m.rule.body_user.iter().all(|c| persistent_set.contains(&c.apply(&m.theta).apply(bindings))))
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    /// 1-based.
    pub index: usize,
    pub rule: String,
    pub mode: Mode,
    pub pre: u64,
    pub post: u64,
    pub state: BangState,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} {} :: {}", self.index, self.mode, self.rule, self.state)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Each step starts where the previous one ended.
    pub fn is_chained(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].post == w[1].pre)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// The outcome of one step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: BangState,
    pub matching: Matching,
    pub pre: NormalForm,
    pub post: NormalForm,
}

/// Fires the first allowed candidate. `None` means the state is quiescent.
/// Failed states never step: every successor of a failed state is failed,
/// hence equivalent to it.
pub fn step(state: &BangState, program: &Program, opts: &RunOptions) -> Option<Step> {
    step_with(state, program, opts, None)
}

fn step_with(state: &BangState, program: &Program, opts: &RunOptions, rng: Option<&mut ChaCha8Rng>) -> Option<Step> {
    if state.is_failed() {
        return None;
    }
    let mut candidates = candidate_matchings(state, program, opts);
    if let Some(rng) = rng {
        candidates.shuffle(rng);
    }
    let bindings = state.builtins.bindings()?;
    let persistent_set: BTreeSet<UserConstraint> = state.persistent.iter().map(|c| c.apply(bindings)).collect();
    let mut pre: Option<NormalForm> = None;
    for m in candidates {
        match blocked_fast(state, &m, &persistent_set) {
            Some(true) => continue,
            Some(false) => {
                let post_state = fire(state, &m);
                let post = normalize_bang(&post_state);
                let pre = pre.take().unwrap_or_else(|| normalize_bang(state));
                return Some(Step { state: post_state.simplified(), matching: m, pre, post });
            }
            None => {
                let post_state = fire(state, &m);
                let post = normalize_bang(&post_state);
                let pre_nf = pre.get_or_insert_with(|| normalize_bang(state));
                if post != *pre_nf {
                    return Some(Step { state: post_state.simplified(), matching: m, pre: pre_nf.clone(), post });
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Quiescent,
    StepLimit,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Quiescent => "quiescent",
            Verdict::StepLimit => "step-limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub initial: BangState,
    pub final_state: BangState,
    pub trace: Trace,
    pub verdict: Verdict,
}

impl Run {
    pub fn transitions(&self) -> usize {
        self.trace.len()
    }
}

/// Runs `goal` to quiescence or until `opts.max_steps` transitions.
pub fn run(goal: &Goal, program: &Program, opts: &RunOptions) -> Result<Run, EngineError> {
    run_from(init_state(goal), program, opts)
}

pub fn run_from(initial: BangState, program: &Program, opts: &RunOptions) -> Result<Run, EngineError> {
    let diagnostics = check_range_restricted(program);
    if !diagnostics.is_empty() {
        return Err(EngineError::NotRangeRestricted(diagnostics));
    }
    let mut rng = (opts.seed != 0).then(|| ChaCha8Rng::seed_from_u64(opts.seed));
    let mut state = initial.clone();
    let mut trace = Trace::default();
    loop {
        let Some(next) = step_with(&state, program, opts, rng.as_mut()) else {
            return Ok(Run { initial, final_state: state, trace, verdict: Verdict::Quiescent });
        };
        if trace.len() == opts.max_steps {
            return Ok(Run { initial, final_state: state, trace, verdict: Verdict::StepLimit });
        }
        trace.steps.push(TraceStep {
            index: trace.len() + 1,
            rule: program.rule_name(next.matching.rule_index),
            mode: next.matching.mode,
            pre: next.pre.digest(),
            post: next.post.digest(),
            state: next.state.clone(),
        });
        state = next.state;
    }
}

/// Every allowed successor of `state`, one per distinct equivalence class.
pub fn successors(state: &BangState, program: &Program, opts: &RunOptions) -> Vec<(NormalForm, BangState)> {
    if state.is_failed() {
        return Vec::new();
    }
    let pre = normalize_bang(state);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for m in candidate_matchings(state, program, opts) {
        let post = fire(state, &m);
        let nf = normalize_bang(&post);
        if nf != pre && seen.insert(nf.clone()) {
            out.push((nf, post.simplified()));
        }
    }
    out
}

/// Bounded breadth-first enumeration of all ω! derivations from a state.
#[derive(Clone, Debug, Default)]
pub struct BangSpace {
    /// Reached classes with the depth at which each was first seen.
    pub depth: BTreeMap<NormalForm, usize>,
    pub quiescent: BTreeSet<NormalForm>,
    /// Set when the depth or state budget cut the search short.
    pub truncated: bool,
}

pub fn explore(initial: &BangState, program: &Program, max_depth: usize, max_states: usize) -> BangSpace {
    let opts = RunOptions::default();
    let mut space = BangSpace::default();
    let mut queue = VecDeque::new();
    space.depth.insert(normalize_bang(initial), 0);
    queue.push_back((initial.clone(), normalize_bang(initial), 0usize));
    while let Some((state, nf, d)) = queue.pop_front() {
        let succ = successors(&state, program, &opts);
        if succ.is_empty() {
            space.quiescent.insert(nf);
            continue;
        }
        if d == max_depth {
            space.truncated = true;
            continue;
        }
        for (next_nf, next) in succ {
            if space.depth.contains_key(&next_nf) {
                continue;
            }
            if space.depth.len() >= max_states {
                space.truncated = true;
                return space;
            }
            space.depth.insert(next_nf.clone(), d + 1);
            queue.push_back((next, next_nf, d + 1));
        }
    }
    space
}
