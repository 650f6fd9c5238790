//! Differential check of a program against its priority encoding.
//!
//! The program runs with persistent constraints, its encoding runs with
//! priorities, and the decoded result of the second is compared with the
//! first. Programs that are not confluent can legitimately end in different
//! quiescent states, so a mismatch is only reported after a bounded search
//! of all derivations fails to reach the decoded state.

use std::fmt;

use crate::bang::{self, RunOptions, Verdict};
use crate::encode::{decode_state, encode_goal, encode_program};
use crate::error::CompareError;
use crate::explore::Budget;
use crate::herbrand::BuiltinStore;
use crate::parser::Goal;
use crate::priority::run_p;
use crate::state::{equiv_bang, normalize_bang, BangState};
use crate::syntax::Program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareVerdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for CompareVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareVerdict::Pass => "PASS",
            CompareVerdict::Fail => "FAIL",
            CompareVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    /// Transition limit for each of the two runs.
    pub max_steps: usize,
    /// Limits for the search over alternative derivations.
    pub search: Budget,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { max_steps: 10_000, search: Budget::new(64, 20_000) }
    }
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub verdict: CompareVerdict,
    pub bang_steps: usize,
    pub bang_verdict: Verdict,
    pub bang_state: BangState,
    pub p_steps: usize,
    pub p_verdict: Verdict,
    /// Absent when the encoded run did not reach a decodable state.
    pub decoded: Option<BangState>,
    pub note: String,
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bang: {} after {} transitions", self.bang_verdict, self.bang_steps)?;
        writeln!(f, "p: {} after {} transitions", self.p_verdict, self.p_steps)?;
        writeln!(f, "bang state: {}", normalize_bang(&self.bang_state))?;
        match &self.decoded {
            Some(d) => writeln!(f, "decoded state: {}", normalize_bang(d))?,
            None => writeln!(f, "decoded state: none")?,
        }
        if !self.note.is_empty() {
            writeln!(f, "note: {}", self.note)?;
        }
        writeln!(f, "verdict: {}", self.verdict)
    }
}

/// Runs both sides and decides whether they agree.
pub fn compare(program: &Program, goal: &Goal, opts: &CompareOptions) -> Result<CompareReport, CompareError> {
    let run_opts = RunOptions::with_max_steps(opts.max_steps);
    let bang_run = bang::run(goal, program, &run_opts)?;
    let encoded = encode_program(program)?;
    let p_run = run_p(encode_goal(goal), &encoded, opts.max_steps, false)?;

    let mut report = CompareReport {
        verdict: CompareVerdict::Inconclusive,
        bang_steps: bang_run.transitions(),
        bang_verdict: bang_run.verdict,
        bang_state: bang_run.final_state.clone(),
        p_steps: p_run.steps,
        p_verdict: p_run.verdict,
        decoded: None,
        note: String::new(),
    };
    if bang_run.verdict == Verdict::StepLimit || p_run.verdict == Verdict::StepLimit {
        report.note = "step limit reached".into();
        return Ok(report);
    }
    let decoded = if p_run.final_state.builtins.is_failed() {
        // rule application stops at failure, whatever is left in the store
        BangState { builtins: BuiltinStore::Failed, globals: p_run.final_state.globals.clone(), ..BangState::default() }
    } else {
        match decode_state(&p_run.final_state) {
            Ok(d) => d,
            Err(e) => {
                report.verdict = CompareVerdict::Fail;
                report.note = e.to_string();
                return Ok(report);
            }
        }
    };
    report.decoded = Some(decoded.clone());
    if equiv_bang(&bang_run.final_state, &decoded) {
        report.verdict = CompareVerdict::Pass;
        return Ok(report);
    }
    let target = normalize_bang(&decoded);
    let space = bang::explore(&bang_run.initial, program, opts.search.max_depth, opts.search.max_states);
    if space.quiescent.contains(&target) {
        report.verdict = CompareVerdict::Pass;
        report.note = "decoded state is quiescent on another derivation".into();
    } else if space.truncated {
        report.note = "decoded state not found within the search budget".into();
    } else {
        report.verdict = CompareVerdict::Fail;
        report.note = "decoded state is not a reachable quiescent state".into();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_goal, parse_program};

    fn check(program: &str, goal: &str) -> CompareReport {
        compare(&parse_program(program).unwrap(), &parse_goal(goal).unwrap(), &CompareOptions::default()).unwrap()
    }

    #[test]
    fn transitive_hull_passes() {
        let r = check("t @ e(X,Y), e(Y,Z) ==> e(X,Z).", "e(A,B), e(B,A)");
        assert_eq!(r.verdict, CompareVerdict::Pass, "{r}");
        assert_eq!(r.bang_steps, 4);
    }

    #[test]
    fn empty_goal_passes() {
        let r = check("t @ e(X,Y), e(Y,Z) ==> e(X,Z).", "");
        assert_eq!(r.verdict, CompareVerdict::Pass);
        assert_eq!((r.bang_steps, r.p_steps), (0, 0));
    }

    #[test]
    fn indirect_persistence_passes() {
        assert_eq!(check("r1 @ a ==> b.\nr2 @ b <=> c.", "a").verdict, CompareVerdict::Pass);
    }

    #[test]
    fn failure_passes() {
        let r = check("a <=> fail.", "a, b");
        assert_eq!(r.verdict, CompareVerdict::Pass, "{r}");
        assert!(r.decoded.unwrap().is_failed());
    }

    #[test]
    fn nondeterministic_choice_passes() {
        let r = check("a <=> b.\na, c <=> d.", "c, a");
        assert_eq!(r.verdict, CompareVerdict::Pass, "{r}");
    }

    #[test]
    fn step_limit_is_inconclusive() {
        let p = parse_program("a <=> b.\nb <=> a.").unwrap();
        let opts = CompareOptions { max_steps: 20, ..CompareOptions::default() };
        let r = compare(&p, &parse_goal("a").unwrap(), &opts).unwrap();
        assert_eq!(r.verdict, CompareVerdict::Inconclusive);
    }
}
