//! Constraint Handling Rules with persistent constraints.
//!
//! Programs are parsed with [`parse_program`] and goals with [`parse_goal`].
//! [`bang::run`] executes a goal with persistent constraints, where
//! propagation rules terminate because a rule may not fire into a state
//! equivalent to the current one. [`priority::run_p`] executes programs with
//! rule priorities, [`encode::encode_program`] translates the former into the
//! latter, and [`compare::compare`] checks the two against each other.
//! [`explore`] enumerates the plain equivalence-based semantics up to a
//! budget.
//!
//! ```
//! use chr_core::{bang, parse_goal, parse_program};
//!
//! let program = parse_program("t @ e(X,Y), e(Y,Z) ==> e(X,Z).").unwrap();
//! let goal = parse_goal("e(A,B), e(B,A)").unwrap();
//! let run = bang::run(&goal, &program, &bang::RunOptions::default()).unwrap();
//! assert_eq!(run.transitions(), 4);
//! ```

pub mod bang;
pub mod compare;
pub mod encode;
pub mod error;
pub mod explore;
pub mod herbrand;
pub mod parser;
pub mod priority;
pub mod state;
pub mod syntax;
pub mod term;

pub use error::{CompareError, DecodeError, EncodeError, EngineError, ParseError};
pub use herbrand::BuiltinStore;
pub use parser::{parse_goal, parse_program, parse_rule, Goal};
pub use state::{equiv_bang, equiv_e, normalize_bang, normalize_e, BangState, EState, NormalForm};
pub use syntax::{check_range_restricted, local_variables, Program, Rule};
pub use term::{BuiltinConstraint, Term, UserConstraint, Var};
