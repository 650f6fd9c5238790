//! `chr`: run, encode and compare constraint handling rule programs.
//!
//! Exit status: 0 on a quiescent run or a passing comparison, 1 on any
//! error, 2 on a step limit (or an exhausted state budget) and on an
//! inconclusive comparison, 3 on a failing comparison.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chr_core::bang::{self, RunOptions, Verdict};
use chr_core::compare::{compare, CompareOptions, CompareVerdict};
use chr_core::encode::{encode_program, suspected_pathological};
use chr_core::explore::{init_e, reachable, Budget};
use chr_core::priority::{run_p, PState};
use chr_core::{parse_goal, parse_program, CompareError, EncodeError, EngineError, Goal, ParseError, Program};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "chr", version, about = "Constraint Handling Rules with persistent constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a goal against a program.
    Run(RunArgs),
    /// Print the priority program that simulates a program.
    Encode {
        #[arg(long)]
        program: PathBuf,
        /// Write to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a program and its encoding and check that they agree.
    Compare {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, default_value = "")]
        goal: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Depth limit when searching other derivations for the decoded state.
        #[arg(long, default_value_t = 64)]
        depth: usize,
        #[arg(long, default_value_t = 20_000)]
        max_states: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Semantics {
    /// Persistent constraints with irreflexive transitions.
    Bang,
    /// Rule priorities; every rule needs one.
    P,
    /// Bounded exploration of the equivalence-based semantics.
    E,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long, default_value = "")]
    goal: String,
    #[arg(long, value_enum, default_value = "bang")]
    semantics: Semantics,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// Print every transition.
    #[arg(long)]
    trace: bool,
    /// Shuffles the order in which rule instances are tried; 0 keeps program order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exploration depth, required with `--semantics e`.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Program { path: PathBuf, source: ParseError },
    #[error("goal: {0}")]
    Goal(ParseError),
    #[error("--semantics e requires --depth")]
    MissingDepth,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn load_program(path: &Path) -> Result<Program, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    parse_program(&text).map_err(|source| CliError::Program { path: path.into(), source })
}

fn load_goal(text: &str) -> Result<Goal, CliError> {
    parse_goal(text).map_err(CliError::Goal)
}

fn status(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Quiescent => 0,
        Verdict::StepLimit => 2,
    }
}

fn cmd_run(args: &RunArgs, out: &mut impl Write) -> Result<u8, CliError> {
    let program = load_program(&args.program)?;
    let goal = load_goal(&args.goal)?;
    match args.semantics {
        Semantics::Bang => {
            let opts = RunOptions { max_steps: args.max_steps, seed: args.seed, ..RunOptions::default() };
            let run = bang::run(&goal, &program, &opts)?;
            if args.trace {
                writeln!(out, "#0 initial :: {}", run.initial)?;
                for step in &run.trace.steps {
                    writeln!(out, "{step}")?;
                }
            }
            writeln!(out, "verdict: {}", run.verdict)?;
            writeln!(out, "transitions: {}", run.transitions())?;
            writeln!(out, "final: {}", run.final_state)?;
            Ok(status(run.verdict))
        }
        Semantics::P => {
            let initial = PState::from_goal(&goal);
            let run = run_p(initial.clone(), &program, args.max_steps, args.trace)?;
            if args.trace {
                writeln!(out, "#0 initial :: {initial}")?;
                for step in &run.trace {
                    writeln!(out, "{step}")?;
                }
            }
            writeln!(out, "verdict: {}", run.verdict)?;
            writeln!(out, "transitions: {}", run.steps)?;
            writeln!(out, "final: {}", run.final_state)?;
            Ok(status(run.verdict))
        }
        Semantics::E => {
            let depth = args.depth.ok_or(CliError::MissingDepth)?;
            let r = reachable(&init_e(&goal), &program, Budget::new(depth, args.max_states));
            for (d, n) in r.sizes.iter().enumerate() {
                writeln!(out, "depth {d}: {n} states")?;
            }
            writeln!(out, "reachable: {} states", r.len())?;
            if r.truncated {
                writeln!(out, "state budget of {} reached", args.max_states)?;
            }
            Ok(if r.truncated { 2 } else { 0 })
        }
    }
}

fn cmd_encode(program: &Path, output: Option<&Path>, out: &mut impl Write) -> Result<u8, CliError> {
    let program = load_program(program)?;
    let encoded = encode_program(&program)?;
    for name in suspected_pathological(&program) {
        eprintln!("warning: rule `{name}` may be pathological");
    }
    let text = encoded.to_string();
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write { path: path.into(), source })?,
        None => write!(out, "{text}")?,
    }
    Ok(0)
}

fn cmd_compare(program: &Path, goal: &str, opts: &CompareOptions, out: &mut impl Write) -> Result<u8, CliError> {
    let program = load_program(program)?;
    let goal = load_goal(goal)?;
    let report = compare(&program, &goal, opts)?;
    write!(out, "{report}")?;
    Ok(match report.verdict {
        CompareVerdict::Pass => 0,
        CompareVerdict::Inconclusive => 2,
        CompareVerdict::Fail => 3,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args, &mut out),
        Command::Encode { program, output } => cmd_encode(program, output.as_deref(), &mut out),
        Command::Compare { program, goal, max_steps, depth, max_states } => {
            let opts = CompareOptions { max_steps: *max_steps, search: Budget::new(*depth, *max_states) };
            cmd_compare(program, goal, &opts, &mut out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
