//! Concrete syntax for programs and goals.
//!
//! ```text
//! rule  ::= [name '@'] [int '::'] heads ('<=>' | '==>') [guard '|'] body '.'
//! heads ::= constraints ['\' constraints]
//! ```
//!
//! Guards and bodies are comma-separated atoms. `X = t` is syntactic
//! equality, `true` and `fail` are the trivial built-ins, and `%` starts a
//! line comment.

use crate::error::ParseError;
use crate::syntax::{Program, Rule};
use crate::term::{BuiltinConstraint, Term, UserConstraint};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Number(String),
    At,
    DoubleColon,
    Backslash,
    Simplify,
    Propagate,
    Bar,
    Comma,
    Dot,
    LParen,
    RParen,
    Equals,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::At => "`@`".into(),
            Tok::DoubleColon => "`::`".into(),
            Tok::Backslash => "`\\`".into(),
            Tok::Simplify => "`<=>`".into(),
            Tok::Propagate => "`==>`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError::Syntax { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest = &chars[i..];
        let (tok, len) = if rest.starts_with(&['<', '=', '>']) {
            (Tok::Simplify, 3)
        } else if rest.starts_with(&['=', '=', '>']) {
            (Tok::Propagate, 3)
        } else if rest.starts_with(&[':', ':']) {
            (Tok::DoubleColon, 2)
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = if c.is_ascii_digit() {
                if !word.chars().all(|d| d.is_ascii_digit()) {
                    return Err(err(start_line, start_col, format!("malformed number `{word}`")));
                }
                Tok::Number(word)
            } else if c.is_ascii_uppercase() {
                Tok::Var(word)
            } else if c.is_ascii_lowercase() {
                Tok::Ident(word)
            } else {
                return Err(err(start_line, start_col, format!("identifier `{word}` must start with a letter")));
            };
            (tok, j - i)
        } else {
            let tok = match c {
                '@' => Tok::At,
                '\\' => Tok::Backslash,
                '|' => Tok::Bar,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '=' => Tok::Equals,
                other => return Err(err(start_line, start_col, format!("unexpected character `{other}`"))),
            };
            (tok, 1)
        };
        out.push(Spanned { tok, line: start_line, column: start_col });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

enum Atom {
    User(UserConstraint),
    Builtin(BuiltinConstraint),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError::Syntax { line: s.line, column: s.column, message: message.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if !matches!(self.peek(), Tok::Var(_) | Tok::Number(_) | Tok::Ident(_)) {
            return Err(self.unexpected("a term"));
        }
        match self.bump() {
            Tok::Var(v) => Ok(Term::var(v)),
            Tok::Number(n) => Ok(Term::atom(n)),
            Tok::Ident(f) => {
                if *self.peek() != Tok::LParen {
                    return Ok(Term::atom(f));
                }
                self.bump();
                let mut args = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Term::app(f, args))
            }
            _ => unreachable!(),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (line, column) = (self.toks[self.pos].line, self.toks[self.pos].column);
        let lhs = self.term()?;
        if *self.peek() == Tok::Equals {
            self.bump();
            let rhs = self.term()?;
            return Ok(Atom::Builtin(BuiltinConstraint::Eq(lhs, rhs)));
        }
        let at = |message: &str| ParseError::Syntax { line, column, message: message.into() };
        match lhs {
            Term::Var(_) => Err(at("a variable is not a constraint")),
            Term::App(f, args) => match (f.name(), args.len()) {
                ("true", 0) => Ok(Atom::Builtin(BuiltinConstraint::True)),
                ("fail", 0) => Ok(Atom::Builtin(BuiltinConstraint::False)),
                (name, _) if name.starts_with(|c: char| c.is_ascii_digit()) => {
                    Err(at("a number is not a constraint"))
                }
                _ => Ok(Atom::User(UserConstraint { symbol: f, args })),
            },
        }
    }

    fn atoms(&mut self) -> Result<Vec<Atom>, ParseError> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn heads(&mut self) -> Result<Vec<UserConstraint>, ParseError> {
        let start = self.pos;
        let atoms = self.atoms()?;
        atoms
            .into_iter()
            .map(|a| match a {
                Atom::User(c) => Ok(c),
                Atom::Builtin(_) => {
                    let s = &self.toks[start];
                    Err(ParseError::Syntax {
                        line: s.line,
                        column: s.column,
                        message: "built-in constraint in rule head".into(),
                    })
                }
            })
            .collect()
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let mut rule = Rule::default();
        if let (Tok::Ident(name), Tok::At) = (self.peek().clone(), self.peek_at(1)) {
            rule.name = Some(name);
            self.pos += 2;
        }
        if let (Tok::Number(n), Tok::DoubleColon) = (self.peek().clone(), self.peek_at(1)) {
            let p: u32 = n.parse().ok().filter(|p| *p > 0).ok_or_else(|| self.error("priority must be a positive integer"))?;
            rule.priority = Some(p);
            self.pos += 2;
        }
        let first = self.heads()?;
        if !matches!(self.peek(), Tok::Backslash | Tok::Simplify | Tok::Propagate) {
            return Err(self.unexpected("`<=>`, `==>` or `\\`"));
        }
        match self.bump() {
            Tok::Backslash => {
                rule.kept = first;
                rule.removed = self.heads()?;
                self.expect(Tok::Simplify)?;
            }
            Tok::Simplify => rule.removed = first,
            Tok::Propagate => rule.kept = first,
            _ => unreachable!(),
        }
        let guard_start = self.pos;
        let mut atoms = self.atoms()?;
        if *self.peek() == Tok::Bar {
            self.bump();
            for a in atoms {
                match a {
                    Atom::Builtin(BuiltinConstraint::True) => {}
                    Atom::Builtin(b) => rule.guard.push(b),
                    Atom::User(c) => {
                        let s = &self.toks[guard_start];
                        return Err(ParseError::Syntax {
                            line: s.line,
                            column: s.column,
                            message: format!("user constraint `{c}` in guard"),
                        });
                    }
                }
            }
            atoms = self.atoms()?;
        }
        for a in atoms {
            match a {
                Atom::User(c) => rule.body_user.push(c),
                Atom::Builtin(BuiltinConstraint::True) => {}
                Atom::Builtin(b) => rule.body_builtin.push(b),
            }
        }
        self.expect(Tok::Dot)?;
        Ok(rule)
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let mut rules = Vec::new();
    while *p.peek() != Tok::Eof {
        rules.push(p.rule()?);
    }
    Program::new(rules)
}

/// Parses exactly one rule.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut p = Parser::new(text)?;
    let rule = p.rule()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(rule)
}

/// A parsed goal: user-defined constraints and built-ins, each in text order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Goal {
    pub user: Vec<UserConstraint>,
    pub builtin: Vec<BuiltinConstraint>,
}

/// Parses a comma-separated goal. An empty string is the empty goal, and a
/// trailing `.` is allowed.
pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = Parser::new(text)?;
    let mut goal = Goal::default();
    if matches!(p.peek(), Tok::Eof | Tok::Dot) {
        if *p.peek() == Tok::Dot {
            p.bump();
        }
        if *p.peek() != Tok::Eof {
            return Err(p.unexpected("end of input"));
        }
        return Ok(goal);
    }
    for a in p.atoms()? {
        match a {
            Atom::User(c) => goal.user.push(c),
            Atom::Builtin(BuiltinConstraint::True) => {}
            Atom::Builtin(b) => goal.builtin.push(b),
        }
    }
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("`,` or end of input"));
    }
    Ok(goal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> UserConstraint {
        parse_goal(s).unwrap().user.remove(0)
    }

    #[test]
    fn transitivity_rule() {
        let r = parse_rule("t @ e(X,Y), e(Y,Z) ==> e(X,Z).").unwrap();
        assert_eq!(r.name.as_deref(), Some("t"));
        assert_eq!(r.kept, vec![c("e(X,Y)"), c("e(Y,Z)")]);
        assert!(r.removed.is_empty());
        assert!(r.guard.is_empty());
        assert_eq!(r.body_user, vec![c("e(X,Z)")]);
    }

    #[test]
    fn simplification_rule() {
        let r = parse_rule("r2 @ b <=> c.").unwrap();
        assert!(r.kept.is_empty());
        assert_eq!(r.removed, vec![c("b")]);
        assert_eq!(r.body_user, vec![c("c")]);
    }

    #[test]
    fn simpagation_with_guard_and_priority() {
        let r = parse_rule(r"s @ 2 :: p(X) \ q(X, Y) <=> X = a, true | r(Y), Y = b.").unwrap();
        assert_eq!(r.priority, Some(2));
        assert_eq!(r.kept, vec![c("p(X)")]);
        assert_eq!(r.removed, vec![c("q(X,Y)")]);
        assert_eq!(r.guard, vec![BuiltinConstraint::eq(Term::var("X"), Term::atom("a"))]);
        assert_eq!(r.body_builtin, vec![BuiltinConstraint::eq(Term::var("Y"), Term::atom("b"))]);
    }

    #[test]
    fn malformed_equality_chain_is_rejected() {
        assert!(parse_rule("x <=> 1=2 | y.").is_ok());
        let e = parse_rule("x <=> 1=2=3 | y.").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 1, column: 10, .. }), "{e}");
    }

    #[test]
    fn positions_span_lines() {
        let e = parse_program("a <=> b.\n% comment\n  c <=> .").unwrap_err();
        assert!(matches!(e, ParseError::Syntax { line: 3, column: 9, .. }), "{e}");
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let e = parse_program("r @ a <=> b.\nr @ b <=> c.").unwrap_err();
        assert_eq!(e, ParseError::DuplicateRuleName("r".into()));
    }

    #[test]
    fn builtin_in_head_is_rejected() {
        assert!(parse_rule("X = a <=> b.").is_err());
        assert!(parse_rule(r"a \ b ==> c.").is_err());
    }

    #[test]
    fn goals() {
        let g = parse_goal("e(A,B), e(B,A)").unwrap();
        assert_eq!(g.user, vec![c("e(A,B)"), c("e(B,A)")]);
        assert!(g.builtin.is_empty());
        assert_eq!(parse_goal("").unwrap(), Goal::default());
        assert_eq!(parse_goal("  ").unwrap(), Goal::default());
        let g = parse_goal("p(X), X=f(Y)").unwrap();
        assert_eq!(g.user, vec![c("p(X)")]);
        assert_eq!(
            g.builtin,
            vec![BuiltinConstraint::eq(Term::var("X"), Term::app("f", vec![Term::var("Y")]))]
        );
        assert!(parse_goal("p(X) q").is_err());
    }

    #[test]
    fn empty_body_prints_as_true() {
        let r = parse_rule("a <=> true.").unwrap();
        assert!(r.body_user.is_empty() && r.body_builtin.is_empty());
        assert_eq!(r.to_string(), "a <=> true.");
        let r = parse_rule("a <=> fail.").unwrap();
        assert_eq!(r.body_builtin, vec![BuiltinConstraint::False]);
    }
}
