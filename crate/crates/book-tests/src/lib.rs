//! The guide's code samples, compiled and run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/syntax.md")]
pub struct Syntax;

#[doc = include_str!("../../../book/src/builtins.md")]
pub struct Builtins;

#[doc = include_str!("../../../book/src/equivalence.md")]
pub struct Equivalence;

#[doc = include_str!("../../../book/src/bang.md")]
pub struct Bang;

#[doc = include_str!("../../../book/src/explorer.md")]
pub struct Explorer;

#[doc = include_str!("../../../book/src/priorities.md")]
pub struct Priorities;

#[doc = include_str!("../../../book/src/encoding.md")]
pub struct Encoding;

#[doc = include_str!("../../../book/src/cli.md")]
pub struct Cli;
