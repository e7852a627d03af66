//! Frontend for the query language: lexer, parser, pretty-printer and
//! type checker.
//!
//! Source files use the `.boat` extension, UTF-8 text, `#` line
//! comments. The full grammar and semantics are documented in
//! `docs/langref.md`; the statement forms are:
//!
//! ```text
//! p: County = input;
//! name: output agg [ (n) ] [ [string] ] of Type [ weight Type ];
//! name := expr;                  name = expr;           name++;
//! foreach (i : int; cond) { ... }
//! visit (expr, visitor { before g: Grid -> { ... } ... });
//! name [ [expr] ] << expr [ weight expr ];
//! ```

mod ast;
mod check;
mod lexer;
mod parser;
mod printer;
mod token;
mod types;

pub use ast::{BeforeClause, BinOp, Expr, Pos, Program, Stmt};
pub use check::{
    typecheck, CheckError, CheckErrorKind, OutputSig, TClause, TExpr, TExprKind, TStmt,
    TypedProgram,
};
pub use lexer::{tokenize, LexError};
pub use parser::{parse, parse_source, ParseError};
pub use printer::print_program;
pub use token::{Token, TokenKind};
pub use types::Ty;

use thiserror::Error;

/// Any frontend failure: lexical, syntactic, or semantic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Lex + parse + typecheck in one step.
pub fn compile(source: &str) -> Result<TypedProgram, FrontendError> {
    let program = parse_source(source)?;
    Ok(typecheck(&program)?)
}
