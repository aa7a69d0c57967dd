//! MiniC: the fixed-width integer C subset accepted by the tool.
//!
//! The subset covers what HLS-style kernels use: `signed`/`unsigned`
//! 8/16/32-bit integers, fixed-size arrays, `if`/`for`/`while`, the ternary
//! operator, casts and non-recursive calls. Floats, structs, general pointers
//! and recursion are rejected with an [`DiagnosticKind::Unsupported`]
//! diagnostic. See `docs/minic.ebnf` for the grammar.

pub mod ast;
mod check;
mod emit;
mod lexer;
mod parser;

use std::fmt;

pub use ast::*;
pub use emit::emit_source;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Unsupported,
    /// Name resolution, typing, or top-function problems.
    Semantic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { kind, span, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Unsupported => "unsupported construct",
            DiagnosticKind::Semantic => "error",
        };
        write!(f, "{}:{}: {}: {}", self.span.line, self.span.col, kind, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    fn single(d: Diagnostic) -> Self {
        ParseError { diagnostics: vec![d] }
    }

    pub fn first_kind(&self) -> DiagnosticKind {
        self.diagnostics[0].kind
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses MiniC source into a checked [`Program`].
///
/// When `top` is `None` the top function is the unique function that no
/// other function calls.
pub fn parse(source: &str, top: Option<&str>) -> Result<Program, ParseError> {
    let tokens = lexer::tokenize(source).map_err(ParseError::single)?;
    let (globals, functions) = parser::Parser::new(tokens).program()?;
    let mut program = Program { globals, functions, top_name: String::new() };
    program.top_name = check::select_top(&program, top)?;
    check::check(&program)?;
    program.renumber();
    Ok(program)
}

/// Re-runs the semantic checks on a programmatically built tree.
pub fn validate(program: &Program) -> Result<(), ParseError> {
    check::check(program)
}
