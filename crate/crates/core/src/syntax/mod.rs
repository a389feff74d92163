//! Sketch-language front end: lexer, parser, and printers.
//!
//! Grammar summary (loosest to tightest):
//!
//! ```text
//! file    := (comment? ('type' UIdent '=' type | 'let' ident ':' type '=' expr) 'in')*
//! expr    := 'let' pat (':' type)? '=' expr 'in' expr
//!          | 'if' expr 'then' expr 'else' expr
//!          | binary
//! binary  := ||  <  &&  <  == != < > <= >=  <  :: @ (right)  <  + - ++  <  * /
//! postfix := primary ('(' expr, ... ')')*
//! primary := ident | Ctor ('(' expr, ... ')')? | literal | '?' | '??'
//!          | '(' expr, ... ')' | '[' expr, ... ']'
//!          | 'fun' pat, ... '->' expr 'end'
//!          | 'case' expr, ... ('|' pat '=>' expr)+ 'end'
//! type    := '+'? ctor ('+' ctor)* | arrow ;  arrow := tatom ('->' arrow)?
//! tatom   := Int | Float | Bool | String | '?' | Alias | '[' type ']' | '(' type, ... ')'
//! ```

mod ast;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use ast::*;
pub use lexer::{lex, tokenize, Comment, Token, TokenKind};
pub use parser::{parse_expr, parse_repo, parse_tests, parse_type};
pub use print::{print_expr, print_pattern, print_repo, print_type};

/// A lexing or parsing failure. Parsing stops at the first error.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
    /// Token descriptions the parser would have accepted at `span`.
    pub expected: Vec<String>,
}

impl SyntaxError {
    pub(crate) fn lex(span: Span, message: String) -> SyntaxError {
        SyntaxError {
            span,
            message,
            expected: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubstituteError {
    #[error("hole {0} not found")]
    HoleNotFound(usize),
    #[error(transparent)]
    Parse(#[from] SyntaxError),
}

/// Splices `fragment` over hole `hole_id` and re-parses the whole manifest.
///
/// The fragment is parenthesized so that operator precedence at the hole
/// site cannot change its meaning.
pub fn substitute_hole(repo: &Repo, hole_id: usize, fragment: &str) -> Result<Repo, SubstituteError> {
    let site = repo.hole(hole_id).ok_or(SubstituteError::HoleNotFound(hole_id))?;
    let manifest: Vec<(String, String)> = repo
        .files
        .iter()
        .map(|f| {
            if f.path == site.span.file {
                let mut text = String::with_capacity(f.text.len() + fragment.len() + 2);
                text.push_str(&f.text[..site.span.lo]);
                text.push('(');
                text.push_str(fragment);
                text.push(')');
                text.push_str(&f.text[site.span.hi..]);
                (f.path.clone(), text)
            } else {
                (f.path.clone(), f.text.clone())
            }
        })
        .collect();
    Ok(parse_repo(&manifest)?)
}
