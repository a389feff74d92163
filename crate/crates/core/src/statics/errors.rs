use std::fmt;

use serde::Serialize;

use crate::syntax::{print_type, Span, SyntaxError};

use super::Type;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorKind {
    UnboundVariable,
    UnboundConstructor,
    UnboundTypeAlias,
    TypeInconsistency { expected: Type, got: Type },
    ArityMismatch,
    InexhaustiveMatch,
    DuplicateConstructor,
    CyclicAlias,
    SyntaxError,
}

impl ErrorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorKind::UnboundVariable => "UnboundVariable",
            ErrorKind::UnboundConstructor => "UnboundConstructor",
            ErrorKind::UnboundTypeAlias => "UnboundTypeAlias",
            ErrorKind::TypeInconsistency { .. } => "TypeInconsistency",
            ErrorKind::ArityMismatch => "ArityMismatch",
            ErrorKind::InexhaustiveMatch => "InexhaustiveMatch",
            ErrorKind::DuplicateConstructor => "DuplicateConstructor",
            ErrorKind::CyclicAlias => "CyclicAlias",
            ErrorKind::SyntaxError => "SyntaxError",
        }
    }
}

/// A located static error. Renders as `<kind> at <file>:<line>:<col>: <message>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StaticError {
    pub kind: ErrorKind,
    pub span: Span,
    pub message: String,
}

impl StaticError {
    pub fn unbound_variable(name: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::UnboundVariable,
            span,
            message: format!("unbound variable {name}"),
        }
    }

    pub fn unbound_constructor(name: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::UnboundConstructor,
            span,
            message: format!("unbound constructor {name}"),
        }
    }

    pub fn unbound_alias(name: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::UnboundTypeAlias,
            span,
            message: format!("unbound type alias {name}"),
        }
    }

    pub fn inconsistent(expected: &Type, got: &Type, span: Span) -> StaticError {
        StaticError {
            message: format!(
                "type inconsistency: expected {} but got {}",
                print_type(expected),
                print_type(got)
            ),
            kind: ErrorKind::TypeInconsistency {
                expected: expected.clone(),
                got: got.clone(),
            },
            span,
        }
    }

    pub fn arity(message: String, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::ArityMismatch,
            span,
            message,
        }
    }

    pub fn inexhaustive(witness: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::InexhaustiveMatch,
            span,
            message: format!("inexhaustive match: the case {witness} is not covered"),
        }
    }

    pub fn duplicate_constructor(ctor: &str, ty: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::DuplicateConstructor,
            span,
            message: format!("constructor {ctor} appears more than once in type {ty}"),
        }
    }

    pub fn cyclic_alias(name: &str, span: Span) -> StaticError {
        StaticError {
            kind: ErrorKind::CyclicAlias,
            span,
            message: format!("type alias {name} is defined in terms of itself"),
        }
    }

    pub fn syntax(err: &SyntaxError) -> StaticError {
        StaticError {
            kind: ErrorKind::SyntaxError,
            span: err.span.clone(),
            message: err.message.clone(),
        }
    }
}

impl fmt::Display for StaticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind.name(), self.span, self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_format() {
        let span = Span {
            file: "sketch.sl".into(),
            start_line: 3,
            start_col: 9,
            ..Span::default()
        };
        let e = StaticError::unbound_variable("grid", span.clone());
        assert_eq!(e.to_string(), "UnboundVariable at sketch.sl:3:9: unbound variable grid");
        let e = StaticError::inconsistent(&Type::int(), &Type::bool(), span);
        assert_eq!(
            e.to_string(),
            "TypeInconsistency at sketch.sl:3:9: type inconsistency: expected Int but got Bool"
        );
    }
}
