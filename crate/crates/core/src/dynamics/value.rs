use std::fmt;
use std::sync::Arc;

use crate::syntax::{Expr, Pattern};

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    String(String),
    Tuple(Vec<Value>),
    List(Vec<Value>),
    Ctor(String, Option<Box<Value>>),
    Closure(Arc<Closure>),
    Builtin(&'static str),
    /// Result of evaluating a hole, or of running out of fuel.
    Indet(String),
}

#[derive(Debug)]
pub struct Closure {
    pub param: Pattern,
    pub body: Expr,
    pub env: Env,
    /// Name the closure is bound to when it is a recursive definition.
    pub rec_name: Option<String>,
}

impl Value {
    pub fn is_indet(&self) -> bool {
        matches!(self, Value::Indet(_))
    }

    pub fn contains_indet(&self) -> bool {
        match self {
            Value::Indet(_) => true,
            Value::Tuple(vs) | Value::List(vs) => vs.iter().any(Value::contains_indet),
            Value::Ctor(_, Some(a)) => a.contains_indet(),
            _ => false,
        }
    }
}

/// Persistent environment; closures share the tail they captured.
#[derive(Debug, Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

#[derive(Debug)]
struct EnvNode {
    name: String,
    value: Value,
    next: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: String, value: Value) -> Env {
        Env(Some(Arc::new(EnvNode {
            name,
            value,
            next: self.clone(),
        })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next;
        }
        None
    }
}

impl Drop for EnvNode {
    // Unlink iteratively so long environments don't overflow the stack.
    fn drop(&mut self) {
        let mut next = self.next.0.take();
        while let Some(rc) = next {
            match Arc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.0.take(),
                Err(_) => break,
            }
        }
    }
}

/// Structural equality. Returns `None` when either side contains an
/// indeterminate component; functions are not comparable.
pub fn value_eq(a: &Value, b: &Value) -> Result<Option<bool>, String> {
    if a.contains_indet() || b.contains_indet() {
        return Ok(None);
    }
    eq_determinate(a, b).map(Some)
}

fn eq_determinate(a: &Value, b: &Value) -> Result<bool, String> {
    use Value::*;
    Ok(match (a, b) {
        (Int(x), Int(y)) => x == y,
        (Float(x), Float(y)) => x == y,
        (Bool(x), Bool(y)) => x == y,
        (String(x), String(y)) => x == y,
        (Tuple(xs), Tuple(ys)) | (List(xs), List(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (x, y) in xs.iter().zip(ys) {
                if !eq_determinate(x, y)? {
                    return Ok(false);
                }
            }
            true
        }
        (Ctor(n, x), Ctor(m, y)) => {
            n == m
                && match (x, y) {
                    (None, None) => true,
                    (Some(x), Some(y)) => eq_determinate(x, y)?,
                    _ => false,
                }
        }
        (Closure(_) | Builtin(_), _) | (_, Closure(_) | Builtin(_)) => {
            return Err("cannot compare functions".into())
        }
        _ => false,
    })
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        matches!(value_eq(self, other), Ok(Some(true)))
    }
}

fn write_seq(f: &mut fmt::Formatter<'_>, items: &[Value]) -> fmt::Result {
    for (i, v) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{v}")?;
    }
    Ok(())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::String(s) => write!(f, "{s:?}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                write_seq(f, vs)?;
                write!(f, ")")
            }
            Value::List(vs) => {
                write!(f, "[")?;
                write_seq(f, vs)?;
                write!(f, "]")
            }
            Value::Ctor(n, None) => write!(f, "{n}"),
            Value::Ctor(n, Some(a)) => match &**a {
                Value::Tuple(vs) => {
                    write!(f, "{n}(")?;
                    write_seq(f, vs)?;
                    write!(f, ")")
                }
                a => write!(f, "{n}({a})"),
            },
            Value::Closure(_) => write!(f, "<fun>"),
            Value::Builtin(n) => write!(f, "<{n}>"),
            Value::Indet(reason) => write!(f, "<indeterminate: {reason}>"),
        }
    }
}
