use std::sync::Arc;

use thiserror::Error;

use crate::statics::is_prelude;
use crate::syntax::{BinOp, Expr, ExprKind, Literal, Pattern, PatternKind, Repo, TopDef};

use super::value::{value_eq, Closure, Env, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;
/// Nested calls allowed before evaluation gives up as indeterminate.
const MAX_DEPTH: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("runtime error: {0}")]
pub struct RuntimeError(pub String);

type EResult = Result<Value, RuntimeError>;

fn stuck(msg: impl Into<String>) -> RuntimeError {
    RuntimeError(msg.into())
}

pub(super) struct Machine {
    fuel: u64,
    depth: usize,
}

enum Match {
    Yes,
    No,
    Indet(String),
}

impl Machine {
    pub(super) fn new(fuel: u64) -> Machine {
        Machine { fuel, depth: 0 }
    }

    pub(super) fn refuel(&mut self, fuel: u64) {
        self.fuel = fuel;
        self.depth = 0;
    }

    /// Evaluates every top-level definition in order. A definition that
    /// fails to evaluate is bound to an indeterminate value.
    pub(super) fn top_env(&mut self, repo: &Repo) -> Env {
        let mut env = Env::new();
        for def in repo.defs() {
            if let TopDef::Let { name, bound, .. } = def {
                let v = match self.eval(bound, &env) {
                    Ok(Value::Closure(c)) if c.rec_name.is_none() => Value::Closure(Arc::new(Closure {
                        param: c.param.clone(),
                        body: c.body.clone(),
                        env: c.env.clone(),
                        rec_name: Some(name.clone()),
                    })),
                    Ok(v) => v,
                    Err(e) => Value::Indet(format!("{name} failed: {}", e.0)),
                };
                env = env.bind(name.clone(), v);
            }
        }
        env
    }

    pub(super) fn eval(&mut self, e: &Expr, env: &Env) -> EResult {
        if self.fuel == 0 {
            return Ok(Value::Indet("fuel".into()));
        }
        self.fuel -= 1;
        match &e.kind {
            ExprKind::Var(x) => match env.lookup(x) {
                Some(v) => Ok(v.clone()),
                None if is_prelude(x) => Ok(Value::Builtin(prelude_name(x))),
                None => Err(stuck(format!("unbound variable {x}"))),
            },
            ExprKind::Lit(l) => Ok(match l {
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(x) => Value::Float(*x),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::String(s) => Value::String(s.clone()),
            }),
            ExprKind::Hole { id, .. } => Ok(Value::Indet(format!("hole {id}"))),
            ExprKind::Let { pat, bound, body, .. } => {
                let mut v = self.eval(bound, env)?;
                if let (PatternKind::Var(x), Value::Closure(c)) = (&pat.kind, &v) {
                    if c.rec_name.is_none() {
                        v = Value::Closure(Arc::new(Closure {
                            param: c.param.clone(),
                            body: c.body.clone(),
                            env: c.env.clone(),
                            rec_name: Some(x.clone()),
                        }));
                    }
                }
                let env2 = self.bind_or_fail(pat, &v, env)?;
                match env2 {
                    Ok(env2) => self.eval(body, &env2),
                    Err(reason) => Ok(Value::Indet(reason)),
                }
            }
            ExprKind::Fun { param, body } => Ok(Value::Closure(Arc::new(Closure {
                param: param.clone(),
                body: (**body).clone(),
                env: env.clone(),
                rec_name: None,
            }))),
            ExprKind::App { func, args } => {
                let f = self.eval(func, env)?;
                let arg = if args.len() == 1 {
                    self.eval(&args[0], env)?
                } else {
                    Value::Tuple(self.eval_all(args, env)?)
                };
                self.apply(f, arg)
            }
            ExprKind::Tuple(items) => Ok(Value::Tuple(self.eval_all(items, env)?)),
            ExprKind::List(items) => Ok(Value::List(self.eval_all(items, env)?)),
            ExprKind::Cons(h, t) => {
                let h = self.eval(h, env)?;
                match self.eval(t, env)? {
                    Value::List(mut xs) => {
                        xs.insert(0, h);
                        Ok(Value::List(xs))
                    }
                    v @ Value::Indet(_) => Ok(v),
                    v => Err(stuck(format!("cons onto non-list {v}"))),
                }
            }
            ExprKind::Case { scrutinee, branches } => {
                let v = self.eval(scrutinee, env)?;
                if let Value::Indet(r) = &v {
                    return Ok(Value::Indet(r.clone()));
                }
                for (p, body) in branches {
                    let mut binds = Vec::new();
                    match match_pattern(p, &v, &mut binds)? {
                        Match::Yes => {
                            let mut env2 = env.clone();
                            for (n, v) in binds {
                                env2 = env2.bind(n, v);
                            }
                            return self.eval(body, &env2);
                        }
                        Match::No => {}
                        Match::Indet(r) => return Ok(Value::Indet(r)),
                    }
                }
                Err(stuck(format!("no case matches {v}")))
            }
            ExprKind::Ctor { name, arg } => {
                let arg = match arg {
                    Some(a) => Some(Box::new(self.eval(a, env)?)),
                    None => None,
                };
                Ok(Value::Ctor(name.clone(), arg))
            }
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => match self.eval(cond, env)? {
                Value::Bool(true) => self.eval(then_branch, env),
                Value::Bool(false) => self.eval(else_branch, env),
                v @ Value::Indet(_) => Ok(v),
                v => Err(stuck(format!("if condition is not a Bool: {v}"))),
            },
            ExprKind::BinOp { op, lhs, rhs } => {
                // && and || short-circuit.
                if matches!(op, BinOp::And | BinOp::Or) {
                    return match self.eval(lhs, env)? {
                        Value::Bool(b) if (*op == BinOp::And) != b => Ok(Value::Bool(b)),
                        Value::Bool(_) => match self.eval(rhs, env)? {
                            v @ (Value::Bool(_) | Value::Indet(_)) => Ok(v),
                            v => Err(stuck(format!("{} expects Bool, got {v}", op.symbol()))),
                        },
                        v @ Value::Indet(_) => Ok(v),
                        v => Err(stuck(format!("{} expects Bool, got {v}", op.symbol()))),
                    };
                }
                let l = self.eval(lhs, env)?;
                let r = self.eval(rhs, env)?;
                binop(*op, l, r)
            }
        }
    }

    fn eval_all(&mut self, items: &[Expr], env: &Env) -> Result<Vec<Value>, RuntimeError> {
        items.iter().map(|i| self.eval(i, env)).collect()
    }

    /// Binds a pattern; an indeterminate match is reported as `Err(reason)`.
    fn bind_or_fail(&mut self, p: &Pattern, v: &Value, env: &Env) -> Result<Result<Env, String>, RuntimeError> {
        let mut binds = Vec::new();
        match match_pattern(p, v, &mut binds)? {
            Match::Yes => {
                let mut env2 = env.clone();
                for (n, v) in binds {
                    env2 = env2.bind(n, v);
                }
                Ok(Ok(env2))
            }
            Match::No => Err(stuck(format!("pattern does not match {v}"))),
            Match::Indet(r) => Ok(Err(r)),
        }
    }

    pub(super) fn apply(&mut self, f: Value, arg: Value) -> EResult {
        match f {
            Value::Closure(c) => {
                if self.depth >= MAX_DEPTH {
                    return Ok(Value::Indet("recursion depth".into()));
                }
                let mut env = c.env.clone();
                if let Some(n) = &c.rec_name {
                    env = env.bind(n.clone(), Value::Closure(c.clone()));
                }
                let env = match self.bind_or_fail(&c.param, &arg, &env)? {
                    Ok(env) => env,
                    Err(r) => return Ok(Value::Indet(r)),
                };
                self.depth += 1;
                let out = self.eval(&c.body, &env);
                self.depth -= 1;
                out
            }
            Value::Builtin(name) => self.builtin(name, arg),
            v @ Value::Indet(_) => Ok(v),
            v => Err(stuck(format!("cannot apply non-function {v}"))),
        }
    }

    fn builtin(&mut self, name: &'static str, arg: Value) -> EResult {
        if let Value::Indet(r) = &arg {
            return Ok(Value::Indet(r.clone()));
        }
        let args: Vec<Value> = match arg {
            Value::Tuple(vs) if builtin_arity(name) > 1 => vs,
            v => vec![v],
        };
        if args.len() != builtin_arity(name) {
            return Err(stuck(format!("{name} expects {} arguments", builtin_arity(name))));
        }
        if let Some(Value::Indet(r)) = args.iter().find(|a| a.is_indet()) {
            return Ok(Value::Indet(r.clone()));
        }
        let list = |v: &Value| -> Result<Vec<Value>, RuntimeError> {
            match v {
                Value::List(xs) => Ok(xs.clone()),
                v => Err(stuck(format!("{name} expects a list, got {v}"))),
            }
        };
        let int = |v: &Value| -> Result<i64, RuntimeError> {
            match v {
                Value::Int(i) => Ok(*i),
                v => Err(stuck(format!("{name} expects an Int, got {v}"))),
            }
        };
        let truthy = |v: Value| -> Result<Option<bool>, RuntimeError> {
            match v {
                Value::Bool(b) => Ok(Some(b)),
                Value::Indet(_) => Ok(None),
                v => Err(stuck(format!("{name} callback returned non-Bool {v}"))),
            }
        };
        match name {
            "List.length" => Ok(Value::Int(list(&args[0])?.len() as i64)),
            "List.rev" => {
                let mut xs = list(&args[0])?;
                xs.reverse();
                Ok(Value::List(xs))
            }
            "List.hd" => list(&args[0])?
                .into_iter()
                .next()
                .ok_or_else(|| stuck("List.hd of empty list")),
            "List.tl" => {
                let xs = list(&args[0])?;
                if xs.is_empty() {
                    Err(stuck("List.tl of empty list"))
                } else {
                    Ok(Value::List(xs[1..].to_vec()))
                }
            }
            "List.is_empty" => Ok(Value::Bool(list(&args[0])?.is_empty())),
            "List.append" => {
                let mut xs = list(&args[0])?;
                xs.extend(list(&args[1])?);
                Ok(Value::List(xs))
            }
            "List.nth" => {
                let xs = list(&args[0])?;
                let i = int(&args[1])?;
                usize::try_from(i)
                    .ok()
                    .and_then(|i| xs.get(i).cloned())
                    .ok_or_else(|| stuck(format!("List.nth index {i} out of range")))
            }
            "List.mem" => {
                let xs = list(&args[1])?;
                let mut unknown = false;
                for x in &xs {
                    match value_eq(&args[0], x).map_err(stuck)? {
                        Some(true) => return Ok(Value::Bool(true)),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                Ok(if unknown {
                    Value::Indet("comparison with indeterminate".into())
                } else {
                    Value::Bool(false)
                })
            }
            "List.map" | "List.mapi" => {
                let f = args[0].clone();
                let xs = list(&args[1])?;
                let mut out = Vec::with_capacity(xs.len());
                for (i, x) in xs.into_iter().enumerate() {
                    let a = if name == "List.mapi" {
                        Value::Tuple(vec![Value::Int(i as i64), x])
                    } else {
                        x
                    };
                    out.push(self.apply(f.clone(), a)?);
                }
                Ok(Value::List(out))
            }
            "List.filter" => {
                let f = args[0].clone();
                let mut out = Vec::new();
                for x in list(&args[1])? {
                    match truthy(self.apply(f.clone(), x.clone())?)? {
                        Some(true) => out.push(x),
                        Some(false) => {}
                        None => return Ok(Value::Indet("filter predicate".into())),
                    }
                }
                Ok(Value::List(out))
            }
            "List.exists" | "List.for_all" => {
                let f = args[0].clone();
                let want = name == "List.exists";
                for x in list(&args[1])? {
                    match truthy(self.apply(f.clone(), x)?)? {
                        Some(b) if b == want => return Ok(Value::Bool(want)),
                        Some(_) => {}
                        None => return Ok(Value::Indet("predicate".into())),
                    }
                }
                Ok(Value::Bool(!want))
            }
            "List.fold_left" => {
                let f = args[0].clone();
                let mut acc = args[1].clone();
                for x in list(&args[2])? {
                    acc = self.apply(f.clone(), Value::Tuple(vec![acc, x]))?;
                }
                Ok(acc)
            }
            "List.init" => {
                let n = int(&args[0])?;
                if n < 0 {
                    return Err(stuck("List.init with negative length"));
                }
                let f = args[1].clone();
                let mut out = Vec::new();
                for i in 0..n {
                    out.push(self.apply(f.clone(), Value::Int(i))?);
                }
                Ok(Value::List(out))
            }
            "string_of_int" => Ok(Value::String(int(&args[0])?.to_string())),
            "float_of_int" => Ok(Value::Float(int(&args[0])? as f64)),
            "String.length" => match &args[0] {
                Value::String(s) => Ok(Value::Int(s.chars().count() as i64)),
                v => Err(stuck(format!("String.length expects a String, got {v}"))),
            },
            "not" => match &args[0] {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => Err(stuck(format!("not expects a Bool, got {v}"))),
            },
            other => Err(stuck(format!("unknown builtin {other}"))),
        }
    }
}

fn prelude_name(x: &str) -> &'static str {
    crate::statics::PRELUDE
        .iter()
        .find(|(n, _)| *n == x)
        .map(|(n, _)| *n)
        .expect("checked by is_prelude")
}

fn builtin_arity(name: &str) -> usize {
    match name {
        "List.fold_left" => 3,
        "List.map" | "List.mapi" | "List.filter" | "List.init" | "List.nth" | "List.append" | "List.exists"
        | "List.for_all" | "List.mem" => 2,
        _ => 1,
    }
}

fn binop(op: BinOp, l: Value, r: Value) -> EResult {
    use Value::*;
    if let Indet(x) = &l {
        return Ok(Indet(x.clone()));
    }
    if let Indet(x) = &r {
        return Ok(Indet(x.clone()));
    }
    Ok(match (op, l, r) {
        (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
        (BinOp::Div, Int(_), Int(0)) => return Err(stuck("division by zero")),
        (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Concat, String(a), String(b)) => String(a + &b),
        (BinOp::Append, List(mut a), List(b)) => {
            a.extend(b);
            List(a)
        }
        (BinOp::Eq | BinOp::Neq, a, b) => match value_eq(&a, &b).map_err(stuck)? {
            Some(eq) => Bool(eq == (op == BinOp::Eq)),
            None => Indet("comparison with indeterminate".into()),
        },
        (op, a, b) => return Err(stuck(format!("{} cannot combine {a} and {b}", op.symbol()))),
    })
}

fn match_pattern(p: &Pattern, v: &Value, binds: &mut Vec<(String, Value)>) -> Result<Match, RuntimeError> {
    if let Value::Indet(r) = v {
        return Ok(match p.kind {
            PatternKind::Var(_) | PatternKind::Wildcard => {
                if let PatternKind::Var(x) = &p.kind {
                    binds.push((x.clone(), v.clone()));
                }
                Match::Yes
            }
            _ => Match::Indet(r.clone()),
        });
    }
    Ok(match (&p.kind, v) {
        (PatternKind::Var(x), _) => {
            binds.push((x.clone(), v.clone()));
            Match::Yes
        }
        (PatternKind::Wildcard, _) => Match::Yes,
        (PatternKind::Lit(l), v) => {
            let lv = match l {
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(x) => Value::Float(*x),
                Literal::Bool(b) => Value::Bool(*b),
                Literal::String(s) => Value::String(s.clone()),
            };
            match value_eq(&lv, v).map_err(stuck)? {
                Some(true) => Match::Yes,
                Some(false) => Match::No,
                None => Match::Indet("literal pattern".into()),
            }
        }
        (PatternKind::Tuple(ps), Value::Tuple(vs)) if ps.len() == vs.len() => all(ps.iter().zip(vs), binds)?,
        (PatternKind::EmptyList, Value::List(vs)) => {
            if vs.is_empty() {
                Match::Yes
            } else {
                Match::No
            }
        }
        (PatternKind::Cons(h, t), Value::List(vs)) => {
            if vs.is_empty() {
                Match::No
            } else {
                let tail = Value::List(vs[1..].to_vec());
                match match_pattern(h, &vs[0], binds)? {
                    Match::Yes => match_pattern(t, &tail, binds)?,
                    other => other,
                }
            }
        }
        (PatternKind::Ctor(n, sub), Value::Ctor(m, arg)) => {
            if n != m {
                Match::No
            } else {
                match (sub, arg) {
                    (None, None) => Match::Yes,
                    (Some(s), Some(a)) => match_pattern(s, a, binds)?,
                    _ => return Err(stuck(format!("constructor {n} used with the wrong arity"))),
                }
            }
        }
        (_, v) => return Err(stuck(format!("pattern cannot match value {v}"))),
    })
}

fn all<'a>(
    pairs: impl Iterator<Item = (&'a Pattern, &'a Value)>,
    binds: &mut Vec<(String, Value)>,
) -> Result<Match, RuntimeError> {
    let mut indet = None;
    for (p, v) in pairs {
        match match_pattern(p, v, binds)? {
            Match::No => return Ok(Match::No),
            Match::Indet(r) => indet = indet.or(Some(r)),
            Match::Yes => {}
        }
    }
    Ok(match indet {
        Some(r) => Match::Indet(r),
        None => Match::Yes,
    })
}
