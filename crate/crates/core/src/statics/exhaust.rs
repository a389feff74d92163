//! Match exhaustiveness by usefulness of the wildcard vector, returning an
//! uncovered value as a witness.

use crate::syntax::{Literal, Pattern, PatternKind, TypeExpr};

use super::types::Scope;
use super::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Head {
    Named(String),
    Tuple(usize),
    Nil,
    Cons,
    Bool(bool),
    /// Literal drawn from an infinite domain (Int, Float, String).
    Lit(String),
}

#[derive(Debug, Clone)]
enum Pat {
    Wild,
    Ctor(Head, Vec<Pat>),
}

fn lower(p: &Pattern) -> Pat {
    match &p.kind {
        PatternKind::Var(_) | PatternKind::Wildcard => Pat::Wild,
        PatternKind::Lit(Literal::Bool(b)) => Pat::Ctor(Head::Bool(*b), vec![]),
        PatternKind::Lit(Literal::Int(i)) => Pat::Ctor(Head::Lit(i.to_string()), vec![]),
        PatternKind::Lit(Literal::Float(x)) => Pat::Ctor(Head::Lit(format!("{:?}", x.to_bits())), vec![]),
        PatternKind::Lit(Literal::String(s)) => Pat::Ctor(Head::Lit(format!("{s:?}")), vec![]),
        PatternKind::Tuple(ps) => Pat::Ctor(Head::Tuple(ps.len()), ps.iter().map(lower).collect()),
        PatternKind::Ctor(n, sub) => Pat::Ctor(
            Head::Named(n.clone()),
            sub.iter().map(|s| lower(s)).collect(),
        ),
        PatternKind::EmptyList => Pat::Ctor(Head::Nil, vec![]),
        PatternKind::Cons(h, t) => Pat::Ctor(Head::Cons, vec![lower(h), lower(t)]),
    }
}

/// Returns an example of a value not matched by any of `patterns`, or
/// `None` when the patterns are exhaustive for `scrutinee`.
pub fn missing_case(scope: &Scope, scrutinee: &Type, patterns: &[&Pattern]) -> Option<String> {
    let rows: Vec<Vec<Pat>> = patterns.iter().map(|p| vec![lower(p)]).collect();
    let mut w = useful(scope, &rows, std::slice::from_ref(scrutinee), 0)?;
    Some(show(&w.remove(0)))
}

const MAX_DEPTH: usize = 64;

/// The constructors of a column, or `None` for an infinite domain.
fn signature(scope: &Scope, ty: &Type, heads: &[&Head]) -> Option<Vec<(Head, Vec<Type>)>> {
    match scope.head(ty) {
        TypeExpr::Sum(vs) => Some(
            vs.into_iter()
                .map(|v| (Head::Named(v.name), v.arg.into_iter().collect()))
                .collect(),
        ),
        TypeExpr::List(e) => Some(vec![
            (Head::Nil, vec![]),
            (Head::Cons, vec![(*e).clone(), TypeExpr::List(e)]),
        ]),
        TypeExpr::Product(ts) => Some(vec![(Head::Tuple(ts.len()), ts)]),
        TypeExpr::Base(crate::syntax::BaseType::Bool) => {
            Some(vec![(Head::Bool(true), vec![]), (Head::Bool(false), vec![])])
        }
        TypeExpr::Unknown => {
            // Infer the domain from the first informative pattern.
            let inferred = heads.iter().find_map(|h| match h {
                Head::Named(n) => scope.lookup_ctor(n).map(|sig| sig.result),
                Head::Tuple(n) => Some(TypeExpr::Product(vec![TypeExpr::Unknown; *n])),
                Head::Nil | Head::Cons => Some(TypeExpr::list(TypeExpr::Unknown)),
                Head::Bool(_) => Some(TypeExpr::bool()),
                Head::Lit(_) => None,
            })?;
            if inferred.is_unknown() {
                return None;
            }
            signature(scope, &inferred, &[])
        }
        _ => None,
    }
}

fn useful(scope: &Scope, rows: &[Vec<Pat>], tys: &[Type], depth: usize) -> Option<Vec<Pat>> {
    if tys.is_empty() {
        return rows.is_empty().then(Vec::new);
    }
    if depth > MAX_DEPTH {
        // Give up on pathological nesting rather than report a false miss.
        return None;
    }
    let heads: Vec<&Head> = rows
        .iter()
        .filter_map(|r| match &r[0] {
            Pat::Ctor(h, _) => Some(h),
            Pat::Wild => None,
        })
        .collect();
    let sig = signature(scope, &tys[0], &heads);
    if let Some(ctors) = &sig {
        let complete = !ctors.is_empty() && ctors.iter().all(|(c, _)| heads.contains(&c));
        if complete {
            for (c, sub_tys) in ctors {
                let spec = specialize(rows, c, sub_tys.len());
                let mut next_tys = sub_tys.clone();
                next_tys.extend_from_slice(&tys[1..]);
                if let Some(mut w) = useful(scope, &spec, &next_tys, depth + 1) {
                    let rest = w.split_off(sub_tys.len());
                    let mut out = vec![Pat::Ctor(c.clone(), w)];
                    out.extend(rest);
                    return Some(out);
                }
            }
            return None;
        }
    }
    let default: Vec<Vec<Pat>> = rows
        .iter()
        .filter(|r| matches!(r[0], Pat::Wild))
        .map(|r| r[1..].to_vec())
        .collect();
    let mut w = useful(scope, &default, &tys[1..], depth + 1)?;
    let first = match (&sig, heads.is_empty()) {
        (_, true) | (None, _) => Pat::Wild,
        (Some(ctors), false) => {
            let (c, sub) = ctors
                .iter()
                .find(|(c, _)| !heads.contains(&c))
                .expect("incomplete signature has a missing constructor");
            let subs = sub
                .iter()
                .map(|t| match scope.head(t) {
                    TypeExpr::Product(ts) => Pat::Ctor(Head::Tuple(ts.len()), vec![Pat::Wild; ts.len()]),
                    _ => Pat::Wild,
                })
                .collect();
            Pat::Ctor(c.clone(), subs)
        }
    };
    w.insert(0, first);
    Some(w)
}

fn specialize(rows: &[Vec<Pat>], c: &Head, arity: usize) -> Vec<Vec<Pat>> {
    rows.iter()
        .filter_map(|r| match &r[0] {
            Pat::Wild => {
                let mut out = vec![Pat::Wild; arity];
                out.extend_from_slice(&r[1..]);
                Some(out)
            }
            Pat::Ctor(h, subs) if h == c => {
                // A constructor used with the wrong arity was already reported;
                // pad or trim so the matrix stays rectangular.
                let mut out: Vec<Pat> = subs.iter().take(arity).cloned().collect();
                out.resize(arity, Pat::Wild);
                out.extend_from_slice(&r[1..]);
                Some(out)
            }
            Pat::Ctor(..) => None,
        })
        .collect()
}

fn show(p: &Pat) -> String {
    match p {
        Pat::Wild => "_".into(),
        Pat::Ctor(Head::Named(n), subs) => match subs.as_slice() {
            [] => n.clone(),
            [Pat::Ctor(Head::Tuple(_), items)] => {
                format!("{n}({})", items.iter().map(show).collect::<Vec<_>>().join(", "))
            }
            [one] => format!("{n}({})", show(one)),
            many => format!("{n}({})", many.iter().map(show).collect::<Vec<_>>().join(", ")),
        },
        Pat::Ctor(Head::Tuple(_), items) => {
            format!("({})", items.iter().map(show).collect::<Vec<_>>().join(", "))
        }
        Pat::Ctor(Head::Nil, _) => "[]".into(),
        Pat::Ctor(Head::Cons, subs) => {
            let h = subs.first().map(show).unwrap_or_else(|| "_".into());
            let t = subs.get(1).map(show).unwrap_or_else(|| "_".into());
            format!("{h} :: {t}")
        }
        Pat::Ctor(Head::Bool(b), _) => b.to_string(),
        Pat::Ctor(Head::Lit(s), _) => s.clone(),
    }
}
