use std::collections::HashSet;

use crate::syntax::{
    BaseType, BinOp, Expr, ExprKind, Pattern, PatternKind, Repo, Span, TopDef, TypeExpr,
};

use super::errors::StaticError;
use super::exhaust::missing_case;
use super::prelude::prelude_type;
use super::types::{base_of_literal, AliasTable, Scope};
use super::{ContextEntry, HoleInfo, Type, TypedRepo};

#[derive(Debug, Clone)]
struct Binding {
    name: String,
    ty: Type,
    is_self: bool,
}

struct Checker<'a> {
    table: &'a AliasTable,
    scope_len: usize,
    ctx: Vec<Binding>,
    errors: Vec<StaticError>,
    holes: Vec<HoleInfo>,
    types: Vec<(Span, Type)>,
}

pub(super) fn check(repo: &Repo) -> TypedRepo {
    let mut table = AliasTable::new();
    for def in repo.defs() {
        if let TopDef::Type { name, def, span, .. } = def {
            table.push(name, def.clone(), span.clone());
        }
    }
    let mut c = Checker {
        table: &table,
        scope_len: 0,
        ctx: Vec::new(),
        errors: Vec::new(),
        holes: Vec::new(),
        types: Vec::new(),
    };
    for def in repo.defs() {
        match def {
            TopDef::Type { name, def, span, .. } => {
                c.scope_len += 1;
                c.check_type_def(name, def, span);
            }
            TopDef::Let {
                name,
                ann,
                bound,
                span,
                ..
            } => {
                let ty = c.check_annotation(ann, span);
                c.ctx.push(Binding {
                    name: name.clone(),
                    ty: ty.clone(),
                    is_self: true,
                });
                c.ana(bound, &ty);
                c.ctx.pop();
                c.ctx.push(Binding {
                    name: name.clone(),
                    ty,
                    is_self: false,
                });
            }
        }
    }
    let Checker {
        mut errors,
        holes,
        types,
        ..
    } = c;
    let order: Vec<&str> = repo.files.iter().map(|f| f.path.as_str()).collect();
    let file_rank = |f: &str| order.iter().position(|p| *p == f).unwrap_or(usize::MAX);
    errors.sort_by_key(|e| (file_rank(&e.span.file), e.span.lo));
    TypedRepo {
        repo: repo.clone(),
        aliases: table,
        holes,
        errors,
        types,
    }
}

impl<'a> Checker<'a> {
    fn scope(&self) -> Scope<'a> {
        self.table.scope_at(self.scope_len)
    }

    fn err(&mut self, e: StaticError) {
        self.errors.push(e);
    }

    fn check_type_def(&mut self, name: &str, def: &Type, span: &Span) {
        let scope = self.scope();
        for n in scope.unbound_aliases(def) {
            self.err(StaticError::unbound_alias(&n, span.clone()));
        }
        if scope.lookup(name).is_some_and(|(_, d)| d.cyclic) {
            self.err(StaticError::cyclic_alias(name, span.clone()));
        }
        let mut dups = Vec::new();
        duplicate_ctors(def, &mut dups);
        for ctor in dups {
            self.err(StaticError::duplicate_constructor(&ctor, name, span.clone()));
        }
    }

    /// Reports unbound aliases in an annotation and replaces them with `?`.
    fn check_annotation(&mut self, ann: &Type, span: &Span) -> Type {
        let scope = self.scope();
        for n in scope.unbound_aliases(ann) {
            self.err(StaticError::unbound_alias(&n, span.clone()));
        }
        scope.sanitize(ann)
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        self.ctx
            .iter()
            .rev()
            .find(|b| b.name == name)
            .map(|b| b.ty.clone())
            .or_else(|| prelude_type(name).cloned())
    }

    fn record_hole(&mut self, e: &Expr, id: usize, generative: bool, expected: Type) {
        let mut seen = HashSet::new();
        let mut context = Vec::new();
        for b in self.ctx.iter().rev() {
            if seen.insert(b.name.clone()) {
                context.push(ContextEntry {
                    name: b.name.clone(),
                    ty: b.ty.clone(),
                    locality: context.len(),
                    is_self: b.is_self,
                });
            }
        }
        self.holes.push(HoleInfo {
            id,
            generative,
            span: e.span.clone(),
            expected,
            context,
            scope_len: self.scope_len,
        });
    }

    fn with_bindings<T>(&mut self, bindings: Vec<Binding>, f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.ctx.len();
        self.ctx.extend(bindings);
        let out = f(self);
        self.ctx.truncate(n);
        out
    }

    /// Synthesizes a type for `e`. Erroneous subterms synthesize `?`.
    fn syn(&mut self, e: &Expr) -> Type {
        let t = self.syn_inner(e);
        self.types.push((e.span.clone(), t.clone()));
        t
    }

    fn syn_inner(&mut self, e: &Expr) -> Type {
        let scope = self.scope();
        match &e.kind {
            ExprKind::Var(x) => match self.lookup(x) {
                Some(t) => t,
                None => {
                    self.err(StaticError::unbound_variable(x, e.span.clone()));
                    TypeExpr::Unknown
                }
            },
            ExprKind::Lit(l) => base_of_literal(l),
            ExprKind::Hole { id, generative } => {
                self.record_hole(e, *id, *generative, TypeExpr::Unknown);
                TypeExpr::Unknown
            }
            ExprKind::Let {
                pat,
                ann,
                bound,
                body,
            } => {
                let bindings = self.check_let_bound(e, pat, ann.as_ref(), bound);
                self.with_bindings(bindings, |c| c.syn(body))
            }
            ExprKind::Fun { param, body } => {
                let bindings = self.pat_bind(param, &TypeExpr::Unknown).0;
                let r = self.with_bindings(bindings, |c| c.syn(body));
                TypeExpr::arrow(TypeExpr::Unknown, r)
            }
            ExprKind::App { func, args } => {
                let tf = self.syn(func);
                match scope.head(&tf) {
                    TypeExpr::Arrow(p, r) => {
                        self.check_args(e, &p, args);
                        *r
                    }
                    TypeExpr::Unknown => {
                        for a in args {
                            self.syn(a);
                        }
                        TypeExpr::Unknown
                    }
                    _ => {
                        self.err(StaticError::inconsistent(
                            &TypeExpr::arrow(TypeExpr::Unknown, TypeExpr::Unknown),
                            &tf,
                            func.span.clone(),
                        ));
                        for a in args {
                            self.syn(a);
                        }
                        TypeExpr::Unknown
                    }
                }
            }
            ExprKind::Tuple(items) => TypeExpr::Product(items.iter().map(|i| self.syn(i)).collect()),
            ExprKind::List(items) => match items.split_first() {
                None => TypeExpr::list(TypeExpr::Unknown),
                Some((first, rest)) => {
                    let t = self.syn(first);
                    for i in rest {
                        self.ana(i, &t);
                    }
                    TypeExpr::list(t)
                }
            },
            ExprKind::Cons(h, t) => {
                let th = self.syn(h);
                let tl = TypeExpr::list(th);
                self.ana(t, &tl);
                tl
            }
            ExprKind::Case {
                scrutinee,
                branches,
            } => {
                let ts = self.syn(scrutinee);
                let mut result: Option<Type> = None;
                let mut pat_errors = false;
                for (p, body) in branches {
                    let (bindings, ok) = self.pat_bind(p, &ts);
                    pat_errors |= !ok;
                    match &result {
                        None => result = Some(self.with_bindings(bindings, |c| c.syn(body))),
                        Some(t) => {
                            let t = t.clone();
                            self.with_bindings(bindings, |c| c.ana(body, &t));
                        }
                    }
                }
                if !pat_errors {
                    self.check_exhaustive(e, &ts, branches);
                }
                result.unwrap_or(TypeExpr::Unknown)
            }
            ExprKind::Ctor { name, arg } => match scope.lookup_ctor(name) {
                Some(sig) => {
                    self.check_ctor_arg(e, name, sig.arg.as_ref(), arg.as_deref());
                    sig.result
                }
                None => {
                    self.err(StaticError::unbound_constructor(name, e.span.clone()));
                    if let Some(a) = arg {
                        self.syn(a);
                    }
                    TypeExpr::Unknown
                }
            },
            ExprKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.ana(cond, &TypeExpr::bool());
                let t = self.syn(then_branch);
                self.ana(else_branch, &t);
                t
            }
            ExprKind::BinOp { op, lhs, rhs } => self.syn_binop(*op, lhs, rhs),
        }
    }

    fn syn_binop(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Type {
        let (operand, result) = match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => (BaseType::Int, BaseType::Int),
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => (BaseType::Int, BaseType::Bool),
            BinOp::And | BinOp::Or => (BaseType::Bool, BaseType::Bool),
            BinOp::Concat => (BaseType::String, BaseType::String),
            BinOp::Eq | BinOp::Neq => {
                let t = self.syn(lhs);
                self.ana(rhs, &t);
                return TypeExpr::bool();
            }
            BinOp::Append => {
                let t = self.syn(lhs);
                let t = match self.scope().head(&t) {
                    TypeExpr::List(_) => t,
                    TypeExpr::Unknown => TypeExpr::list(TypeExpr::Unknown),
                    _ => {
                        let want = TypeExpr::list(TypeExpr::Unknown);
                        self.err(StaticError::inconsistent(&want, &t, lhs.span.clone()));
                        want
                    }
                };
                self.ana(rhs, &t);
                return t;
            }
        };
        self.ana(lhs, &TypeExpr::Base(operand));
        self.ana(rhs, &TypeExpr::Base(operand));
        TypeExpr::Base(result)
    }

    /// Checks `e` against `t`, falling back to synthesis plus consistency.
    fn ana(&mut self, e: &Expr, t: &Type) {
        self.types.push((e.span.clone(), t.clone()));
        let scope = self.scope();
        let head = scope.head(t);
        match (&e.kind, &head) {
            (ExprKind::Hole { id, generative }, _) => {
                self.record_hole(e, *id, *generative, t.clone());
            }
            (
                ExprKind::Let {
                    pat,
                    ann,
                    bound,
                    body,
                },
                _,
            ) => {
                let bindings = self.check_let_bound(e, pat, ann.as_ref(), bound);
                self.with_bindings(bindings, |c| c.ana(body, t));
            }
            (ExprKind::Fun { param, body }, TypeExpr::Arrow(p, r)) => {
                let bindings = self.pat_bind(param, p).0;
                self.with_bindings(bindings, |c| c.ana(body, r));
            }
            (ExprKind::Fun { param, body }, TypeExpr::Unknown) => {
                let bindings = self.pat_bind(param, &TypeExpr::Unknown).0;
                self.with_bindings(bindings, |c| c.ana(body, &TypeExpr::Unknown));
            }
            (ExprKind::Tuple(items), TypeExpr::Product(ts)) if ts.len() == items.len() => {
                for (i, ti) in items.iter().zip(ts) {
                    self.ana(i, ti);
                }
            }
            (ExprKind::Tuple(items), TypeExpr::Unknown) => {
                for i in items {
                    self.ana(i, &TypeExpr::Unknown);
                }
            }
            (ExprKind::List(items), TypeExpr::List(elem)) => {
                for i in items {
                    self.ana(i, elem);
                }
            }
            (ExprKind::List(items), TypeExpr::Unknown) => {
                for i in items {
                    self.ana(i, &TypeExpr::Unknown);
                }
            }
            (ExprKind::Cons(h, tl), TypeExpr::List(elem)) => {
                self.ana(h, elem);
                self.ana(tl, t);
            }
            (ExprKind::Cons(h, tl), TypeExpr::Unknown) => {
                self.ana(h, &TypeExpr::Unknown);
                self.ana(tl, &TypeExpr::Unknown);
            }
            (
                ExprKind::Case {
                    scrutinee,
                    branches,
                },
                _,
            ) => {
                let ts = self.syn(scrutinee);
                let mut pat_errors = false;
                for (p, body) in branches {
                    let (bindings, ok) = self.pat_bind(p, &ts);
                    pat_errors |= !ok;
                    self.with_bindings(bindings, |c| c.ana(body, t));
                }
                if !pat_errors {
                    self.check_exhaustive(e, &ts, branches);
                }
            }
            (
                ExprKind::If {
                    cond,
                    then_branch,
                    else_branch,
                },
                _,
            ) => {
                self.ana(cond, &TypeExpr::bool());
                self.ana(then_branch, t);
                self.ana(else_branch, t);
            }
            (ExprKind::Ctor { name, arg }, TypeExpr::Sum(vs)) if vs.iter().any(|v| &v.name == name) => {
                let v = vs.iter().find(|v| &v.name == name).expect("checked above");
                self.check_ctor_arg(e, name, v.arg.as_ref(), arg.as_deref());
            }
            _ => self.subsume(e, t),
        }
    }

    fn subsume(&mut self, e: &Expr, t: &Type) {
        let got = self.syn(e);
        if !self.scope().consistent(t, &got) {
            self.err(StaticError::inconsistent(t, &got, e.span.clone()));
        }
    }

    /// Checks the bound expression of an inner let and returns the bindings
    /// its pattern introduces. Annotated variable lets are recursive.
    fn check_let_bound(&mut self, e: &Expr, pat: &Pattern, ann: Option<&Type>, bound: &Expr) -> Vec<Binding> {
        let ty = match ann {
            Some(a) => {
                let a = self.check_annotation(a, &e.span);
                match &pat.kind {
                    PatternKind::Var(x) => {
                        let me = vec![Binding {
                            name: x.clone(),
                            ty: a.clone(),
                            is_self: true,
                        }];
                        self.with_bindings(me, |c| c.ana(bound, &a));
                    }
                    _ => self.ana(bound, &a),
                }
                a
            }
            None => self.syn(bound),
        };
        self.pat_bind(pat, &ty).0
    }

    fn check_args(&mut self, app: &Expr, param: &Type, args: &[Expr]) {
        if let [arg] = args {
            self.ana(arg, param);
            return;
        }
        match self.scope().head(param) {
            TypeExpr::Product(ts) if ts.len() == args.len() => {
                for (a, t) in args.iter().zip(&ts) {
                    self.ana(a, t);
                }
            }
            TypeExpr::Product(ts) => {
                self.err(StaticError::arity(
                    format!(
                        "function expects {} arguments but is applied to {}",
                        ts.len(),
                        args.len()
                    ),
                    app.span.clone(),
                ));
                for a in args {
                    self.syn(a);
                }
            }
            TypeExpr::Unknown => {
                for a in args {
                    self.ana(a, &TypeExpr::Unknown);
                }
            }
            _ => {
                let got = TypeExpr::Product(args.iter().map(|a| self.syn(a)).collect());
                self.err(StaticError::inconsistent(param, &got, app.span.clone()));
            }
        }
    }

    fn check_ctor_arg(&mut self, e: &Expr, name: &str, want: Option<&Type>, arg: Option<&Expr>) {
        match (want, arg) {
            (None, None) => {}
            (Some(t), Some(a)) => self.ana(a, t),
            (None, Some(a)) => {
                self.err(StaticError::arity(
                    format!("constructor {name} takes no argument"),
                    e.span.clone(),
                ));
                self.syn(a);
            }
            (Some(_), None) => self.err(StaticError::arity(
                format!("constructor {name} expects an argument"),
                e.span.clone(),
            )),
        }
    }

    fn check_exhaustive(&mut self, e: &Expr, ts: &Type, branches: &[(Pattern, Expr)]) {
        let pats: Vec<&Pattern> = branches.iter().map(|(p, _)| p).collect();
        if let Some(w) = missing_case(&self.scope(), ts, &pats) {
            self.err(StaticError::inexhaustive(&w, e.span.clone()));
        }
    }

    /// Binds the variables of `p` matched against a value of type `t`.
    /// The flag is false when the pattern had errors.
    fn pat_bind(&mut self, p: &Pattern, t: &Type) -> (Vec<Binding>, bool) {
        let mut out = Vec::new();
        let ok = self.pat(p, t, &mut out);
        (out, ok)
    }

    fn pat(&mut self, p: &Pattern, t: &Type, out: &mut Vec<Binding>) -> bool {
        let scope = self.scope();
        let head = scope.head(t);
        let unknown = TypeExpr::Unknown;
        match &p.kind {
            PatternKind::Var(x) => {
                out.push(Binding {
                    name: x.clone(),
                    ty: t.clone(),
                    is_self: false,
                });
                true
            }
            PatternKind::Wildcard => true,
            PatternKind::Lit(l) => {
                let lt = base_of_literal(l);
                if scope.consistent(t, &lt) {
                    true
                } else {
                    self.err(StaticError::inconsistent(t, &lt, p.span.clone()));
                    false
                }
            }
            PatternKind::Tuple(ps) => match head {
                TypeExpr::Product(ts) if ts.len() == ps.len() => {
                    let mut ok = true;
                    for (q, tq) in ps.iter().zip(&ts) {
                        ok &= self.pat(q, tq, out);
                    }
                    ok
                }
                TypeExpr::Unknown => {
                    let mut ok = true;
                    for q in ps {
                        ok &= self.pat(q, &unknown, out);
                    }
                    ok
                }
                _ => {
                    let got = TypeExpr::Product(vec![TypeExpr::Unknown; ps.len()]);
                    self.err(StaticError::inconsistent(t, &got, p.span.clone()));
                    for q in ps {
                        self.pat(q, &unknown, out);
                    }
                    false
                }
            },
            PatternKind::EmptyList => match head {
                TypeExpr::List(_) | TypeExpr::Unknown => true,
                _ => {
                    self.err(StaticError::inconsistent(
                        t,
                        &TypeExpr::list(TypeExpr::Unknown),
                        p.span.clone(),
                    ));
                    false
                }
            },
            PatternKind::Cons(h, tl) => match head {
                TypeExpr::List(e) => {
                    let a = self.pat(h, &e, out);
                    let b = self.pat(tl, t, out);
                    a && b
                }
                TypeExpr::Unknown => {
                    let a = self.pat(h, &unknown, out);
                    let b = self.pat(tl, &unknown, out);
                    a && b
                }
                _ => {
                    self.err(StaticError::inconsistent(
                        t,
                        &TypeExpr::list(TypeExpr::Unknown),
                        p.span.clone(),
                    ));
                    self.pat(h, &unknown, out);
                    self.pat(tl, &unknown, out);
                    false
                }
            },
            PatternKind::Ctor(name, sub) => {
                let arg_ty = match &head {
                    TypeExpr::Sum(vs) if vs.iter().any(|v| &v.name == name) => {
                        Ok(vs.iter().find(|v| &v.name == name).and_then(|v| v.arg.clone()))
                    }
                    _ => match scope.lookup_ctor(name) {
                        None => Err(StaticError::unbound_constructor(name, p.span.clone())),
                        Some(sig) if head.is_unknown() => Ok(sig.arg),
                        Some(sig) => Err(StaticError::inconsistent(t, &sig.result, p.span.clone())),
                    },
                };
                match arg_ty {
                    Err(e) => {
                        self.err(e);
                        if let Some(s) = sub {
                            self.pat(s, &unknown, out);
                        }
                        false
                    }
                    Ok(want) => match (want, sub) {
                        (None, None) => true,
                        (Some(a), Some(s)) => self.pat(s, &a, out),
                        (None, Some(s)) => {
                            self.err(StaticError::arity(
                                format!("constructor {name} takes no argument"),
                                p.span.clone(),
                            ));
                            self.pat(s, &unknown, out);
                            false
                        }
                        (Some(_), None) => {
                            self.err(StaticError::arity(
                                format!("constructor {name} expects an argument"),
                                p.span.clone(),
                            ));
                            false
                        }
                    },
                }
            }
        }
    }
}

fn duplicate_ctors(t: &Type, out: &mut Vec<String>) {
    match t {
        TypeExpr::Sum(vs) => {
            let mut seen = HashSet::new();
            for v in vs {
                if !seen.insert(v.name.as_str()) && !out.contains(&v.name) {
                    out.push(v.name.clone());
                }
                if let Some(a) = &v.arg {
                    duplicate_ctors(a, out);
                }
            }
        }
        TypeExpr::Arrow(a, b) => {
            duplicate_ctors(a, out);
            duplicate_ctors(b, out);
        }
        TypeExpr::Product(ts) => ts.iter().for_each(|t| duplicate_ctors(t, out)),
        TypeExpr::List(e) => duplicate_ctors(e, out),
        TypeExpr::Base(_) | TypeExpr::Unknown | TypeExpr::Alias(_) => {}
    }
}
