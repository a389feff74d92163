use std::fmt::Write;

use super::ast::*;

#[derive(Clone, Copy, PartialEq)]
enum TyCtx {
    Top,
    ArrowParam,
    Nested,
}

/// Canonical concrete syntax for a type; re-parses to the same type.
pub fn print_type(t: &TypeExpr) -> String {
    let mut out = String::new();
    write_type(&mut out, t, TyCtx::Top);
    out
}

fn write_type(out: &mut String, t: &TypeExpr, ctx: TyCtx) {
    match t {
        TypeExpr::Base(b) => out.push_str(b.name()),
        TypeExpr::Unknown => out.push('?'),
        TypeExpr::Alias(n) => out.push_str(n),
        TypeExpr::List(elem) => {
            out.push('[');
            write_type(out, elem, TyCtx::Top);
            out.push(']');
        }
        TypeExpr::Product(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_type(out, item, TyCtx::Top);
            }
            out.push(')');
        }
        TypeExpr::Arrow(param, result) => {
            let parens = ctx == TyCtx::ArrowParam;
            if parens {
                out.push('(');
            }
            write_type(out, param, TyCtx::ArrowParam);
            out.push_str(" -> ");
            write_type(out, result, TyCtx::Nested);
            if parens {
                out.push(')');
            }
        }
        TypeExpr::Sum(variants) => {
            let parens = ctx != TyCtx::Top;
            if parens {
                out.push('(');
            }
            if variants.len() == 1 && variants[0].arg.is_none() {
                out.push_str("+ ");
            }
            for (i, v) in variants.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                out.push_str(&v.name);
                if let Some(arg) = &v.arg {
                    match arg {
                        TypeExpr::Product(items) => {
                            out.push('(');
                            for (j, item) in items.iter().enumerate() {
                                if j > 0 {
                                    out.push_str(", ");
                                }
                                write_type(out, item, TyCtx::Top);
                            }
                            out.push(')');
                        }
                        other => {
                            out.push('(');
                            write_type(out, other, TyCtx::Top);
                            out.push(')');
                        }
                    }
                }
            }
            if parens {
                out.push(')');
            }
        }
    }
}

// Expression precedence levels; larger binds tighter.
const OPEN: u8 = 0;
const NEG_LIT: u8 = 65;
const POSTFIX: u8 = 70;
const ATOM: u8 = 80;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let { .. } | ExprKind::If { .. } => OPEN,
        ExprKind::BinOp { op, .. } => op.precedence() * 10,
        ExprKind::Cons(..) => 40,
        ExprKind::App { .. } => POSTFIX,
        ExprKind::Lit(Literal::Int(i)) if *i < 0 => NEG_LIT,
        ExprKind::Lit(Literal::Float(x)) if x.is_sign_negative() => NEG_LIT,
        _ => ATOM,
    }
}

/// Canonical concrete syntax for an expression; re-parses to the same tree.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, OPEN);
    out
}

pub fn print_pattern(p: &Pattern) -> String {
    let mut out = String::new();
    write_pattern(&mut out, p, false);
    out
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Int(i) => write!(out, "{i}").unwrap(),
        Literal::Float(x) => {
            let s = format!("{x:?}");
            out.push_str(&s);
            if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
                out.push_str(".0");
            }
        }
        Literal::Bool(b) => write!(out, "{b}").unwrap(),
        Literal::String(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, item, OPEN);
    }
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let parens = level(e) < min;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Lit(lit) => write_literal(out, lit),
        ExprKind::Hole { generative, .. } => out.push_str(if *generative { "??" } else { "?" }),
        ExprKind::Let {
            pat,
            ann,
            bound,
            body,
        } => {
            out.push_str("let ");
            write_pattern(out, pat, false);
            if let Some(t) = ann {
                out.push_str(": ");
                out.push_str(&print_type(t));
            }
            out.push_str(" = ");
            write_expr(out, bound, OPEN);
            out.push_str(" in ");
            write_expr(out, body, OPEN);
        }
        ExprKind::Fun { param, body } => {
            out.push_str("fun ");
            write_pattern(out, param, false);
            out.push_str(" -> ");
            write_expr(out, body, OPEN);
            out.push_str(" end");
        }
        ExprKind::App { func, args } => {
            // `A(x)` would read back as a constructor application.
            let bare_ctor = matches!(func.kind, ExprKind::Ctor { arg: None, .. });
            write_expr(out, func, if bare_ctor { ATOM + 1 } else { POSTFIX });
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        ExprKind::Tuple(items) => {
            out.push('(');
            write_list(out, items);
            out.push(')');
        }
        ExprKind::List(items) => {
            out.push('[');
            write_list(out, items);
            out.push(']');
        }
        ExprKind::Cons(h, t) => {
            write_expr(out, h, 41);
            out.push_str(" :: ");
            write_expr(out, t, 40);
        }
        ExprKind::Case {
            scrutinee,
            branches,
        } => {
            out.push_str("case ");
            write_expr(out, scrutinee, OPEN);
            for (p, body) in branches {
                out.push_str(" | ");
                write_pattern(out, p, false);
                out.push_str(" => ");
                write_expr(out, body, OPEN);
            }
            out.push_str(" end");
        }
        ExprKind::Ctor { name, arg } => {
            out.push_str(name);
            match arg.as_deref() {
                None => {}
                Some(Expr {
                    kind: ExprKind::Tuple(items),
                    ..
                }) => {
                    out.push('(');
                    write_list(out, items);
                    out.push(')');
                }
                Some(a) => {
                    out.push('(');
                    write_expr(out, a, OPEN);
                    out.push(')');
                }
            }
        }
        ExprKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            write_expr(out, cond, OPEN);
            out.push_str(" then ");
            write_expr(out, then_branch, OPEN);
            out.push_str(" else ");
            write_expr(out, else_branch, OPEN);
        }
        ExprKind::BinOp { op, lhs, rhs } => {
            let p = op.precedence() * 10;
            let (lmin, rmin) = if op.right_assoc() { (p + 1, p) } else { (p, p + 1) };
            write_expr(out, lhs, lmin);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, rhs, rmin);
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_pattern(out: &mut String, p: &Pattern, cons_head: bool) {
    match &p.kind {
        PatternKind::Var(n) => out.push_str(n),
        PatternKind::Wildcard => out.push('_'),
        PatternKind::Lit(lit) => write_literal(out, lit),
        PatternKind::EmptyList => out.push_str("[]"),
        PatternKind::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_pattern(out, item, false);
            }
            out.push(')');
        }
        PatternKind::Ctor(name, sub) => {
            out.push_str(name);
            match sub.as_deref() {
                None => {}
                Some(Pattern {
                    kind: PatternKind::Tuple(items),
                    ..
                }) => {
                    out.push('(');
                    for (i, item) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_pattern(out, item, false);
                    }
                    out.push(')');
                }
                Some(sub) => {
                    out.push('(');
                    write_pattern(out, sub, false);
                    out.push(')');
                }
            }
        }
        PatternKind::Cons(h, t) => {
            if cons_head {
                out.push('(');
            }
            write_pattern(out, h, true);
            out.push_str(" :: ");
            write_pattern(out, t, false);
            if cons_head {
                out.push(')');
            }
        }
    }
}

/// Prints every file of a repo back to source text, one definition per line.
pub fn print_repo(repo: &Repo) -> Vec<(String, String)> {
    repo.files
        .iter()
        .map(|f| {
            let mut text = String::new();
            for def in &f.defs {
                if let Some(c) = def.comment() {
                    writeln!(text, "(* {c} *)").unwrap();
                }
                match def {
                    TopDef::Type { name, def, .. } => {
                        writeln!(text, "type {name} = {} in", print_type(def)).unwrap()
                    }
                    TopDef::Let {
                        name, ann, bound, ..
                    } => writeln!(
                        text,
                        "let {name}: {} = {} in",
                        print_type(ann),
                        print_expr(bound)
                    )
                    .unwrap(),
                }
            }
            (f.path.clone(), text)
        })
        .collect()
}
