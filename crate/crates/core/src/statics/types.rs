use std::collections::HashSet;

use thiserror::Error;

use crate::syntax::{print_type, BaseType, Span, TypeExpr, Variant};

/// Checked types share the surface representation; alias references are
/// resolved on demand against an [`AliasTable`] scope.
pub type Type = TypeExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type alias {0} is defined in terms of itself")]
    CyclicAlias(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliasDef {
    pub name: String,
    pub def: Type,
    pub span: Span,
    /// Refers to itself only underneath a sum constructor.
    pub recursive: bool,
    /// Refers to itself outside any sum constructor; never expandable.
    pub cyclic: bool,
}

/// Every type definition of a repo in definition order. A definition at
/// index `i` sees the definitions before it and itself.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AliasTable {
    defs: Vec<AliasDef>,
}

impl AliasTable {
    pub fn new() -> AliasTable {
        AliasTable::default()
    }

    pub fn push(&mut self, name: &str, def: Type, span: Span) {
        let (recursive, cyclic) = self_reference(name, &def);
        self.defs.push(AliasDef {
            name: name.to_string(),
            def,
            span,
            recursive,
            cyclic,
        });
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[AliasDef] {
        &self.defs
    }

    /// The whole table as one scope.
    pub fn scope(&self) -> Scope<'_> {
        Scope {
            table: self,
            len: self.defs.len(),
        }
    }

    /// The definitions visible before the first `len` entries end.
    pub fn scope_at(&self, len: usize) -> Scope<'_> {
        Scope {
            table: self,
            len: len.min(self.defs.len()),
        }
    }
}

/// Whether `def` mentions `name` (a) only under sum constructors, (b) anywhere else.
fn self_reference(name: &str, def: &Type) -> (bool, bool) {
    fn walk(name: &str, t: &Type, under_sum: bool, rec: &mut bool, cyc: &mut bool) {
        match t {
            TypeExpr::Alias(n) if n == name => {
                if under_sum {
                    *rec = true
                } else {
                    *cyc = true
                }
            }
            TypeExpr::Base(_) | TypeExpr::Unknown | TypeExpr::Alias(_) => {}
            TypeExpr::Arrow(a, b) => {
                walk(name, a, under_sum, rec, cyc);
                walk(name, b, under_sum, rec, cyc);
            }
            TypeExpr::Product(ts) => ts.iter().for_each(|t| walk(name, t, under_sum, rec, cyc)),
            TypeExpr::List(t) => walk(name, t, under_sum, rec, cyc),
            TypeExpr::Sum(vs) => {
                for v in vs {
                    if let Some(a) = &v.arg {
                        walk(name, a, true, rec, cyc)
                    }
                }
            }
        }
    }
    let (mut rec, mut cyc) = (false, false);
    walk(name, def, false, &mut rec, &mut cyc);
    (rec && !cyc, cyc)
}

/// A view of the alias table as seen from one program point.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    table: &'a AliasTable,
    len: usize,
}

impl<'a> Scope<'a> {
    pub fn table(&self) -> &'a AliasTable {
        self.table
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Latest definition of `name` visible in this scope, with its index.
    pub fn lookup(&self, name: &str) -> Option<(usize, &'a AliasDef)> {
        self.table.defs[..self.len]
            .iter()
            .enumerate()
            .rev()
            .find(|(_, d)| d.name == name)
    }

    fn inner(&self, idx: usize) -> Scope<'a> {
        Scope {
            table: self.table,
            len: idx + 1,
        }
    }

    /// Expands every alias reference. Recursive aliases stay as references
    /// (they are unfolded lazily by [`Scope::head`] and [`Scope::consistent`]);
    /// unbound references are left untouched.
    pub fn normalize(&self, t: &Type) -> Result<Type, TypeError> {
        Ok(match t {
            TypeExpr::Base(_) | TypeExpr::Unknown => t.clone(),
            TypeExpr::Alias(n) => match self.lookup(n) {
                None => t.clone(),
                Some((_, d)) if d.cyclic => return Err(TypeError::CyclicAlias(n.clone())),
                Some((_, d)) if d.recursive => t.clone(),
                Some((idx, d)) => self.inner(idx).normalize(&d.def)?,
            },
            TypeExpr::Arrow(a, b) => TypeExpr::arrow(self.normalize(a)?, self.normalize(b)?),
            TypeExpr::Product(ts) => {
                TypeExpr::Product(ts.iter().map(|t| self.normalize(t)).collect::<Result<_, _>>()?)
            }
            TypeExpr::List(e) => TypeExpr::list(self.normalize(e)?),
            TypeExpr::Sum(vs) => TypeExpr::Sum(
                vs.iter()
                    .map(|v| {
                        Ok(Variant {
                            name: v.name.clone(),
                            arg: v.arg.as_ref().map(|a| self.normalize(a)).transpose()?,
                        })
                    })
                    .collect::<Result<_, TypeError>>()?,
            ),
        })
    }

    /// Unfolds aliases at the root only, leaving components as written.
    /// Unbound and cyclic aliases head-normalize to `?`.
    pub fn head(&self, t: &Type) -> Type {
        let mut cur = t.clone();
        let mut scope = *self;
        let mut guard = 0;
        while let TypeExpr::Alias(n) = &cur {
            match scope.lookup(n) {
                Some((idx, d)) if !d.cyclic && guard < 64 => {
                    cur = d.def.clone();
                    scope = scope.inner(idx);
                    guard += 1;
                }
                _ => return TypeExpr::Unknown,
            }
        }
        cur
    }

    /// Gradual consistency: `?` relates to everything; otherwise structural
    /// equality with sums compared by constructor-name set.
    pub fn consistent(&self, a: &Type, b: &Type) -> bool {
        let mut assumed = HashSet::new();
        self.consistent_in(a, b, &mut assumed)
    }

    fn consistent_in(&self, a: &Type, b: &Type, assumed: &mut HashSet<(String, String)>) -> bool {
        use TypeExpr::*;
        match (a, b) {
            (Unknown, _) | (_, Unknown) => true,
            (Alias(x), Alias(y)) if x == y => true,
            (Alias(_), _) | (_, Alias(_)) => {
                // Coinductive unfolding so recursive aliases terminate.
                let key = (print_type(a), print_type(b));
                if !assumed.insert(key) {
                    return true;
                }
                let a2 = match a {
                    Alias(_) => self.unfold_once(a),
                    _ => Some(a.clone()),
                };
                let b2 = match b {
                    Alias(_) => self.unfold_once(b),
                    _ => Some(b.clone()),
                };
                match (a2, b2) {
                    (Some(a2), Some(b2)) => self.consistent_in(&a2, &b2, assumed),
                    // Unbound or cyclic aliases behave as `?`.
                    _ => true,
                }
            }
            (Base(x), Base(y)) => x == y,
            (Arrow(p1, r1), Arrow(p2, r2)) => {
                self.consistent_in(p1, p2, assumed) && self.consistent_in(r1, r2, assumed)
            }
            (Product(xs), Product(ys)) => {
                xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.consistent_in(x, y, assumed))
            }
            (List(x), List(y)) => self.consistent_in(x, y, assumed),
            (Sum(xs), Sum(ys)) => {
                xs.len() == ys.len()
                    && xs.iter().all(|x| {
                        ys.iter().find(|y| y.name == x.name).is_some_and(|y| match (&x.arg, &y.arg) {
                            (None, None) => true,
                            (Some(p), Some(q)) => self.consistent_in(p, q, assumed),
                            _ => false,
                        })
                    })
            }
            _ => false,
        }
    }

    fn unfold_once(&self, t: &Type) -> Option<Type> {
        match t {
            TypeExpr::Alias(n) => match self.lookup(n) {
                Some((_, d)) if !d.cyclic => Some(d.def.clone()),
                _ => None,
            },
            other => Some(other.clone()),
        }
    }

    /// Finds the latest visible definition of constructor `name`. A sum that
    /// is the whole body of `type N = ...` yields result type `N`; a sum nested
    /// inside another type yields the sum itself.
    pub fn lookup_ctor(&self, name: &str) -> Option<CtorSig> {
        for def in self.table.defs[..self.len].iter().rev() {
            if def.cyclic {
                continue;
            }
            if let TypeExpr::Sum(vs) = &def.def {
                if let Some(v) = vs.iter().find(|v| v.name == name) {
                    return Some(CtorSig {
                        result: TypeExpr::Alias(def.name.clone()),
                        arg: v.arg.clone(),
                    });
                }
            }
            if let Some(sig) = find_nested_ctor(&def.def, name, true) {
                return Some(sig);
            }
        }
        None
    }

    /// Every alias name in `t` that has no definition in this scope.
    pub fn unbound_aliases(&self, t: &Type) -> Vec<String> {
        let mut out = Vec::new();
        collect_aliases(t, &mut out);
        out.retain(|n| self.lookup(n).is_none());
        out
    }

    /// Replaces unbound and cyclic alias references with `?`.
    pub fn sanitize(&self, t: &Type) -> Type {
        match t {
            TypeExpr::Alias(n) => match self.lookup(n) {
                Some((_, d)) if !d.cyclic => t.clone(),
                _ => TypeExpr::Unknown,
            },
            TypeExpr::Base(_) | TypeExpr::Unknown => t.clone(),
            TypeExpr::Arrow(a, b) => TypeExpr::arrow(self.sanitize(a), self.sanitize(b)),
            TypeExpr::Product(ts) => TypeExpr::Product(ts.iter().map(|t| self.sanitize(t)).collect()),
            TypeExpr::List(e) => TypeExpr::list(self.sanitize(e)),
            TypeExpr::Sum(vs) => TypeExpr::Sum(
                vs.iter()
                    .map(|v| Variant {
                        name: v.name.clone(),
                        arg: v.arg.as_ref().map(|a| self.sanitize(a)),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorSig {
    pub result: Type,
    pub arg: Option<Type>,
}

fn find_nested_ctor(t: &Type, name: &str, root: bool) -> Option<CtorSig> {
    match t {
        TypeExpr::Sum(vs) => {
            if !root {
                if let Some(v) = vs.iter().find(|v| v.name == name) {
                    return Some(CtorSig {
                        result: t.clone(),
                        arg: v.arg.clone(),
                    });
                }
            }
            vs.iter()
                .filter_map(|v| v.arg.as_ref())
                .find_map(|a| find_nested_ctor(a, name, false))
        }
        TypeExpr::Arrow(a, b) => {
            find_nested_ctor(a, name, false).or_else(|| find_nested_ctor(b, name, false))
        }
        TypeExpr::Product(ts) => ts.iter().find_map(|t| find_nested_ctor(t, name, false)),
        TypeExpr::List(e) => find_nested_ctor(e, name, false),
        _ => None,
    }
}

/// Distinct alias names in left-to-right order of occurrence.
pub fn collect_aliases(t: &Type, out: &mut Vec<String>) {
    match t {
        TypeExpr::Alias(n) => {
            if !out.contains(n) {
                out.push(n.clone())
            }
        }
        TypeExpr::Base(_) | TypeExpr::Unknown => {}
        TypeExpr::Arrow(a, b) => {
            collect_aliases(a, out);
            collect_aliases(b, out);
        }
        TypeExpr::Product(ts) => ts.iter().for_each(|t| collect_aliases(t, out)),
        TypeExpr::List(e) => collect_aliases(e, out),
        TypeExpr::Sum(vs) => vs.iter().for_each(|v| {
            if let Some(a) = &v.arg {
                collect_aliases(a, out)
            }
        }),
    }
}

pub fn base_of_literal(lit: &crate::syntax::Literal) -> Type {
    use crate::syntax::Literal;
    TypeExpr::Base(match lit {
        Literal::Int(_) => BaseType::Int,
        Literal::Float(_) => BaseType::Float,
        Literal::Bool(_) => BaseType::Bool,
        Literal::String(_) => BaseType::String,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_type;

    fn table(defs: &[(&str, &str)]) -> AliasTable {
        let mut t = AliasTable::new();
        for (n, d) in defs {
            t.push(n, parse_type(d).unwrap(), Span::default());
        }
        t
    }

    fn emoji_table() -> AliasTable {
        table(&[
            ("Emoji", "String"),
            ("Row", "Int"),
            ("Col", "Int"),
            ("Grid", "[[Emoji]]"),
            ("Model", "(Grid, Emoji, [Emoji])"),
            ("Action", "SelectEmoji(Emoji) + StampEmoji(Row, Col) + ClearAll + FillRow(Row)"),
        ])
    }

    #[test]
    fn normalize_model() {
        let t = emoji_table();
        let n = t.scope().normalize(&TypeExpr::alias("Model")).unwrap();
        assert_eq!(n, parse_type("([[String]], String, [String])").unwrap());
    }

    #[test]
    fn normalize_base_fixpoint() {
        let t = emoji_table();
        assert_eq!(t.scope().normalize(&TypeExpr::int()).unwrap(), TypeExpr::int());
    }

    #[test]
    fn degenerate_cycle() {
        let t = table(&[("A", "A")]);
        assert_eq!(
            t.scope().normalize(&TypeExpr::alias("A")),
            Err(TypeError::CyclicAlias("A".into()))
        );
        let t = table(&[("A", "(A, Int)")]);
        assert!(t.scope().normalize(&TypeExpr::alias("A")).is_err());
    }

    #[test]
    fn recursive_sum_is_not_cyclic() {
        let t = table(&[("IntList", "Nil + Cons(Int, IntList)")]);
        let s = t.scope();
        let n = s.normalize(&TypeExpr::alias("IntList")).unwrap();
        assert_eq!(n, TypeExpr::alias("IntList"));
        let unfolded = parse_type("Nil + Cons(Int, IntList)").unwrap();
        assert!(s.consistent(&TypeExpr::alias("IntList"), &unfolded));
        assert!(!s.consistent(&TypeExpr::alias("IntList"), &TypeExpr::int()));
    }

    #[test]
    fn consistency_examples() {
        let t = emoji_table();
        let s = t.scope();
        let unknown = TypeExpr::Unknown;
        let triple = parse_type("(Grid, Emoji, [Emoji])").unwrap();
        assert!(s.consistent(&unknown, &triple));
        let grid = s.normalize(&TypeExpr::alias("Grid")).unwrap();
        assert!(s.consistent(&grid, &parse_type("[[String]]").unwrap()));
        assert!(!s.consistent(
            &parse_type("Int -> Int").unwrap(),
            &parse_type("Int -> Bool").unwrap()
        ));
        assert!(s.consistent(&TypeExpr::alias("Emoji"), &TypeExpr::string()));
        assert!(s.consistent(
            &parse_type("A + B(Int)").unwrap(),
            &parse_type("B(?) + A").unwrap()
        ));
        assert!(!s.consistent(&parse_type("A + B").unwrap(), &parse_type("A + C").unwrap()));
    }

    #[test]
    fn head_unfolds_root_only() {
        let t = emoji_table();
        assert_eq!(
            t.scope().head(&TypeExpr::alias("Model")),
            parse_type("(Grid, Emoji, [Emoji])").unwrap()
        );
        assert_eq!(t.scope().head(&TypeExpr::alias("Nope")), TypeExpr::Unknown);
    }

    #[test]
    fn scope_sees_only_earlier_definitions() {
        let t = table(&[("A", "Int"), ("B", "[A]"), ("A", "Bool")]);
        let b = t.scope().normalize(&TypeExpr::alias("B")).unwrap();
        assert_eq!(b, parse_type("[Int]").unwrap());
        assert_eq!(t.scope_at(2).lookup("A").unwrap().0, 0);
    }
}
