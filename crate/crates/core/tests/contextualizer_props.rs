use holectx::contextualizer::{
    get_target_types, matches_target, retrieve_relevant_headers, retrieve_relevant_types, score_entry, NUM_HEADERS,
};
use holectx::statics::{AliasTable, ContextEntry};
use holectx::syntax::{parse_type, BaseType, Span, TypeExpr, Variant};
use proptest::prelude::*;

const ALIASES: [(&str, &str); 7] = [
    ("Emoji", "String"),
    ("Row", "Int"),
    ("Grid", "[[Emoji]]"),
    ("Model", "(Grid, Emoji, [Emoji])"),
    ("Action", "Select(Emoji) + Stamp(Row, Row) + Clear"),
    ("Cell", "(Row, Grid)"),
    ("Step", "Grid -> Grid"),
];

pub fn table() -> AliasTable {
    let mut t = AliasTable::new();
    for (n, d) in ALIASES {
        t.push(n, parse_type(d).unwrap(), Span::default());
    }
    t
}

pub fn arb_type(depth: u32) -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        prop_oneof![Just(BaseType::Int), Just(BaseType::Bool), Just(BaseType::String)].prop_map(TypeExpr::Base),
        Just(TypeExpr::Unknown),
        prop::sample::select(ALIASES.iter().map(|(n, _)| *n).collect::<Vec<_>>()).prop_map(TypeExpr::alias),
    ];
    leaf.prop_recursive(depth, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| TypeExpr::arrow(a, b)),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(TypeExpr::Product),
            inner.clone().prop_map(TypeExpr::list),
            prop::collection::vec(prop::option::of(inner), 1..=2).prop_map(|args| {
                TypeExpr::Sum(
                    args.into_iter()
                        .enumerate()
                        .map(|(i, arg)| Variant {
                            name: format!("K{i}"),
                            arg,
                        })
                        .collect(),
                )
            }),
        ]
    })
}

pub fn arb_context() -> impl Strategy<Value = Vec<ContextEntry>> {
    prop::collection::vec((arb_type(3), prop::bool::weighted(0.1)), 0..=20).prop_map(|entries| {
        entries
            .into_iter()
            .enumerate()
            .map(|(i, (ty, is_self))| ContextEntry {
                name: format!("v{i}"),
                ty,
                locality: i,
                is_self,
            })
            .collect()
    })
}

mod naive {
    use super::ALIASES;
    use holectx::syntax::{parse_type, TypeExpr};

    fn def(name: &str) -> TypeExpr {
        let (_, d) = ALIASES.iter().find(|(n, _)| *n == name).unwrap();
        parse_type(d).unwrap()
    }

    /// Full expansion; the alias set has no recursion.
    pub fn expand(t: &TypeExpr) -> TypeExpr {
        match t {
            TypeExpr::Alias(n) => expand(&def(n)),
            TypeExpr::Arrow(a, b) => TypeExpr::arrow(expand(a), expand(b)),
            TypeExpr::Product(ts) => TypeExpr::Product(ts.iter().map(expand).collect()),
            TypeExpr::List(e) => TypeExpr::list(expand(e)),
            TypeExpr::Sum(vs) => {
                let mut vs = vs.clone();
                for v in &mut vs {
                    v.arg = v.arg.as_ref().map(expand);
                }
                TypeExpr::Sum(vs)
            }
            other => other.clone(),
        }
    }

    fn compat(a: &TypeExpr, b: &TypeExpr) -> bool {
        use TypeExpr::*;
        match (a, b) {
            (Unknown, _) | (_, Unknown) => true,
            (Base(x), Base(y)) => x == y,
            (Arrow(a1, a2), Arrow(b1, b2)) => compat(a1, b1) && compat(a2, b2),
            (Product(xs), Product(ys)) => xs.len() == ys.len() && (0..xs.len()).all(|i| compat(&xs[i], &ys[i])),
            (List(x), List(y)) => compat(x, y),
            (Sum(xs), Sum(ys)) => {
                xs.len() == ys.len()
                    && xs.iter().all(|x| {
                        ys.iter().any(|y| {
                            y.name == x.name
                                && match (&x.arg, &y.arg) {
                                    (None, None) => true,
                                    (Some(p), Some(q)) => compat(p, q),
                                    _ => false,
                                }
                        })
                    })
            }
            _ => false,
        }
    }

    pub fn consistent(a: &TypeExpr, b: &TypeExpr) -> bool {
        compat(&expand(a), &expand(b))
    }

    fn parts(t: &TypeExpr) -> Vec<TypeExpr> {
        let mut t = t.clone();
        while let TypeExpr::Alias(n) = &t {
            t = def(n);
        }
        match t {
            TypeExpr::Arrow(_, r) => vec![*r],
            TypeExpr::Product(ts) => ts,
            _ => vec![],
        }
    }

    pub fn targets(expected: &TypeExpr) -> Vec<TypeExpr> {
        let one: Vec<_> = parts(expected);
        let two: Vec<_> = one.iter().flat_map(parts).collect();
        let mut out: Vec<TypeExpr> = Vec::new();
        for t in std::iter::once(expected.clone()).chain(one).chain(two) {
            if matches!(t, TypeExpr::Base(_) | TypeExpr::Unknown) {
                continue;
            }
            if out.iter().all(|o| expand(o) != expand(&t)) {
                out.push(t);
            }
        }
        out
    }

    fn tally(t: &TypeExpr) -> (usize, usize) {
        let sub = |ts: Vec<&TypeExpr>| ts.into_iter().map(tally).fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let (k, u) = match t {
            TypeExpr::Unknown => return (0, 1),
            TypeExpr::Base(_) | TypeExpr::Alias(_) => return (1, 0),
            TypeExpr::Arrow(a, b) => sub(vec![a, b]),
            TypeExpr::Product(ts) => sub(ts.iter().collect()),
            TypeExpr::List(e) => sub(vec![e]),
            TypeExpr::Sum(vs) => {
                let (k, u) = sub(vs.iter().filter_map(|v| v.arg.as_ref()).collect());
                (k + vs.len(), u)
            }
        };
        (k + 1, u)
    }

    pub fn score(t: &TypeExpr) -> f64 {
        let (k, u) = tally(t);
        k as f64 / (k + u) as f64
    }

    pub fn related(ty: &TypeExpr, target: &TypeExpr) -> bool {
        consistent(ty, target)
            || match ty {
                TypeExpr::Arrow(_, r) => consistent(r, target),
                TypeExpr::Product(cs) => cs.iter().any(|c| consistent(c, target)),
                _ => false,
            }
    }
}

/// (name, score, locality) triples produced by a brute-force pass.
pub fn oracle_headers(expected: &TypeExpr, ctx: &[ContextEntry]) -> Vec<(String, f64, usize)> {
    let targets = naive::targets(expected);
    let mut pool: Vec<(String, f64, usize)> = ctx
        .iter()
        .filter(|e| !e.is_self && targets.iter().any(|t| naive::related(&e.ty, t)))
        .map(|e| (e.name.clone(), naive::score(&e.ty), e.locality))
        .filter(|(_, s, _)| *s > 0.0)
        .collect();
    let mut out = Vec::new();
    while out.len() < NUM_HEADERS && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            let (b, c) = (&pool[best], &pool[i]);
            if c.1 > b.1 || (c.1 == b.1 && c.2 < b.2) {
                best = i;
            }
        }
        out.push(pool.remove(best));
    }
    out
}

pub fn contains_unknown(t: &TypeExpr) -> bool {
    match t {
        TypeExpr::Unknown => true,
        TypeExpr::Base(_) | TypeExpr::Alias(_) => false,
        TypeExpr::Arrow(a, b) => contains_unknown(a) || contains_unknown(b),
        TypeExpr::Product(ts) => ts.iter().any(contains_unknown),
        TypeExpr::List(e) => contains_unknown(e),
        TypeExpr::Sum(vs) => vs.iter().filter_map(|v| v.arg.as_ref()).any(contains_unknown),
    }
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 500,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn headers_match_naive_oracle(expected in arb_type(3), ctx in arb_context()) {
        let t = table();
        let got: Vec<_> = retrieve_relevant_headers(&expected, &ctx, &t.scope(), NUM_HEADERS)
            .into_iter()
            .map(|h| (h.name, h.score, h.locality))
            .collect();
        prop_assert_eq!(got, oracle_headers(&expected, &ctx));
    }

    #[test]
    fn score_bounds(ty in arb_type(4)) {
        let s = score_entry(&ty);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, !contains_unknown(&ty));
    }

    #[test]
    fn cap_keeps_prefix_and_every_header_is_related(expected in arb_type(3), ctx in arb_context(), cap in 0usize..12) {
        let t = table();
        let scope = t.scope();
        let all = retrieve_relevant_headers(&expected, &ctx, &scope, usize::MAX);
        let capped = retrieve_relevant_headers(&expected, &ctx, &scope, cap);
        prop_assert_eq!(&all[..cap.min(all.len())], &capped[..]);
        let targets = get_target_types(&expected, &scope);
        for h in &all {
            prop_assert!(h.score > 0.0);
            prop_assert!(targets.iter().any(|tt| matches_target(&h.ty, tt, &scope)), "{} unrelated", h.name);
        }
    }

    #[test]
    fn type_listing_is_closed(expected in arb_type(3)) {
        let mut t = table();
        t.push("Tree", parse_type("Leaf + Node(Tree, Model, Tree)").unwrap(), Span::default());
        let scope = t.scope();
        let listing = retrieve_relevant_types(&expected, &scope);
        let names = listing.aliases();
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), names.len());
        for d in &listing.defs {
            for a in holectx::contextualizer::extract_aliases(&d.def) {
                prop_assert!(names.contains(&a.as_str()) || listing.unbound.contains(&a));
            }
            // Restarting from any listed alias stays inside the listing.
            let sub = retrieve_relevant_types(&TypeExpr::alias(&d.alias), &scope);
            prop_assert!(sub.aliases().iter().all(|a| names.contains(a)));
        }
    }
}
