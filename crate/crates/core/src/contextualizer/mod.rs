//! Static retrieval at a hole: the transitive closure of type definitions
//! reachable from the expected type, and the typing-context headers whose
//! types can help construct it.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::statics::{collect_aliases, ContextEntry, HoleError, Scope, Type, TypedRepo};
use crate::syntax::{print_type, TypeExpr};

/// Default number of headers kept after sorting.
pub const NUM_HEADERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("unbound type alias {0}")]
    UnboundTypeAlias(String),
    #[error(transparent)]
    Hole(#[from] HoleError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeDef {
    pub alias: String,
    pub def: Type,
}

/// Type definitions in breadth-first discovery order from the expected type.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TypeDefListing {
    pub defs: Vec<TypeDef>,
    /// Aliases that were referenced but have no definition in scope.
    pub unbound: Vec<String>,
}

impl TypeDefListing {
    pub fn aliases(&self) -> Vec<&str> {
        self.defs.iter().map(|d| d.alias.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredHeader {
    pub name: String,
    pub ty: Type,
    pub score: f64,
    pub locality: usize,
}

/// Distinct alias references in `t`, left to right.
pub fn extract_aliases(t: &Type) -> Vec<String> {
    let mut out = Vec::new();
    collect_aliases(t, &mut out);
    out
}

/// The body of `alias` as written, resolved in the scope of hole `hole_id`.
pub fn get_type_definition(typed: &TypedRepo, alias: &str, hole_id: usize) -> Result<Type, ContextError> {
    let scope = typed.scope_at_hole(hole_id)?;
    scope
        .lookup(alias)
        .map(|(_, d)| d.def.clone())
        .ok_or_else(|| ContextError::UnboundTypeAlias(alias.to_string()))
}

/// Breadth-first closure of alias definitions starting from `expected`.
/// Each definition's own references are resolved in the scope that
/// definition was written in.
pub fn retrieve_relevant_types(expected: &Type, scope: &Scope) -> TypeDefListing {
    let mut listing = TypeDefListing::default();
    let mut seen = HashSet::new();
    let mut queue: VecDeque<(String, Scope)> = extract_aliases(expected).into_iter().map(|a| (a, *scope)).collect();
    while let Some((alias, scope)) = queue.pop_front() {
        if !seen.insert(alias.clone()) {
            continue;
        }
        match scope.lookup(&alias) {
            Some((idx, d)) => {
                let inner = scope.table().scope_at(idx + 1);
                queue.extend(extract_aliases(&d.def).into_iter().map(|a| (a, inner)));
                listing.defs.push(TypeDef {
                    alias,
                    def: d.def.clone(),
                });
            }
            None => {
                log::warn!("type alias {alias} is not defined; skipping");
                listing.unbound.push(alias);
            }
        }
    }
    listing
}

fn decompose(t: &Type, scope: &Scope) -> Vec<Type> {
    match scope.head(t) {
        TypeExpr::Arrow(_, r) => vec![*r],
        TypeExpr::Product(ts) => ts,
        _ => Vec::new(),
    }
}

fn structural_key(t: &Type, scope: &Scope) -> String {
    let t = scope.sanitize(t);
    print_type(&scope.normalize(&t).unwrap_or(t))
}

/// The expected type plus two rounds of decomposition: arrows give their
/// return type, products their components. Unaliased base types and `?`
/// are dropped; duplicates are detected on normalized structure and the
/// first-seen written form is kept.
pub fn get_target_types(expected: &Type, scope: &Scope) -> Vec<Type> {
    let mut all = vec![expected.clone()];
    let mut frontier = vec![expected.clone()];
    for _ in 0..2 {
        frontier = frontier.iter().flat_map(|t| decompose(t, scope)).collect();
        all.extend(frontier.iter().cloned());
    }
    let mut keys = HashSet::new();
    all.into_iter()
        .filter(|t| !matches!(t, TypeExpr::Base(_) | TypeExpr::Unknown))
        .filter(|t| keys.insert(structural_key(t, scope)))
        .collect()
}

/// Whether a value of type `ty` can be used, directly or through one
/// elimination, to produce `target`. The arrow and product clauses look at
/// `ty` as written: a value of alias type `Model` is not taken apart even if
/// `Model` names a product.
pub fn matches_target(ty: &Type, target: &Type, scope: &Scope) -> bool {
    if scope.consistent(ty, target) {
        return true;
    }
    match ty {
        TypeExpr::Arrow(_, r) => scope.consistent(r, target),
        TypeExpr::Product(ts) => ts.iter().any(|c| scope.consistent(c, target)),
        _ => false,
    }
}

/// Entries related to `target`, excluding the definition enclosing the hole.
pub fn filter_context<'c>(ctx: &'c [ContextEntry], target: &Type, scope: &Scope) -> Vec<&'c ContextEntry> {
    ctx.iter()
        .filter(|e| !e.is_self && matches_target(&e.ty, target, scope))
        .collect()
}

fn count_nodes(t: &Type, known: &mut usize, unknown: &mut usize) {
    match t {
        TypeExpr::Unknown => *unknown += 1,
        TypeExpr::Base(_) | TypeExpr::Alias(_) => *known += 1,
        TypeExpr::Arrow(a, b) => {
            *known += 1;
            count_nodes(a, known, unknown);
            count_nodes(b, known, unknown);
        }
        TypeExpr::Product(ts) => {
            *known += 1;
            ts.iter().for_each(|t| count_nodes(t, known, unknown));
        }
        TypeExpr::List(e) => {
            *known += 1;
            count_nodes(e, known, unknown);
        }
        TypeExpr::Sum(vs) => {
            *known += 1;
            for v in vs {
                *known += 1;
                if let Some(a) = &v.arg {
                    count_nodes(a, known, unknown);
                }
            }
        }
    }
}

/// Fraction of known nodes in the written type; 1.0 when it has no `?`.
pub fn score_entry(ty: &Type) -> f64 {
    let (mut known, mut unknown) = (0, 0);
    count_nodes(ty, &mut known, &mut unknown);
    known as f64 / (known + unknown) as f64
}

/// Headers matching any target type, scored, sorted by score and then
/// locality, and truncated to `cap`.
pub fn retrieve_relevant_headers(expected: &Type, ctx: &[ContextEntry], scope: &Scope, cap: usize) -> Vec<ScoredHeader> {
    let targets = get_target_types(expected, scope);
    let mut found: Vec<ScoredHeader> = Vec::new();
    for target in &targets {
        for e in filter_context(ctx, target, scope) {
            let score = score_entry(&e.ty);
            match found.iter_mut().find(|h| h.name == e.name) {
                Some(h) => {
                    h.score = h.score.max(score);
                    h.locality = h.locality.min(e.locality);
                }
                None => found.push(ScoredHeader {
                    name: e.name.clone(),
                    ty: e.ty.clone(),
                    score,
                    locality: e.locality,
                }),
            }
        }
    }
    found.retain(|h| h.score > 0.0);
    found.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.locality.cmp(&b.locality)));
    found.truncate(cap);
    found
}

/// Everything static retrieval produces for one hole.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub hole_id: usize,
    pub expected: Type,
    pub types: TypeDefListing,
    pub headers: Vec<ScoredHeader>,
}

pub fn retrieve(typed: &TypedRepo, hole_id: usize, cap: usize) -> Result<Retrieval, ContextError> {
    let hole = typed.hole(hole_id)?;
    let scope = typed.scope_at_hole(hole_id)?;
    Ok(Retrieval {
        hole_id,
        expected: hole.expected.clone(),
        types: retrieve_relevant_types(&hole.expected, &scope),
        headers: retrieve_relevant_headers(&hole.expected, &hole.context, &scope, cap),
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RetrievalJson {
    expected_type: String,
    type_defs: Vec<TypeDefJson>,
    headers: Vec<HeaderJson>,
}

#[derive(Serialize)]
struct TypeDefJson {
    alias: String,
    def: String,
}

#[derive(Serialize)]
struct HeaderJson {
    name: String,
    #[serde(rename = "type")]
    ty: String,
    score: f64,
    locality: usize,
}

impl Retrieval {
    pub fn to_json(&self) -> serde_json::Value {
        let j = RetrievalJson {
            expected_type: print_type(&self.expected),
            type_defs: self
                .types
                .defs
                .iter()
                .map(|d| TypeDefJson {
                    alias: d.alias.clone(),
                    def: print_type(&d.def),
                })
                .collect(),
            headers: self
                .headers
                .iter()
                .map(|h| HeaderJson {
                    name: h.name.clone(),
                    ty: print_type(&h.ty),
                    score: h.score,
                    locality: h.locality,
                })
                .collect(),
        };
        serde_json::to_value(j).expect("retrieval serializes")
    }
}
