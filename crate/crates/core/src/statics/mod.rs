//! Bidirectional checking with gradual consistency, hole contexts, and
//! static error collection.

mod check;
mod errors;
mod exhaust;
mod prelude;
mod types;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{parse_repo, Repo, Span};

pub use errors::{ErrorKind, StaticError};
pub use exhaust::missing_case;
pub use prelude::{is_prelude, prelude_type, PRELUDE};
pub use types::{collect_aliases, AliasDef, AliasTable, CtorSig, Scope, Type, TypeError};

/// One binding visible at a hole.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextEntry {
    pub name: String,
    pub ty: Type,
    /// 0 for the nearest binding, increasing with distance.
    pub locality: usize,
    /// The definition whose body encloses the hole.
    pub is_self: bool,
}

/// In-scope bindings at a hole, nearest first, one entry per name.
pub type TypingContext = Vec<ContextEntry>;

#[derive(Debug, Clone, PartialEq)]
pub struct HoleInfo {
    pub id: usize,
    pub generative: bool,
    pub span: Span,
    pub expected: Type,
    pub context: TypingContext,
    /// Number of type definitions visible at the hole.
    pub scope_len: usize,
}

#[derive(Debug, Clone)]
pub struct TypedRepo {
    pub repo: Repo,
    pub aliases: AliasTable,
    pub holes: Vec<HoleInfo>,
    pub errors: Vec<StaticError>,
    /// Type assigned to each checked expression, keyed by its span.
    pub types: Vec<(Span, Type)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HoleError {
    #[error("hole {0} not found")]
    HoleNotFound(usize),
}

impl TypedRepo {
    pub fn hole(&self, id: usize) -> Result<&HoleInfo, HoleError> {
        self.holes
            .iter()
            .find(|h| h.id == id)
            .ok_or(HoleError::HoleNotFound(id))
    }

    pub fn generative_hole(&self) -> Option<&HoleInfo> {
        self.holes.iter().find(|h| h.generative)
    }

    /// The alias scope in effect at a hole.
    pub fn scope_at_hole(&self, id: usize) -> Result<Scope<'_>, HoleError> {
        Ok(self.aliases.scope_at(self.hole(id)?.scope_len))
    }
}

/// Checks a parsed repo. Never fails; type errors are returned as data.
pub fn check_repo(repo: &Repo) -> TypedRepo {
    check::check(repo)
}

pub fn get_expected_type(typed: &TypedRepo, hole_id: usize) -> Result<Type, HoleError> {
    Ok(typed.hole(hole_id)?.expected.clone())
}

pub fn get_typing_context(typed: &TypedRepo, hole_id: usize) -> Result<TypingContext, HoleError> {
    Ok(typed.hole(hole_id)?.context.clone())
}

/// Parses and checks a manifest. A parse failure yields exactly one
/// syntax error.
pub fn get_static_errors(manifest: &[(String, String)]) -> Vec<StaticError> {
    match parse_repo(manifest) {
        Ok(repo) => check_repo(&repo).errors,
        Err(e) => vec![StaticError::syntax(&e)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{print_type, TypeExpr};

    const TYPES: &str = "type Emoji = String in
type Row = Int in
type Col = Int in
type Grid = [[Emoji]] in
type Model = (Grid, Emoji, [Emoji]) in
type Action = SelectEmoji(Emoji) + StampEmoji(Row, Col) + ClearAll + FillRow(Row) in
";

    fn manifest(body: &str) -> Vec<(String, String)> {
        vec![
            ("types.sl".into(), TYPES.into()),
            (
                "sketch.sl".into(),
                format!("let update: (Model, Action) -> Model = {body} in"),
            ),
        ]
    }

    fn check_src(src: &str) -> TypedRepo {
        check_repo(&parse_repo(&[("main.sl".into(), src.into())]).unwrap())
    }

    fn kinds(t: &TypedRepo) -> Vec<&'static str> {
        t.errors.iter().map(|e| e.kind.name()).collect()
    }

    #[test]
    fn expected_type_of_update_hole() {
        let repo = parse_repo(&manifest("??")).unwrap();
        let typed = check_repo(&repo);
        assert!(typed.errors.is_empty(), "{:?}", typed.errors);
        let t = get_expected_type(&typed, 1).unwrap();
        assert_eq!(print_type(&t), "(Model, Action) -> Model");
    }

    #[test]
    fn expected_type_under_lambda() {
        let t = check_src("let f: Int -> Int = fun x -> ?? end in");
        assert_eq!(get_expected_type(&t, 1).unwrap(), TypeExpr::int());
    }

    #[test]
    fn expected_type_unknown_annotation() {
        let t = check_src("let y: ? = ?? in");
        assert_eq!(get_expected_type(&t, 1).unwrap(), TypeExpr::Unknown);
    }

    #[test]
    fn synthetic_position_is_unknown() {
        let t = check_src("let y: Int = ?(1) in");
        assert_eq!(get_expected_type(&t, 1).unwrap(), TypeExpr::Unknown);
    }

    #[test]
    fn missing_hole() {
        let t = check_src("let y: Int = 1 in");
        assert_eq!(get_expected_type(&t, 3), Err(HoleError::HoleNotFound(3)));
    }

    #[test]
    fn unbound_variable() {
        let typed = check_repo(&parse_repo(&manifest("fun (m, a) -> grid end")).unwrap());
        assert_eq!(kinds(&typed), ["UnboundVariable"]);
        assert!(typed.errors[0].message.contains("grid"));
    }

    #[test]
    fn annotation_mismatch() {
        let t = check_src("let x: Int = true in");
        assert_eq!(
            t.errors[0].kind,
            ErrorKind::TypeInconsistency {
                expected: TypeExpr::int(),
                got: TypeExpr::bool()
            }
        );
        assert_eq!(t.errors.len(), 1);
    }

    #[test]
    fn inner_let_mismatch() {
        let t = check_src("let z: Int = let x: Int = true in x in");
        assert_eq!(kinds(&t), ["TypeInconsistency"]);
    }

    #[test]
    fn model_used_as_function() {
        let typed = check_repo(&parse_repo(&manifest("fun (model, action) -> model(1) end")).unwrap());
        assert_eq!(kinds(&typed), ["TypeInconsistency"]);
        assert!(typed.errors[0].message.contains("but got Model"));
    }

    #[test]
    fn reference_body_is_clean() {
        let body = "fun (model, action) ->
  let (grid, selected, emojis) = model in
  case action
  | SelectEmoji(e) => (grid, e, emojis)
  | StampEmoji(r, c) => (grid, selected, emojis)
  | ClearAll => ([], selected, emojis)
  | FillRow(r) => (grid, selected, emojis)
  end
end";
        let typed = check_repo(&parse_repo(&manifest(body)).unwrap());
        assert!(typed.errors.is_empty(), "{:?}", typed.errors);
    }

    #[test]
    fn inexhaustive_case() {
        let body = "fun (model, action) -> case action | ClearAll => model end end";
        let typed = check_repo(&parse_repo(&manifest(body)).unwrap());
        assert_eq!(kinds(&typed), ["InexhaustiveMatch"]);
    }

    #[test]
    fn constructor_errors() {
        let t = check_src("type A = B + C(Int) in let x: A = D in let y: A = C in let z: A = B(1) in");
        assert_eq!(kinds(&t), ["UnboundConstructor", "ArityMismatch", "ArityMismatch"]);
    }

    #[test]
    fn duplicate_constructor_and_cycles() {
        let t = check_src("type A = B + B in type C = (C, Int) in type D = Nil + Cons(Int, D) in");
        assert_eq!(kinds(&t), ["DuplicateConstructor", "CyclicAlias"]);
    }

    #[test]
    fn unbound_alias() {
        let t = check_src("let x: Foo = 1 in");
        assert_eq!(kinds(&t), ["UnboundTypeAlias"]);
    }

    #[test]
    fn application_arity() {
        let t = check_src("let f: (Int, Int) -> Int = fun (a, b) -> a + b end in let x: Int = f(1, 2, 3) in");
        assert_eq!(kinds(&t), ["ArityMismatch"]);
        let t = check_src("let f: (Int, Int) -> Int = fun (a, b) -> a + b end in let x: Int = f(1, 2) in");
        assert!(t.errors.is_empty());
    }

    #[test]
    fn recursion_and_prelude() {
        let t = check_src(
            "let len: [Int] -> Int = fun l -> case l | [] => 0 | _ :: t => 1 + len(t) end end in
             let n: Int = List.length([1, 2]) + String.length(\"ab\") in",
        );
        assert!(t.errors.is_empty(), "{:?}", t.errors);
    }

    #[test]
    fn errors_in_source_order() {
        let t = check_src("let a: Int = x in let b: Int = \"s\" in let c: Int = y in");
        assert_eq!(kinds(&t), ["UnboundVariable", "TypeInconsistency", "UnboundVariable"]);
    }

    #[test]
    fn typing_context_shadowing() {
        let t = check_src("let a: Int = 1 in let a: Bool = true in let b: ? = ?? in");
        let ctx = get_typing_context(&t, 1).unwrap();
        let names: Vec<_> = ctx.iter().map(|e| (e.name.as_str(), e.locality, e.is_self)).collect();
        assert_eq!(names, [("b", 0, true), ("a", 1, false)]);
        assert_eq!(ctx[1].ty, TypeExpr::bool());
    }

    #[test]
    fn empty_context() {
        let t = check_src("let b: ? = (fun x -> x end)(??) in");
        let ctx = get_typing_context(&t, 1).unwrap();
        assert_eq!(ctx.len(), 1);
        assert!(ctx[0].is_self);
    }

    #[test]
    fn pattern_bindings_keep_aliases() {
        let body = "fun (model, action) -> let (grid, sel, es) = model in ?? end";
        let typed = check_repo(&parse_repo(&manifest(body)).unwrap());
        let ctx = get_typing_context(&typed, 1).unwrap();
        let find = |n: &str| print_type(&ctx.iter().find(|e| e.name == n).unwrap().ty);
        assert_eq!(find("grid"), "Grid");
        assert_eq!(find("es"), "[Emoji]");
        assert_eq!(find("action"), "Action");
    }

    #[test]
    fn static_errors_wrap_parse_failure() {
        let errs = get_static_errors(&manifest(
            "fun (model, action) -> match action with | ClearAll -> model end",
        ));
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ErrorKind::SyntaxError);
        assert!(errs[0].message.contains("unexpected"));
    }
}
