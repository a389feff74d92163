use std::sync::OnceLock;

use crate::syntax::parse_type;

use super::Type;

/// Built-in functions available to every program. They are typed with `?`
/// where a polymorphic type would be needed.
pub const PRELUDE: &[(&str, &str)] = &[
    ("List.length", "[?] -> Int"),
    ("List.map", "(? -> ?, [?]) -> [?]"),
    ("List.mapi", "((Int, ?) -> ?, [?]) -> [?]"),
    ("List.filter", "(? -> Bool, [?]) -> [?]"),
    ("List.fold_left", "((?, ?) -> ?, ?, [?]) -> ?"),
    ("List.init", "(Int, Int -> ?) -> [?]"),
    ("List.nth", "([?], Int) -> ?"),
    ("List.append", "([?], [?]) -> [?]"),
    ("List.rev", "[?] -> [?]"),
    ("List.exists", "(? -> Bool, [?]) -> Bool"),
    ("List.for_all", "(? -> Bool, [?]) -> Bool"),
    ("List.mem", "(?, [?]) -> Bool"),
    ("List.hd", "[?] -> ?"),
    ("List.tl", "[?] -> [?]"),
    ("List.is_empty", "[?] -> Bool"),
    ("string_of_int", "Int -> String"),
    ("float_of_int", "Int -> Float"),
    ("String.length", "String -> Int"),
    ("not", "Bool -> Bool"),
];

fn table() -> &'static Vec<(&'static str, Type)> {
    static TABLE: OnceLock<Vec<(&'static str, Type)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        PRELUDE
            .iter()
            .map(|(n, t)| (*n, parse_type(t).expect("prelude types parse")))
            .collect()
    })
}

pub fn prelude_type(name: &str) -> Option<&'static Type> {
    table().iter().find(|(n, _)| *n == name).map(|(_, t)| t)
}

pub fn is_prelude(name: &str) -> bool {
    PRELUDE.iter().any(|(n, _)| *n == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_parse() {
        for (n, _) in PRELUDE {
            assert!(prelude_type(n).is_some(), "{n}");
        }
        assert_eq!(
            crate::syntax::print_type(prelude_type("List.length").unwrap()),
            "[?] -> Int"
        );
    }
}
