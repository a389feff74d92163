//! Fuel-bounded call-by-value evaluation with indeterminate hole values, and
//! the test runner used to score completions.

mod eval;
mod value;

use serde::Serialize;

use crate::syntax::{parse_tests, Expr, Repo, SyntaxError};

pub use eval::{RuntimeError, DEFAULT_FUEL};
pub use value::{value_eq, Closure, Env, Value};

/// Stack for evaluation threads; deep recursion in completions must not
/// overflow the caller's stack.
const EVAL_STACK: usize = 256 * 1024 * 1024;

fn on_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(EVAL_STACK)
            .spawn_scoped(s, f)
            .expect("spawn evaluator thread")
            .join()
            .expect("evaluator thread panicked")
    })
}

/// Evaluates `body` with the repo's top-level definitions in scope.
/// Definitions and body share the fuel budget.
pub fn evaluate(repo: &Repo, body: &Expr, fuel: u64) -> Result<Value, RuntimeError> {
    on_big_stack(|| {
        let mut m = eval::Machine::new(fuel);
        let env = m.top_env(repo);
        m.eval(body, &env)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "message")]
pub enum Outcome {
    Pass,
    Fail,
    Indet,
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestOutcome {
    pub index: usize,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestReport {
    pub total: usize,
    pub passed: usize,
    pub outcomes: Vec<TestOutcome>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Runs every `test <expr> end` item against the repo. Each test gets a
/// fresh `fuel` budget. A test passes only if it evaluates to `true`.
pub fn run_tests(repo: &Repo, tests_file: &str, tests_text: &str, fuel: u64) -> Result<TestReport, SyntaxError> {
    let tests = parse_tests(tests_file, tests_text)?;
    Ok(run_parsed_tests(repo, &tests, fuel))
}

pub fn run_parsed_tests(repo: &Repo, tests: &[Expr], fuel: u64) -> TestReport {
    let outcomes = on_big_stack(|| {
        let mut m = eval::Machine::new(fuel);
        let env = m.top_env(repo);
        tests
            .iter()
            .enumerate()
            .map(|(index, t)| {
                m.refuel(fuel);
                let outcome = match m.eval(t, &env) {
                    Ok(Value::Bool(true)) => Outcome::Pass,
                    Ok(v) if v.contains_indet() => Outcome::Indet,
                    Ok(_) => Outcome::Fail,
                    Err(e) => Outcome::Error(e.0),
                };
                TestOutcome { index, outcome }
            })
            .collect::<Vec<_>>()
    });
    TestReport {
        total: outcomes.len(),
        passed: outcomes.iter().filter(|o| o.outcome == Outcome::Pass).count(),
        outcomes,
    }
}
