//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Criterion 11 needs a live endpoint and
//! is skipped unless `SL_LLM_API_KEY` or `SL_LLM_API_BASE` is set.

#[allow(unused)]
#[path = "../../core/tests/checker_oracle.rs"]
mod checker_oracle;
#[allow(unused)]
#[path = "../../core/tests/chatlsp_fuzz.rs"]
mod chatlsp_fuzz;
#[allow(unused)]
#[path = "../../core/tests/contextualizer_props.rs"]
mod contextualizer_props;
#[allow(unused)]
#[path = "../../core/tests/language_props.rs"]
mod language_props;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use holectx::assistant::chatlsp::read_all_frames;
use holectx::assistant::{complete, HttpClient, LlmClient, ReplayClient, ScriptedClient};
use holectx::bench::{
    all_configs, check_task, exhaustive_context, load_task, load_tasks, run_matrix, summarize, MatrixOptions, Task,
};
use holectx::contextualizer::{retrieve, retrieve_relevant_headers, score_entry, NUM_HEADERS};
use holectx::prompt::{serialize_headers, serialize_types, PromptConfig};
use holectx::statics::{check_repo, get_expected_type};
use holectx::syntax::{print_type, TypeExpr};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn tasks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tasks")
}

fn emojipaint() -> Task {
    load_task(&tasks_dir().join("emojipaint")).expect("emojipaint loads")
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    })
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_holectx"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("{args:?} exited {:?}", o.status.code()))?;
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn retrieval_fidelity() -> Outcome {
    let dir = tasks_dir().join("emojipaint");
    let dir = dir.to_str().unwrap();
    let types = cli_json(&["retrieve", dir, "--hole", "1", "--types", "--format", "json"])?;
    let mut aliases: Vec<&str> = types["typeDefs"]
        .as_array()
        .ok_or("no typeDefs")?
        .iter()
        .filter_map(|d| d["alias"].as_str())
        .collect();
    aliases.sort_unstable();
    ensure(aliases == ["Action", "Col", "Emoji", "Grid", "Model", "Row"], || {
        format!("types {aliases:?}")
    })?;
    let headers = cli_json(&["retrieve", dir, "--hole", "1", "--headers", "--format", "json"])?;
    let names: Vec<&str> = headers["headers"]
        .as_array()
        .ok_or("no headers")?
        .iter()
        .filter_map(|h| h["name"].as_str())
        .collect();
    ensure(names == ["model_init", "fillRowInGrid", "clearGrid", "updateGrid"], || {
        format!("headers {names:?}")
    })?;
    Ok("6 types, 4 headers in order".into())
}

fn expected_type() -> Outcome {
    let t = emojipaint();
    let typed = check_repo(&t.repo);
    let printed = print_type(&get_expected_type(&typed, t.hole_id).map_err(|e| e.to_string())?);
    ensure(printed == "(Model, Action) -> Model", || format!("got {printed}"))?;
    Ok(printed)
}

fn scoring() -> Outcome {
    let half = score_entry(&TypeExpr::list(TypeExpr::Unknown));
    ensure(half == 0.5, || format!("score([?]) = {half}"))?;
    let table = contextualizer_props::table();
    let scope = table.scope();
    runner()
        .run(&contextualizer_props::arb_type(4), |ty| {
            let s = score_entry(&ty);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s == 1.0, !contextualizer_props::contains_unknown(&ty));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    runner()
        .run(
            &(contextualizer_props::arb_type(3), contextualizer_props::arb_context()),
            |(expected, ctx)| {
                let hs = retrieve_relevant_headers(&expected, &ctx, &scope, usize::MAX);
                prop_assert!(hs.iter().all(|h| h.score > 0.0));
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    Ok("score([?]) = 0.5; 500 random types; 500 random contexts".into())
}

fn error_rounds() -> Outcome {
    let t = emojipaint();
    let broken = t.reference.replace("clearGrid(grid)", "clearCanvas(grid)");
    let two_stage = || ScriptedClient::by_round(&[&broken, &t.reference]);
    let c = two_stage();
    let r = complete(&t.repo, t.hole_id, &PromptConfig::default(), &c).map_err(|e| e.to_string())?;
    ensure(r.errors_per_round == [1, 0] && c.calls() == 2, || {
        format!("errors {:?}, {} calls", r.errors_per_round, c.calls())
    })?;
    let c = two_stage();
    let off = PromptConfig {
        max_error_rounds: 0,
        ..PromptConfig::default()
    };
    let r = complete(&t.repo, t.hole_id, &off, &c).map_err(|e| e.to_string())?;
    ensure(c.calls() == 1 && !r.final_errors.is_empty(), || {
        format!("without rounds: {} calls, {} residual errors", c.calls(), r.final_errors.len())
    })?;
    Ok("[1, 0] in 2 calls; 1 call and 1 residual error without rounds".into())
}

fn task_validity() -> Outcome {
    let tasks = load_tasks(&tasks_dir()).map_err(|e| e.to_string())?;
    ensure(!tasks.is_empty(), || "no tasks".into())?;
    let mut counts = Vec::new();
    for t in &tasks {
        check_task(t).map_err(|e| format!("{}: {e}", t.name))?;
        counts.push(format!("{} ({} tests)", t.name, t.tests.len()));
    }
    Ok(counts.join(", "))
}

fn matrix_determinism() -> Outcome {
    let tasks = load_tasks(&tasks_dir()).map_err(|e| e.to_string())?;
    let replies: Vec<String> = tasks
        .iter()
        .flat_map(|t| std::iter::repeat_n(t.reference.clone(), 16))
        .collect();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let mut out = Vec::new();
        let client = ReplayClient::new(replies.clone());
        let run = run_matrix(&tasks, &all_configs(), 2, &client, &MatrixOptions::default(), &mut out)
            .map_err(|e| e.to_string())?;
        ensure(run.records.len() == tasks.len() * 16 && run.failures.is_empty(), || {
            format!("{} records, {} failures", run.records.len(), run.failures.len())
        })?;
        summarize(&run.records).map_err(|e| e.to_string())?;
        outputs.push(out);
    }
    ensure(outputs[0] == outputs[1], || "CSV differs between runs".into())?;
    Ok(format!("{} records, identical CSV", tasks.len() * 16))
}

fn token_efficiency() -> Outcome {
    let tasks = load_tasks(&tasks_dir()).map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for t in &tasks {
        let typed = check_repo(&t.repo);
        let r = retrieve(&typed, t.hole_id, NUM_HEADERS).map_err(|e| e.to_string())?;
        let retrieved = serialize_types(&r.types).chars().count() + serialize_headers(&r.headers).chars().count();
        let exhaustive = exhaustive_context(t, usize::MAX).chars().count();
        ensure(retrieved < exhaustive, || format!("{}: {retrieved} >= {exhaustive}", t.name))?;
        report.push(format!("{} {retrieved}<{exhaustive}", t.name));
    }
    Ok(report.join(", "))
}

fn checker_oracle() -> Outcome {
    let clean = checker_oracle::agreement(1000)?;
    Ok(format!("1000 programs agree ({clean} clean)"))
}

fn consistency_properties() -> Outcome {
    let table = language_props::emoji_table();
    let s = table.scope();
    runner()
        .run(&(language_props::arb_type(), language_props::arb_type()), |(a, b)| {
            prop_assert!(s.consistent(&a, &a));
            prop_assert_eq!(s.consistent(&a, &b), s.consistent(&b, &a));
            prop_assert!(s.consistent(&TypeExpr::Unknown, &a) && s.consistent(&a, &TypeExpr::Unknown));
            let n = s.normalize(&a).unwrap();
            prop_assert_eq!(s.normalize(&n).unwrap(), n);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let ctable = contextualizer_props::table();
    let cs = ctable.scope();
    runner()
        .run(
            &(contextualizer_props::arb_type(3), contextualizer_props::arb_context()),
            |(expected, ctx)| {
                let got: Vec<_> = retrieve_relevant_headers(&expected, &ctx, &cs, NUM_HEADERS)
                    .into_iter()
                    .map(|h| (h.name, h.score, h.locality))
                    .collect();
                prop_assert_eq!(got, contextualizer_props::oracle_headers(&expected, &ctx));
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    Ok("500 type pairs; 500 (context, type) pairs match the oracle".into())
}

fn chatlsp_conformance() -> Outcome {
    let manifest = tasks_dir().join("emojipaint");
    let mut input = Vec::new();
    let methods = [
        "chatlsp/expectedType",
        "chatlsp/retrieveRelevantTypes",
        "chatlsp/retrieveRelevantHeaders",
        "chatlsp/errorReport",
        "chatlsp/aiTutorial",
    ];
    for (i, m) in methods.iter().enumerate() {
        let body = json!({"jsonrpc": "2.0", "id": i, "method": m, "params": {"manifestPath": manifest}}).to_string();
        input.extend(format!("Content-Length: {}\r\n\r\n{body}", body.len()).into_bytes());
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_holectx"))
        .arg("serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    child.stdin.take().unwrap().write_all(&input).map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    let replies = read_all_frames(&out.stdout);
    ensure(replies.len() == 5 && replies.iter().all(|r| r["result"]["text"].is_string()), || {
        format!("replies: {replies:?}")
    })?;
    ensure(replies[0]["result"]["text"] == "(Model, Action) -> Model", || {
        format!("expectedType {}", replies[0])
    })?;
    chatlsp_fuzz::fuzz(1000, 2024)?;
    Ok("5 methods answer; 1000 malformed requests get errors".into())
}

fn live_smoke() -> Option<Outcome> {
    let base = std::env::var("SL_LLM_API_BASE").ok();
    if base.is_none() && std::env::var("SL_LLM_API_KEY").is_err() {
        return None;
    }
    let base = base.unwrap_or_else(|| "https://api.openai.com/v1".into());
    Some((|| {
        let tasks = vec![emojipaint()];
        let client = HttpClient::from_env(&base);
        let mut sink = Vec::new();
        let run = run_matrix(&tasks, &all_configs(), 1, &client as &dyn LlmClient, &MatrixOptions::default(), &mut sink)
            .map_err(|e| e.to_string())?;
        if let Some(f) = run.failures.first() {
            return Err(format!("{} transport errors, first: {}", run.failures.len(), f.message));
        }
        let mean_of = |prefix: &str| {
            let rs: Vec<_> = run.records.iter().filter(|r| r.config.starts_with(prefix)).collect();
            rs.iter().map(|r| r.tests_passed as f64).sum::<f64>() / rs.len() as f64
        };
        let (both, types, none) = (mean_of("T|H|"), mean_of("T|-|"), mean_of("-|-|"));
        ensure(both >= types && types >= none, || {
            format!("trend broken: types+headers {both}, types {types}, none {none}")
        })?;
        Ok(format!("types+headers {both} >= types {types} >= none {none}"))
    })())
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "retrieval fidelity", Duration::from_secs(1), retrieval_fidelity),
        (2, "expected type", Duration::from_secs(1), expected_type),
        (3, "scoring", Duration::from_secs(30), scoring),
        (4, "error-round efficacy", Duration::from_secs(1), error_rounds),
        (5, "task validity", Duration::from_secs(60), task_validity),
        (6, "matrix shape and determinism", Duration::from_secs(60), matrix_determinism),
        (7, "token-efficiency ordering", Duration::from_secs(10), token_efficiency),
        (8, "checker oracle", Duration::from_secs(30), checker_oracle),
        (9, "consistency and normalization", Duration::from_secs(30), consistency_properties),
        (10, "ChatLSP conformance", Duration::from_secs(10), chatlsp_conformance),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > limit => Err(format!("{d}, but took {took:.2?} (limit {limit:?})")),
            o => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {n:>2} {name} [{took:.2?}]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {n:>2} {name} [{took:.2?}]: {why}");
            }
        }
    }
    let start = Instant::now();
    match live_smoke() {
        None => println!("SKIP  11 live smoke: set SL_LLM_API_KEY or SL_LLM_API_BASE to run"),
        Some(Ok(d)) => println!("PASS  11 live smoke [{:.2?}]: {d}", start.elapsed()),
        Some(Err(e)) => {
            failed += 1;
            println!("FAIL  11 live smoke [{:.2?}]: {e}", start.elapsed());
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
