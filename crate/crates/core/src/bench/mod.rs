//! Benchmark tasks, the two non-semantic baselines, and the ablation runner.

mod matrix;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::{run_parsed_tests, DEFAULT_FUEL};
use crate::manifest::{load_manifest, Manifest, ManifestError};
use crate::statics::check_repo;
use crate::syntax::{lex, parse_repo, parse_tests, substitute_hole, Expr, Repo, SyntaxError};

pub use matrix::{
    all_configs, baseline_configs, run_matrix, run_trial, summarize, AblationConfig, Baseline, MatrixOptions,
    Summary, SummaryRow, TrialError, TrialRecord, CSV_HEADER,
};

pub const MIN_TESTS: usize = 10;
pub const MAX_TESTS: usize = 15;
pub const CHUNK_SIZE: usize = 150;
pub const TOP_CHUNKS: usize = 6;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("task {0}: the sketch has no `??` hole")]
    NoGenerativeHole(String),
    #[error("no records to summarize")]
    EmptyRecords,
    #[error("unknown configuration {0:?}")]
    BadConfig(String),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Task {
    pub name: String,
    pub manifest: Manifest,
    pub repo: Repo,
    pub hole_id: usize,
    /// File holding the generative hole.
    pub sketch_file: String,
    pub sketch_comment: String,
    pub tests_file: PathBuf,
    pub tests: Vec<Expr>,
    pub reference: String,
}

/// Loads a task directory. The manifest must name tests and a reference.
pub fn load_task(dir: &Path) -> Result<Task, BenchError> {
    let manifest = load_manifest(dir)?;
    let (tests_name, tests_text) = manifest
        .tests
        .clone()
        .ok_or_else(|| ManifestError::MissingFile(manifest.dir.join("tests.sl")))?;
    let reference = manifest
        .reference
        .clone()
        .ok_or_else(|| ManifestError::MissingFile(manifest.dir.join("reference.sl")))?;
    let repo = parse_repo(&manifest.sources)?;
    let hole = repo
        .generative_hole()
        .ok_or_else(|| BenchError::NoGenerativeHole(manifest.name.clone()))?;
    let (hole_id, sketch_file, hole_line) = (hole.id, hole.span.file.clone(), hole.span.start_line);
    let tests = parse_tests(&tests_name, &tests_text)?;
    let sketch_text = &manifest
        .sources
        .iter()
        .find(|(f, _)| *f == sketch_file)
        .expect("hole file is a source")
        .1;
    let sketch_comment = lex(&sketch_file, sketch_text)?
        .1
        .into_iter()
        .rev()
        .find(|c| c.span.end_line < hole_line)
        .map(|c| c.text.trim().to_string())
        .unwrap_or_default();
    Ok(Task {
        name: manifest.name.clone(),
        tests_file: manifest.dir.join(&tests_name),
        manifest,
        repo,
        hole_id,
        sketch_file,
        sketch_comment,
        tests,
        reference,
    })
}

/// Loads every subdirectory of `dir` that holds a manifest, sorted by name.
pub fn load_tasks(dir: &Path) -> Result<Vec<Task>, BenchError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_task(d)).collect()
}

/// Why a task fails validation, or `Ok` when the reference is clean and
/// passes every test.
pub fn check_task(task: &Task) -> Result<(), String> {
    let n = task.tests.len();
    if !(MIN_TESTS..=MAX_TESTS).contains(&n) {
        return Err(format!("{} tests, expected {MIN_TESTS} to {MAX_TESTS}", n));
    }
    let filled = substitute_hole(&task.repo, task.hole_id, &task.reference).map_err(|e| e.to_string())?;
    let errors = check_repo(&filled).errors;
    if let Some(e) = errors.first() {
        return Err(format!("{} static errors, first: {e}", errors.len()));
    }
    let report = run_parsed_tests(&filled, &task.tests, DEFAULT_FUEL);
    if report.passed != report.total {
        let failing: Vec<_> = report
            .outcomes
            .iter()
            .filter(|o| o.outcome != crate::dynamics::Outcome::Pass)
            .map(|o| o.index + 1)
            .collect();
        return Err(format!("reference fails tests {failing:?}"));
    }
    Ok(())
}

pub fn verify_task(task: &Task) -> bool {
    check_task(task).is_ok()
}

/// Keeps whole lines of `text` while the total stays within `budget` chars.
fn truncate_lines(text: &str, budget: usize) -> String {
    let mut out = String::new();
    let mut used = 0;
    for line in text.split_inclusive('\n') {
        let n = line.chars().count();
        if used + n > budget {
            break;
        }
        out.push_str(line);
        used += n;
    }
    out
}

/// All application code except tests and the sketch's own file, within a
/// character budget.
pub fn exhaustive_context(task: &Task, budget: usize) -> String {
    let mut all = String::new();
    for (name, text) in &task.manifest.sources {
        if *name == task.sketch_file {
            continue;
        }
        all.push_str(text.trim_end());
        all.push_str("\n\n");
    }
    truncate_lines(all.trim_end_matches('\n').trim_end(), budget)
}

/// The corpus searched by the lexical baseline: every task's code minus
/// tests and sketches.
pub fn lexical_corpus(tasks: &[Task]) -> String {
    tasks
        .iter()
        .flat_map(|t| {
            t.manifest
                .sources
                .iter()
                .filter(move |(n, _)| *n != t.sketch_file)
                .map(|(_, text)| text.trim_end())
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn trigrams(s: &str) -> HashMap<[char; 3], u32> {
    let cs: Vec<char> = s.chars().collect();
    let mut m = HashMap::new();
    for w in cs.windows(3) {
        *m.entry([w[0], w[1], w[2]]).or_insert(0) += 1;
    }
    m
}

fn cosine(a: &HashMap<[char; 3], u32>, b: &HashMap<[char; 3], u32>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, x)| b.get(k).map(|y| (*x as f64) * (*y as f64)))
        .sum();
    let norm = |m: &HashMap<[char; 3], u32>| m.values().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
    let d = norm(a) * norm(b);
    if d == 0.0 {
        0.0
    } else {
        dot / d
    }
}

/// Splits `corpus` into `chunk_size`-character chunks and returns the `k`
/// most similar to `query` under trigram cosine, concatenated in corpus order.
pub fn lexical_chunks(corpus: &str, query: &str, chunk_size: usize, k: usize) -> Vec<String> {
    let chars: Vec<char> = corpus.chars().collect();
    let chunks: Vec<String> = chars.chunks(chunk_size.max(1)).map(|c| c.iter().collect()).collect();
    let q = trigrams(query);
    let mut scored: Vec<(usize, f64)> = chunks
        .iter()
        .enumerate()
        .map(|(i, c)| (i, cosine(&trigrams(c), &q)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = scored.into_iter().take(k).map(|(i, _)| i).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| chunks[i].clone()).collect()
}

pub fn lexical_retrieve(corpus: &str, query: &str, chunk_size: usize, k: usize) -> String {
    lexical_chunks(corpus, query, chunk_size, k).concat()
}
