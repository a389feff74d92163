use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::Serialize;

use super::{exhaustive_context, lexical_retrieve, BenchError, Task, CHUNK_SIZE, TOP_CHUNKS};
use crate::assistant::{complete_with_prompt, contextualized_prompt, AssistantError, LlmClient};
use crate::dynamics::{run_parsed_tests, DEFAULT_FUEL};
use crate::prompt::{ChatMessage, PromptConfig};

pub const CSV_HEADER: &str =
    "task,config,trial,tests_passed,tests_total,rounds,errors_per_round,chars_sent,chars_received,wall_ms";

const BASELINE_PREAMBLE: &str = "Here is code from the same repository that may be relevant:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    None,
    Exhaustive,
    Lexical,
}

/// One cell of the ablation matrix. Baselines replace retrieval, so a
/// baseline config never has `types` or `headers` set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AblationConfig {
    pub types: bool,
    pub headers: bool,
    pub error_rounds: bool,
    pub baseline: Baseline,
}

impl AblationConfig {
    pub fn new(types: bool, headers: bool, error_rounds: bool) -> AblationConfig {
        AblationConfig {
            types,
            headers,
            error_rounds,
            baseline: Baseline::None,
        }
    }

    pub fn baseline(baseline: Baseline, error_rounds: bool) -> AblationConfig {
        AblationConfig {
            types: false,
            headers: false,
            error_rounds,
            baseline,
        }
    }
}

/// Encoded as `T|H|E|baseline`, with `-` for a disabled flag.
impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = |on, c| if on { c } else { '-' };
        let b = match self.baseline {
            Baseline::None => "none",
            Baseline::Exhaustive => "exhaustive",
            Baseline::Lexical => "lexical",
        };
        write!(
            f,
            "{}|{}|{}|{b}",
            flag(self.types, 'T'),
            flag(self.headers, 'H'),
            flag(self.error_rounds, 'E')
        )
    }
}

impl FromStr for AblationConfig {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<AblationConfig, BenchError> {
        let bad = || BenchError::BadConfig(s.to_string());
        let parts: Vec<&str> = s.trim().split('|').collect();
        let [t, h, e, b] = parts[..] else { return Err(bad()) };
        let flag = |p: &str, c: &str| match p {
            _ if p == c => Ok(true),
            "-" => Ok(false),
            _ => Err(bad()),
        };
        let baseline = match b {
            "none" => Baseline::None,
            "exhaustive" => Baseline::Exhaustive,
            "lexical" => Baseline::Lexical,
            _ => return Err(bad()),
        };
        let cfg = AblationConfig {
            types: flag(t, "T")?,
            headers: flag(h, "H")?,
            error_rounds: flag(e, "E")?,
            baseline,
        };
        if baseline != Baseline::None && (cfg.types || cfg.headers) {
            return Err(bad());
        }
        Ok(cfg)
    }
}

/// The eight feature ablations, least context first.
pub fn all_configs() -> Vec<AblationConfig> {
    let mut out = Vec::new();
    for e in [false, true] {
        for (t, h) in [(false, false), (true, false), (false, true), (true, true)] {
            out.push(AblationConfig::new(t, h, e));
        }
    }
    out
}

pub fn baseline_configs() -> Vec<AblationConfig> {
    let mut out = Vec::new();
    for b in [Baseline::Exhaustive, Baseline::Lexical] {
        for e in [false, true] {
            out.push(AblationConfig::baseline(b, e));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub task: String,
    pub config: String,
    pub trial: usize,
    pub tests_passed: usize,
    pub tests_total: usize,
    pub rounds: usize,
    pub errors_per_round: Vec<usize>,
    pub chars_sent: usize,
    pub chars_received: usize,
    /// Zero for deterministic clients, whose timing carries no information.
    pub wall_ms: u128,
}

impl TrialRecord {
    pub fn csv_line(&self) -> String {
        let errs: Vec<String> = self.errors_per_round.iter().map(|e| e.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.task,
            self.config,
            self.trial,
            self.tests_passed,
            self.tests_total,
            self.rounds,
            errs.join(";"),
            self.chars_sent,
            self.chars_received,
            self.wall_ms
        )
    }
}

/// A trial cut short by the client. `record` holds what was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialError {
    pub message: String,
    pub record: Box<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct MatrixOptions {
    /// Template for every trial; the config overrides the retrieval flags
    /// and, when error rounds are off, `max_error_rounds`.
    pub base: PromptConfig,
    /// Corpus for the lexical baseline.
    pub lexical_corpus: String,
    pub jobs: usize,
}

impl Default for MatrixOptions {
    fn default() -> MatrixOptions {
        MatrixOptions {
            base: PromptConfig::default(),
            lexical_corpus: String::new(),
            jobs: 1,
        }
    }
}

fn build_prompt(task: &Task, config: &AblationConfig, opts: &MatrixOptions) -> Result<ChatMessage, AssistantError> {
    let cfg = trial_config(config, &opts.base);
    let mut user = contextualized_prompt(&task.repo, task.hole_id, &cfg)?;
    let extra = match config.baseline {
        Baseline::None => return Ok(user),
        Baseline::Exhaustive => {
            let room = cfg.char_budget.saturating_sub(user.content.chars().count() + BASELINE_PREAMBLE.len() + 2);
            exhaustive_context(task, room)
        }
        Baseline::Lexical => {
            let sketch = crate::assistant::sketch_text(&task.repo, task.hole_id).unwrap_or_default();
            lexical_retrieve(&opts.lexical_corpus, sketch, CHUNK_SIZE, TOP_CHUNKS)
        }
    };
    user.content = format!("{BASELINE_PREAMBLE}\n{}\n\n{}", extra.trim_end(), user.content);
    Ok(user)
}

fn trial_config(config: &AblationConfig, base: &PromptConfig) -> PromptConfig {
    PromptConfig {
        include_types: config.types,
        include_headers: config.headers,
        max_error_rounds: if config.error_rounds { base.max_error_rounds } else { 0 },
        ..base.clone()
    }
}

/// Runs one completion for `task` under `config` and scores it against the
/// task's tests.
pub fn run_trial(
    task: &Task,
    config: &AblationConfig,
    opts: &MatrixOptions,
    client: &dyn LlmClient,
    trial: usize,
) -> Result<TrialRecord, TrialError> {
    let mut record = TrialRecord {
        task: task.name.clone(),
        config: config.to_string(),
        trial,
        tests_passed: 0,
        tests_total: task.tests.len(),
        rounds: 0,
        errors_per_round: Vec::new(),
        chars_sent: 0,
        chars_received: 0,
        wall_ms: 0,
    };
    let cfg = trial_config(config, &opts.base);
    let result = build_prompt(task, config, opts)
        .and_then(|user| complete_with_prompt(&task.repo, task.hole_id, user, &cfg, client));
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            if let AssistantError::Client { rounds_completed, .. } = &e {
                record.rounds = *rounds_completed;
            }
            return Err(TrialError {
                message: e.to_string(),
                record: Box::new(record),
            });
        }
    };
    if let Some(repo) = &result.final_repo {
        record.tests_passed = run_parsed_tests(repo, &task.tests, DEFAULT_FUEL).passed;
    }
    record.rounds = result.rounds_used;
    record.errors_per_round = result.errors_per_round;
    record.chars_sent = result.chars_sent;
    record.chars_received = result.chars_received;
    record.wall_ms = if client.deterministic() { 0 } else { result.wall_millis };
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRun {
    /// One per trial in matrix order, including partial records of failed trials.
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialError>,
}

/// Runs tasks × configs × trials, writing the CSV header and then each
/// record as soon as every earlier record has been written. Output order
/// is the matrix order regardless of `jobs`.
pub fn run_matrix(
    tasks: &[Task],
    configs: &[AblationConfig],
    trials: usize,
    client: &dyn LlmClient,
    opts: &MatrixOptions,
    out: &mut dyn Write,
) -> Result<MatrixRun, BenchError> {
    let work: Vec<(&Task, &AblationConfig, usize)> = tasks
        .iter()
        .flat_map(|t| configs.iter().flat_map(move |c| (0..trials).map(move |i| (t, c, i))))
        .collect();
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let mut run = MatrixRun {
        records: Vec::with_capacity(work.len()),
        failures: Vec::new(),
    };
    std::thread::scope(|s| -> Result<(), BenchError> {
        for _ in 0..opts.jobs.clamp(1, work.len().max(1)) {
            let tx = tx.clone();
            let (work, next) = (&work, &next);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((task, config, trial)) = work.get(i) else { break };
                let r = run_trial(task, config, opts, client, *trial);
                if tx.send((i, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&run.records.len()) {
                let record = match r {
                    Ok(rec) => rec,
                    Err(e) => {
                        log::warn!("{} {} trial {}: {}", e.record.task, e.record.config, e.record.trial, e.message);
                        run.failures.push(e.clone());
                        *e.record
                    }
                };
                writeln!(out, "{}", record.csv_line())?;
                out.flush()?;
                run.records.push(record);
            }
        }
        Ok(())
    })?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub config: String,
    pub trials: usize,
    /// Mean percentage of tests passed, per task; `None` if the task has no
    /// records under this config.
    pub per_task: Vec<Option<f64>>,
    /// Mean of the per-task percentages.
    pub mean: f64,
    pub chars_sent: f64,
    pub chars_received: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub tasks: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Per-config averages. Rows and task columns follow first appearance.
pub fn summarize(records: &[TrialRecord]) -> Result<Summary, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let tasks = first_seen(records.iter().map(|r| r.task.as_str()));
    let configs = first_seen(records.iter().map(|r| r.config.as_str()));
    let rows = configs
        .into_iter()
        .map(|config| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.config == config).collect();
            let per_task: Vec<Option<f64>> = tasks
                .iter()
                .map(|t| {
                    let of_task: Vec<f64> = rs
                        .iter()
                        .filter(|r| &r.task == t)
                        .map(|r| {
                            if r.tests_total == 0 {
                                0.0
                            } else {
                                100.0 * r.tests_passed as f64 / r.tests_total as f64
                            }
                        })
                        .collect();
                    (!of_task.is_empty()).then(|| mean(of_task.into_iter()))
                })
                .collect();
            SummaryRow {
                trials: rs.len(),
                mean: mean(per_task.iter().flatten().copied()),
                chars_sent: mean(rs.iter().map(|r| r.chars_sent as f64)),
                chars_received: mean(rs.iter().map(|r| r.chars_received as f64)),
                wall_ms: mean(rs.iter().map(|r| r.wall_ms as f64)),
                per_task,
                config,
            }
        })
        .collect();
    Ok(Summary { tasks, rows })
}

impl Summary {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("summary serializes")
    }
}

/// Aligned text table, one row per config.
impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut head = vec!["config".to_string(), "n".to_string()];
        head.extend(self.tasks.iter().cloned());
        head.extend(["mean", "sent", "received", "ms"].map(String::from));
        let mut table = vec![head];
        for r in &self.rows {
            let mut row = vec![r.config.clone(), r.trials.to_string()];
            row.extend(
                r.per_task
                    .iter()
                    .map(|c| c.map_or_else(|| "-".to_string(), |p| format!("{p:.1}%"))),
            );
            row.push(format!("{:.1}%", r.mean));
            row.push(format!("{:.0}", r.chars_sent));
            row.push(format!("{:.0}", r.chars_received));
            row.push(format!("{:.0}", r.wall_ms));
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        for row in &table {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, w))| if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            writeln!(f, "{}", cells.join("  ").trim_end())?;
        }
        Ok(())
    }
}
