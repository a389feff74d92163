use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use holectx::assistant::{
    chatlsp, complete, ClientError, HttpClient, LlmClient, RecordingClient, ReplayClient, ScriptedClient,
};
use holectx::bench::{
    all_configs, baseline_configs, check_task, lexical_corpus, load_tasks, run_matrix, summarize, AblationConfig,
    MatrixOptions,
};
use holectx::contextualizer::{retrieve, NUM_HEADERS};
use holectx::dynamics::{run_parsed_tests, DEFAULT_FUEL};
use holectx::manifest::{load_manifest, Manifest};
use holectx::prompt::{
    serialize_headers, serialize_types, transcript_to_jsonl, ModelKind, PromptConfig, EXPECTED_TYPE_PREFIX,
};
use holectx::statics::check_repo;
use holectx::syntax::{parse_repo, parse_tests, print_type, substitute_hole, Repo};

const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";
const API_BASE_VAR: &str = "SL_LLM_API_BASE";

#[derive(Parser)]
#[command(name = "holectx", version, about = "Static retrieval for typed-hole completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a manifest; print static errors.
    Check {
        manifest: PathBuf,
        /// Fill the generative hole with the manifest's reference first.
        #[arg(long)]
        with_reference: bool,
        /// Also run the manifest's tests.
        #[arg(long)]
        run_tests: bool,
    },
    /// Print the expected type, relevant types, and relevant headers at a hole.
    Retrieve {
        manifest: PathBuf,
        /// Hole number; defaults to the `??` hole.
        #[arg(long)]
        hole: Option<usize>,
        #[arg(long)]
        types: bool,
        #[arg(long)]
        headers: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Fill the `??` hole with a model completion.
    Complete {
        manifest: PathBuf,
        #[arg(long)]
        hole: Option<usize>,
        #[command(flatten)]
        client: ClientArgs,
        #[arg(long)]
        types: bool,
        #[arg(long)]
        headers: bool,
        #[arg(long, default_value_t = 2)]
        error_rounds: usize,
        #[arg(long, default_value_t = 0.6)]
        temperature: f64,
        #[arg(long, value_enum, default_value_t = Kind::Instruction)]
        model_kind: Kind,
        /// Write the conversation as JSON Lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run the ablation matrix over a directory of tasks.
    Bench {
        tasks_dir: PathBuf,
        #[arg(long)]
        trials: usize,
        #[command(flatten)]
        client: ClientArgs,
        /// CSV results file.
        #[arg(long)]
        out: PathBuf,
        /// `all`, `baselines`, `full`, or comma-separated `T|H|E|baseline` codes.
        #[arg(long, default_value = "all")]
        configs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 2)]
        error_rounds: usize,
        #[arg(long, default_value_t = 0.6)]
        temperature: f64,
        /// Also write the summary as JSON.
        #[arg(long)]
        summary_json: Option<PathBuf>,
    },
    /// Serve the ChatLSP methods over JSON-RPC on stdio.
    Serve,
}

#[derive(clap::Args)]
struct ClientArgs {
    /// `http`, `replay:FILE`, or `script:FILE`.
    #[arg(long)]
    client: String,
    #[arg(long)]
    api_base: Option<String>,
    /// Append every model reply to FILE in replay format.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Instruction,
    Completion,
}

enum Failure {
    Usage(String),
    Domain(String),
    Client(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Usage(m) => (1, m),
            Failure::Domain(m) => (2, m),
            Failure::Client(m) => (3, m),
        };
        if !msg.is_empty() {
            eprintln!("error: {msg}");
        }
        ExitCode::from(code)
    }
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Domain(format!("{}: {e}", path.display()))
}

fn make_client(args: &ClientArgs, seed: Option<u64>) -> Result<Box<dyn LlmClient>, Failure> {
    let client_err = |e: ClientError| Failure::Client(e.0);
    let inner: Box<dyn LlmClient> = match args.client.split_once(':') {
        None if args.client == "http" => {
            let base = args
                .api_base
                .clone()
                .or_else(|| std::env::var(API_BASE_VAR).ok())
                .unwrap_or_else(|| DEFAULT_API_BASE.to_string());
            let c = HttpClient::from_env(&base);
            Box::new(match seed {
                Some(s) => c.with_seed(s),
                None => c,
            })
        }
        Some(("replay", f)) => Box::new(ReplayClient::from_file(Path::new(f)).map_err(client_err)?),
        Some(("script", f)) => Box::new(ScriptedClient::from_file(Path::new(f)).map_err(client_err)?),
        _ => {
            return Err(Failure::Usage(format!(
                "unknown client {:?}; expected http, replay:FILE, or script:FILE",
                args.client
            )))
        }
    };
    Ok(match &args.record {
        Some(p) => Box::new(RecordingClient::new(inner, p).map_err(client_err)?),
        None => inner,
    })
}

fn load(path: &Path) -> Result<(Manifest, Repo), Failure> {
    let m = load_manifest(path).map_err(domain)?;
    let repo = parse_repo(&m.sources).map_err(domain)?;
    Ok((m, repo))
}

fn pick_hole(repo: &Repo, hole: Option<usize>) -> Result<usize, Failure> {
    match hole {
        Some(h) if repo.hole(h).is_some() => Ok(h),
        Some(h) => Err(Failure::Domain(format!("hole {h} not found"))),
        None => repo
            .generative_hole()
            .map(|h| h.id)
            .ok_or_else(|| Failure::Domain("the sketch has no `??` hole".into())),
    }
}

fn cmd_check(manifest: &Path, with_reference: bool, run_tests: bool) -> Result<(), Failure> {
    let (m, mut repo) = load(manifest)?;
    if with_reference {
        let reference = m
            .reference
            .as_deref()
            .ok_or_else(|| Failure::Domain("the manifest names no reference".into()))?;
        let hole = pick_hole(&repo, None)?;
        repo = substitute_hole(&repo, hole, reference).map_err(domain)?;
    }
    let errors = check_repo(&repo).errors;
    for e in &errors {
        println!("{e}");
    }
    let mut failed = !errors.is_empty();
    if run_tests {
        let (name, text) = m
            .tests
            .as_ref()
            .ok_or_else(|| Failure::Domain("the manifest names no tests".into()))?;
        let tests = parse_tests(name, text).map_err(domain)?;
        let report = run_parsed_tests(&repo, &tests, DEFAULT_FUEL);
        println!("{}", report.to_json());
        failed |= report.passed != report.total;
    }
    if failed {
        Err(Failure::Domain(String::new()))
    } else {
        Ok(())
    }
}

fn cmd_retrieve(manifest: &Path, hole: Option<usize>, types: bool, headers: bool, format: Format) -> Result<(), Failure> {
    let (_, repo) = load(manifest)?;
    let hole = pick_hole(&repo, hole)?;
    let typed = check_repo(&repo);
    let r = retrieve(&typed, hole, NUM_HEADERS).map_err(domain)?;
    let (types, headers) = if types || headers { (types, headers) } else { (true, true) };
    match format {
        Format::Json => {
            let mut j = r.to_json();
            let obj = j.as_object_mut().expect("retrieval is an object");
            if !types {
                obj.remove("typeDefs");
            }
            if !headers {
                obj.remove("headers");
            }
            println!("{}", serde_json::to_string_pretty(&j).expect("json"));
        }
        Format::Text => {
            let mut parts = vec![format!("{EXPECTED_TYPE_PREFIX}{}\n", print_type(&r.expected))];
            if types {
                parts.push(serialize_types(&r.types));
            }
            if headers {
                parts.push(serialize_headers(&r.headers));
            }
            let parts: Vec<&str> = parts.iter().map(|p| p.trim_end()).filter(|p| !p.is_empty()).collect();
            println!("{}", parts.join("\n\n"));
        }
    }
    Ok(())
}

fn cmd_complete(
    manifest: &Path,
    hole: Option<usize>,
    client: &ClientArgs,
    cfg: PromptConfig,
    transcript: Option<&Path>,
) -> Result<(), Failure> {
    let (_, repo) = load(manifest)?;
    let hole = pick_hole(&repo, hole)?;
    let client = make_client(client, None)?;
    let result = match complete(&repo, hole, &cfg, client.as_ref()) {
        Ok(r) => r,
        Err(holectx::assistant::AssistantError::Client {
            error,
            rounds_completed,
            transcript: t,
        }) => {
            if let Some(p) = transcript {
                std::fs::write(p, transcript_to_jsonl(&t)).map_err(io(p))?;
            }
            return Err(Failure::Client(format!("{} after {rounds_completed} rounds", error.0)));
        }
        Err(e) => return Err(domain(e)),
    };
    if let Some(p) = transcript {
        std::fs::write(p, transcript_to_jsonl(&result.transcript)).map_err(io(p))?;
    }
    println!("{}", result.final_fragment);
    eprintln!("rounds: {}, errors per round: {:?}", result.rounds_used, result.errors_per_round);
    for e in &result.final_errors {
        eprintln!("{e}");
    }
    if result.final_errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Domain(format!("{} static errors remain", result.final_errors.len())))
    }
}

fn parse_configs(spec: &str) -> Result<Vec<AblationConfig>, Failure> {
    match spec {
        "all" => Ok(all_configs()),
        "baselines" => Ok(baseline_configs()),
        "full" => Ok(all_configs().into_iter().chain(baseline_configs()).collect()),
        list => list
            .split(',')
            .map(|c| c.parse().map_err(|e: holectx::bench::BenchError| Failure::Usage(e.to_string())))
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    tasks_dir: &Path,
    trials: usize,
    client: &ClientArgs,
    out: &Path,
    configs: &str,
    seed: u64,
    jobs: usize,
    base: PromptConfig,
    summary_json: Option<&Path>,
) -> Result<(), Failure> {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    base.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let configs = parse_configs(configs)?;
    let tasks = load_tasks(tasks_dir).map_err(domain)?;
    if tasks.is_empty() {
        return Err(Failure::Domain(format!("no tasks under {}", tasks_dir.display())));
    }
    for t in &tasks {
        check_task(t).map_err(|e| Failure::Domain(format!("task {} is invalid: {e}", t.name)))?;
    }
    let client = make_client(client, Some(seed))?;
    let opts = MatrixOptions {
        base,
        lexical_corpus: lexical_corpus(&tasks),
        jobs,
    };
    let mut file = BufWriter::new(File::create(out).map_err(io(out))?);
    let run = run_matrix(&tasks, &configs, trials, client.as_ref(), &opts, &mut file).map_err(domain)?;
    file.flush().map_err(io(out))?;
    let summary = summarize(&run.records).map_err(domain)?;
    print!("{summary}");
    if let Some(p) = summary_json {
        let text = serde_json::to_string_pretty(&summary.to_json()).expect("json");
        std::fs::write(p, text + "\n").map_err(io(p))?;
    }
    match run.failures.first() {
        None => Ok(()),
        Some(first) => Err(Failure::Client(format!(
            "{} of {} trials hit client errors; first: {}",
            run.failures.len(),
            run.records.len(),
            first.message
        ))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check {
            manifest,
            with_reference,
            run_tests,
        } => cmd_check(&manifest, with_reference, run_tests),
        Command::Retrieve {
            manifest,
            hole,
            types,
            headers,
            format,
        } => cmd_retrieve(&manifest, hole, types, headers, format),
        Command::Complete {
            manifest,
            hole,
            client,
            types,
            headers,
            error_rounds,
            temperature,
            model_kind,
            transcript,
        } => {
            let cfg = PromptConfig {
                include_types: types,
                include_headers: headers,
                max_error_rounds: error_rounds,
                temperature,
                model_kind: match model_kind {
                    Kind::Instruction => ModelKind::Instruction,
                    Kind::Completion => ModelKind::Completion,
                },
                ..PromptConfig::default()
            };
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            cmd_complete(&manifest, hole, &client, cfg, transcript.as_deref())
        }
        Command::Bench {
            tasks_dir,
            trials,
            client,
            out,
            configs,
            seed,
            jobs,
            error_rounds,
            temperature,
            summary_json,
        } => {
            let base = PromptConfig {
                max_error_rounds: error_rounds,
                temperature,
                ..PromptConfig::default()
            };
            cmd_bench(
                &tasks_dir,
                trials,
                &client,
                &out,
                &configs,
                seed,
                jobs,
                base,
                summary_json.as_deref(),
            )
        }
        Command::Serve => {
            let stdin = std::io::stdin();
            chatlsp::serve(stdin.lock(), std::io::stdout().lock()).map_err(|e| Failure::Client(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
