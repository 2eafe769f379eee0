mod config;
mod error;
mod interactive;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ticoder_core::corpus::{load_fixture, load_humaneval, load_mbpp, write_fixture};
use ticoder_core::evaluate::{evaluate_dataset, prepare};
use ticoder_core::gateway::{
    sample_candidates, CandidateCache, CompletionClient, GatewayError, GenerationConfig, HttpCompletionClient,
};
use ticoder_core::matrix::OutcomeMatrix;
use ticoder_core::report::{render_table, write_jsonl, EvalReport};
use ticoder_core::session::{replay, transcript_from_jsonl, SessionResult};
use ticoder_core::{CandidateRecord, Mode, ProblemSet, PythonSandbox, Sandbox, Terminal};
use ticoder_service::{AppState, ServiceConfig};

use config::{DatasetKind, RunArgs, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ticoder", version, about = "Test-driven selection among sampled code candidates")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a dataset and list its problems.
    Ingest {
        /// Also write the problems in fixture format, without candidates.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample candidates for every problem into the cache.
    Generate {
        /// Also write problems plus candidates in fixture format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute every code against every test and summarize the outcomes.
    Matrix {
        /// Write one JSON line per problem with its full matrix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run simulated sessions and report pass@k and pass@k@m.
    Evaluate,
    /// Host the session API.
    Serve,
    /// Re-apply a recorded transcript and print the resulting session.
    Replay {
        /// A session stored by the service under --state-dir.
        #[arg(long, conflicts_with_all = ["problem", "transcript"])]
        session: Option<String>,
        #[arg(long, requires = "transcript")]
        problem: Option<String>,
        #[arg(long, requires = "problem")]
        transcript: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Answer queries for one problem against a running service.
    Session {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        #[arg(long)]
        problem: String,
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("TICODER_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.label());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.run)?;
    match cli.command {
        Command::Ingest { out } => cmd_ingest(&cfg, out.as_deref()),
        Command::Generate { out } => cmd_generate(&cfg, out.as_deref()),
        Command::Matrix { out } => cmd_matrix(&cfg, out.as_deref()),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::Serve => cmd_serve(&cfg),
        Command::Replay {
            session,
            problem,
            transcript,
            budget,
        } => cmd_replay(&cfg, session, problem, transcript, budget),
        Command::Session { url, problem, budget } => interactive::run(&url, &problem, cfg.mode, budget),
    }
}

/// Problems plus the candidates a fixture carries, if any.
fn load_dataset(cfg: &RunConfig) -> Result<(ProblemSet, Option<BTreeMap<String, CandidateRecord>>), CliError> {
    let (path, kind) = cfg.dataset()?;
    Ok(match kind {
        DatasetKind::Mbpp => (load_mbpp(path)?, None),
        DatasetKind::Humaneval => (load_humaneval(path)?, None),
        DatasetKind::Fixture => {
            let fx = load_fixture(path)?;
            (fx.problems, Some(fx.candidates))
        }
    })
}

/// Stands in for the completion endpoint when none is configured.
struct NoEndpoint;

impl CompletionClient for NoEndpoint {
    fn complete(&self, _: &str, _: usize, _: &GenerationConfig) -> Result<Vec<String>, GatewayError> {
        Err(GatewayError::Endpoint(
            "candidates are not cached and no completion endpoint is configured".into(),
        ))
    }
}

/// Candidates for every problem and the model name they came from.
fn load_candidates(
    cfg: &RunConfig,
    problems: &ProblemSet,
    attached: Option<BTreeMap<String, CandidateRecord>>,
) -> Result<(BTreeMap<String, CandidateRecord>, String), CliError> {
    if let Some(candidates) = attached {
        return Ok((candidates, "fixture".into()));
    }
    let gateway_err = |problem: &str| {
        let problem = problem.to_string();
        move |source| CliError::Gateway { problem, source }
    };
    let cache = CandidateCache::open(&cfg.cache_dir).map_err(gateway_err("-"))?;
    let client: Box<dyn CompletionClient> = if cfg.endpoint_configured {
        Box::new(HttpCompletionClient::new().map_err(gateway_err("-"))?)
    } else {
        Box::new(NoEndpoint)
    };
    let mut out = BTreeMap::new();
    for p in &problems.problems {
        let sampled =
            sample_candidates(p, &cfg.generation, &cache, client.as_ref()).map_err(gateway_err(&p.id))?;
        tracing::info!(problem = %p.id, from_cache = sampled.from_cache, "candidates ready");
        out.insert(p.id.clone(), sampled.entry.record());
    }
    Ok((out, cfg.generation.model.clone()))
}

fn sandbox() -> Result<PythonSandbox, CliError> {
    Ok(PythonSandbox::new()?)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn cmd_ingest(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let (problems, attached) = load_dataset(cfg)?;
    for p in &problems.problems {
        println!("{}\t{}\t{} hidden tests", p.id, p.entry_point, p.hidden_tests.len());
    }
    println!("{}: {} problems", problems.name, problems.len());
    if let Some(out) = out {
        write_atomic(out, &write_fixture(&problems, &attached.unwrap_or_default()))?;
    }
    Ok(())
}

fn cmd_generate(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let (problems, attached) = load_dataset(cfg)?;
    let (candidates, _) = load_candidates(cfg, &problems, attached)?;
    for p in &problems.problems {
        let r = &candidates[&p.id];
        println!("{}\t{} codes\t{} tests", p.id, r.codes.len(), r.tests.len());
    }
    if let Some(out) = out {
        write_atomic(out, &write_fixture(&problems, &candidates))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MatrixLine<'a> {
    problem_id: &'a str,
    correct_codes: &'a [usize],
    matrix: Option<&'a OutcomeMatrix>,
}

fn cmd_matrix(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let (problems, attached) = load_dataset(cfg)?;
    let (candidates, _) = load_candidates(cfg, &problems, attached)?;
    let sandbox = sandbox()?;
    let mut lines = String::new();
    println!("problem\tcodes\ttests\tcorrect\tpass\tfail\tcrash");
    for p in &problems.problems {
        let record = candidates
            .get(&p.id)
            .ok_or_else(|| ticoder_core::evaluate::EvalError::MissingCandidates(p.id.clone()))?;
        let input = prepare(p, record, &sandbox, &cfg.limits)?;
        let (mut pass, mut fail, mut crash) = (0, 0, 0);
        if let Some(prepared) = &input.prepared {
            for &t in prepared.matrix.tests() {
                pass += prepared.matrix.pass_set(t).len();
                fail += prepared.matrix.fail_set(t).len();
                crash += prepared.matrix.crash_set(t).len();
            }
        }
        println!(
            "{}\t{}\t{}\t{}\t{pass}\t{fail}\t{crash}",
            p.id,
            input.candidates.codes.len(),
            input.candidates.tests.len(),
            input.correct_codes.len()
        );
        let line = MatrixLine {
            problem_id: &p.id,
            correct_codes: &input.correct_codes,
            matrix: input.prepared.as_ref().map(|pp| &pp.matrix),
        };
        lines.push_str(&serde_json::to_string(&line).expect("matrix serializes"));
        lines.push('\n');
    }
    if let Some(out) = out {
        write_atomic(out, &lines)?;
    }
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let (problems, attached) = load_dataset(cfg)?;
    let (candidates, model) = load_candidates(cfg, &problems, attached)?;
    let sandbox = sandbox()?;
    let evals = evaluate_dataset(&problems, &candidates, cfg.mode, cfg.m, cfg.workers, &sandbox, &cfg.limits)?;
    let report = EvalReport::build(&problems.name, &model, cfg.mode, &evals, &cfg.k, cfg.m)?;
    if let Some(path) = &cfg.report {
        write_jsonl(path, std::slice::from_ref(&report)).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    print!("{}", render_table(&[report]));
    Ok(())
}

fn cmd_serve(cfg: &RunConfig) -> Result<(), CliError> {
    let (problems, attached) = load_dataset(cfg)?;
    let (candidates, _) = load_candidates(cfg, &problems, attached)?;
    let sandbox: Arc<dyn Sandbox> = Arc::new(sandbox()?);
    let config = ServiceConfig {
        data_dir: cfg.state_dir.clone(),
        limits: cfg.limits.clone(),
        default_budget: cfg.m,
    };
    let app = AppState::new(problems, candidates, sandbox, config)?;
    let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: PathBuf::from("<runtime>"),
        source,
    })?;
    rt.block_on(async {
        let listener = ticoder_service::bind(&format!("{}:{}", cfg.host, cfg.serve_port)).await?;
        if let Ok(addr) = listener.local_addr() {
            println!("listening on http://{addr}");
            let _ = std::io::stdout().flush();
        }
        ticoder_service::serve(listener, app).await.map_err(|source| CliError::Io {
            path: PathBuf::from("<listener>"),
            source,
        })
    })
}

#[derive(Serialize)]
struct ReplayOutput {
    problem_id: String,
    mode: Mode,
    status: Terminal,
    result: SessionResult,
}

fn cmd_replay(
    cfg: &RunConfig,
    session: Option<String>,
    problem: Option<String>,
    transcript: Option<PathBuf>,
    budget: Option<usize>,
) -> Result<(), CliError> {
    let read = |path: &Path| {
        std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    let (problem_id, mode, budget, transcript_path) = match (session, problem, transcript) {
        (Some(id), _, _) => {
            let dir = cfg.state_dir.join("sessions");
            let meta_path = dir.join(format!("{id}.meta.json"));
            let meta: ticoder_core::api::SessionHandle = serde_json::from_str(&read(&meta_path)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", meta_path.display())))?;
            let budget = budget.unwrap_or(meta.budget);
            (meta.problem_id, meta.mode, budget, dir.join(format!("{id}.transcript.jsonl")))
        }
        (None, Some(problem), Some(path)) => (problem, cfg.mode, budget.unwrap_or(cfg.m), path),
        _ => return Err(CliError::Config("replay needs --session or --problem with --transcript".into())),
    };
    let entries = transcript_from_jsonl(&read(&transcript_path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", transcript_path.display())))?;

    let (problems, attached) = load_dataset(cfg)?;
    let problem = problems
        .get(&problem_id)
        .ok_or_else(|| CliError::Config(format!("problem {problem_id} is not in the dataset")))?
        .clone();
    let subset = ProblemSet::new(problems.name.clone(), vec![problem.clone()])?;
    let attached = attached.map(|mut all| all.remove(&problem_id).into_iter().map(|r| (problem_id.clone(), r)).collect());
    let (candidates, _) = load_candidates(cfg, &subset, attached)?;
    let record = candidates
        .get(&problem_id)
        .ok_or_else(|| ticoder_core::evaluate::EvalError::MissingCandidates(problem_id.clone()))?;
    let sandbox = sandbox()?;
    let input = prepare(&problem, record, &sandbox, &cfg.limits)?;
    let prepared = input
        .prepared
        .ok_or_else(|| CliError::Config(format!("problem {problem_id} has no codes or no tests to replay")))?;
    let state = replay(&prepared, mode, budget, &entries, &sandbox, &cfg.limits)?;
    let out = ReplayOutput {
        problem_id,
        mode,
        status: state.terminal,
        result: state.result(&prepared),
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("replay output serializes"));
    Ok(())
}
