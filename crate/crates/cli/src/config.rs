//! Run configuration: built-in defaults, then an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use ticoder_core::gateway::GenerationConfig;
use ticoder_core::{ExecLimits, Mode};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mbpp,
    Humaneval,
    /// Problems with pre-generated candidates attached.
    Fixture,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the settings below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<DatasetKind>,
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Largest number of queries simulated per problem.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Ranked pass@k cut-offs, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Wall-clock limit per code/test execution.
    #[arg(long, global = true)]
    pub timeout_ms: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[arg(long, global = true)]
    pub serve_port: Option<u16>,
    #[arg(long, global = true)]
    pub host: Option<String>,
    /// Where the service keeps session files.
    #[arg(long, global = true)]
    pub state_dir: Option<PathBuf>,
    /// Completion endpoint URL; without one only cached candidates are used.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    kind: Option<DatasetKind>,
    mode: Option<Mode>,
    m: Option<usize>,
    k: Option<Vec<usize>>,
    timeout_ms: Option<u64>,
    memory_bytes: Option<u64>,
    workers: Option<usize>,
    cache_dir: Option<PathBuf>,
    report: Option<PathBuf>,
    serve_port: Option<u16>,
    host: Option<String>,
    state_dir: Option<PathBuf>,
    #[serde(default)]
    generation: FileGeneration,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGeneration {
    model: Option<String>,
    temperature: Option<f64>,
    num_codes: Option<usize>,
    num_tests: Option<usize>,
    max_tokens: Option<usize>,
    endpoint: Option<String>,
    api_key_env: Option<String>,
    batch_size: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub kind: Option<DatasetKind>,
    pub mode: Mode,
    pub m: usize,
    pub k: Vec<usize>,
    pub limits: ExecLimits,
    pub workers: usize,
    pub cache_dir: PathBuf,
    pub report: Option<PathBuf>,
    pub serve_port: u16,
    pub host: String,
    pub state_dir: PathBuf,
    pub generation: GenerationConfig,
    /// False when neither the file nor the flags name an endpoint.
    pub endpoint_configured: bool,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let g = file.generation;
        let defaults = GenerationConfig::default();
        let endpoint = args.endpoint.clone().or(g.endpoint);
        let generation = GenerationConfig {
            model: args.model.clone().or(g.model).unwrap_or(defaults.model),
            temperature: g.temperature.unwrap_or(defaults.temperature),
            num_codes: g.num_codes.unwrap_or(defaults.num_codes),
            num_tests: g.num_tests.unwrap_or(defaults.num_tests),
            max_tokens: g.max_tokens.unwrap_or(defaults.max_tokens),
            endpoint: endpoint.clone().unwrap_or(defaults.endpoint),
            api_key_env: g.api_key_env.unwrap_or(defaults.api_key_env),
            batch_size: g.batch_size.unwrap_or(defaults.batch_size),
        };
        let default_limits = ExecLimits::default();
        let cfg = RunConfig {
            dataset: args.dataset.clone().or(file.dataset),
            kind: args.kind.or(file.kind),
            mode: args.mode.or(file.mode).unwrap_or(Mode::PassFail),
            m: args.m.or(file.m).unwrap_or(5),
            k: args.k.clone().or(file.k).unwrap_or_else(|| vec![1]),
            limits: ExecLimits {
                timeout_ms: args.timeout_ms.or(file.timeout_ms).unwrap_or(default_limits.timeout_ms),
                memory_bytes: file.memory_bytes.or(default_limits.memory_bytes),
            },
            workers: args
                .workers
                .or(file.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            cache_dir: args
                .cache_dir
                .clone()
                .or(file.cache_dir)
                .unwrap_or_else(|| PathBuf::from(".ticoder/cache")),
            report: args.report.clone().or(file.report),
            serve_port: args.serve_port.or(file.serve_port).unwrap_or(8080),
            host: args.host.clone().or(file.host).unwrap_or_else(|| "127.0.0.1".into()),
            state_dir: args
                .state_dir
                .clone()
                .or(file.state_dir)
                .unwrap_or_else(|| PathBuf::from(".ticoder/state")),
            generation,
            endpoint_configured: endpoint.is_some(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(CliError::Config("every k must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.limits.timeout_ms == 0 {
            return Err(CliError::Config("timeout-ms must be positive".into()));
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<(&Path, DatasetKind), CliError> {
        let path = self
            .dataset
            .as_deref()
            .ok_or_else(|| CliError::Config("no dataset given (--dataset)".into()))?;
        let kind = self
            .kind
            .ok_or_else(|| CliError::Config("no dataset kind given (--kind)".into()))?;
        Ok((path, kind))
    }
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
