use std::path::PathBuf;

use thiserror::Error;

use ticoder_client::ClientError;
use ticoder_core::corpus::CorpusError;
use ticoder_core::evaluate::EvalError;
use ticoder_core::gateway::GatewayError;
use ticoder_core::metrics::MetricsError;
use ticoder_core::sandbox::SandboxError;
use ticoder_core::session::SessionError;
use ticoder_service::ServiceError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("problem {problem}: {source}")]
    Gateway { problem: String, source: GatewayError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

impl CliError {
    /// Short label printed ahead of the diagnostic.
    pub fn label(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Io { .. } => "IoError",
            CliError::Corpus(_) => "CorpusError",
            CliError::Gateway { source, .. } => match source {
                GatewayError::Endpoint(_) => "EndpointError",
                GatewayError::InvalidConfig(_) => "ConfigError",
                GatewayError::Cache { .. } => "CacheError",
            },
            CliError::Eval(_) => "EvalError",
            CliError::Metrics(_) => "MetricsError",
            CliError::Sandbox(_) => "SandboxError",
            CliError::Session(_) => "SessionError",
            CliError::Service(ServiceError::Bind { .. }) => "BindError",
            CliError::Service(_) => "ServiceError",
            CliError::Client(_) => "ClientError",
        }
    }
}
