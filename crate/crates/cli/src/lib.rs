//! Batch front end for private Fréchet-distance runs: compute a distance,
//! rank candidate datasets against a saved release, or run the synthetic
//! mixture benchmark.
//!
//! Everything here is a thin, testable layer over `fred-core`: flag and
//! config-file resolution, the client-spec grammar, report/release file I/O
//! and table formatting. The binary in `main.rs` only parses arguments,
//! dispatches, and maps [`CliError`] onto process exit codes.

use fred_core::ingest::IngestError;
use fred_core::protocol::ProtocolError;
use fred_core::stats::StatsError;

pub mod args;
pub mod bench;
pub mod clients;
pub mod compute;
pub mod config;
pub mod rank;

pub use args::{BenchArgs, Cli, Command, ComputeArgs, ProtocolFlags, RankArgs};
pub use bench::{run_bench, BenchOutcome, BenchParams, BenchRow, StepSummary};
pub use clients::{load_clients, parse_client_spec, ClientSpec};
pub use compute::{cmd_compute, ComputeOutcome};
pub use config::RunConfig;
pub use rank::{cmd_rank, RankCmdOutcome};

/// Process exit code when a command fails on configuration. Argument-parse
/// failures from clap use the same code.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code for unreadable, malformed or incompatible data.
pub const EXIT_DATA: i32 = 3;
/// Process exit code for a protocol-level failure (aggregation, counts).
pub const EXIT_PROTOCOL: i32 = 4;

/// A command failure, labelled by the stage it belongs to. The label decides
/// the exit code and prefixes the diagnostic.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Protocol(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Protocol(_) => EXIT_PROTOCOL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Protocol(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Protocol(m) => write!(f, "protocol error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match &e {
            ProtocolError::MissingBudgets
            | ProtocolError::InvalidDeclaredCount
            | ProtocolError::Dp(_) => CliError::Config(e.to_string()),
            ProtocolError::NoClients
            | ProtocolError::DuplicateClient(_)
            | ProtocolError::EmptyClient(_)
            | ProtocolError::ClientDimMismatch { .. }
            | ProtocolError::PublicDimMismatch { .. }
            | ProtocolError::Stats(_) => CliError::Data(e.to_string()),
            ProtocolError::CountMismatch { .. } | ProtocolError::Agg(_) => {
                CliError::Protocol(e.to_string())
            }
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub(crate) fn data_err(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

/// Serializes a report or release as pretty JSON with a trailing newline.
/// The byte stream is deterministic for identical inputs.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Data(format!("serializing output: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub(crate) fn write_json<T: serde::Serialize>(
    path: &std::path::Path,
    value: &T,
) -> Result<(), CliError> {
    let bytes = to_json_bytes(value)?;
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}
