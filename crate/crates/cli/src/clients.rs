//! The `--clients` grammar and its loader.
//!
//! Accepted forms:
//!
//! * `DIR` — every regular file in the directory is one client's embedding
//!   file; the client id is the file stem; files load in name order.
//! * `FILE` — one client holding the whole file.
//! * `FILE@round_robin:K` — split across `K` clients row by row.
//! * `FILE@dirichlet:K:ALPHA` — split across `K` clients with symmetric
//!   Dirichlet(ALPHA) weights (seeded by the run seed).
//! * `FILE@by_label:LABELS_FILE` — one client per distinct label; the labels
//!   file has one label per line, aligned with the rows.
//!
//! Grammar problems are config errors; unreadable or malformed files are
//! data errors.

use std::path::{Path, PathBuf};

use fred_core::ingest::{partition, read_embeddings, PartitionSpec, PartitionStrategy};
use fred_core::protocol::ClientDataset;
use fred_core::secure_agg::ClientId;
use fred_core::ClientDataset64;

use crate::{config_err, data_err, CliError};

#[derive(Debug, Clone, PartialEq)]
pub enum ClientSpec {
    /// A bare path: directory of per-client files, or one single-client file.
    Path(PathBuf),
    Partitioned {
        file: PathBuf,
        strategy: SpecStrategy,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecStrategy {
    RoundRobin { clients: usize },
    Dirichlet { clients: usize, alpha: f64 },
    ByLabel { labels: PathBuf },
}

/// Parses the grammar without touching the file system.
pub fn parse_client_spec(raw: &str) -> Result<ClientSpec, CliError> {
    let Some((file, rest)) = raw.rsplit_once('@') else {
        return Ok(ClientSpec::Path(PathBuf::from(raw)));
    };
    if file.is_empty() {
        return Err(config_err(format!("client spec `{raw}` has no file part")));
    }
    let mut parts = rest.split(':');
    let strategy = parts.next().unwrap_or_default();
    let strategy = match strategy {
        "round_robin" => {
            let k = parse_count(raw, parts.next())?;
            SpecStrategy::RoundRobin { clients: k }
        }
        "dirichlet" => {
            let k = parse_count(raw, parts.next())?;
            let alpha: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| config_err(format!("client spec `{raw}`: missing or bad alpha")))?;
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(config_err(format!(
                    "client spec `{raw}`: alpha must be positive, got {alpha}"
                )));
            }
            SpecStrategy::Dirichlet { clients: k, alpha }
        }
        "by_label" => {
            let labels = parts
                .next()
                .filter(|p| !p.is_empty())
                .ok_or_else(|| config_err(format!("client spec `{raw}`: missing labels file")))?;
            SpecStrategy::ByLabel {
                labels: PathBuf::from(labels),
            }
        }
        other => {
            return Err(config_err(format!(
                "client spec `{raw}`: unknown strategy `{other}` \
                 (expected round_robin, dirichlet or by_label)"
            )))
        }
    };
    if parts.next().is_some() {
        return Err(config_err(format!(
            "client spec `{raw}`: trailing fields after the strategy"
        )));
    }
    Ok(ClientSpec::Partitioned {
        file: PathBuf::from(file),
        strategy,
    })
}

fn parse_count(raw: &str, field: Option<&str>) -> Result<usize, CliError> {
    let k: usize = field
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| config_err(format!("client spec `{raw}`: missing or bad client count")))?;
    if k == 0 {
        return Err(config_err(format!(
            "client spec `{raw}`: client count must be at least 1"
        )));
    }
    Ok(k)
}

/// Reads one pooled dataset from a path: a single embedding file, or a
/// directory whose files are stacked in name order.
pub fn read_pool(path: &Path) -> Result<fred_core::EmbeddingMatrix64, CliError> {
    if path.is_dir() {
        let clients = load_directory(path)?;
        let parts: Vec<_> = clients.iter().map(|c| &c.data).collect();
        fred_core::stats::EmbeddingMatrix::stack(&parts)
            .map_err(|e| data_err(format!("pooling {}: {e}", path.display())))
    } else {
        read_embeddings::<f64>(path)
            .map_err(|e| data_err(format!("reading {}: {e}", path.display())))
    }
}

/// Loads the federation a spec describes. `seed` feeds randomized partition
/// strategies only.
pub fn load_clients(spec: &ClientSpec, seed: u64) -> Result<Vec<ClientDataset64>, CliError> {
    match spec {
        ClientSpec::Path(path) if path.is_dir() => load_directory(path),
        ClientSpec::Path(path) => partition_file(
            path,
            &PartitionSpec {
                strategy: PartitionStrategy::RoundRobin,
                client_count: 1,
                seed,
            },
        ),
        ClientSpec::Partitioned { file, strategy } => {
            let (strategy, client_count) = match strategy {
                SpecStrategy::RoundRobin { clients } => {
                    (PartitionStrategy::RoundRobin, *clients)
                }
                SpecStrategy::Dirichlet { clients, alpha } => {
                    (PartitionStrategy::Dirichlet { alpha: *alpha }, *clients)
                }
                SpecStrategy::ByLabel { labels } => {
                    let text = std::fs::read_to_string(labels).map_err(|e| {
                        data_err(format!("reading labels {}: {e}", labels.display()))
                    })?;
                    let labels = text.lines().map(|l| l.trim().to_string()).collect();
                    (PartitionStrategy::ByLabel { labels }, 0)
                }
            };
            partition_file(
                file,
                &PartitionSpec {
                    strategy,
                    client_count,
                    seed,
                },
            )
        }
    }
}

fn partition_file(path: &Path, spec: &PartitionSpec) -> Result<Vec<ClientDataset64>, CliError> {
    let data = read_embeddings::<f64>(path)
        .map_err(|e| data_err(format!("reading {}: {e}", path.display())))?;
    partition(&data, spec).map_err(CliError::from)
}

fn load_directory(dir: &Path) -> Result<Vec<ClientDataset64>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| data_err(format!("reading directory {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(data_err(format!(
            "directory {} contains no client files",
            dir.display()
        )));
    }
    let mut clients = Vec::with_capacity(files.len());
    for path in files {
        let data = read_embeddings::<f64>(&path)
            .map_err(|e| data_err(format!("reading {}: {e}", path.display())))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let client = ClientDataset::new(ClientId::new(id), data)
            .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        clients.push(client);
    }
    Ok(clients)
}
