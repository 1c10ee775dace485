//! Embedding file I/O, federation partitioning, a deterministic toy text
//! embedder, and synthetic dataset generation.
//!
//! The on-disk format is binary for exact reproducibility:
//!
//! ```text
//! magic   8 bytes   "FREDEMB1"
//! dim     u32 LE    embedding dimension (≥ 1)
//! count   u64 LE    number of rows
//! dtype   u8        4 = f32, 8 = f64
//! payload           count × dim scalars, row-major, little-endian
//! ```
//!
//! A CSV import path exists for convenience (`dim=<d>` header line, then one
//! comma-separated row per line); everything downstream works on the binary
//! representation.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::protocol::ClientDataset;
use crate::rng::derive_rng;
use crate::scalar::{real, to_f64, Real};
use crate::secure_agg::ClientId;
use crate::stats::{psd_sqrt, EmbeddingMatrix, StatsError};

pub const MAGIC: &[u8; 8] = b"FREDEMB1";
const HEADER_LEN: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, IngestError> {
        match code {
            4 => Ok(Dtype::F32),
            8 => Ok(Dtype::F64),
            other => Err(IngestError::UnsupportedDtype(other)),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an embedding file (bad magic bytes)")]
    BadMagic,
    #[error("file truncated or padded: expected {expected} payload bytes, found {got}")]
    Truncated { expected: u64, got: u64 },
    #[error("unsupported dtype code {0} (4 = f32, 8 = f64)")]
    UnsupportedDtype(u8),
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("input has no rows")]
    EmptyInput,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("mixture percent must be within [0, 100], got {0}")]
    BadPercent(f64),
    #[error("mixture needs {needed} rows from source {pool} but only {available} are available")]
    PoolTooSmall {
        pool: char,
        needed: usize,
        available: usize,
    },
}

/// Parses the binary embedding format from a byte buffer.
pub fn parse_embeddings<F: Real>(bytes: &[u8]) -> Result<EmbeddingMatrix<F>, IngestError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IngestError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::Truncated {
            expected: (HEADER_LEN - MAGIC.len()) as u64,
            got: (bytes.len() - MAGIC.len()) as u64,
        });
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let dtype = Dtype::from_code(bytes[20])?;
    if dim == 0 {
        return Err(IngestError::ZeroDimension);
    }
    let expected = count
        .checked_mul(dim as u64)
        .and_then(|c| c.checked_mul(dtype.size() as u64))
        .ok_or(IngestError::Truncated {
            expected: u64::MAX,
            got: (bytes.len() - HEADER_LEN) as u64,
        })?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(IngestError::Truncated {
            expected,
            got: payload.len() as u64,
        });
    }
    let count = count as usize;
    let mut values = Vec::with_capacity(count * dim);
    match dtype {
        Dtype::F32 => {
            for chunk in payload.chunks_exact(4) {
                let v = f32::from_le_bytes(chunk.try_into().unwrap());
                values.push(real::<F>(v as f64));
            }
        }
        Dtype::F64 => {
            for chunk in payload.chunks_exact(8) {
                let v = f64::from_le_bytes(chunk.try_into().unwrap());
                values.push(real::<F>(v));
            }
        }
    }
    let data = DMatrix::from_row_slice(count, dim, &values);
    Ok(EmbeddingMatrix::new(data)?)
}

pub fn read_embeddings<F: Real>(path: &Path) -> Result<EmbeddingMatrix<F>, IngestError> {
    parse_embeddings(&std::fs::read(path)?)
}

/// Serializes to the binary format with an explicit payload dtype.
pub fn encode_embeddings<F: Real>(data: &EmbeddingMatrix<F>, dtype: Dtype) -> Vec<u8> {
    let (rows, dim) = (data.rows(), data.dim());
    let mut out = Vec::with_capacity(HEADER_LEN + rows * dim * dtype.size());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.push(dtype.code());
    let m = data.matrix();
    for i in 0..rows {
        for j in 0..dim {
            let v = to_f64(m[(i, j)]);
            match dtype {
                Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}

/// Writes the binary format, choosing the payload dtype matching `F`.
pub fn write_embeddings<F: Real>(
    data: &EmbeddingMatrix<F>,
    path: &Path,
) -> Result<(), IngestError> {
    let dtype = if std::mem::size_of::<F>() == 4 {
        Dtype::F32
    } else {
        Dtype::F64
    };
    write_embeddings_with_dtype(data, path, dtype)
}

pub fn write_embeddings_with_dtype<F: Real>(
    data: &EmbeddingMatrix<F>,
    path: &Path,
    dtype: Dtype,
) -> Result<(), IngestError> {
    Ok(std::fs::write(path, encode_embeddings(data, dtype))?)
}

/// Imports the CSV convenience format: a `dim=<d>` header line, then one
/// comma-separated row of decimals per non-empty line.
pub fn import_csv<F: Real>(content: &str) -> Result<EmbeddingMatrix<F>, IngestError> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or(IngestError::Csv {
        line: 1,
        message: "missing `dim=<d>` header".into(),
    })?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| IngestError::Csv {
            line: 1,
            message: format!("expected `dim=<d>` header, got `{}`", header.trim()),
        })?;
    if dim == 0 {
        return Err(IngestError::ZeroDimension);
    }
    let mut rows: Vec<Vec<F>> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(dim);
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| IngestError::Csv {
                line: line_no,
                message: format!("`{}` is not a number", field.trim()),
            })?;
            row.push(real::<F>(v));
        }
        if row.len() != dim {
            return Err(IngestError::Csv {
                line: line_no,
                message: format!("expected {dim} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Ok(EmbeddingMatrix::empty(dim)?);
    }
    Ok(EmbeddingMatrix::from_rows(&rows)?)
}

pub fn import_csv_file<F: Real>(path: &Path) -> Result<EmbeddingMatrix<F>, IngestError> {
    import_csv(&std::fs::read_to_string(path)?)
}

/// How to split one dataset into a federation.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionStrategy {
    /// Row `i` goes to client `i mod client_count`.
    RoundRobin,
    /// One client per distinct label; `labels[i]` tags row `i`.
    ByLabel { labels: Vec<String> },
    /// Symmetric Dirichlet(α) client weights, then an independent
    /// categorical draw per row. Clients that end up empty are dropped.
    Dirichlet { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub strategy: PartitionStrategy,
    /// Ignored by `ByLabel`, which derives the client set from the labels.
    pub client_count: usize,
    pub seed: u64,
}

/// Splits `data` into per-client shards. Every row lands on exactly one
/// client; the union of shards is the input multiset.
pub fn partition<F: Real>(
    data: &EmbeddingMatrix<F>,
    spec: &PartitionSpec,
) -> Result<Vec<ClientDataset<F>>, IngestError> {
    let n = data.rows();
    if n == 0 {
        return Err(IngestError::EmptyInput);
    }
    let groups: Vec<(String, Vec<usize>)> = match &spec.strategy {
        PartitionStrategy::RoundRobin => {
            let k = spec.client_count;
            if k == 0 {
                return Err(IngestError::BadPartition("client_count must be ≥ 1".into()));
            }
            let mut groups = vec![Vec::new(); k];
            for i in 0..n {
                groups[i % k].push(i);
            }
            groups
                .into_iter()
                .enumerate()
                .map(|(i, rows)| (format!("client-{i:03}"), rows))
                .collect()
        }
        PartitionStrategy::ByLabel { labels } => {
            if labels.len() != n {
                return Err(IngestError::BadPartition(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    n
                )));
            }
            let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, label) in labels.iter().enumerate() {
                by_label.entry(label.as_str()).or_default().push(i);
            }
            by_label
                .into_iter()
                .map(|(label, rows)| (format!("label-{label}"), rows))
                .collect()
        }
        PartitionStrategy::Dirichlet { alpha } => {
            let k = spec.client_count;
            if k == 0 {
                return Err(IngestError::BadPartition("client_count must be ≥ 1".into()));
            }
            if !(alpha.is_finite() && *alpha > 0.0) {
                return Err(IngestError::BadPartition(format!(
                    "dirichlet alpha must be positive and finite, got {alpha}"
                )));
            }
            let mut rng = derive_rng(spec.seed, &["partition", "dirichlet"]);
            // Dirichlet weights via normalized Gamma draws.
            let gamma = Gamma::new(*alpha, 1.0)
                .map_err(|e| IngestError::BadPartition(e.to_string()))?;
            let draws: Vec<f64> = (0..k).map(|_| rng.sample(gamma)).collect();
            let total: f64 = draws.iter().sum();
            if !(total.is_finite() && total > 0.0) {
                return Err(IngestError::BadPartition(
                    "dirichlet weights degenerate (alpha too small)".into(),
                ));
            }
            let mut cumulative = Vec::with_capacity(k);
            let mut acc = 0.0;
            for w in &draws {
                acc += w / total;
                cumulative.push(acc);
            }
            let mut groups = vec![Vec::new(); k];
            for i in 0..n {
                let u: f64 = rng.random();
                let client = cumulative.partition_point(|c| *c < u).min(k - 1);
                groups[client].push(i);
            }
            groups
                .into_iter()
                .enumerate()
                .filter(|(_, rows)| !rows.is_empty())
                .map(|(i, rows)| (format!("client-{i:03}"), rows))
                .collect()
        }
    };
    groups
        .into_iter()
        .filter(|(_, rows)| !rows.is_empty())
        .map(|(id, rows)| {
            let shard = data.select_rows(&rows)?;
            Ok(ClientDataset::new(ClientId::new(id), shard)
                .expect("non-empty shard by construction"))
        })
        .collect()
}

/// Deterministic stand-in for a sentence embedder: hashed bag-of-tokens
/// projected to `dim` coordinates and ℓ2-normalized. A sentence with no
/// tokens (or whose signs cancel exactly) maps to the basis vector e1.
pub fn toy_embed<F: Real, S: AsRef<str>>(
    sentences: &[S],
    dim: usize,
) -> Result<EmbeddingMatrix<F>, IngestError> {
    if dim == 0 {
        return Err(IngestError::ZeroDimension);
    }
    let mut rows: Vec<Vec<F>> = Vec::with_capacity(sentences.len());
    for sentence in sentences {
        let mut acc = vec![0.0f64; dim];
        for token in sentence.as_ref().split_whitespace() {
            let digest = Sha256::digest(token.as_bytes());
            let idx = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % dim;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            acc[idx] += sign;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            acc[0] = 1.0;
        } else {
            for v in acc.iter_mut() {
                *v /= norm;
            }
        }
        rows.push(acc.into_iter().map(real::<F>).collect());
    }
    if rows.is_empty() {
        return Ok(EmbeddingMatrix::empty(dim)?);
    }
    Ok(EmbeddingMatrix::from_rows(&rows)?)
}

/// `n` i.i.d. draws from N(mean, cov). The covariance must be PSD within
/// tolerance; draws use its symmetric square root as the mixing factor.
pub fn synth_gaussian<F: Real>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
    seed: u64,
) -> Result<EmbeddingMatrix<F>, IngestError> {
    let d = mean.len();
    if d == 0 {
        return Err(IngestError::ZeroDimension);
    }
    if cov.nrows() != d || cov.ncols() != d {
        return Err(StatsError::DimensionMismatch {
            expected: d,
            got: cov.nrows(),
        }
        .into());
    }
    if n == 0 {
        return Err(IngestError::EmptyInput);
    }
    let factor = psd_sqrt(cov)?;
    let mut rng = derive_rng(seed, &["synth", "gaussian"]);
    let mut values = Vec::with_capacity(n * d);
    let mut z = DVector::zeros(d);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample::<f64, _>(StandardNormal);
        }
        let x = mean + &factor * &z;
        values.extend(x.iter().map(|v| real::<F>(*v)));
    }
    Ok(EmbeddingMatrix::new(DMatrix::from_row_slice(n, d, &values))?)
}

/// Where mixture rows come from.
pub enum MixtureSource<'a, F: Real> {
    /// Leading rows of an in-memory pool.
    Matrix(&'a EmbeddingMatrix<F>),
    /// Leading rows of an embedding file.
    File(&'a Path),
    /// Fresh draws from N(mean, cov), seeded per source.
    Gaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    },
}

pub struct MixtureSpec<'a, F: Real> {
    pub source_a: MixtureSource<'a, F>,
    pub source_b: MixtureSource<'a, F>,
    /// Percentage of rows drawn from `source_a`, in [0, 100].
    pub percent_a: f64,
    pub total: usize,
    pub seed: u64,
}

fn mixture_part<F: Real>(
    source: &MixtureSource<'_, F>,
    count: usize,
    label: char,
    seed: u64,
) -> Result<EmbeddingMatrix<F>, IngestError> {
    match source {
        MixtureSource::Matrix(pool) => take_prefix(pool, count, label),
        MixtureSource::File(path) => take_prefix(&read_embeddings::<F>(path)?, count, label),
        MixtureSource::Gaussian { mean, cov } => {
            if count == 0 {
                return Ok(EmbeddingMatrix::empty(mean.len().max(1))?);
            }
            synth_gaussian(mean, cov, count, seed)
        }
    }
}

fn take_prefix<F: Real>(
    pool: &EmbeddingMatrix<F>,
    count: usize,
    label: char,
) -> Result<EmbeddingMatrix<F>, IngestError> {
    if count > pool.rows() {
        return Err(IngestError::PoolTooSmall {
            pool: label,
            needed: count,
            available: pool.rows(),
        });
    }
    let indices: Vec<usize> = (0..count).collect();
    Ok(pool.select_rows(&indices)?)
}

/// Builds a two-source mixture with exact per-source counts:
/// `round(total·percent/100)` rows from `source_a` (placed first), the rest
/// from `source_b`. Pool-backed sources contribute their leading rows, so
/// mixtures at increasing percentages share a common prefix.
pub fn synth_mixture<F: Real>(spec: &MixtureSpec<'_, F>) -> Result<EmbeddingMatrix<F>, IngestError> {
    if !(0.0..=100.0).contains(&spec.percent_a) || !spec.percent_a.is_finite() {
        return Err(IngestError::BadPercent(spec.percent_a));
    }
    if spec.total == 0 {
        return Err(IngestError::EmptyInput);
    }
    let count_a = (spec.total as f64 * spec.percent_a / 100.0).round() as usize;
    let count_a = count_a.min(spec.total);
    let count_b = spec.total - count_a;
    let part_a = mixture_part(&spec.source_a, count_a, 'a', spec.seed.wrapping_add(1))?;
    let part_b = mixture_part(&spec.source_b, count_b, 'b', spec.seed.wrapping_add(2))?;
    Ok(EmbeddingMatrix::stack(&[&part_a, &part_b])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn matrix(rows: &[&[f64]]) -> EmbeddingMatrix<f64> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact_for_f64() {
        let m = matrix(&[&[1.5, -2.25], &[0.001, 1.0e9], &[-0.0, 3.14159]]);
        let bytes = encode_embeddings(&m, Dtype::F64);
        let back: EmbeddingMatrix<f64> = parse_embeddings(&bytes).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn binary_round_trip_f32_loses_only_low_bits() {
        let m = matrix(&[&[0.1, 0.2], &[0.3, 0.4]]);
        let bytes = encode_embeddings(&m, Dtype::F32);
        let back: EmbeddingMatrix<f64> = parse_embeddings(&bytes).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    back.matrix()[(i, j)],
                    m.matrix()[(i, j)],
                    epsilon = 1.0e-7
                );
            }
        }
    }

    #[test]
    fn zero_count_files_read_as_empty() {
        let m = EmbeddingMatrix::<f64>::empty(3).unwrap();
        let bytes = encode_embeddings(&m, Dtype::F64);
        let back: EmbeddingMatrix<f64> = parse_embeddings(&bytes).unwrap();
        assert_eq!(back.rows(), 0);
        assert_eq!(back.dim(), 3);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let m = matrix(&[&[1.0, 2.0]]);
        let good = encode_embeddings(&m, Dtype::F64);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            parse_embeddings::<f64>(&bad_magic),
            Err(IngestError::BadMagic)
        ));

        let truncated = &good[..good.len() - 3];
        assert!(matches!(
            parse_embeddings::<f64>(truncated),
            Err(IngestError::Truncated { .. })
        ));

        let mut padded = good.clone();
        padded.push(0);
        assert!(matches!(
            parse_embeddings::<f64>(&padded),
            Err(IngestError::Truncated { .. })
        ));

        let mut bad_dtype = good;
        bad_dtype[20] = 7;
        assert!(matches!(
            parse_embeddings::<f64>(&bad_dtype),
            Err(IngestError::UnsupportedDtype(7))
        ));
    }

    #[test]
    fn csv_import_parses_and_validates() {
        let m: EmbeddingMatrix<f64> =
            import_csv("dim=2\n1.0, 2.0\n\n-3.5,0.25\n").unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.matrix()[(1, 0)], -3.5);

        assert!(matches!(
            import_csv::<f64>("dim=2\n1.0\n"),
            Err(IngestError::Csv { line: 2, .. })
        ));
        assert!(matches!(
            import_csv::<f64>("dim=2\n1.0,x\n"),
            Err(IngestError::Csv { line: 2, .. })
        ));
        assert!(matches!(
            import_csv::<f64>("rows=2\n"),
            Err(IngestError::Csv { line: 1, .. })
        ));
        let empty: EmbeddingMatrix<f64> = import_csv("dim=4\n").unwrap();
        assert_eq!((empty.rows(), empty.dim()), (0, 4));
    }

    #[test]
    fn round_robin_splits_ten_rows_into_4_3_3() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let data = EmbeddingMatrix::from_rows(&rows).unwrap();
        let spec = PartitionSpec {
            strategy: PartitionStrategy::RoundRobin,
            client_count: 3,
            seed: 0,
        };
        let clients = partition(&data, &spec).unwrap();
        let sizes: Vec<usize> = clients.iter().map(|c| c.data.rows()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let mut recovered: Vec<f64> = clients
            .iter()
            .flat_map(|c| (0..c.data.rows()).map(|i| c.data.matrix()[(i, 0)]))
            .collect();
        recovered.sort_by(f64::total_cmp);
        assert_eq!(recovered, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn single_row_single_client() {
        let data = matrix(&[&[7.0]]);
        let spec = PartitionSpec {
            strategy: PartitionStrategy::RoundRobin,
            client_count: 1,
            seed: 0,
        };
        let clients = partition(&data, &spec).unwrap();
        assert_eq!(clients.len(), 1);
        assert_eq!(clients[0].data.rows(), 1);
    }

    #[test]
    fn label_partition_groups_rows() {
        let data = matrix(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let labels = ["b", "a", "b", "a"].map(String::from).to_vec();
        let spec = PartitionSpec {
            strategy: PartitionStrategy::ByLabel { labels },
            client_count: 0,
            seed: 0,
        };
        let clients = partition(&data, &spec).unwrap();
        assert_eq!(clients.len(), 2);
        assert_eq!(clients[0].id.as_str(), "label-a");
        assert_eq!(clients[0].data.matrix()[(0, 0)], 1.0);
        assert_eq!(clients[0].data.matrix()[(1, 0)], 3.0);
        assert_eq!(clients[1].id.as_str(), "label-b");
    }

    #[test]
    fn dirichlet_partition_is_deterministic_and_preserves_rows() {
        let rows: Vec<Vec<f64>> = (0..500).map(|i| vec![i as f64]).collect();
        let data = EmbeddingMatrix::from_rows(&rows).unwrap();
        let spec = PartitionSpec {
            strategy: PartitionStrategy::Dirichlet { alpha: 0.5 },
            client_count: 5,
            seed: 42,
        };
        let a = partition(&data, &spec).unwrap();
        let b = partition(&data, &spec).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.data, y.data);
        }
        let total: usize = a.iter().map(|c| c.data.rows()).sum();
        assert_eq!(total, 500);
    }

    #[test]
    fn dirichlet_with_large_alpha_is_near_uniform() {
        let rows: Vec<Vec<f64>> = (0..10_000).map(|i| vec![i as f64]).collect();
        let data = EmbeddingMatrix::from_rows(&rows).unwrap();
        let k = 10;
        let seeds = [1u64, 2, 3, 4, 5];
        let mut avg = vec![0.0f64; k];
        for seed in seeds {
            let spec = PartitionSpec {
                strategy: PartitionStrategy::Dirichlet { alpha: 100.0 },
                client_count: k,
                seed,
            };
            let clients = partition(&data, &spec).unwrap();
            assert_eq!(clients.len(), k, "no client should be empty at α=100");
            for (i, c) in clients.iter().enumerate() {
                avg[i] += c.data.rows() as f64 / seeds.len() as f64;
            }
        }
        for (i, a) in avg.iter().enumerate() {
            assert!(
                (a - 1000.0).abs() <= 200.0,
                "client {i} averages {a} rows, outside 1000 ± 20%"
            );
        }
    }

    #[test]
    fn toy_embedder_is_a_pure_unit_norm_function() {
        let sentences = ["the cat sat", "dogs bark loudly", "the cat sat", ""];
        let m: EmbeddingMatrix<f64> = toy_embed(&sentences, 16).unwrap();
        assert_eq!(m.rows(), 4);
        for i in 0..4 {
            assert_relative_eq!(m.sample(i).unwrap().norm(), 1.0, epsilon = 1.0e-12);
        }
        assert_eq!(m.sample(0).unwrap(), m.sample(2).unwrap());
        // Empty sentence falls back to e1.
        let last = m.sample(3).unwrap();
        assert_eq!(last[0], 1.0);

        let permuted: EmbeddingMatrix<f64> =
            toy_embed(&["dogs bark loudly", "the cat sat"], 16).unwrap();
        assert_eq!(permuted.sample(0).unwrap(), m.sample(1).unwrap());
        assert_eq!(permuted.sample(1).unwrap(), m.sample(0).unwrap());
    }

    #[test]
    fn gaussian_synthesis_recovers_its_targets() {
        let mean = DVector::from_row_slice(&[1.0, -0.5, 0.0, 2.0]);
        let cov = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.3, 0.0, 0.0, //
                0.3, 1.5, 0.2, 0.0, //
                0.0, 0.2, 0.8, -0.1, //
                0.0, 0.0, -0.1, 1.2,
            ],
        );
        let data: EmbeddingMatrix<f64> = synth_gaussian(&mean, &cov, 100_000, 7).unwrap();
        let s = crate::stats::empirical_summary(&data).unwrap();
        assert!((s.mean - &mean).norm() <= 0.02, "mean off target");
        assert!((s.cov - &cov).norm() <= 0.05, "covariance off target");
    }

    #[test]
    fn gaussian_synthesis_rejects_indefinite_covariance() {
        let mean = DVector::from_row_slice(&[0.0, 0.0]);
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            synth_gaussian::<f64>(&mean, &cov, 10, 0),
            Err(IngestError::Stats(StatsError::NotPsd { .. }))
        ));
    }

    #[test]
    fn mixtures_take_exact_counts_with_shared_prefixes() {
        let pool_a = matrix(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
        let pool_b = matrix(&[&[-1.0], &[-2.0], &[-3.0], &[-4.0]]);
        let mix = |percent: f64| {
            synth_mixture(&MixtureSpec {
                source_a: MixtureSource::Matrix(&pool_a),
                source_b: MixtureSource::Matrix(&pool_b),
                percent_a: percent,
                total: 4,
                seed: 0,
            })
            .unwrap()
        };
        let all_a = mix(100.0);
        assert_eq!(all_a, pool_a);
        let all_b = mix(0.0);
        assert_eq!(all_b, pool_b);
        let half = mix(50.0);
        assert_eq!(half.matrix()[(0, 0)], 1.0);
        assert_eq!(half.matrix()[(1, 0)], 2.0);
        assert_eq!(half.matrix()[(2, 0)], -1.0);
        assert_eq!(half.matrix()[(3, 0)], -2.0);

        assert!(matches!(
            synth_mixture(&MixtureSpec {
                source_a: MixtureSource::Matrix(&pool_a),
                source_b: MixtureSource::Matrix(&pool_b),
                percent_a: 50.0,
                total: 10,
                seed: 0,
            }),
            Err(IngestError::PoolTooSmall { pool: 'a', .. })
        ));
        assert!(matches!(
            synth_mixture(&MixtureSpec {
                source_a: MixtureSource::Matrix(&pool_a),
                source_b: MixtureSource::Matrix(&pool_b),
                percent_a: 101.0,
                total: 4,
                seed: 0,
            }),
            Err(IngestError::BadPercent(_))
        ));
    }

    #[test]
    fn gaussian_sources_are_seed_deterministic() {
        let mean = DVector::from_row_slice(&[0.0, 0.0]);
        let cov = DMatrix::<f64>::identity(2, 2);
        let spec = || MixtureSpec::<f64> {
            source_a: MixtureSource::Gaussian {
                mean: mean.clone(),
                cov: cov.clone(),
            },
            source_b: MixtureSource::Gaussian {
                mean: mean.clone(),
                cov: cov.clone(),
            },
            percent_a: 30.0,
            total: 10,
            seed: 5,
        };
        let a = synth_mixture(&spec()).unwrap();
        let b = synth_mixture(&spec()).unwrap();
        assert_eq!(a, b);
        // 30% of 10 → 3 rows from a, 7 from b.
        assert_eq!(a.rows(), 10);
    }
}
