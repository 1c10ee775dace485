//! Privately compares a server-held embedding dataset against a federated
//! dataset by computing the Fréchet distance between their Gaussian summaries.
//!
//! The crate is layered bottom-up:
//!
//! * [`scalar`] — the [`Real`] trait the numeric core is generic over
//!   (`f32` or `f64`).
//! * [`rng`] — deterministic stream derivation so every sampled value is a
//!   pure function of the run seed and a label path.
//! * [`stats`] — embedding matrices, Gaussian summaries, the PSD projection
//!   and the closed-form Fréchet distance between Gaussians.
//! * [`dp`] — norm clipping, Gaussian-mechanism noise scales, budget
//!   accounting and sequential composition.
//! * [`secure_agg`] — a simulated secure-aggregation layer: fixed-point
//!   encoding plus pairwise-masked client shares that cancel on summation.
//! * [`protocol`] — the two-round federated protocol (private mean, then
//!   private covariance), final distance assembly and candidate ranking.
//! * [`ingest`] — embedding file formats, client partitioning and synthetic
//!   data generation for benchmarks.
//!
//! Everything numeric is generic over [`Real`]; the aliases below fix the
//! common `f64` instantiation.
//!
//! A minimal end-to-end run against two simulated clients:
//!
//! ```
//! use fred_core::dp::{ClipNorm, NoiseMode};
//! use fred_core::protocol::{run_fred, ClientDataset};
//! use fred_core::secure_agg::ClientId;
//! use fred_core::stats::EmbeddingMatrix;
//! use fred_core::ProtocolConfig64;
//!
//! let public = EmbeddingMatrix::from_rows(&[
//!     vec![0.0, 1.0],
//!     vec![1.0, 0.0],
//!     vec![1.0, 1.0],
//! ])?;
//! let clients = vec![
//!     ClientDataset::new(
//!         ClientId::new("a"),
//!         EmbeddingMatrix::from_rows(&[vec![0.1, 0.9], vec![0.9, 0.1]])?,
//!     )?,
//!     ClientDataset::new(
//!         ClientId::new("b"),
//!         EmbeddingMatrix::from_rows(&[vec![1.0, 0.8]])?,
//!     )?,
//! ];
//! // Audit mode runs the same two-round protocol with zero noise.
//! let config = ProtocolConfig64::new(ClipNorm::new(2.0)?, NoiseMode::Audit, None, 7)?;
//! let run = run_fred(&public, &clients, &config)?;
//! assert!(run.distance.clamped >= 0.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod dp;
pub mod ingest;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod secure_agg;
pub mod stats;

pub use scalar::Real;

/// Row-major embedding dataset over `f64`.
pub type EmbeddingMatrix64 = stats::EmbeddingMatrix<f64>;
/// Mean/covariance summary over `f64`.
pub type GaussianSummary64 = stats::GaussianSummary<f64>;
/// Fréchet distance breakdown over `f64`.
pub type FrechetValue64 = stats::FrechetValue<f64>;
/// Clipping bound over `f64`.
pub type ClipNorm64 = dp::ClipNorm<f64>;
/// Noise standard deviation over `f64`.
pub type NoiseScale64 = dp::NoiseScale<f64>;
/// Protocol configuration over `f64`.
pub type ProtocolConfig64 = protocol::ProtocolConfig<f64>;
/// Per-client dataset over `f64`.
pub type ClientDataset64 = protocol::ClientDataset<f64>;
/// Released private summary over `f64`.
pub type PrivateRelease64 = protocol::PrivateRelease<f64>;
