//! Interchange formats: the run report and the persisted release.
//!
//! Field names are a stable contract consumed by external tooling; values
//! are plain `f64` regardless of the scalar the protocol ran with. All
//! structures serialize with a fixed field order, so identical runs produce
//! byte-identical documents.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dp::{NoiseMode, SpentBudget};
use crate::scalar::{real, to_f64, Real};
use crate::secure_agg::ClientId;
use crate::stats::{FrechetValue, StatsError};

use super::{PrivateRelease, ProtocolConfig, ProtocolTranscript};

/// Format version written into every report and release document.
pub const REPORT_VERSION: u32 = 1;

/// Echo of the run configuration. Budget fields are absent for audit runs
/// configured without budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub clip: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon_mean: Option<f64>,
    pub delta_mean: Option<f64>,
    pub epsilon_cov: Option<f64>,
    pub delta_cov: Option<f64>,
    pub seed: u64,
    pub scale_bits: u32,
    pub headroom_bits: u32,
    pub declared_n2: Option<u64>,
}

impl<F: Real> ProtocolConfig<F> {
    pub fn echo(&self) -> ConfigEcho {
        let split = self.budgets;
        let total = split.map(|s| s.total());
        ConfigEcho {
            clip: to_f64(self.clip.get()),
            epsilon: total.map(|t| t.epsilon()),
            delta: total.map(|t| t.delta()),
            epsilon_mean: split.map(|s| s.mean.epsilon()),
            delta_mean: split.map(|s| s.mean.delta()),
            epsilon_cov: split.map(|s| s.cov.epsilon()),
            delta_cov: split.map(|s| s.cov.delta()),
            seed: self.seed,
            scale_bits: self.codec.scale_bits(),
            headroom_bits: self.codec.headroom_bits(),
            declared_n2: self.declared_n2,
        }
    }
}

/// One ranked (or computed) candidate in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub name: String,
    pub raw: f64,
    pub clamped: f64,
    pub mean_term: f64,
    pub trace_term: f64,
}

impl CandidateReport {
    pub fn new<F: Real>(name: impl Into<String>, value: &FrechetValue<F>) -> Self {
        Self {
            name: name.into(),
            raw: to_f64(value.raw),
            clamped: to_f64(value.clamped),
            mean_term: to_f64(value.mean_term),
            trace_term: to_f64(value.trace_term),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub rounds: u32,
    pub client_count: u64,
}

impl TranscriptSummary {
    pub fn of(transcript: &ProtocolTranscript, client_count: usize) -> Self {
        Self {
            rounds: transcript.rounds.len() as u32,
            client_count: client_count as u64,
        }
    }
}

/// The report document a run emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredReport {
    pub version: u32,
    pub config: ConfigEcho,
    pub spent_budget: SpentBudget,
    pub n2: u64,
    pub per_candidate: Vec<CandidateReport>,
    pub transcript: TranscriptSummary,
    pub mode: String,
}

impl FredReport {
    pub fn new(
        config: ConfigEcho,
        spent_budget: SpentBudget,
        n2: u64,
        per_candidate: Vec<CandidateReport>,
        transcript: TranscriptSummary,
        mode: NoiseMode,
    ) -> Self {
        Self {
            version: REPORT_VERSION,
            config,
            spent_budget,
            n2,
            per_candidate,
            transcript,
            mode: mode.as_str().to_string(),
        }
    }
}

/// The persisted release: everything needed to rank more candidates later
/// without touching client data, including the spent budget and mode so an
/// audit release cannot masquerade as a private one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseFile {
    pub version: u32,
    pub config: ConfigEcho,
    pub spent_budget: SpentBudget,
    pub n2: u64,
    pub mode: String,
    pub dim: u32,
    pub client_count: u64,
    pub rounds: u32,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReleaseFileError {
    #[error("unsupported release version {0} (expected {REPORT_VERSION})")]
    Version(u32),
    #[error("unknown noise mode `{0}`")]
    Mode(String),
    #[error("release geometry invalid: {0}")]
    Geometry(#[from] StatsError),
    #[error("non-finite value in release")]
    NonFinite,
}

impl ReleaseFile {
    pub fn from_release<F: Real>(
        release: &PrivateRelease<F>,
        config: ConfigEcho,
        rounds: u32,
    ) -> Self {
        let dim = release.dim();
        Self {
            version: REPORT_VERSION,
            config,
            spent_budget: release.spent,
            n2: release.n2,
            mode: release.mode.as_str().to_string(),
            dim: dim as u32,
            client_count: release.client_count as u64,
            rounds,
            mean: release.mean.iter().map(|v| to_f64(*v)).collect(),
            cov: (0..dim)
                .map(|i| (0..dim).map(|j| to_f64(release.cov[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn into_release<F: Real>(&self) -> Result<PrivateRelease<F>, ReleaseFileError> {
        if self.version != REPORT_VERSION {
            return Err(ReleaseFileError::Version(self.version));
        }
        let mode: NoiseMode = self
            .mode
            .parse()
            .map_err(|_| ReleaseFileError::Mode(self.mode.clone()))?;
        let d = self.dim as usize;
        if self.mean.len() != d {
            return Err(StatsError::DimensionMismatch {
                expected: d,
                got: self.mean.len(),
            }
            .into());
        }
        for row in &self.cov {
            if row.len() != d {
                return Err(StatsError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                }
                .into());
            }
        }
        if self.cov.len() != d {
            return Err(StatsError::DimensionMismatch {
                expected: d,
                got: self.cov.len(),
            }
            .into());
        }
        let finite = self.mean.iter().all(|v| v.is_finite())
            && self.cov.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(ReleaseFileError::NonFinite);
        }
        let mean = DVector::from_fn(d, |i, _| real::<F>(self.mean[i]));
        let cov = DMatrix::from_fn(d, d, |i, j| real::<F>(self.cov[i][j]));
        Ok(PrivateRelease {
            mean,
            cov,
            n2: self.n2,
            mode,
            spent: self.spent_budget,
            client_count: self.client_count as usize,
        })
    }
}

/// Convenience used by front ends: a stable candidate name for a client id.
pub fn client_label(id: &ClientId) -> String {
    id.as_str().to_string()
}
