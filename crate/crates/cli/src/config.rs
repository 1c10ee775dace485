//! Declarative run configuration and flag/file/environment resolution.
//!
//! A config document is TOML with the same knobs as the command-line flags;
//! flags win over the file, and the seed additionally falls back to the
//! `FRED_SEED` environment variable before defaulting to 0. Budgets are
//! validated here, before any data file is opened.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use fred_core::dp::{ClipNorm, NoiseMode, PrivacyBudget};
use fred_core::protocol::BudgetSplit;
use fred_core::secure_agg::FixedPointCodec;
use fred_core::ProtocolConfig64;

use crate::args::ProtocolFlags;
use crate::{config_err, CliError};

pub const SEED_ENV_VAR: &str = "FRED_SEED";

/// The config file contents. Every field is optional; unknown keys are
/// rejected so typos cannot silently change a run.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub public: Option<PathBuf>,
    pub clients: Option<String>,
    pub candidates: Option<Vec<PathBuf>>,
    pub release: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub clip: Option<f64>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub declared_n2: Option<u64>,
    pub scale_bits: Option<u32>,
    pub headroom_bits: Option<u32>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Loads the file named by the flags, or an empty config if none.
    pub fn from_flags(flags: &ProtocolFlags) -> Result<Self, CliError> {
        match &flags.config {
            Some(path) => Self::load(path),
            None => Ok(Self::default()),
        }
    }
}

/// Resolves the seed: flag, then config file, then `FRED_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: &RunConfig) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| config_err(format!("{SEED_ENV_VAR}=`{raw}` is not a valid seed"))),
        Err(_) => Ok(0),
    }
}

/// Builds the protocol configuration from flags plus config file, without
/// touching any data. Non-audit modes require a budget; audit mode accepts
/// one (it is echoed in reports) but spends nothing.
pub fn resolve_protocol(
    flags: &ProtocolFlags,
    file: &RunConfig,
) -> Result<ProtocolConfig64, CliError> {
    let mode_raw = flags
        .mode
        .clone()
        .or_else(|| file.mode.clone())
        .unwrap_or_else(|| "calibrated".to_string());
    let mode = NoiseMode::from_str(&mode_raw).map_err(config_err)?;

    let clip_value = flags
        .clip
        .or(file.clip)
        .ok_or_else(|| config_err("--clip is required"))?;
    let clip = ClipNorm::new(clip_value).map_err(|e| config_err(e.to_string()))?;

    let epsilon = flags.epsilon.or(file.epsilon);
    let delta = flags.delta.or(file.delta);
    let budgets = match (epsilon, delta) {
        (Some(e), Some(d)) => Some(BudgetSplit::even(
            PrivacyBudget::new(e, d).map_err(|e| config_err(e.to_string()))?,
        )),
        (None, None) => None,
        (Some(_), None) => return Err(config_err("--epsilon given without --delta")),
        (None, Some(_)) => return Err(config_err("--delta given without --epsilon")),
    };
    if mode != NoiseMode::Audit && budgets.is_none() {
        return Err(config_err(format!(
            "mode `{mode_raw}` requires --epsilon and --delta"
        )));
    }

    let seed = resolve_seed(flags.seed, file)?;
    let mut config =
        ProtocolConfig64::new(clip, mode, budgets, seed).map_err(CliError::from)?;

    if file.scale_bits.is_some() || file.headroom_bits.is_some() {
        let default = FixedPointCodec::default();
        let codec = FixedPointCodec::new(
            file.scale_bits.unwrap_or(default.scale_bits()),
            file.headroom_bits.unwrap_or(default.headroom_bits()),
        )
        .map_err(|e| config_err(e.to_string()))?;
        config = config.with_codec(codec);
    }
    if let Some(n2) = flags.declared_n2.or(file.declared_n2) {
        config = config.with_declared_n2(n2).map_err(CliError::from)?;
    }
    Ok(config)
}
