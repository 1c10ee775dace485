//! Differential-privacy primitives: norm clipping, Gaussian-mechanism noise
//! calibration, and budget accounting.
//!
//! Both protocol rounds release a statistic whose per-record sensitivity is
//! bounded by clipping every embedding to an ℓ2 ball of radius `c`. The
//! Gaussian mechanism then adds noise with standard deviation
//! `sensitivity · √(2 ln(1.25/δ)) / ε`; the two releases compose
//! sequentially, so their budgets add.

use nalgebra::DVector;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DpError {
    #[error("clip norm must be positive and finite, got {value}")]
    InvalidClipNorm { value: f64 },
    #[error("privacy budget must have ε > 0 and 0 < δ < 1, got ε = {epsilon}, δ = {delta}")]
    InvalidBudget { epsilon: f64, delta: f64 },
    #[error("noise scale must be finite and non-negative, got {value}")]
    InvalidScale { value: f64 },
    #[error("population size must be at least 1")]
    ZeroPopulation,
    #[error("cannot compose an empty budget sequence")]
    EmptyComposition,
}

/// Radius of the ℓ2 ball embeddings are clipped into. Positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipNorm<F: Real>(F);

impl<F: Real> ClipNorm<F> {
    pub fn new(c: F) -> Result<Self, DpError> {
        if !(c.is_finite() && c > F::zero()) {
            return Err(DpError::InvalidClipNorm { value: to_f64(c) });
        }
        Ok(Self(c))
    }

    pub fn get(self) -> F {
        self.0
    }
}

/// An (ε, δ) privacy budget. Always a *positive* amount: ε > 0, 0 < δ < 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, DpError> {
        let ok = epsilon.is_finite() && epsilon > 0.0 && delta > 0.0 && delta < 1.0;
        if !ok {
            return Err(DpError::InvalidBudget { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }

    pub fn delta(self) -> f64 {
        self.delta
    }

    /// Splits the budget evenly across two sequential releases.
    pub fn halved(self) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.epsilon / 2.0,
            delta: self.delta / 2.0,
        }
    }
}

/// Budget actually consumed by a run. Unlike [`PrivacyBudget`] this may be
/// zero (an audit run spends nothing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpentBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl SpentBudget {
    pub fn zero() -> Self {
        Self {
            epsilon: 0.0,
            delta: 0.0,
        }
    }
}

impl From<PrivacyBudget> for SpentBudget {
    fn from(b: PrivacyBudget) -> Self {
        Self {
            epsilon: b.epsilon,
            delta: b.delta,
        }
    }
}

/// Standard deviation of Gaussian noise. Finite and non-negative; zero means
/// "no noise" and is used by audit mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale<F: Real>(F);

impl<F: Real> NoiseScale<F> {
    pub fn new(std: F) -> Result<Self, DpError> {
        if !(std.is_finite() && std >= F::zero()) {
            return Err(DpError::InvalidScale { value: to_f64(std) });
        }
        Ok(Self(std))
    }

    pub fn zero() -> Self {
        Self(F::zero())
    }

    pub fn std(self) -> F {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == F::zero()
    }

    /// Multiplies the standard deviation by a non-negative factor, used when
    /// translating a per-aggregate scale into a per-contributor scale.
    pub fn scaled_by(self, factor: f64) -> Result<Self, DpError> {
        Self::new(self.0 * real::<F>(factor))
    }
}

/// How literally the noise scales are applied by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Per-contributor noise uses the scales as written: each sample's mean
    /// contribution gets the mean scale, each client's covariance
    /// contribution gets the covariance scale. Aggregate noise then grows
    /// with the number of contributors.
    Literal,
    /// Per-contributor noise is divided so the *aggregate* noise has exactly
    /// the calibrated standard deviation. This is the default and the mode
    /// whose end-to-end noise matches the privacy analysis.
    Calibrated,
    /// No noise at all. Nothing is spent and the run is flagged non-private;
    /// exists for testing and utility baselines only.
    Audit,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Literal => "literal",
            NoiseMode::Calibrated => "calibrated",
            NoiseMode::Audit => "audit",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(NoiseMode::Literal),
            "calibrated" => Ok(NoiseMode::Calibrated),
            "audit" => Ok(NoiseMode::Audit),
            other => Err(format!(
                "unknown noise mode `{other}` (expected literal, calibrated or audit)"
            )),
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Projects `v` into the ball of radius `c`: `v / max(1, ‖v‖/c)`. Vectors
/// already inside the ball are returned bit-identically.
pub fn clip<F: Real>(v: &DVector<F>, c: ClipNorm<F>) -> DVector<F> {
    let norm = v.norm();
    if norm <= c.get() {
        v.clone()
    } else {
        v * (c.get() / norm)
    }
}

/// `√(2 ln(1.25/δ)) / ε` — the Gaussian-mechanism multiplier shared by both
/// noise scales.
fn gaussian_factor(budget: PrivacyBudget) -> f64 {
    (2.0 * (1.25 / budget.delta()).ln()).sqrt() / budget.epsilon()
}

/// Noise standard deviation for the released mean: sensitivity `2c/n2`
/// times the Gaussian-mechanism factor.
pub fn mean_noise_scale<F: Real>(
    c: ClipNorm<F>,
    n2: u64,
    budget: PrivacyBudget,
) -> Result<NoiseScale<F>, DpError> {
    if n2 == 0 {
        return Err(DpError::ZeroPopulation);
    }
    let sensitivity = 2.0 * to_f64(c.get()) / n2 as f64;
    NoiseScale::new(real(sensitivity * gaussian_factor(budget)))
}

/// Noise standard deviation for each released covariance entry: sensitivity
/// `c²/n2` times the Gaussian-mechanism factor.
pub fn cov_noise_scale<F: Real>(
    c: ClipNorm<F>,
    n2: u64,
    budget: PrivacyBudget,
) -> Result<NoiseScale<F>, DpError> {
    if n2 == 0 {
        return Err(DpError::ZeroPopulation);
    }
    let c = to_f64(c.get());
    let sensitivity = c * c / n2 as f64;
    NoiseScale::new(real(sensitivity * gaussian_factor(budget)))
}

/// A vector of iid `N(0, std²)` draws. The underlying standard-normal
/// stream is sampled in `f64` regardless of `F`, so `f32` and `f64` runs
/// consume the RNG identically.
pub fn gaussian_noise_vector<F: Real>(
    dim: usize,
    scale: NoiseScale<F>,
    rng: &mut ChaCha20Rng,
) -> DVector<F> {
    if scale.is_zero() {
        return DVector::zeros(dim);
    }
    DVector::from_fn(dim, |_, _| {
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        scale.std() * real::<F>(z)
    })
}

/// A symmetric matrix of `N(0, std²)` noise: the upper triangle (including
/// the diagonal) is sampled and mirrored, so symmetric statistics stay
/// exactly symmetric after perturbation.
pub fn gaussian_noise_symmetric<F: Real>(
    dim: usize,
    scale: NoiseScale<F>,
    rng: &mut ChaCha20Rng,
) -> nalgebra::DMatrix<F> {
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    if scale.is_zero() {
        return m;
    }
    for i in 0..dim {
        for j in i..dim {
            let z: f64 = rand::Rng::sample(rng, StandardNormal);
            let v = scale.std() * real::<F>(z);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Sequential composition: budgets of consecutive releases on the same data
/// add in both components.
pub fn compose_sequential(budgets: &[PrivacyBudget]) -> Result<PrivacyBudget, DpError> {
    if budgets.is_empty() {
        return Err(DpError::EmptyComposition);
    }
    let epsilon = budgets.iter().map(|b| b.epsilon()).sum();
    let delta = budgets.iter().map(|b| b.delta()).sum();
    PrivacyBudget::new(epsilon, delta)
}
