//! The two-round federated protocol.
//!
//! Round one privately estimates the mean of the distributed dataset; round
//! two centers every embedding at that estimate and privately aggregates a
//! covariance. Both rounds run over the simulated secure-aggregation layer,
//! so the orchestrator only ever holds masked shares and the final sums. The
//! released `(mean, covariance, n2)` triple is the *only* data-derived
//! artifact; any number of candidate datasets can then be ranked against it
//! without touching client data again.
//!
//! Client sample counts: the noise scales depend on the total count `n2`.
//! By default `n2` is declared up front (treated as public metadata); when
//! it is not declared, an extra count-only aggregation round runs first. In
//! both cases the mean round carries a count lane whose aggregate must match
//! the value the noise was calibrated for, otherwise the run aborts.

pub mod report;

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dp::{
    clip, cov_noise_scale, gaussian_noise_symmetric, gaussian_noise_vector, mean_noise_scale,
    compose_sequential, ClipNorm, DpError, NoiseMode, NoiseScale, PrivacyBudget, SpentBudget,
};
use crate::rng::derive_rng;
use crate::scalar::{real, to_f64, Real};
use crate::secure_agg::{
    generate_pairwise_masks, AggError, AggregationSession, ClientId, FixedPointCodec, MaskedShare,
};
use crate::stats::{
    empirical_summary, frechet_distance, nearest_psd, EmbeddingMatrix, FrechetValue,
    GaussianSummary, StatsError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("federation has no clients")]
    NoClients,
    #[error("duplicate client id `{0}`")]
    DuplicateClient(String),
    #[error("client `{0}` has no rows")]
    EmptyClient(String),
    #[error("client `{id}`: dimension {got} does not match federation dimension {expected}")]
    ClientDimMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("public dataset dimension {got} does not match federation dimension {expected}")]
    PublicDimMismatch { expected: usize, got: usize },
    #[error("declared sample count must be at least 1")]
    InvalidDeclaredCount,
    #[error("aggregated sample count {aggregated} does not match declared count {declared}")]
    CountMismatch { declared: u64, aggregated: u64 },
    #[error("modes other than audit require privacy budgets")]
    MissingBudgets,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error("secure aggregation: {0}")]
    Agg(#[from] AggError),
}

/// Privacy budgets for the two releases. Stored per mechanism so that the
/// reported total is the exact composition of what each round consumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit {
    pub mean: PrivacyBudget,
    pub cov: PrivacyBudget,
}

impl BudgetSplit {
    /// 50/50 split of the total across the two mechanisms.
    pub fn even(total: PrivacyBudget) -> Self {
        let half = total.halved();
        Self {
            mean: half,
            cov: half,
        }
    }

    pub fn new(mean: PrivacyBudget, cov: PrivacyBudget) -> Self {
        Self { mean, cov }
    }

    pub fn total(&self) -> PrivacyBudget {
        compose_sequential(&[self.mean, self.cov]).expect("two valid budgets compose")
    }
}

/// Everything a run needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig<F: Real> {
    pub clip: ClipNorm<F>,
    pub mode: NoiseMode,
    /// Required unless `mode` is `Audit`.
    pub budgets: Option<BudgetSplit>,
    pub seed: u64,
    pub codec: FixedPointCodec,
    /// Publicly known total sample count. `None` triggers a count round.
    pub declared_n2: Option<u64>,
}

impl<F: Real> ProtocolConfig<F> {
    pub fn new(
        clip: ClipNorm<F>,
        mode: NoiseMode,
        budgets: Option<BudgetSplit>,
        seed: u64,
    ) -> Result<Self, ProtocolError> {
        if mode != NoiseMode::Audit && budgets.is_none() {
            return Err(ProtocolError::MissingBudgets);
        }
        Ok(Self {
            clip,
            mode,
            budgets,
            seed,
            codec: FixedPointCodec::default(),
            declared_n2: None,
        })
    }

    pub fn with_codec(mut self, codec: FixedPointCodec) -> Self {
        self.codec = codec;
        self
    }

    pub fn with_declared_n2(mut self, n2: u64) -> Result<Self, ProtocolError> {
        if n2 == 0 {
            return Err(ProtocolError::InvalidDeclaredCount);
        }
        self.declared_n2 = Some(n2);
        Ok(self)
    }

    /// What a completed run consumes: the composed total, or nothing in
    /// audit mode.
    pub fn spent(&self) -> SpentBudget {
        match (self.mode, self.budgets) {
            (NoiseMode::Audit, _) => SpentBudget::zero(),
            (_, Some(split)) => split.total().into(),
            (_, None) => SpentBudget::zero(),
        }
    }
}

/// One client's private shard. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset<F: Real> {
    pub id: ClientId,
    pub data: EmbeddingMatrix<F>,
}

impl<F: Real> ClientDataset<F> {
    pub fn new(id: ClientId, data: EmbeddingMatrix<F>) -> Result<Self, ProtocolError> {
        if data.rows() == 0 {
            return Err(ProtocolError::EmptyClient(id.as_str().to_string()));
        }
        Ok(Self { id, data })
    }
}

/// The only artifact that leaves the protocol: a noisy mean, a PSD-projected
/// noisy covariance, and public metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateRelease<F: Real> {
    pub mean: DVector<F>,
    pub cov: DMatrix<F>,
    pub n2: u64,
    pub mode: NoiseMode,
    pub spent: SpentBudget,
    pub client_count: usize,
}

impl<F: Real> PrivateRelease<F> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The release viewed as a Gaussian summary for distance computations.
    pub fn summary(&self) -> GaussianSummary<F> {
        GaussianSummary::new(self.mean.clone(), self.cov.clone(), self.n2 as usize)
            .expect("release holds a square covariance matching its mean")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    Count,
    Mean,
    Covariance,
}

impl RoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundKind::Count => "count",
            RoundKind::Mean => "mean",
            RoundKind::Covariance => "covariance",
        }
    }
}

/// What the server retains from one aggregation session: masked shares only.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTranscript {
    pub kind: RoundKind,
    pub client_count: usize,
    pub lane_count: usize,
    pub shares: Vec<MaskedShare>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtocolTranscript {
    pub rounds: Vec<RoundTranscript>,
}

impl ProtocolTranscript {
    pub fn count_of(&self, kind: RoundKind) -> usize {
        self.rounds.iter().filter(|r| r.kind == kind).count()
    }
}

/// A client's round-one payload before masking: the sum of its clipped,
/// per-sample-noised embeddings, plus its sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanContribution<F: Real> {
    pub noised_sum: DVector<F>,
    pub count: u64,
}

/// Computes one client's mean-round contribution. `noise` is the
/// *per-sample* standard deviation (zero in audit mode); every sample adds
/// its own draw, so a client's total noise scales with its share of the
/// data.
pub fn client_mean_contribution<F: Real>(
    client: &ClientDataset<F>,
    clip_norm: ClipNorm<F>,
    noise: NoiseScale<F>,
    rng: &mut ChaCha20Rng,
) -> MeanContribution<F> {
    let d = client.data.dim();
    let mut sum = DVector::zeros(d);
    for i in 0..client.data.rows() {
        let row = client.data.sample(i).expect("row index in range");
        sum += clip(&row, clip_norm);
        if !noise.is_zero() {
            sum += gaussian_noise_vector(d, noise, rng);
        }
    }
    MeanContribution {
        noised_sum: sum,
        count: client.data.rows() as u64,
    }
}

/// Computes one client's covariance-round contribution: each row is clipped,
/// centered at the released mean, clipped again, and accumulated as an outer
/// product scaled by `1/n2`; symmetric per-client noise is added on top.
/// The result is exactly symmetric.
pub fn client_cov_contribution<F: Real>(
    client: &ClientDataset<F>,
    pmean: &DVector<F>,
    n2: u64,
    clip_norm: ClipNorm<F>,
    noise: NoiseScale<F>,
    rng: &mut ChaCha20Rng,
) -> Result<DMatrix<F>, ProtocolError> {
    let d = client.data.dim();
    if pmean.len() != d {
        return Err(ProtocolError::ClientDimMismatch {
            id: client.id.as_str().to_string(),
            expected: pmean.len(),
            got: d,
        });
    }
    let mut m = DMatrix::zeros(d, d);
    for r in 0..client.data.rows() {
        let row = client.data.sample(r).expect("row index in range");
        let clipped = clip(&row, clip_norm);
        let recentred = clip(&(clipped - pmean), clip_norm);
        for i in 0..d {
            for j in i..d {
                m[(i, j)] += recentred[i] * recentred[j];
            }
        }
    }
    let inv_n2 = F::one() / real::<F>(n2 as f64);
    for i in 0..d {
        for j in i..d {
            m[(i, j)] *= inv_n2;
            m[(j, i)] = m[(i, j)];
        }
    }
    if !noise.is_zero() {
        m += gaussian_noise_symmetric(d, noise, rng);
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct MeanRoundOutput<F: Real> {
    pub pmean: DVector<F>,
    pub n2: u64,
    /// Count round (if any) followed by the mean round.
    pub rounds: Vec<RoundTranscript>,
}

#[derive(Debug, Clone)]
pub struct CovRoundOutput<F: Real> {
    /// Decoded aggregate before PSD projection — the raw noisy covariance.
    pub raw: DMatrix<F>,
    /// PSD projection of `raw`; this is what gets released.
    pub pcov: DMatrix<F>,
    pub transcript: RoundTranscript,
}

fn validate_clients<F: Real>(
    clients: &[ClientDataset<F>],
) -> Result<(usize, u64), ProtocolError> {
    let first = clients.first().ok_or(ProtocolError::NoClients)?;
    let d = first.data.dim();
    let mut seen = std::collections::BTreeSet::new();
    let mut total = 0u64;
    for c in clients {
        if !seen.insert(&c.id) {
            return Err(ProtocolError::DuplicateClient(c.id.as_str().to_string()));
        }
        if c.data.dim() != d {
            return Err(ProtocolError::ClientDimMismatch {
                id: c.id.as_str().to_string(),
                expected: d,
                got: c.data.dim(),
            });
        }
        if c.data.rows() == 0 {
            return Err(ProtocolError::EmptyClient(c.id.as_str().to_string()));
        }
        total += c.data.rows() as u64;
    }
    Ok((d, total))
}

fn run_session<F: Real>(
    kind: RoundKind,
    payloads: Vec<(ClientId, Vec<F>)>,
    lane_count: usize,
    config: &ProtocolConfig<F>,
) -> Result<(Vec<i64>, RoundTranscript), ProtocolError> {
    let ids: Vec<ClientId> = payloads.iter().map(|(id, _)| id.clone()).collect();
    let mut mask_rng = derive_rng(config.seed, &["round", kind.as_str(), "masks"]);
    let masks = generate_pairwise_masks(&ids, lane_count, &mut mask_rng)?;
    let mut session = AggregationSession::new(kind.as_str(), &ids, lane_count)?;
    for (id, values) in &payloads {
        let share = MaskedShare::build(id.clone(), values, &masks[id], config.codec)?;
        session.submit(share)?;
    }
    let sum = session.finalize()?;
    let transcript = RoundTranscript {
        kind,
        client_count: ids.len(),
        lane_count,
        shares: session.transcript().into_iter().cloned().collect(),
    };
    Ok((sum, transcript))
}

fn decode_count(lane: i64, codec: FixedPointCodec) -> u64 {
    let v: f64 = codec.decode(lane);
    v.round().max(0.0) as u64
}

/// Count round: aggregates per-client sample counts through the same masked
/// machinery, for runs where `n2` was not declared. Counts are treated as
/// public metadata, matching how the noise calibration uses them.
pub fn run_count_round<F: Real>(
    clients: &[ClientDataset<F>],
    config: &ProtocolConfig<F>,
) -> Result<(u64, RoundTranscript), ProtocolError> {
    validate_clients(clients)?;
    let payloads: Vec<(ClientId, Vec<F>)> = clients
        .iter()
        .map(|c| (c.id.clone(), vec![real::<F>(c.data.rows() as f64)]))
        .collect();
    let (sum, transcript) = run_session(RoundKind::Count, payloads, 1, config)?;
    Ok((decode_count(sum[0], config.codec), transcript))
}

/// Round one: a differentially private mean. Every sample is clipped and
/// (outside audit mode) noised; clients aggregate locally and submit one
/// masked share carrying the sum plus a count lane. The aggregate count must
/// match the `n2` the noise was calibrated for.
pub fn run_mean_round<F: Real>(
    clients: &[ClientDataset<F>],
    config: &ProtocolConfig<F>,
) -> Result<MeanRoundOutput<F>, ProtocolError> {
    let (d, _total) = validate_clients(clients)?;
    let mut rounds = Vec::new();
    let n2 = match config.declared_n2 {
        Some(n) => n,
        None => {
            let (n, transcript) = run_count_round(clients, config)?;
            rounds.push(transcript);
            n
        }
    };
    if n2 == 0 {
        return Err(ProtocolError::InvalidDeclaredCount);
    }
    let sigma = per_sample_mean_noise(config, n2)?;
    let contributions: Vec<(ClientId, MeanContribution<F>)> = clients
        .par_iter()
        .map(|c| {
            let mut rng = derive_rng(config.seed, &["round", "mean", "client", c.id.as_str()]);
            (
                c.id.clone(),
                client_mean_contribution(c, config.clip, sigma, &mut rng),
            )
        })
        .collect();
    let payloads: Vec<(ClientId, Vec<F>)> = contributions
        .into_iter()
        .map(|(id, contrib)| {
            let mut values: Vec<F> = contrib.noised_sum.iter().copied().collect();
            values.push(real::<F>(contrib.count as f64));
            (id, values)
        })
        .collect();
    let (sum, transcript) = run_session(RoundKind::Mean, payloads, d + 1, config)?;
    rounds.push(transcript);
    let aggregated = decode_count(sum[d], config.codec);
    if aggregated != n2 {
        return Err(ProtocolError::CountMismatch {
            declared: n2,
            aggregated,
        });
    }
    let inv_n2 = F::one() / real::<F>(n2 as f64);
    let pmean = DVector::from_fn(d, |i, _| config.codec.decode::<F>(sum[i]) * inv_n2);
    Ok(MeanRoundOutput { pmean, n2, rounds })
}

/// Round two: a differentially private covariance of embeddings centered at
/// the released mean. Returns both the raw decoded aggregate and its PSD
/// projection.
pub fn run_cov_round<F: Real>(
    clients: &[ClientDataset<F>],
    pmean: &DVector<F>,
    n2: u64,
    config: &ProtocolConfig<F>,
) -> Result<CovRoundOutput<F>, ProtocolError> {
    let (d, _total) = validate_clients(clients)?;
    if pmean.len() != d {
        return Err(ProtocolError::PublicDimMismatch {
            expected: d,
            got: pmean.len(),
        });
    }
    if n2 == 0 {
        return Err(ProtocolError::InvalidDeclaredCount);
    }
    let sigma = per_client_cov_noise(config, n2, clients.len())?;
    let contributions: Vec<(ClientId, Result<DMatrix<F>, ProtocolError>)> = clients
        .par_iter()
        .map(|c| {
            let mut rng =
                derive_rng(config.seed, &["round", "covariance", "client", c.id.as_str()]);
            (
                c.id.clone(),
                client_cov_contribution(c, pmean, n2, config.clip, sigma, &mut rng),
            )
        })
        .collect();
    let lane_count = d * (d + 1) / 2;
    let mut payloads = Vec::with_capacity(clients.len());
    for (id, contrib) in contributions {
        let m = contrib?;
        let mut values = Vec::with_capacity(lane_count);
        for i in 0..d {
            for j in i..d {
                values.push(m[(i, j)]);
            }
        }
        payloads.push((id, values));
    }
    let (sum, transcript) = run_session(RoundKind::Covariance, payloads, lane_count, config)?;
    let mut raw = DMatrix::zeros(d, d);
    let mut at = 0;
    for i in 0..d {
        for j in i..d {
            let v = config.codec.decode::<F>(sum[at]);
            raw[(i, j)] = v;
            raw[(j, i)] = v;
            at += 1;
        }
    }
    let pcov = nearest_psd(&raw)?;
    Ok(CovRoundOutput {
        raw,
        pcov,
        transcript,
    })
}

fn per_sample_mean_noise<F: Real>(
    config: &ProtocolConfig<F>,
    n2: u64,
) -> Result<NoiseScale<F>, ProtocolError> {
    match config.mode {
        NoiseMode::Audit => Ok(NoiseScale::zero()),
        mode => {
            let budgets = config.budgets.ok_or(ProtocolError::MissingBudgets)?;
            let tau1 = mean_noise_scale(config.clip, n2, budgets.mean)?;
            let sigma = match mode {
                // Aggregate mean noise comes out at τ1/√n2.
                NoiseMode::Literal => tau1,
                // Aggregate mean noise comes out at exactly τ1.
                NoiseMode::Calibrated => tau1.scaled_by((n2 as f64).sqrt())?,
                NoiseMode::Audit => unreachable!(),
            };
            Ok(sigma)
        }
    }
}

fn per_client_cov_noise<F: Real>(
    config: &ProtocolConfig<F>,
    n2: u64,
    client_count: usize,
) -> Result<NoiseScale<F>, ProtocolError> {
    match config.mode {
        NoiseMode::Audit => Ok(NoiseScale::zero()),
        mode => {
            let budgets = config.budgets.ok_or(ProtocolError::MissingBudgets)?;
            let tau2 = cov_noise_scale(config.clip, n2, budgets.cov)?;
            let sigma = match mode {
                // Aggregate per-entry noise comes out at τ2·√(#clients).
                NoiseMode::Literal => tau2,
                // Aggregate per-entry noise comes out at exactly τ2.
                NoiseMode::Calibrated => tau2.scaled_by(1.0 / (client_count as f64).sqrt())?,
                NoiseMode::Audit => unreachable!(),
            };
            Ok(sigma)
        }
    }
}

/// A full private release: mean round (with count round if needed), then
/// covariance round. Fails atomically — any error aborts with no release.
pub fn run_release<F: Real>(
    clients: &[ClientDataset<F>],
    config: &ProtocolConfig<F>,
) -> Result<(PrivateRelease<F>, ProtocolTranscript), ProtocolError> {
    let mean_out = run_mean_round(clients, config)?;
    let cov_out = run_cov_round(clients, &mean_out.pmean, mean_out.n2, config)?;
    let mut rounds = mean_out.rounds;
    rounds.push(cov_out.transcript);
    let release = PrivateRelease {
        mean: mean_out.pmean,
        cov: cov_out.pcov,
        n2: mean_out.n2,
        mode: config.mode,
        spent: config.spent(),
        client_count: clients.len(),
    };
    Ok((release, ProtocolTranscript { rounds }))
}

/// Everything produced by one end-to-end run against a public dataset.
#[derive(Debug, Clone)]
pub struct FredRun<F: Real> {
    pub release: PrivateRelease<F>,
    pub transcript: ProtocolTranscript,
    pub distance: FrechetValue<F>,
    pub public_summary: GaussianSummary<F>,
}

/// End to end: summarize the public dataset, run both rounds once, return
/// the distance between the public summary and the private release.
pub fn run_fred<F: Real>(
    public: &EmbeddingMatrix<F>,
    clients: &[ClientDataset<F>],
    config: &ProtocolConfig<F>,
) -> Result<FredRun<F>, ProtocolError> {
    let (d, _) = validate_clients(clients)?;
    if public.dim() != d {
        return Err(ProtocolError::PublicDimMismatch {
            expected: d,
            got: public.dim(),
        });
    }
    let public_summary = empirical_summary(public)?;
    let (release, transcript) = run_release(clients, config)?;
    let distance = frechet_distance(&public_summary, &release.summary())?;
    Ok(FredRun {
        release,
        transcript,
        distance,
        public_summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate<F: Real> {
    pub name: String,
    pub value: FrechetValue<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCandidate {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOutcome<F: Real> {
    /// Ascending by raw distance; ties keep input order.
    pub ranked: Vec<RankedCandidate<F>>,
    pub skipped: Vec<SkippedCandidate>,
}

/// Ranks candidate datasets against an existing release. Touches no client
/// data and spends no budget — it only reads the release. Candidates that
/// cannot be summarized or measured (wrong dimension, empty) are skipped
/// with a recorded reason.
pub fn rank_candidates<F: Real>(
    candidates: &[(String, EmbeddingMatrix<F>)],
    release: &PrivateRelease<F>,
) -> RankOutcome<F> {
    let release_summary = release.summary();
    let mut ranked = Vec::new();
    let mut skipped = Vec::new();
    for (name, data) in candidates {
        let result = empirical_summary(data)
            .and_then(|s| frechet_distance(&s, &release_summary));
        match result {
            Ok(value) => ranked.push(RankedCandidate {
                name: name.clone(),
                value,
            }),
            Err(e) => skipped.push(SkippedCandidate {
                name: name.clone(),
                reason: e.to_string(),
            }),
        }
    }
    ranked.sort_by(|a, b| {
        to_f64(a.value.raw)
            .partial_cmp(&to_f64(b.value.raw))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    RankOutcome { ranked, skipped }
}
