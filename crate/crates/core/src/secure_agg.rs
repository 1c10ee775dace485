//! Simulated secure aggregation.
//!
//! Clients encode their real-valued contributions into fixed-point integers
//! and blind them with pairwise masks that cancel exactly when every share
//! of a session is summed. The simulator mimics the *server's view* of such
//! a deployment: the session state retains only masked shares, so inspecting
//! it reveals nothing about an individual client's values — only the
//! unmasked sum emerges, and only once all expected clients have submitted.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::rng::SeedableRng;
use crate::scalar::{real, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggError {
    #[error("fixed-point parameters invalid: scale {scale_bits} + headroom {headroom_bits} must leave at least one value bit (≤ 62) and scale must be ≥ 1")]
    InvalidCodec { scale_bits: u32, headroom_bits: u32 },
    #[error("value {value} exceeds the fixed-point range ±{limit}")]
    OutOfRange { value: f64, limit: f64 },
    #[error("value is not finite")]
    NonFinite,
    #[error("duplicate client id `{0}`")]
    DuplicateClientId(String),
    #[error("client `{0}` is not a member of this session")]
    UnknownClient(String),
    #[error("client `{0}` already submitted")]
    DuplicateSubmission(String),
    #[error("share has {got} lanes, session expects {expected}")]
    LaneCountMismatch { expected: usize, got: usize },
    #[error("session is not complete: {missing} of {expected} shares missing")]
    Incomplete { missing: usize, expected: usize },
    #[error("session already finalized")]
    AlreadyFinalized,
    #[error("session needs at least one client")]
    NoClients,
}

/// Stable client identifier. Ordering (lexicographic) fixes every
/// order-sensitive step of the simulation, so results cannot depend on hash
/// maps or scheduling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClientId(String);

impl ClientId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ClientId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Two's-complement fixed-point codec: a real `x` becomes
/// `round(x · 2^scale_bits)` and must stay within
/// `±2^(63 − scale_bits − headroom_bits)`. The headroom guarantees that the
/// *sum* over all clients cannot overflow the 64-bit lane even before masks
/// cancel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCodec {
    scale_bits: u32,
    headroom_bits: u32,
}

impl FixedPointCodec {
    pub const DEFAULT_SCALE_BITS: u32 = 24;
    pub const DEFAULT_HEADROOM_BITS: u32 = 16;

    pub fn new(scale_bits: u32, headroom_bits: u32) -> Result<Self, AggError> {
        if scale_bits == 0 || scale_bits + headroom_bits > 62 {
            return Err(AggError::InvalidCodec {
                scale_bits,
                headroom_bits,
            });
        }
        Ok(Self {
            scale_bits,
            headroom_bits,
        })
    }

    pub fn scale_bits(self) -> u32 {
        self.scale_bits
    }

    pub fn headroom_bits(self) -> u32 {
        self.headroom_bits
    }

    /// Largest representable magnitude, `2^(63 − scale − headroom)`.
    pub fn limit(self) -> f64 {
        ((63 - self.scale_bits - self.headroom_bits) as f64).exp2()
    }

    /// Worst-case absolute rounding error of one encode, `2^-(scale+1)`.
    pub fn quantum(self) -> f64 {
        0.5 / (self.scale_bits as f64).exp2()
    }

    pub fn encode<F: Real>(self, x: F) -> Result<i64, AggError> {
        let x = to_f64(x);
        if !x.is_finite() {
            return Err(AggError::NonFinite);
        }
        if x.abs() >= self.limit() {
            return Err(AggError::OutOfRange {
                value: x,
                limit: self.limit(),
            });
        }
        Ok((x * (self.scale_bits as f64).exp2()).round() as i64)
    }

    pub fn decode<F: Real>(self, v: i64) -> F {
        real(v as f64 / (self.scale_bits as f64).exp2())
    }

    pub fn encode_slice<F: Real>(self, xs: &[F]) -> Result<Vec<i64>, AggError> {
        xs.iter().map(|x| self.encode(*x)).collect()
    }

    pub fn decode_vec<F: Real>(self, vs: &[i64]) -> Vec<F> {
        vs.iter().map(|v| self.decode(*v)).collect()
    }
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SCALE_BITS, Self::DEFAULT_HEADROOM_BITS)
            .expect("default codec parameters are valid")
    }
}

/// Per-client additive masks that cancel exactly over the whole cohort.
///
/// For each unordered pair `(a, b)` with `a < b`, a pair seed drawn from
/// `rng` expands into a lane vector `m`; `a` adds `m`, `b` subtracts it
/// (both wrapping mod 2^64). Summing all clients' masks therefore yields
/// exactly zero per lane. Clients are processed in sorted order, so the
/// masks are a pure function of the RNG state, the id set and `lane_count`.
pub fn generate_pairwise_masks(
    clients: &[ClientId],
    lane_count: usize,
    rng: &mut ChaCha20Rng,
) -> Result<BTreeMap<ClientId, Vec<i64>>, AggError> {
    if clients.is_empty() {
        return Err(AggError::NoClients);
    }
    let mut sorted: Vec<&ClientId> = clients.iter().collect();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(AggError::DuplicateClientId(w[0].as_str().to_string()));
        }
    }
    let mut masks: BTreeMap<ClientId, Vec<i64>> = sorted
        .iter()
        .map(|c| ((*c).clone(), vec![0i64; lane_count]))
        .collect();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            let mut seed = [0u8; 32];
            rng.fill_bytes(&mut seed);
            let mut pair_rng = ChaCha20Rng::from_seed(seed);
            for lane in 0..lane_count {
                let m = pair_rng.next_u64() as i64;
                let a = masks.get_mut(sorted[i]).expect("present");
                a[lane] = a[lane].wrapping_add(m);
                let b = masks.get_mut(sorted[j]).expect("present");
                b[lane] = b[lane].wrapping_sub(m);
            }
        }
    }
    Ok(masks)
}

/// One client's blinded contribution: fixed-point lanes plus that client's
/// share of the pairwise masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedShare {
    pub client_id: ClientId,
    pub lanes: Vec<i64>,
}

impl MaskedShare {
    /// Encodes `values`, then blinds them with `mask` (wrapping add).
    pub fn build<F: Real>(
        client_id: ClientId,
        values: &[F],
        mask: &[i64],
        codec: FixedPointCodec,
    ) -> Result<Self, AggError> {
        if values.len() != mask.len() {
            return Err(AggError::LaneCountMismatch {
                expected: mask.len(),
                got: values.len(),
            });
        }
        let mut lanes = codec.encode_slice(values)?;
        for (lane, m) in lanes.iter_mut().zip(mask) {
            *lane = lane.wrapping_add(*m);
        }
        Ok(Self { client_id, lanes })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    /// Accepting shares.
    Open,
    /// Every expected client submitted; the sum has been released.
    Complete,
    /// Finalized without full participation; nothing was released.
    Failed,
}

/// Server-side state of one aggregation round.
///
/// The session never sees raw values or masks — only [`MaskedShare`]s. Its
/// retained state (the transcript) is exactly what a curious server would
/// have: blinded integers, useless in isolation.
#[derive(Debug, Clone)]
pub struct AggregationSession {
    session_id: String,
    lane_count: usize,
    expected: BTreeSet<ClientId>,
    shares: BTreeMap<ClientId, MaskedShare>,
    state: SessionState,
}

impl AggregationSession {
    pub fn new(
        session_id: impl Into<String>,
        expected: &[ClientId],
        lane_count: usize,
    ) -> Result<Self, AggError> {
        if expected.is_empty() {
            return Err(AggError::NoClients);
        }
        let mut set = BTreeSet::new();
        for c in expected {
            if !set.insert(c.clone()) {
                return Err(AggError::DuplicateClientId(c.as_str().to_string()));
            }
        }
        Ok(Self {
            session_id: session_id.into(),
            lane_count,
            expected: set,
            shares: BTreeMap::new(),
            state: SessionState::Open,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn submit(&mut self, share: MaskedShare) -> Result<(), AggError> {
        if self.state != SessionState::Open {
            return Err(AggError::AlreadyFinalized);
        }
        if !self.expected.contains(&share.client_id) {
            return Err(AggError::UnknownClient(share.client_id.as_str().to_string()));
        }
        if self.shares.contains_key(&share.client_id) {
            return Err(AggError::DuplicateSubmission(
                share.client_id.as_str().to_string(),
            ));
        }
        if share.lanes.len() != self.lane_count {
            return Err(AggError::LaneCountMismatch {
                expected: self.lane_count,
                got: share.lanes.len(),
            });
        }
        self.shares.insert(share.client_id.clone(), share);
        Ok(())
    }

    /// Sums all shares (wrapping) once everyone has submitted. On a partial
    /// session the state flips to `Failed` and nothing is released.
    pub fn finalize(&mut self) -> Result<Vec<i64>, AggError> {
        match self.state {
            SessionState::Open => {}
            _ => return Err(AggError::AlreadyFinalized),
        }
        if self.shares.len() != self.expected.len() {
            self.state = SessionState::Failed;
            return Err(AggError::Incomplete {
                missing: self.expected.len() - self.shares.len(),
                expected: self.expected.len(),
            });
        }
        let mut sum = vec![0i64; self.lane_count];
        for share in self.shares.values() {
            for (acc, lane) in sum.iter_mut().zip(&share.lanes) {
                *acc = acc.wrapping_add(*lane);
            }
        }
        self.state = SessionState::Complete;
        Ok(sum)
    }

    /// The server's retained view: masked shares only, in client-id order.
    pub fn transcript(&self) -> Vec<&MaskedShare> {
        self.shares.values().collect()
    }

    pub fn submitted_count(&self) -> usize {
        self.shares.len()
    }

    pub fn expected_count(&self) -> usize {
        self.expected.len()
    }
}
