//! Deterministic, stream-splittable random primitives.
//!
//! Every stochastic component draws from an [`RngStream`], a ChaCha20 generator
//! keyed by a 64-bit seed and positioned on one of its 2^64 independent streams.
//! Replications derive their stream ids with [`derive_stream_id`], so a run is
//! reproducible from `(seed, stream_id)` alone.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a stream id from an ordered list of labels.
///
/// The rule is `h = 0; for x in parts { h = mix64(h ^ mix64(x + GOLDEN_GAMMA)) }`
/// with wrapping addition, where `mix64` is the SplitMix64 finalizer and
/// `GOLDEN_GAMMA = 0x9e3779b97f4a7c15`. Bench replications use
/// `[cell_index, replication_index, component_tag]`.
pub fn derive_stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0u64, |h, &x| mix64(h ^ mix64(x.wrapping_add(GOLDEN_GAMMA))))
}

/// Component tags used when deriving per-replication streams.
pub mod tag {
    pub const PERTURBATION: u64 = 1;
    pub const SIM_PLUS: u64 = 2;
    pub const SIM_MINUS: u64 = 3;
    pub const SAMPLER: u64 = 4;
}

/// A seeded ChaCha20 generator on a fixed stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            spare_normal: None,
        }
    }

    /// A stream on the same seed whose id is derived from this stream's id and `parts`.
    pub fn substream(&self, parts: &[u64]) -> Self {
        let mut all = Vec::with_capacity(parts.len() + 1);
        all.push(self.stream_id);
        all.extend_from_slice(parts);
        Self::new(self.seed, derive_stream_id(&all))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        // 53 random bits centred in their cell: never 0, never 1.
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via the Box-Muller transform.
    ///
    /// Variates are produced in pairs; the second of each pair is cached and
    /// returned by the next call.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform01();
        let u2 = self.uniform01();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Exponential draw with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform01().ln() / rate
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform01() < p
    }

    /// Gamma(shape, scale 1) draw.
    ///
    /// Marsaglia-Tsang squeeze/rejection for `shape >= 1`; for `shape < 1` the
    /// boost `Gamma(shape + 1) * U^(1/shape)` is applied.
    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma shape must be positive and finite, got {shape}"
            )));
        }
        if shape < 1.0 {
            let g = self.gamma_marsaglia_tsang(shape + 1.0);
            let u = self.uniform01();
            return Ok(g * u.powf(1.0 / shape));
        }
        Ok(self.gamma_marsaglia_tsang(shape))
    }

    fn gamma_marsaglia_tsang(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform01();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Chi-squared draw with real degrees of freedom `df > 0`.
    pub fn chi_squared(&mut self, df: f64) -> Result<f64> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "chi-squared degrees of freedom must be positive and finite, got {df}"
            )));
        }
        Ok(2.0 * self.gamma(0.5 * df)?)
    }
}
