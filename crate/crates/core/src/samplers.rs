//! Seedable random streams and the primitive laws everything else is built on.
//!
//! [`RngStream`] is a ChaCha8 generator keyed by `(seed, stream_id)`. The
//! stream id selects one of ChaCha's 2^64 independent streams, so replicate
//! `r` of an experiment can be given its own stream without any sequential
//! dependence on how many draws other replicates made.

use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{MirgError, Result};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of identifiers (experiment, configuration, replicate, ...)
/// into a single stream id.
pub fn stream_key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6D69_7267_5F73_7472_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A deterministic random stream identified by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A child stream that depends only on `(seed, stream_id, tag)`, never on
    /// how far this stream has been consumed.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, stream_key(&[self.stream_id, tag]))
    }

    /// Consumes one draw from this stream and returns a fresh child stream
    /// keyed by it. Used by operations that fan out into parallel chunks.
    pub fn fork(&mut self) -> RngStream {
        let id = self.rng.next_u64();
        RngStream::new(self.seed, stream_key(&[self.stream_id, id]))
    }

    /// Uniform draw on `(0, 1]`; safe to take logarithms of.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    #[inline]
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        poisson(lambda, self)
    }

    #[inline]
    pub fn pareto(&mut self, alpha: f64) -> f64 {
        pareto_quantile(alpha, self.open01())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Inverse CDF of the unit-scale Pareto law `P(X > x) = x^{-alpha}`, `x >= 1`.
#[inline]
pub fn pareto_quantile(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

/// Below this rate Poisson draws use sequential inversion.
const POISSON_INVERSION_LIMIT: f64 = 10.0;

/// Draws from `Poisson(lambda)`: inversion for small rates, PTRS
/// (transformed rejection with squeeze, Hörmann 1993) above.
pub fn poisson<R: RngCore + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < POISSON_INVERSION_LIMIT {
        poisson_inversion(lambda, rng.random::<f64>())
    } else {
        poisson_ptrs(lambda, rng)
    }
}

/// Smallest `k` with `F(k) > u` for `Poisson(lambda)`.
pub(crate) fn poisson_inversion(lambda: f64, u: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u >= cdf {
        k += 1;
        p *= lambda / k as f64;
        let next = cdf + p;
        // Tail underflow: the remaining mass is below f64 resolution.
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

fn poisson_ptrs<R: RngCore + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v = rng.random::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// The primitive laws used by the weight constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// Unit-scale Pareto with tail index `alpha`, support `[1, inf)`.
    Pareto { alpha: f64 },
    /// `(c2 - c1) X + c1` with `X ~ Beta(b1, b2)`.
    ShiftedBeta { b1: f64, b2: f64, c1: f64, c2: f64 },
    Uniform { lo: f64, hi: f64 },
    Poisson { lambda: f64 },
    Bernoulli { p: f64 },
    StdNormal,
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistSpec::Pareto { alpha } => alpha.is_finite() && alpha > 0.0,
            DistSpec::ShiftedBeta { b1, b2, c1, c2 } => {
                b1 > 0.0 && b2 > 0.0 && c1 >= 0.0 && c2 > c1 && c2.is_finite()
            }
            DistSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            DistSpec::Poisson { lambda } => lambda.is_finite() && lambda >= 0.0,
            DistSpec::Bernoulli { p } => (0.0..=1.0).contains(&p),
            DistSpec::StdNormal => true,
        };
        if ok {
            Ok(())
        } else {
            Err(MirgError::param(format!("invalid distribution parameters: {self:?}")))
        }
    }

    /// Validates once and returns a reusable sampler.
    pub fn sampler(&self) -> Result<DistSampler> {
        self.validate()?;
        let inner = match *self {
            DistSpec::Pareto { alpha } => SamplerKind::Pareto { alpha },
            DistSpec::ShiftedBeta { b1, b2, c1, c2 } => SamplerKind::ShiftedBeta {
                beta: Beta::new(b1, b2).map_err(|e| MirgError::param(e.to_string()))?,
                c1,
                width: c2 - c1,
            },
            DistSpec::Uniform { lo, hi } => SamplerKind::Uniform { lo, width: hi - lo },
            DistSpec::Poisson { lambda } => SamplerKind::Poisson { lambda },
            DistSpec::Bernoulli { p } => SamplerKind::Bernoulli { p },
            DistSpec::StdNormal => SamplerKind::StdNormal,
        };
        Ok(DistSampler { inner })
    }

    /// Lower and upper end of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DistSpec::Pareto { .. } => (1.0, f64::INFINITY),
            DistSpec::ShiftedBeta { c1, c2, .. } => (c1, c2),
            DistSpec::Uniform { lo, hi } => (lo, hi),
            DistSpec::Poisson { .. } => (0.0, f64::INFINITY),
            DistSpec::Bernoulli { .. } => (0.0, 1.0),
            DistSpec::StdNormal => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Pareto { alpha: f64 },
    ShiftedBeta { beta: Beta<f64>, c1: f64, width: f64 },
    Uniform { lo: f64, width: f64 },
    Poisson { lambda: f64 },
    Bernoulli { p: f64 },
    StdNormal,
}

/// A validated [`DistSpec`], ready to draw from.
#[derive(Clone, Debug)]
pub struct DistSampler {
    inner: SamplerKind,
}

impl Distribution<f64> for DistSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            SamplerKind::Pareto { alpha } => pareto_quantile(*alpha, 1.0 - rng.random::<f64>()),
            SamplerKind::ShiftedBeta { beta, c1, width } => c1 + width * beta.sample(rng),
            SamplerKind::Uniform { lo, width } => lo + width * rng.random::<f64>(),
            SamplerKind::Poisson { lambda } => poisson(*lambda, rng) as f64,
            SamplerKind::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            SamplerKind::StdNormal => rng.sample(StandardNormal),
        }
    }
}

/// `n` iid draws from `dist`.
pub fn sample(dist: &DistSpec, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let sampler = dist.sampler()?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

/// Exact pmf of a sum of independent Bernoulli(p_i) variables by sequential
/// convolution. Entry `k` is `P(S = k)`.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MirgError::param(format!(
            "Bernoulli probability {bad} outside [0, 1]"
        )));
    }
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(1.0);
    for &p in probs {
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    Ok(pmf)
}
