//! Seeded index sampling: the Lipschitz-proportional distribution `Q` used by
//! the SVRG-type estimators and plain uniform sampling.
//!
//! All randomness flows through [`SeededRng`], a ChaCha8 stream keyed by a
//! 64-bit seed. Draws are taken from `u64` words only, so streams are
//! identical on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Deterministic random source for solvers and generators.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for a worker, derived from this generator's seed.
    pub fn substream(&self, worker: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(worker.wrapping_add(1));
        Self {
            seed: self.seed,
            inner: rng,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n >= 1);
        self.inner.random_range(0..n as u64) as usize
    }

    pub(crate) fn inner_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

/// The distribution `q_i = L_i / (n L̄)` with its cumulative table.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SamplingDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn q(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Index whose cumulative interval contains `u ∈ [0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.weights.len() - 1)
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        self.inverse_cdf(rng.next_f64())
    }
}

/// Builds `Q` from per-sample Lipschitz constants.
pub fn build_q(lipschitz: &[f64]) -> Result<SamplingDistribution> {
    if lipschitz.is_empty() {
        return Err(invalid("cannot build a distribution over zero samples"));
    }
    if let Some(l) = lipschitz.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid(format!("Lipschitz constants must be positive, got {l}")));
    }
    let n = lipschitz.len() as f64;
    let lbar = lipschitz.iter().sum::<f64>() / n;
    let weights: Vec<f64> = lipschitz.iter().map(|l| l / (n * lbar)).collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    *cumulative.last_mut().unwrap() = 1.0;
    Ok(SamplingDistribution { weights, cumulative })
}

pub fn sample_nonuniform(q: &SamplingDistribution, rng: &mut SeededRng) -> usize {
    q.sample(rng)
}

pub fn sample_uniform(n: usize, rng: &mut SeededRng) -> usize {
    rng.below(n)
}
