//! Seed-derived random streams and the samplers the simulations draw from.
//!
//! Every stream is a ChaCha8 generator keyed by a SplitMix64 expansion of the
//! master seed, with the ChaCha stream counter set to the stream id. The pair
//! `(master_seed, stream_id)` therefore fully determines the sample sequence,
//! on any platform, for a given build. Sub-streams for distinct purposes inside
//! one replicate are obtained with [`RngStream::child`], which re-keys from a
//! mix of the parent's identity so children never depend on how far the parent
//! has been advanced.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One step of SplitMix64 applied to `x`.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN_GAMMA);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    key
}

/// A deterministic random stream identified by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.master_seed == other.master_seed
            && self.stream_id == other.stream_id
            && self.rng == other.rng
    }
}

impl Eq for RngStream {}

/// Derives the stream for `(master_seed, stream_id)`.
pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    RngStream::derive(master_seed, stream_id)
}

impl RngStream {
    pub fn derive(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key_from_seed(master_seed));
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh sub-stream for a named purpose. Depends only on this stream's
    /// identity and `tag`, never on its current position.
    pub fn child(&self, tag: u64) -> Self {
        let parent = mix64(self.master_seed ^ mix64(self.stream_id ^ 0x5eed_c41d));
        Self::derive(parent, tag)
    }

    /// Gaussian draw with the given mean and standard deviation.
    pub fn gaussian(&mut self, mean: f64, sd: f64) -> Result<f64> {
        sample_gaussian(self, mean, sd)
    }

    pub fn beta(&mut self, a: f64, b: f64) -> Result<f64> {
        sample_beta(self, a, b)
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<u8> {
        sample_bernoulli(self, p)
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        random_permutation(self, n)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..bound`. `bound` must be positive.
    pub fn index(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    /// Bernoulli draw without validating `p`; callers guarantee `0 <= p <= 1`.
    #[inline]
    pub(crate) fn coin(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
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

pub fn sample_gaussian(stream: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    if !sd.is_finite() || sd < 0.0 {
        return Err(Error::InvalidParameter {
            name: "sd",
            reason: format!("standard deviation must be finite and non-negative, got {sd}"),
        });
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::InvalidParameter {
        name: "sd",
        reason: e.to_string(),
    })?;
    Ok(normal.sample(stream))
}

pub fn sample_beta(stream: &mut RngStream, a: f64, b: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("beta shape must be finite and positive, got {v}"),
            });
        }
    }
    let beta = Beta::new(a, b).map_err(|e| Error::InvalidParameter {
        name: "a",
        reason: e.to_string(),
    })?;
    Ok(beta.sample(stream))
}

pub fn sample_bernoulli(stream: &mut RngStream, p: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("probability must lie in [0, 1], got {p}"),
        });
    }
    Ok(u8::from(stream.coin(p)))
}

/// Uniform permutation of `0..n` by Fisher-Yates.
pub fn random_permutation(stream: &mut RngStream, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(stream);
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_samples(mut s: RngStream, n: usize) -> Vec<u64> {
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn same_identity_same_sequence() {
        assert_eq!(
            first_samples(derive_stream(42, 0), 100),
            first_samples(derive_stream(42, 0), 100)
        );
    }

    #[test]
    fn distinct_ids_differ() {
        let a = first_samples(derive_stream(42, 0), 4);
        let b = first_samples(derive_stream(42, 1), 4);
        assert_ne!(a, b);
        let c = first_samples(derive_stream(43, 0), 4);
        assert_ne!(a, c);
    }

    #[test]
    fn frozen_sequence_is_platform_independent() {
        // Frozen from this build; any change to the generator or seeding breaks it.
        let mut s = derive_stream(42, 7);
        let got: Vec<u64> = (0..3).map(|_| s.next_u64()).collect();
        let mut again = derive_stream(42, 7);
        let expected: Vec<u64> = (0..3).map(|_| again.next_u64()).collect();
        assert_eq!(got, expected);
        assert_eq!(got, FROZEN_42_7.to_vec());
    }

    const FROZEN_42_7: [u64; 3] = [16297336521391850705, 961533411149786202, 18306372297969352230];

    #[test]
    fn child_ignores_parent_position() {
        let parent = derive_stream(9, 3);
        let mut advanced = parent.clone();
        for _ in 0..10 {
            advanced.next_u64();
        }
        assert_eq!(
            first_samples(parent.child(5), 8),
            first_samples(advanced.child(5), 8)
        );
        assert_ne!(
            first_samples(parent.child(5), 8),
            first_samples(parent.child(6), 8)
        );
    }

    #[test]
    fn zero_sd_gaussian_is_mean() {
        let mut s = derive_stream(1, 1);
        assert_eq!(s.gaussian(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(s.gaussian(5.0, 0.0).unwrap(), 5.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut s = derive_stream(1, 1);
        assert!(s.gaussian(0.0, -1.0).is_err());
        assert!(s.beta(0.0, 1.0).is_err());
        assert!(s.beta(1.0, -2.0).is_err());
        assert!(s.bernoulli(1.5).is_err());
        assert!(s.bernoulli(-0.1).is_err());
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut s = derive_stream(3, 0);
        for _ in 0..1000 {
            assert_eq!(s.bernoulli(1.0).unwrap(), 1);
            assert_eq!(s.bernoulli(0.0).unwrap(), 0);
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut s = derive_stream(11, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.gaussian(0.0, 1.0).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.01, "sd {}", var.sqrt());
    }

    #[test]
    fn beta_moments_and_support() {
        let mut s = derive_stream(12, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| s.beta(2.0, 2.0).unwrap()).collect();
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // ab / ((a+b)^2 (a+b+1)) = 4 / (16 * 5)
        let closed_form = 2.0 * 2.0 / (4.0 * 4.0 * 5.0);
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - closed_form).abs() < 0.005, "var {var}");
    }

    #[test]
    fn bernoulli_rate() {
        let mut s = derive_stream(13, 0);
        let n = 1_000_000;
        let hits: u64 = (0..n).map(|_| u64::from(s.bernoulli(0.3).unwrap())).sum();
        assert!((hits as f64 / n as f64 - 0.3).abs() < 0.002);
    }

    #[test]
    fn small_permutations() {
        let mut s = derive_stream(14, 0);
        assert!(s.permutation(0).is_empty());
        assert_eq!(s.permutation(1), vec![0]);
    }

    #[test]
    fn permutation_of_three_is_uniform() {
        let mut s = derive_stream(15, 0);
        let draws = 600_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(s.permutation(3)).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for (perm, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() < 3.0 * se, "{perm:?}: {freq}");
        }
    }

    #[test]
    fn streams_uncorrelated() {
        let mut a = derive_stream(16, 0);
        let mut b = derive_stream(16, 1);
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (a.gaussian(0.0, 1.0).unwrap(), b.gaussian(0.0, 1.0).unwrap()))
            .collect();
        let (mx, my) = pairs
            .iter()
            .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
        let (mx, my) = (mx / n as f64, my / n as f64);
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in &pairs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let r = sxy / (sxx * syy).sqrt();
        // Under independence the correlation has standard error ~ 1/sqrt(n).
        assert!(r.abs() < 3.0 / (n as f64).sqrt(), "corr {r}");
    }
}
