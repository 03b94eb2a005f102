//! Seeded random streams.
//!
//! Every trial draws from a xoshiro256++ generator. Per-trial seeds are
//! derived from a master seed with SplitMix64, so a trial's randomness depends
//! only on `(master_seed, trial_index)` and never on scheduling order.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed for trial `index` under `master`. Distinct indices map to
    /// distinct seeds for a fixed master.
    pub fn child_seed(master: u64, index: u64) -> u64 {
        let base = SplitMix64::seed_from_u64(master).next_u64();
        SplitMix64::seed_from_u64(base ^ index).next_u64()
    }

    /// Ordered pair of distinct agents, uniform over all n(n-1) pairs.
    ///
    /// The responder is drawn from n-1 slots and shifted past the initiator,
    /// so no rejection loop is needed.
    #[inline]
    pub fn pair(&mut self, n: u32) -> (u32, u32) {
        debug_assert!(n >= 2);
        let i = self.inner.gen_range(0..n);
        let mut j = self.inner.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    }

    #[inline]
    pub fn below(&mut self, bound: u32) -> u32 {
        self.inner.gen_range(0..bound)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn below_u64(&mut self, bound: u64) -> u64 {
        self.inner.gen_range(0..bound)
    }

    /// Number of failures before the first success in Bernoulli trials with
    /// success probability `p` in (0, 1], by inversion.
    pub fn geometric_with(&mut self, p: f64) -> u64 {
        debug_assert!(p > 0.0 && p <= 1.0);
        if p >= 1.0 {
            return 0;
        }
        let u = ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let g = (u.ln() / (-p).ln_1p()).floor();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            g as u64
        }
    }
}

/// Checked form of [`RngStream::pair`].
pub fn schedule_step(n: usize, rng: &mut RngStream) -> Result<(usize, usize)> {
    if n < 2 || n > u32::MAX as usize {
        return Err(Error::InvalidPopulation(n));
    }
    let (i, j) = rng.pair(n as u32);
    Ok((i as usize, j as usize))
}
