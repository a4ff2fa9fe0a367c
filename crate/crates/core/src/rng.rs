//! Counter-based random numbers.
//!
//! Every draw is a pure function of a 64-bit stream key and a 64-bit counter,
//! so any entry of a generated dataset can be reproduced without replaying the
//! stream, and parallel consumers never share state.
//!
//! The generator is SplitMix64 evaluated at an explicit position:
//!
//! ```text
//! z   = key + (counter + 1) * 0x9E3779B97F4A7C15      (wrapping)
//! z   = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9           (wrapping)
//! z   = (z ^ (z >> 27)) * 0x94D049BB133111EB           (wrapping)
//! out = z ^ (z >> 31)
//! ```
//!
//! Uniforms take the top 53 bits, `u = ((out >> 11) + 0.5) * 2^-53`, which lies
//! strictly inside (0, 1). Standard normals use Box–Muller on the counter pair
//! `(2k, 2k + 1)`: normal index `2k` is the cosine branch and `2k + 1` the sine
//! branch. Transcendentals come from `libm` so the bits do not depend on the
//! platform's math library.

use std::f64::consts::PI;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// Folds `value` into a running hash `h`: `mix64((h + GOLDEN_GAMMA) ^ value)`.
#[inline]
pub fn fold(h: u64, value: u64) -> u64 {
    mix64(h.wrapping_add(GOLDEN_GAMMA) ^ value)
}

/// Seed for trial `trial` at grid point `point` of a sweep.
///
/// `fold(fold(fold(0, master), point), trial)`.
pub fn derive_trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    fold(fold(fold(0, master), point), trial)
}

/// Named sub-streams of a dataset seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Design = 1,
    Noise = 2,
    Signal = 3,
    Search = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub const fn from_key(key: u64) -> Self {
        Self { key }
    }

    /// Stream `stream` of `seed`: key = `fold(fold(0, seed), stream)`.
    pub fn stream(seed: u64, stream: Stream) -> Self {
        Self::from_key(fold(fold(0, seed), stream as u64))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.u64_at(counter) >> 11) as f64 + 0.5) * SCALE
    }

    /// Standard normal number `index` of this stream.
    #[inline]
    pub fn normal_at(&self, index: u64) -> f64 {
        let pair = index & !1;
        let u1 = self.uniform_at(pair);
        let u2 = self.uniform_at(pair | 1);
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * PI * u2;
        if index & 1 == 0 {
            r * libm::cos(angle)
        } else {
            r * libm::sin(angle)
        }
    }

    /// Both normals of pair `pair` (indices `2 pair` and `2 pair + 1`).
    #[inline]
    pub fn normal_pair(&self, pair: u64) -> (f64, f64) {
        let u1 = self.uniform_at(2 * pair);
        let u2 = self.uniform_at(2 * pair + 1);
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * PI * u2;
        (r * libm::cos(angle), r * libm::sin(angle))
    }

    /// Fills `out` with normals `start, start + 1, ...`.
    pub fn fill_normals(&self, start: u64, out: &mut [f64]) {
        let mut idx = start;
        let mut i = 0;
        if idx & 1 == 1 && !out.is_empty() {
            out[0] = self.normal_at(idx);
            idx += 1;
            i = 1;
        }
        while i + 1 < out.len() {
            let (a, b) = self.normal_pair(idx / 2);
            out[i] = a;
            out[i + 1] = b;
            idx += 2;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.normal_at(idx);
        }
    }

    /// Integer in `0..bound` from position `counter` (Lemire multiply-high).
    #[inline]
    pub fn below_at(&self, counter: u64, bound: u64) -> u64 {
        ((self.u64_at(counter) as u128 * bound as u128) >> 64) as u64
    }

    /// Sorted uniformly random `k`-subset of `0..n` using counters `0..k`
    /// (partial Fisher–Yates).
    pub fn subset(&self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "subset size {k} exceeds population {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below_at(i as u64, (n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut out = pool[..k].to_vec();
        out.sort_unstable();
        out
    }
}
