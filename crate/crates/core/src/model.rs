//! Two-block heterogeneous-noise linear model.
//!
//! `Y = X beta + Z` with `X` i.i.d. standard normal and `Z_i ~ N(0, sigma1_sq)`
//! on the first `n1` (high-quality) rows and `N(0, sigma2_sq)` on the remaining
//! `n2` rows. Indices are zero-based throughout the library.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{CounterRng, Stream};

/// Default zero tolerance for sign classification.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Refuse to materialize designs with more entries than this by default.
pub const DEFAULT_MAX_ENTRIES: u64 = 100_000_000;

pub const REGIME_HI: f64 = 10.0;
pub const REGIME_LO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    dimension: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    /// Builds a signal from `(index, value)` pairs. Indices must be distinct,
    /// below `dimension`, and every value nonzero and finite.
    pub fn new(dimension: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::domain("signal dimension must be positive"));
        }
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        if entries.is_empty() {
            return Err(Error::domain("signal support must be nonempty"));
        }
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::domain(format!("duplicate support index {}", w[0].0)));
            }
        }
        for &(i, v) in &entries {
            if i >= dimension {
                return Err(Error::domain(format!(
                    "support index {i} out of range for dimension {dimension}"
                )));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::domain(format!("support value at {i} must be finite and nonzero")));
            }
        }
        let (support, values) = entries.into_iter().unzip();
        Ok(Self {
            dimension,
            support,
            values,
        })
    }

    /// All-ones signal on `support`.
    pub fn binary(dimension: usize, support: &[usize]) -> Result<Self> {
        Self::new(dimension, support.iter().map(|&i| (i, 1.0)))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Minimum absolute value over the support.
    pub fn rho(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    /// True when every value is `1`, or every value is `+1`/`-1`.
    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0 || v == -1.0)
    }

    pub fn value_at(&self, index: usize) -> f64 {
        match self.support.binary_search(&index) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub n1: usize,
    pub n2: usize,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

impl NoiseProfile {
    pub fn new(n1: usize, n2: usize, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        let profile = Self {
            n1,
            n2,
            sigma1_sq,
            sigma2_sq,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Variances may be zero (noiseless sanity runs) but must satisfy
    /// `sigma1_sq <= sigma2_sq`, and the sample count must be positive.
    pub fn validate(&self) -> Result<()> {
        if self.n1 + self.n2 == 0 {
            return Err(Error::domain("noise profile needs n1 + n2 >= 1"));
        }
        for (name, v) in [("sigma1_sq", self.sigma1_sq), ("sigma2_sq", self.sigma2_sq)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if self.sigma1_sq > self.sigma2_sq {
            return Err(Error::domain(format!(
                "sigma1_sq ({}) must not exceed sigma2_sq ({})",
                self.sigma1_sq, self.sigma2_sq
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// `(n1 sigma1_sq + n2 sigma2_sq) / n`.
    pub fn sigma_avg_sq(&self) -> f64 {
        (self.n1 as f64 * self.sigma1_sq + self.n2 as f64 * self.sigma2_sq) / self.n() as f64
    }

    /// Noise variance of row `row`.
    #[inline]
    pub fn variance_of_row(&self, row: usize) -> f64 {
        if row < self.n1 {
            self.sigma1_sq
        } else {
            self.sigma2_sq
        }
    }

    /// Per-row variances, high-quality block first.
    pub fn row_variances(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.variance_of_row(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    /// `n x p` design; rows `0..n1` are the high-quality block.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub noise: NoiseProfile,
    pub signal_truth: Option<SparseSignal>,
    pub seed: u64,
}

impl MixedDataset {
    /// Assembles a dataset from parts, checking shapes and finiteness.
    pub fn from_parts(
        x: DMatrix<f64>,
        y: DVector<f64>,
        noise: NoiseProfile,
        signal_truth: Option<SparseSignal>,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        if x.nrows() != y.len() || x.nrows() != noise.n() {
            return Err(Error::data(format!(
                "shape mismatch: X has {} rows, Y has {} entries, noise profile has n = {}",
                x.nrows(),
                y.len(),
                noise.n()
            )));
        }
        if let Some(sig) = &signal_truth {
            if sig.dimension() != x.ncols() {
                return Err(Error::data(format!(
                    "signal dimension {} does not match {} design columns",
                    sig.dimension(),
                    x.ncols()
                )));
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::data("dataset contains non-finite values"));
        }
        Ok(Self {
            x,
            y,
            noise,
            signal_truth,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Realized noise `Y - X beta*`, when the truth is known.
    pub fn residual_noise(&self) -> Option<DVector<f64>> {
        let sig = self.signal_truth.as_ref()?;
        let mut z = self.y.clone();
        for (&j, &v) in sig.support().iter().zip(sig.values()) {
            z.axpy(-v, &self.x.column(j), 1.0);
        }
        Some(z)
    }
}

/// Synthesizes a dataset with the default memory cap.
pub fn generate_dataset(signal: &SparseSignal, noise: &NoiseProfile, seed: u64) -> Result<MixedDataset> {
    generate_dataset_capped(signal, noise, seed, DEFAULT_MAX_ENTRIES)
}

/// Synthesizes `Y = X beta + Z`.
///
/// `X[i, j]` is normal number `i * p + j` of the design stream and the noise
/// on row `i` is `sigma_i * W_i` with `W_i` normal number `i` of the noise
/// stream, so datasets that differ only in their variances share `X` and `W`.
/// `Y_i` accumulates the support terms in ascending index order, then adds the
/// noise.
pub fn generate_dataset_capped(
    signal: &SparseSignal,
    noise: &NoiseProfile,
    seed: u64,
    max_entries: u64,
) -> Result<MixedDataset> {
    noise.validate()?;
    let (n, p) = (noise.n(), signal.dimension());
    let entries = (n as u64).saturating_mul(p as u64);
    if entries > max_entries {
        return Err(Error::Resource(format!(
            "design of {n} x {p} = {entries} entries exceeds the cap of {max_entries}"
        )));
    }

    let design = CounterRng::stream(seed, Stream::Design);
    let mut row_major = vec![0.0; n * p];
    design.fill_normals(0, &mut row_major);
    let x = DMatrix::from_row_slice(n, p, &row_major);

    let noise_rng = CounterRng::stream(seed, Stream::Noise);
    let mut w = vec![0.0; n];
    noise_rng.fill_normals(0, &mut w);

    let sd1 = noise.sigma1_sq.sqrt();
    let sd2 = noise.sigma2_sq.sqrt();
    let y = DVector::from_fn(n, |i, _| {
        let row = &row_major[i * p..(i + 1) * p];
        let signal_part: f64 = signal
            .support()
            .iter()
            .zip(signal.values())
            .fold(0.0, |acc, (&j, &v)| acc + row[j] * v);
        let sd = if i < noise.n1 { sd1 } else { sd2 };
        signal_part + sd * w[i]
    });

    Ok(MixedDataset {
        x,
        y,
        noise: *noise,
        signal_truth: Some(signal.clone()),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    HighSnr,
    LowSnr2HighSnr1,
    LowSnr,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub snr: f64,
    pub snr1: f64,
    pub snr2: f64,
    pub sigma_avg_sq: f64,
    pub regime: Regime,
}

pub fn snr_report(signal: &SparseSignal, noise: &NoiseProfile) -> Result<SnrReport> {
    noise.validate()?;
    if noise.sigma1_sq <= 0.0 {
        return Err(Error::domain("SNR needs strictly positive noise variances"));
    }
    let s = signal.sparsity() as f64;
    let sigma_avg_sq = noise.sigma_avg_sq();
    let snr1 = s / noise.sigma1_sq;
    let snr2 = s / noise.sigma2_sq;
    Ok(SnrReport {
        snr: s / sigma_avg_sq,
        snr1,
        snr2,
        sigma_avg_sq,
        regime: classify_regime(snr1, snr2),
    })
}

/// Finite-size regime labels: cutoffs `REGIME_HI` / `REGIME_LO` are reporting
/// conventions only and never enter any formula.
pub fn classify_regime(snr1: f64, snr2: f64) -> Regime {
    if snr2 >= REGIME_HI {
        Regime::HighSnr
    } else if snr1 <= REGIME_LO {
        Regime::LowSnr
    } else if snr2 <= REGIME_LO && snr1 >= REGIME_HI {
        Regime::LowSnr2HighSnr1
    } else {
        Regime::Intermediate
    }
}

/// `|estimate Δ truth|`, the size of the symmetric difference.
pub fn support_error(estimate: &[usize], truth: &[usize]) -> usize {
    let a: BTreeSet<usize> = estimate.iter().copied().collect();
    let b: BTreeSet<usize> = truth.iter().copied().collect();
    a.symmetric_difference(&b).count()
}

#[inline]
pub fn sign_with_tol(x: f64, zero_tol: f64) -> i8 {
    if x.abs() <= zero_tol {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Number of coordinates whose sign (with `zero_tol`) differs from the truth.
pub fn sign_mismatches(estimate: &[f64], truth: &SparseSignal, zero_tol: f64) -> usize {
    assert_eq!(
        estimate.len(),
        truth.dimension(),
        "estimate length must equal signal dimension"
    );
    let dense = truth.to_dense();
    estimate
        .iter()
        .zip(&dense)
        .filter(|&(&e, &t)| sign_with_tol(e, zero_tol) != sign_with_tol(t, 0.0))
        .count()
}

pub fn signed_support_match(estimate: &[f64], truth: &SparseSignal, zero_tol: f64) -> bool {
    sign_mismatches(estimate, truth, zero_tol) == 0
}
