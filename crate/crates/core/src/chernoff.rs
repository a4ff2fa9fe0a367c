//! Chernoff bounds on the probability that a wrong support scores at least as
//! well as the true one, and a Monte Carlo estimate of that probability.
//!
//! For a candidate `S` differing from the truth in `m = |U ∪ V|` positions,
//! each row contributes an independent term whose moment generating function
//! has a closed form, so the bound is a product over the two noise blocks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::cubic::real_roots;
use crate::error::{Error, Result};
use crate::model::{NoiseProfile, SparseSignal};
use crate::planner::Setting;
use crate::rng::{derive_trial_seed, CounterRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffQuery {
    pub setting: Setting,
    pub n1: usize,
    pub n2: usize,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    /// Size of the symmetric difference between candidate and true support.
    pub m: u64,
    /// Evaluation point; `None` selects the setting's closed-form choice.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    HighQuality,
    LowQuality,
}

impl ChernoffQuery {
    pub fn new(setting: Setting, n1: usize, n2: usize, sigma1_sq: f64, sigma2_sq: f64, m: u64) -> Self {
        Self {
            setting,
            n1,
            n2,
            sigma1_sq,
            sigma2_sq,
            m,
            theta: None,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    /// `1/(4 sigma2_sq)` for the agnostic bound, `1/4` for the informed one.
    pub fn default_theta(&self) -> f64 {
        match self.setting {
            Setting::Agnostic => 1.0 / (4.0 * self.sigma2_sq),
            Setting::Informed => 0.25,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or_else(|| self.default_theta())
    }

    fn variance(&self, block: Block) -> f64 {
        match block {
            Block::HighQuality => self.sigma1_sq,
            Block::LowQuality => self.sigma2_sq,
        }
    }

    fn count(&self, block: Block) -> usize {
        match block {
            Block::HighQuality => self.n1,
            Block::LowQuality => self.n2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma1_sq > 0.0 && self.sigma2_sq > 0.0) || !self.sigma1_sq.is_finite() || !self.sigma2_sq.is_finite() {
            return Err(Error::domain("noise variances must be positive and finite"));
        }
        if let Some(t) = self.theta {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::domain(format!("theta must be finite and >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

/// `m (-theta + 2 theta^2 sigma^2)` in the agnostic setting, with `theta`
/// replaced by `theta / sigma^2` in the informed one. The MGF is finite iff
/// this is below 1/2.
fn exponent_arg(setting: Setting, m: f64, theta: f64, var: f64) -> f64 {
    match setting {
        Setting::Agnostic => m * (-theta + 2.0 * theta * theta * var),
        Setting::Informed => m * (-theta + 2.0 * theta * theta) / var,
    }
}

/// Log MGF of one row's contribution; `+inf` outside the finiteness domain.
fn log_block_mgf(setting: Setting, m: f64, theta: f64, var: f64) -> f64 {
    let a = exponent_arg(setting, m, theta, var);
    if a >= 0.5 {
        f64::INFINITY
    } else {
        -0.5 * (-2.0 * a).ln_1p()
    }
}

/// MGF of one row of `block` at the query's theta, or `+inf`.
pub fn block_mgf(query: &ChernoffQuery, block: Block) -> Result<f64> {
    query.validate()?;
    Ok(log_block_mgf(query.setting, query.m as f64, query.theta(), query.variance(block)).exp())
}

/// Log of the product of all row MGFs at `theta`. Blocks without rows do not
/// contribute, including outside their own finiteness domain.
pub fn log_mgf_product(query: &ChernoffQuery, theta: f64) -> f64 {
    let m = query.m as f64;
    [Block::HighQuality, Block::LowQuality]
        .into_iter()
        .filter(|&b| query.count(b) > 0)
        .map(|b| query.count(b) as f64 * log_block_mgf(query.setting, m, theta, query.variance(b)))
        .sum()
}

/// Natural log of the Chernoff bound, capped at 0.
pub fn log_chernoff_bound(query: &ChernoffQuery) -> Result<f64> {
    query.validate()?;
    Ok(log_mgf_product(query, query.theta()).min(0.0))
}

/// Chernoff bound on the misranking probability, in `(0, 1]`.
///
/// With the default theta this is
/// `(1 + m(2σ₂²-σ₁²)/(4σ₂⁴))^(-n1/2) (1 + m/(4σ₂²))^(-n2/2)` (agnostic) or
/// `(1 + m/(4σ₁²))^(-n1/2) (1 + m/(4σ₂²))^(-n2/2)` (informed).
pub fn chernoff_bound(query: &ChernoffQuery) -> Result<f64> {
    Ok(log_chernoff_bound(query)?.exp())
}

/// Largest theta at which every nonempty block has a finite agnostic MGF.
pub fn agnostic_theta_max(query: &ChernoffQuery) -> f64 {
    let m = query.m as f64;
    [Block::HighQuality, Block::LowQuality]
        .into_iter()
        .filter(|&b| query.count(b) > 0)
        .map(|b| {
            let v = query.variance(b);
            (m + (m * m + 4.0 * m * v).sqrt()) / (4.0 * m * v)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Coefficients (cubic first) of the stationarity polynomial
/// `n1(4aθ-1)(1-2m(-θ+2θ²b)) + n2(4bθ-1)(1-2m(-θ+2θ²a))` with `a = σ₁²`,
/// `b = σ₂²`.
pub fn stationarity_cubic(query: &ChernoffQuery) -> [f64; 4] {
    let (a, b) = (query.sigma1_sq, query.sigma2_sq);
    let m = query.m as f64;
    let (n1, n2) = (query.n1 as f64, query.n2 as f64);
    [
        -16.0 * a * b * m * (n1 + n2),
        4.0 * m * (n1 * (2.0 * a + b) + n2 * (2.0 * b + a)),
        n1 * (4.0 * a - 2.0 * m) + n2 * (4.0 * b - 2.0 * m),
        -(n1 + n2),
    ]
}

/// Theta minimizing the agnostic Chernoff product, with the log bound there.
///
/// Candidates are the real roots of the stationarity cubic inside the joint
/// finiteness domain plus the relaxed choice `1/(4σ₂²)`; the one with the
/// smallest product wins. The log bound is convex in theta, so exactly one
/// candidate root is the true minimizer.
pub fn optimal_theta_agnostic(query: &ChernoffQuery) -> Result<(f64, f64)> {
    let mut q = *query;
    q.setting = Setting::Agnostic;
    q.theta = None;
    q.validate()?;
    if q.sigma1_sq > q.sigma2_sq {
        return Err(Error::domain("need sigma1_sq <= sigma2_sq"));
    }
    if q.m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    let relaxed = q.default_theta();
    let mut best = (relaxed, log_mgf_product(&q, relaxed));
    if q.n1 + q.n2 == 0 {
        return Ok(best);
    }
    let upper = agnostic_theta_max(&q);
    let c = stationarity_cubic(&q);
    for root in real_roots(c[0], c[1], c[2], c[3]) {
        if root > 0.0 && root < upper {
            let value = log_mgf_product(&q, root);
            if value < best.1 {
                best = (root, value);
            }
        }
    }
    Ok(best)
}

fn residual(y: f64, row: &[f64], cols: &[usize]) -> f64 {
    y - cols.iter().fold(0.0, |acc, &c| acc + row[c])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisrankEstimate {
    pub estimate: f64,
    /// Half-width of the exact (Clopper-Pearson) 95% interval.
    pub ci95: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Half-width of the Clopper-Pearson 95% interval for `hits` of `trials`.
pub fn clopper_pearson_half_width(hits: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let (k, n) = (hits as f64, trials as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("valid beta shape").inverse_cdf(0.025)
    };
    let upper = if hits == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("valid beta shape").inverse_cdf(0.975)
    };
    (upper - lower) / 2.0
}

/// Monte Carlo estimate of `P(loss(S) <= loss(S*))` under fresh design and
/// noise draws.
///
/// Only the columns in `S ∪ S*` influence either loss, so only those are
/// drawn. Trial `t` uses the seed `derive_trial_seed(seed, 0, t)` and the
/// result does not depend on the number of threads.
pub fn empirical_misrank(
    signal: &SparseSignal,
    noise: &NoiseProfile,
    candidate: &[usize],
    setting: Setting,
    trials: u64,
    seed: u64,
) -> Result<MisrankEstimate> {
    noise.validate()?;
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let mut cand = candidate.to_vec();
    cand.sort_unstable();
    cand.dedup();
    if cand.len() != candidate.len() || cand.len() != signal.sparsity() {
        return Err(Error::domain("candidate must hold s distinct indices"));
    }
    if cand.iter().any(|&j| j >= signal.dimension()) {
        return Err(Error::domain("candidate index out of range"));
    }
    if setting == Setting::Informed && !(noise.sigma1_sq > 0.0) {
        return Err(Error::domain("informed loss needs positive noise variances"));
    }

    // Local column layout over the union of both supports.
    let mut union: Vec<usize> = cand.iter().chain(signal.support()).copied().collect();
    union.sort_unstable();
    union.dedup();
    let local = |j: usize| union.binary_search(&j).expect("index in union");
    let truth_cols: Vec<(usize, f64)> = signal
        .support()
        .iter()
        .zip(signal.values())
        .map(|(&j, &v)| (local(j), v))
        .collect();
    let cand_cols: Vec<usize> = cand.iter().map(|&j| local(j)).collect();
    let truth_unit: Vec<usize> = signal.support().iter().map(|&j| local(j)).collect();

    let n = noise.n();
    let k = union.len();
    let sd = [noise.sigma1_sq.sqrt(), noise.sigma2_sq.sqrt()];
    let weight = [1.0 / noise.sigma1_sq, 1.0 / noise.sigma2_sq];

    let hits: u64 = (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n * k], vec![0.0; n]),
            |(x, w), t| {
                let trial_seed = derive_trial_seed(seed, 0, t);
                CounterRng::stream(trial_seed, Stream::Design).fill_normals(0, x);
                CounterRng::stream(trial_seed, Stream::Noise).fill_normals(0, w);
                let (mut cand_loss, mut truth_loss) = (0.0, 0.0);
                for i in 0..n {
                    let blk = usize::from(i >= noise.n1);
                    let row = &x[i * k..(i + 1) * k];
                    let y = truth_cols.iter().fold(0.0, |acc, &(c, v)| acc + row[c] * v) + sd[blk] * w[i];
                    let rc = residual(y, row, &cand_cols);
                    let rt = residual(y, row, &truth_unit);
                    let scale = match setting {
                        Setting::Agnostic => 1.0,
                        Setting::Informed => weight[blk],
                    };
                    cand_loss += scale * rc * rc;
                    truth_loss += scale * rt * rt;
                }
                u64::from(cand_loss <= truth_loss)
            },
        )
        .sum();

    Ok(MisrankEstimate {
        estimate: hits as f64 / trials as f64,
        ci95: clopper_pearson_half_width(hits, trials),
        hits,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn mgf_at_zero_is_one() {
        for setting in [Setting::Agnostic, Setting::Informed] {
            let q = ChernoffQuery::new(setting, 3, 4, 0.5, 2.0, 6).with_theta(0.0);
            for b in [Block::HighQuality, Block::LowQuality] {
                assert_eq!(block_mgf(&q, b).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn mgf_relaxed_point_and_domain() {
        let q = ChernoffQuery::new(Setting::Agnostic, 1, 1, 1.0, 4.0, 8);
        let got = block_mgf(&q, Block::LowQuality).unwrap();
        assert!(close(got, (1.0 + 8.0 / 16.0f64).powf(-0.5), 1e-15));
        let far = q.with_theta(10.0);
        assert_eq!(block_mgf(&far, Block::LowQuality).unwrap(), f64::INFINITY);
        // The high-quality domain contains the low-quality one.
        let edge = q.with_theta(agnostic_theta_max(&q) * 0.999);
        assert!(block_mgf(&edge, Block::HighQuality).unwrap().is_finite());
    }

    #[test]
    fn agnostic_bound_example() {
        let q = ChernoffQuery::new(Setting::Agnostic, 10, 10, 1.0, 4.0, 8);
        let expected = 1.875f64.powi(-5) * 1.5f64.powi(-5);
        assert!(close(chernoff_bound(&q).unwrap(), expected, 1e-13));
        assert!(close(expected, 5.683e-3, 1e-4));
        let empty = ChernoffQuery::new(Setting::Agnostic, 0, 0, 1.0, 4.0, 8);
        assert_eq!(chernoff_bound(&empty).unwrap(), 1.0);
    }

    #[test]
    fn informed_bound_closed_form() {
        let q = ChernoffQuery::new(Setting::Informed, 7, 5, 0.5, 3.0, 6);
        let expected = (1.0 + 6.0 / 2.0f64).powf(-3.5) * (1.0 + 6.0 / 12.0f64).powf(-2.5);
        assert!(close(chernoff_bound(&q).unwrap(), expected, 1e-13));
    }

    #[test]
    fn settings_coincide_for_equal_variances() {
        let a = ChernoffQuery::new(Setting::Agnostic, 6, 9, 2.5, 2.5, 4);
        let i = ChernoffQuery { setting: Setting::Informed, ..a };
        assert!(close(chernoff_bound(&a).unwrap(), chernoff_bound(&i).unwrap(), 1e-14));
    }

    #[test]
    fn cubic_root_homogeneous() {
        let q = ChernoffQuery::new(Setting::Agnostic, 5, 8, 2.0, 2.0, 6);
        let (theta, value) = optimal_theta_agnostic(&q).unwrap();
        assert!((theta - 1.0 / 8.0).abs() < 1e-9);
        assert!(close(value, log_chernoff_bound(&q).unwrap(), 1e-12));
        let c = stationarity_cubic(&q);
        let t = 1.0 / 8.0;
        assert!((((c[0] * t + c[1]) * t + c[2]) * t + c[3]).abs() < 1e-12);
    }

    #[test]
    fn cubic_root_improves_and_matches_grid() {
        let q = ChernoffQuery::new(Setting::Agnostic, 10, 10, 1.0, 4.0, 8);
        let (theta, value) = optimal_theta_agnostic(&q).unwrap();
        let relaxed = log_chernoff_bound(&q).unwrap();
        assert!(value < relaxed - 1e-6, "{value} vs {relaxed}");
        let upper = agnostic_theta_max(&q);
        let points = 100_000;
        let h = upper / (points as f64 + 1.0);
        let (grid_theta, grid_value) = (1..=points)
            .map(|k| {
                let t = k as f64 * h;
                (t, log_mgf_product(&q, t))
            })
            .fold((0.0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        assert!((theta - grid_theta).abs() <= h);
        assert!(value <= grid_value + 1e-12);
    }

    #[test]
    fn empty_block_does_not_restrict_domain() {
        let q = ChernoffQuery::new(Setting::Agnostic, 6, 0, 0.5, 8.0, 4);
        let (theta, value) = optimal_theta_agnostic(&q).unwrap();
        // Only the first block is present, so its own optimum 1/(4 σ₁²) applies.
        assert!((theta - 0.5).abs() < 1e-9, "{theta}");
        assert!(value <= log_chernoff_bound(&q).unwrap());
    }

    #[test]
    fn clopper_pearson_values() {
        // Known: 0 of 10 gives upper limit 0.3084971.
        assert!((clopper_pearson_half_width(0, 10) - 0.308_497_1 / 2.0).abs() < 1e-6);
        assert!((clopper_pearson_half_width(10, 10) - 0.308_497_1 / 2.0).abs() < 1e-6);
        // 5 of 10: [0.1870860, 0.8129140]
        assert!((clopper_pearson_half_width(5, 10) - (0.812_914_0 - 0.187_086_0) / 2.0).abs() < 1e-6);
    }

    #[test]
    fn misrank_degenerate_cases() {
        let sig = SparseSignal::binary(8, &[0, 1, 2]).unwrap();
        let noise = NoiseProfile::new(4, 4, 0.5, 2.0).unwrap();
        let same = empirical_misrank(&sig, &noise, &[0, 1, 2], Setting::Agnostic, 200, 3).unwrap();
        assert_eq!(same.estimate, 1.0);
        let quiet = NoiseProfile::new(4, 4, 0.0, 0.0).unwrap();
        let other = empirical_misrank(&sig, &quiet, &[0, 1, 5], Setting::Agnostic, 200, 3).unwrap();
        assert_eq!(other.estimate, 0.0);
    }

    #[test]
    fn misrank_is_deterministic_and_below_bound() {
        let sig = SparseSignal::binary(16, &(0..8).collect::<Vec<_>>()).unwrap();
        let noise = NoiseProfile::new(10, 10, 1.0, 4.0).unwrap();
        let cand: Vec<usize> = (4..12).collect();
        let a = empirical_misrank(&sig, &noise, &cand, Setting::Agnostic, 20_000, 11).unwrap();
        let b = empirical_misrank(&sig, &noise, &cand, Setting::Agnostic, 20_000, 11).unwrap();
        assert_eq!(a, b);
        let bound = chernoff_bound(&ChernoffQuery::new(Setting::Agnostic, 10, 10, 1.0, 4.0, 8)).unwrap();
        assert!(a.estimate <= bound + 3.0 * a.ci95);
    }
}
