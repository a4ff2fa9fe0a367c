//! Combinatorial support decoders over binary `s`-sparse candidates.
//!
//! The agnostic decoder minimizes `||Y - X 1_S||^2`; the informed decoder (the
//! maximum-likelihood estimator when the noise variances are known) minimizes
//! the variance-weighted residual `sum_i (Y_i - <X_i, 1_S>)^2 / sigma_i^2`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixedDataset;
use crate::planner::Setting;
use crate::rng::{fold, CounterRng, Stream};

/// Default limit on `C(p, s)` for the exhaustive scan.
pub const DEFAULT_CANDIDATE_CAP: u64 = 2_000_000;

/// Losses use compensated summation above this many rows.
const COMPENSATED_ROWS: usize = 10_000;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Sorted, zero-based.
    pub support: Vec<usize>,
    pub loss: f64,
    pub scanned: u64,
    pub exhaustive: bool,
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Evaluates the decoder objective for arbitrary supports of one dataset.
pub(crate) struct LossEvaluator<'a> {
    dataset: &'a MixedDataset,
    weights: Option<Vec<f64>>,
}

impl<'a> LossEvaluator<'a> {
    pub(crate) fn new(dataset: &'a MixedDataset, setting: Setting) -> Result<Self> {
        let weights = match setting {
            Setting::Agnostic => None,
            Setting::Informed => {
                let noise = &dataset.noise;
                if !(noise.sigma1_sq > 0.0 && noise.sigma2_sq > 0.0) {
                    return Err(Error::domain("informed loss needs positive noise variances"));
                }
                Some(noise.row_variances().into_iter().map(|v| 1.0 / v).collect())
            }
        };
        Ok(Self { dataset, weights })
    }

    /// Objective at a sorted, in-range support.
    pub(crate) fn loss(&self, support: &[usize]) -> f64 {
        let x = &self.dataset.x;
        let y = &self.dataset.y;
        let n = y.len();
        let term = |i: usize| {
            // Same summation order as synthesis, so noiseless data gives exactly 0.
            let fit = support.iter().fold(0.0, |acc, &j| acc + x[(i, j)]);
            let r = y[i] - fit;
            let sq = r * r;
            match &self.weights {
                Some(w) => w[i] * sq,
                None => sq,
            }
        };
        if n > COMPENSATED_ROWS {
            neumaier_sum((0..n).map(term))
        } else {
            (0..n).map(term).sum()
        }
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn validate_support(support: &[usize], p: usize) -> Result<Vec<usize>> {
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("support contains duplicate indices"));
    }
    if let Some(&bad) = sorted.iter().find(|&&j| j >= p) {
        return Err(Error::domain(format!("support index {bad} out of range for p = {p}")));
    }
    Ok(sorted)
}

/// Decoder objective at `support` (any order).
pub fn support_loss(dataset: &MixedDataset, support: &[usize], setting: Setting) -> Result<f64> {
    let sorted = validate_support(support, dataset.p())?;
    Ok(LossEvaluator::new(dataset, setting)?.loss(&sorted))
}

/// Total order used to pick the decoder output: loss first, then the
/// lexicographically smallest sorted support.
fn better(a_loss: f64, a_supp: &[usize], b_loss: f64, b_supp: &[usize]) -> bool {
    match a_loss.total_cmp(&b_loss) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a_supp < b_supp,
    }
}

/// Combination of colex rank `rank` among `s`-subsets.
fn colex_unrank(mut rank: u64, s: usize, p: usize) -> Vec<usize> {
    let mut out = vec![0; s];
    let mut upper = p;
    for i in (0..s).rev() {
        // Largest c < upper with C(c, i + 1) <= rank.
        let mut c = upper - 1;
        while binomial(c as u64, (i + 1) as u64) > rank {
            c -= 1;
        }
        out[i] = c;
        rank -= binomial(c as u64, (i + 1) as u64);
        upper = c;
    }
    out
}

/// Advances to the colex successor; false after the last combination.
fn colex_next(comb: &mut [usize], p: usize) -> bool {
    let s = comb.len();
    for i in 0..s {
        let limit = if i + 1 < s { comb[i + 1] } else { p };
        if comb[i] + 1 < limit {
            comb[i] += 1;
            for (k, c) in comb.iter_mut().enumerate().take(i) {
                *c = k;
            }
            return true;
        }
    }
    false
}

pub fn decode_exhaustive(dataset: &MixedDataset, s: usize, setting: Setting) -> Result<DecodeResult> {
    decode_exhaustive_capped(dataset, s, setting, DEFAULT_CANDIDATE_CAP)
}

/// Scans every `s`-subset in colex order. Work is split into fixed-size rank
/// ranges and reduced with [`better`], so the result does not depend on the
/// number of threads.
pub fn decode_exhaustive_capped(
    dataset: &MixedDataset,
    s: usize,
    setting: Setting,
    candidate_cap: u64,
) -> Result<DecodeResult> {
    let p = dataset.p();
    if s == 0 || s > p {
        return Err(Error::domain(format!("sparsity {s} must lie in 1..={p}")));
    }
    let total = binomial(p as u64, s as u64);
    if total > candidate_cap {
        return Err(Error::Resource(format!(
            "C({p}, {s}) = {total} candidates exceeds the exhaustive cap of {candidate_cap}; \
             use the local-search decoder instead"
        )));
    }
    let eval = LossEvaluator::new(dataset, setting)?;
    let chunks = total.div_ceil(CHUNK);

    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut comb = colex_unrank(start, s, p);
            let mut best_loss = eval.loss(&comb);
            let mut best_supp = comb.clone();
            for _ in start + 1..end {
                colex_next(&mut comb, p);
                let loss = eval.loss(&comb);
                if better(loss, &comb, best_loss, &best_supp) {
                    best_loss = loss;
                    best_supp.copy_from_slice(&comb);
                }
            }
            (best_loss, best_supp)
        })
        .reduce_with(|a, b| if better(b.0, &b.1, a.0, &a.1) { b } else { a })
        .expect("at least one candidate");

    Ok(DecodeResult {
        support: best.1,
        loss: best.0,
        scanned: total,
        exhaustive: true,
    })
}

/// Steepest-descent single-swap hill climbing from `restarts` random
/// starting supports. The returned support is a local optimum: no single swap
/// lowers the loss.
pub fn decode_local_search(
    dataset: &MixedDataset,
    s: usize,
    setting: Setting,
    restarts: usize,
    seed: u64,
) -> Result<DecodeResult> {
    let p = dataset.p();
    if s == 0 || s > p {
        return Err(Error::domain(format!("sparsity {s} must lie in 1..={p}")));
    }
    if restarts == 0 {
        return Err(Error::domain("local search needs at least one restart"));
    }
    let eval = LossEvaluator::new(dataset, setting)?;
    let base_key = CounterRng::stream(seed, Stream::Search).key();
    let mut scanned = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;

    for restart in 0..restarts {
        let start = CounterRng::from_key(fold(base_key, restart as u64)).subset(p, s);
        let (loss, supp, evals) = climb(&eval, start, p);
        scanned += evals;
        let replace = match &best {
            None => true,
            Some((bl, bs)) => better(loss, &supp, *bl, bs),
        };
        if replace {
            best = Some((loss, supp));
        }
    }
    let (loss, support) = best.expect("restarts >= 1");
    Ok(DecodeResult {
        support,
        loss,
        scanned,
        exhaustive: false,
    })
}

fn climb(eval: &LossEvaluator<'_>, mut current: Vec<usize>, p: usize) -> (f64, Vec<usize>, u64) {
    let mut current_loss = eval.loss(&current);
    let mut evals = 1u64;
    let mut neighbor = Vec::with_capacity(current.len());
    loop {
        let mut step: Option<(f64, Vec<usize>)> = None;
        for out_pos in 0..current.len() {
            for candidate in (0..p).filter(|j| current.binary_search(j).is_err()) {
                neighbor.clear();
                neighbor.extend(current.iter().enumerate().filter(|&(k, _)| k != out_pos).map(|(_, &j)| j));
                let at = neighbor.partition_point(|&j| j < candidate);
                neighbor.insert(at, candidate);
                let loss = eval.loss(&neighbor);
                evals += 1;
                let take = match &step {
                    None => true,
                    Some((bl, bs)) => better(loss, &neighbor, *bl, bs),
                };
                if take {
                    step = Some((loss, neighbor.clone()));
                }
            }
        }
        match step {
            Some((loss, supp)) if loss < current_loss => {
                current_loss = loss;
                current = supp;
            }
            _ => return (current_loss, current, evals),
        }
    }
}
