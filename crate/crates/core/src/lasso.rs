//! Lasso in the agnostic setting.
//!
//! Solves `min_beta (1/(2n)) ||Y - X beta||^2 + lambda ||beta||_1` by cyclic
//! coordinate descent, and evaluates the primal-dual witness that decides
//! whether some Lasso solution has the signed support of the truth.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MixedDataset, SparseSignal, DEFAULT_ZERO_TOL};
use crate::planner::n_alg;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_NOISE_MARGIN: f64 = 0.1;
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Convergence when a full sweep changes no coordinate by `tol` or more.
    pub tol: f64,
    /// Maximum number of sweeps.
    pub max_iter: usize,
    pub zero_tol: f64,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::domain("tol and max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Objective after every sweep.
    pub objective_trace: Vec<f64>,
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `(1/(2n)) ||y - X beta||^2 + lambda ||beta||_1`, from scratch.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let b = DVector::from_column_slice(beta);
    let r = y - x * b;
    r.norm_squared() / (2.0 * n) + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn solve_lasso(dataset: &MixedDataset, config: &LassoConfig) -> Result<LassoSolution> {
    solve_lasso_xy(&dataset.x, &dataset.y, config)
}

/// Cyclic coordinate descent with exact soft-threshold coordinate updates.
///
/// Sweeps alternate between the full coordinate set and the current nonzero
/// set: after a full sweep that has not converged, active-set sweeps run until
/// they settle, then a full sweep re-checks every coordinate. Every sweep
/// counts toward `max_iter`, and only a full sweep can declare convergence.
pub fn solve_lasso_xy(x: &DMatrix<f64>, y: &DVector<f64>, config: &LassoConfig) -> Result<LassoSolution> {
    config.validate()?;
    let (n, p) = x.shape();
    if n == 0 || p == 0 || y.len() != n {
        return Err(Error::data(format!(
            "design is {n} x {p} but Y has {} entries",
            y.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::data("lasso inputs contain non-finite values"));
    }

    let nf = n as f64;
    let lambda = config.lambda;
    let cols = x.as_slice();
    let col = |j: usize| &cols[j * n..(j + 1) * n];
    let curvature: Vec<f64> = (0..p).map(|j| col(j).iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let mut beta = vec![0.0; p];
    let mut r: Vec<f64> = y.iter().copied().collect();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let objective_of = |r: &[f64], beta: &[f64]| {
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf) + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
    };

    let sweep = |indices: &mut dyn Iterator<Item = usize>, beta: &mut [f64], r: &mut [f64]| -> f64 {
        let mut max_change: f64 = 0.0;
        for j in indices {
            let c = curvature[j];
            if c == 0.0 {
                continue;
            }
            let xj = col(j);
            let grad = xj.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / nf;
            let old = beta[j];
            let new = soft_threshold(grad + c * old, lambda) / c;
            let delta = new - old;
            if delta != 0.0 {
                for (ri, xi) in r.iter_mut().zip(xj) {
                    *ri -= delta * xi;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    };

    let record = |trace: &mut Vec<f64>, value: f64| {
        if let Some(&prev) = trace.last() {
            debug_assert!(
                value <= prev + 1e-12 * prev.abs().max(1.0),
                "lasso objective increased from {prev} to {value}"
            );
        }
        trace.push(value);
    };

    'outer: while iterations < config.max_iter {
        let change = sweep(&mut (0..p), &mut beta, &mut r);
        iterations += 1;
        record(&mut trace, objective_of(&r, &beta));
        if change < config.tol {
            converged = true;
            break;
        }
        loop {
            if iterations >= config.max_iter {
                break 'outer;
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            let change = sweep(&mut active.into_iter(), &mut beta, &mut r);
            iterations += 1;
            record(&mut trace, objective_of(&r, &beta));
            if change < config.tol {
                break;
            }
        }
    }

    let objective = lasso_objective(x, y, &beta, lambda);
    Ok(LassoSolution {
        beta,
        iterations,
        converged,
        objective,
        objective_trace: trace,
    })
}

fn check_schedule_inputs(sigma_avg_sq: f64, p: usize, s: usize, n: usize, rho: f64) -> Result<()> {
    if s == 0 || p <= s || n == 0 {
        return Err(Error::domain(format!("need p > s >= 1 and n >= 1 (p = {p}, s = {s}, n = {n})")));
    }
    if p - s < 2 {
        return Err(Error::domain("need p - s >= 2 so that ln(p - s) > 0"));
    }
    if !(rho > 0.0) {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    if !(sigma_avg_sq >= 0.0 && sigma_avg_sq.is_finite()) {
        return Err(Error::domain("sigma_avg_sq must be finite and nonnegative"));
    }
    Ok(())
}

/// Regularization `(sigma_avg_sq ln(p - s) / ((1 + s/rho^2) n))^(1/4)`.
pub fn lambda_schedule(sigma_avg_sq: f64, p: usize, s: usize, n: usize, rho: f64) -> Result<f64> {
    check_schedule_inputs(sigma_avg_sq, p, s, n, rho)?;
    let s_f = s as f64;
    let base = sigma_avg_sq * ((p - s) as f64).ln() / ((1.0 + s_f / (rho * rho)) * n as f64);
    Ok(base.sqrt().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScaling {
    /// `sigma_avg_sq (1 + s/rho^2) ln(p - s) / n`.
    pub ratio: f64,
    pub margin: f64,
    pub ok: bool,
}

/// Finite-size surrogate of the noise-scaling condition: the ratio must not
/// exceed `margin`.
pub fn noise_scaling_ok(sigma_avg_sq: f64, p: usize, s: usize, n: usize, rho: f64, margin: f64) -> Result<NoiseScaling> {
    check_schedule_inputs(sigma_avg_sq, p, s, n, rho)?;
    let ratio = sigma_avg_sq * (1.0 + s as f64 / (rho * rho)) * ((p - s) as f64).ln() / n as f64;
    Ok(NoiseScaling {
        ratio,
        margin,
        ok: ratio <= margin,
    })
}

/// The two quantities of the Lasso regularization condition:
/// `n lambda^2 / (sigma_avg_sq ln(p - s))`, which must grow without bound, and
/// `(lambda sqrt(s) + sqrt(sigma_avg_sq ln s / n)) / rho`, which must vanish.
pub fn lambda_condition_ratios(sigma_avg_sq: f64, p: usize, s: usize, n: usize, rho: f64, lambda: f64) -> Result<(f64, f64)> {
    check_schedule_inputs(sigma_avg_sq, p, s, n, rho)?;
    let nf = n as f64;
    let s_f = s as f64;
    let growth = nf * lambda * lambda / (sigma_avg_sq * ((p - s) as f64).ln());
    let vanish = (lambda * s_f.sqrt() + (sigma_avg_sq * s_f.ln() / nf).sqrt()) / rho;
    Ok((growth, vanish))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSizeVerdict {
    /// `n < (1 - epsilon) n_alg`.
    BelowNecessity,
    /// `n > (1 + epsilon) n_alg`.
    AboveSufficiency,
    Gap,
}

pub fn classify_lasso_sample_size(n: usize, p: usize, s: usize, epsilon: f64) -> Result<SampleSizeVerdict> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let threshold = n_alg(p, s)?;
    let n = n as f64;
    Ok(if n < (1.0 - epsilon) * threshold {
        SampleSizeVerdict::BelowNecessity
    } else if n > (1.0 + epsilon) * threshold {
        SampleSizeVerdict::AboveSufficiency
    } else {
        SampleSizeVerdict::Gap
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessTolerances {
    /// Condition 1 requires the minimum on-support slack to exceed this.
    pub strict_margin: f64,
    /// Condition 2 allows off-support margins down to `-eq_tol`.
    pub eq_tol: f64,
    pub max_condition: f64,
}

impl Default for WitnessTolerances {
    fn default() -> Self {
        Self {
            strict_margin: 1e-9,
            eq_tol: 1e-9,
            max_condition: DEFAULT_MAX_CONDITION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktWitnessReport {
    /// Deviation of the restricted solution from the truth on the support.
    pub u: Vec<f64>,
    /// Subgradient candidates on the complement, scaled by `lambda`.
    pub v: Vec<f64>,
    /// `|beta*_i| - |U_i|`, support order.
    pub on_support_slack: Vec<f64>,
    /// `lambda - |V_j|`, complement in ascending index order.
    pub off_support_margin: Vec<f64>,
    pub condition1: bool,
    pub condition2: bool,
    pub recovery: bool,
    /// Some slack or margin lies within ten tolerances of zero.
    pub boundary: bool,
    pub condition_number: f64,
}

pub fn kkt_recovery_witness(dataset: &MixedDataset, truth: &SparseSignal, lambda: f64) -> Result<KktWitnessReport> {
    kkt_recovery_witness_with(dataset, truth, lambda, &WitnessTolerances::default())
}

/// Primal-dual witness for signed-support recovery.
///
/// With `G = X_S^T X_S`, `b = sign(beta*_S)` and `Z = Y - X beta*`:
///
/// ```text
/// U   = (G/n)^-1 (X_S^T Z / n - lambda b)
/// V_j = X_j^T ( X_S G^-1 lambda b + (I - P_S) Z / n ),   j not in S
/// ```
///
/// Recovery holds iff `|U_i| < |beta*_i|` on the support and
/// `|V_j| <= lambda` off it. Everything is computed from a thin SVD of
/// `X_S`, whose singular values also give the condition number.
pub fn kkt_recovery_witness_with(
    dataset: &MixedDataset,
    truth: &SparseSignal,
    lambda: f64,
    tol: &WitnessTolerances,
) -> Result<KktWitnessReport> {
    let (n, p) = (dataset.n(), dataset.p());
    let support = truth.support();
    let s = support.len();
    if truth.dimension() != p {
        return Err(Error::data(format!(
            "truth dimension {} does not match {p} design columns",
            truth.dimension()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if s >= n {
        return Err(Error::Degenerate(format!("witness needs s < n (s = {s}, n = {n})")));
    }

    let mut z = dataset.y.clone();
    for (&j, &v) in support.iter().zip(truth.values()) {
        z.axpy(-v, &dataset.x.column(j), 1.0);
    }

    let x_s = dataset.x.select_columns(support);
    let svd = x_s.svd(true, true);
    let left = svd.u.as_ref().expect("requested U");
    let right_t = svd.v_t.as_ref().expect("requested V^T");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition_number <= tol.max_condition) {
        return Err(Error::Degenerate(format!(
            "X_S is numerically rank deficient (condition number {condition_number:e})"
        )));
    }

    let nf = n as f64;
    let b = DVector::from_iterator(s, truth.values().iter().map(|v| v.signum()));
    let ut_z = left.transpose() * &z;
    let vt_b = right_t * &b;

    // U = V S^-1 U^T Z - n lambda V S^-2 V^T b
    let inner = DVector::from_fn(s, |k, _| ut_z[k] / sv[k] - nf * lambda * vt_b[k] / (sv[k] * sv[k]));
    let u_vec = right_t.transpose() * inner;

    // w = U S^-1 V^T (lambda b) + (Z - U U^T Z) / n
    let scaled = DVector::from_fn(s, |k, _| lambda * vt_b[k] / sv[k]);
    let w = left * scaled + (&z - left * &ut_z) / nf;

    let complement: Vec<usize> = (0..p).filter(|j| support.binary_search(j).is_err()).collect();
    let v_vec: Vec<f64> = complement.iter().map(|&j| dataset.x.column(j).dot(&w)).collect();

    let on_support_slack: Vec<f64> = truth
        .values()
        .iter()
        .zip(u_vec.iter())
        .map(|(beta, u)| beta.abs() - u.abs())
        .collect();
    let off_support_margin: Vec<f64> = v_vec.iter().map(|v| lambda - v.abs()).collect();

    let min_slack = on_support_slack.iter().copied().fold(f64::INFINITY, f64::min);
    let min_margin = off_support_margin.iter().copied().fold(f64::INFINITY, f64::min);
    let condition1 = min_slack > tol.strict_margin;
    let condition2 = min_margin >= -tol.eq_tol;
    let boundary = on_support_slack.iter().any(|v| v.abs() < 10.0 * tol.strict_margin)
        || off_support_margin.iter().any(|v| v.abs() < 10.0 * tol.eq_tol);

    Ok(KktWitnessReport {
        u: u_vec.iter().copied().collect(),
        v: v_vec,
        on_support_slack,
        off_support_margin,
        condition1,
        condition2,
        recovery: condition1 && condition2,
        boundary,
        condition_number,
    })
}
