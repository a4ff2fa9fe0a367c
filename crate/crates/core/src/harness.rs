//! Seeded Monte Carlo sweeps over `(n1, n2)` grids and their outputs.
//!
//! Trial `t` of grid point `k` draws everything from the seed
//! `derive_trial_seed(master_seed, k, t)`: the true support (and Lasso signs)
//! from the signal stream, then the dataset. Records are collected in
//! `(point, trial)` order, so the output is a pure function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{binomial, decode_exhaustive_capped, decode_local_search, DEFAULT_CANDIDATE_CAP};
use crate::error::{Error, Result};
use crate::io::format_g17;
use crate::lasso::{lambda_schedule, solve_lasso, LassoConfig};
use crate::model::{
    generate_dataset_capped, sign_mismatches, signed_support_match, support_error, NoiseProfile, SparseSignal,
    DEFAULT_MAX_ENTRIES, DEFAULT_ZERO_TOL,
};
use crate::planner::{recovery_threshold, RegimeKind, RegimeSpec, Setting, ThresholdKind};
use crate::rng::{derive_trial_seed, CounterRng, Stream};

/// Counter offset of the Lasso sign draws within the signal stream; the
/// support draw uses counters `0..s`.
const SIGN_COUNTER_BASE: u64 = 1 << 40;
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecoderKind {
    AgnosticScan,
    #[serde(rename = "InformedMLE")]
    InformedMle,
    Lasso,
    LocalSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LambdaRule {
    /// `lambda_schedule(sigma_avg_sq, p, s, n, rho)` at each grid point.
    Schedule,
    Fixed(f64),
}

fn default_restarts() -> usize {
    4
}
fn default_cap() -> u64 {
    DEFAULT_CANDIDATE_CAP
}
fn default_zero_tol() -> f64 {
    DEFAULT_ZERO_TOL
}
fn default_max_entries() -> u64 {
    DEFAULT_MAX_ENTRIES
}
fn default_regime() -> RegimeKind {
    RegimeKind::Sublinear
}
fn default_setting() -> Setting {
    Setting::Agnostic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub decoder: DecoderKind,
    pub p: usize,
    pub s: usize,
    /// Magnitude of the Lasso signal entries.
    pub rho: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    /// `(n1, n2)` pairs.
    pub grid: Vec<(usize, usize)>,
    pub trials_per_point: u64,
    /// Combinatorial decoders succeed when `|Ŝ Δ S*| < 2 delta s`.
    pub delta: f64,
    pub lambda_rule: LambdaRule,
    pub master_seed: u64,
    #[serde(default = "default_regime")]
    pub regime: RegimeKind,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_setting")]
    pub local_search_setting: Setting,
    #[serde(default = "default_cap")]
    pub candidate_cap: u64,
    #[serde(default = "default_max_entries")]
    pub max_entries: u64,
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.grid.is_empty() {
            return bad("grid must not be empty".into());
        }
        if self.trials_per_point == 0 {
            return bad("trials_per_point must be at least 1".into());
        }
        if self.s == 0 || self.s >= self.p {
            return bad(format!("need 1 <= s < p (s = {}, p = {})", self.s, self.p));
        }
        if let Some(&(n1, n2)) = self.grid.iter().find(|&&(a, b)| a + b == 0) {
            return bad(format!("grid point ({n1}, {n2}) has no samples"));
        }
        NoiseProfile::new(1, 1, self.sigma1_sq, self.sigma2_sq).map_err(|e| Error::Config(e.to_string()))?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.zero_tol >= 0.0) {
            return bad("zero_tol must be nonnegative".into());
        }
        match self.decoder {
            DecoderKind::Lasso => {
                if !(self.rho > 0.0 && self.rho.is_finite()) {
                    return bad(format!("Lasso sweeps need rho > 0, got {}", self.rho));
                }
                match self.lambda_rule {
                    LambdaRule::Fixed(l) if !(l >= 0.0 && l.is_finite()) => {
                        return bad(format!("fixed lambda must be finite and >= 0, got {l}"));
                    }
                    LambdaRule::Schedule if self.p - self.s < 2 => {
                        return bad("the lambda schedule needs p - s >= 2".into());
                    }
                    _ => {}
                }
            }
            DecoderKind::AgnosticScan | DecoderKind::InformedMle => {
                let count = binomial(self.p as u64, self.s as u64);
                if count > self.candidate_cap {
                    return Err(Error::Resource(format!(
                        "C({}, {}) = {count} candidates exceed the cap of {}; use LocalSearch",
                        self.p, self.s, self.candidate_cap
                    )));
                }
                if self.decoder == DecoderKind::InformedMle && !(self.sigma1_sq > 0.0) {
                    return bad("InformedMLE needs positive noise variances".into());
                }
            }
            DecoderKind::LocalSearch => {
                if self.restarts == 0 {
                    return bad("restarts must be at least 1".into());
                }
                if self.local_search_setting == Setting::Informed && !(self.sigma1_sq > 0.0) {
                    return bad("informed local search needs positive noise variances".into());
                }
            }
        }
        let n_max = self.grid.iter().map(|&(a, b)| a + b).max().unwrap_or(0);
        let entries = (n_max as u64).saturating_mul(self.p as u64);
        if entries > self.max_entries {
            return Err(Error::Resource(format!(
                "design of {n_max} x {} exceeds the cap of {} entries",
                self.p, self.max_entries
            )));
        }
        Ok(())
    }

    fn regime_spec(&self) -> Result<RegimeSpec> {
        let spec = RegimeSpec {
            kind: self.regime,
            p: self.p,
            s: self.s,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub n1: usize,
    pub n2: usize,
    pub trial: u64,
    pub seed: u64,
    pub recovered: bool,
    /// `|Ŝ Δ S*|` for combinatorial decoders, sign mismatches for the Lasso.
    pub error_count: usize,
    pub wall_ms: f64,
    /// The decoder returned an error or did not converge.
    pub failed: bool,
}

/// True support and values for one trial.
pub fn trial_signal(config: &ExperimentConfig, seed: u64) -> Result<SparseSignal> {
    let rng = CounterRng::stream(seed, Stream::Signal);
    let support = rng.subset(config.p, config.s);
    match config.decoder {
        DecoderKind::Lasso => {
            let entries = support.iter().enumerate().map(|(k, &j)| {
                let negative = rng.u64_at(SIGN_COUNTER_BASE + k as u64) >> 63 == 1;
                (j, if negative { -config.rho } else { config.rho })
            });
            SparseSignal::new(config.p, entries)
        }
        _ => SparseSignal::binary(config.p, &support),
    }
}

struct Outcome {
    recovered: bool,
    error_count: usize,
}

fn run_trial(config: &ExperimentConfig, n1: usize, n2: usize, seed: u64) -> Result<Outcome> {
    let signal = trial_signal(config, seed)?;
    let noise = NoiseProfile::new(n1, n2, config.sigma1_sq, config.sigma2_sq)?;
    let dataset = generate_dataset_capped(&signal, &noise, seed, config.max_entries)?;
    let s = config.s;
    let combinatorial = |support: &[usize]| {
        let error_count = support_error(support, signal.support());
        Outcome {
            recovered: (error_count as f64) < 2.0 * config.delta * s as f64,
            error_count,
        }
    };
    match config.decoder {
        DecoderKind::AgnosticScan => Ok(combinatorial(
            &decode_exhaustive_capped(&dataset, s, Setting::Agnostic, config.candidate_cap)?.support,
        )),
        DecoderKind::InformedMle => Ok(combinatorial(
            &decode_exhaustive_capped(&dataset, s, Setting::Informed, config.candidate_cap)?.support,
        )),
        DecoderKind::LocalSearch => Ok(combinatorial(
            &decode_local_search(&dataset, s, config.local_search_setting, config.restarts, seed)?.support,
        )),
        DecoderKind::Lasso => {
            let lambda = match config.lambda_rule {
                LambdaRule::Fixed(l) => l,
                LambdaRule::Schedule => lambda_schedule(noise.sigma_avg_sq(), config.p, s, noise.n(), config.rho)?,
            };
            let solution = solve_lasso(&dataset, &LassoConfig::new(lambda))?;
            if !solution.converged {
                return Err(Error::Degenerate("coordinate descent did not converge".into()));
            }
            Ok(Outcome {
                recovered: signed_support_match(&solution.beta, &signal, config.zero_tol),
                error_count: sign_mismatches(&solution.beta, &signal, config.zero_tol),
            })
        }
    }
}

/// Runs every trial of every grid point on the current rayon pool.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = (0..config.grid.len())
        .flat_map(|k| (0..config.trials_per_point).map(move |t| (k, t)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(point, trial)| {
            let (n1, n2) = config.grid[point];
            let seed = derive_trial_seed(config.master_seed, point as u64, trial);
            let start = Instant::now();
            let outcome = run_trial(config, n1, n2, seed);
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let (recovered, error_count, failed) = match outcome {
                Ok(o) => (o.recovered, o.error_count, false),
                Err(_) => (false, 0, true),
            };
            TrialRecord {
                point,
                n1,
                n2,
                trial,
                seed,
                recovered,
                error_count,
                wall_ms,
                failed,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n1: usize,
    pub n2: usize,
    pub n: usize,
    pub trials: u64,
    pub recovered: u64,
    pub recovery_rate: f64,
    /// Wilson 95% half-width.
    pub ci95: f64,
    pub mean_error: f64,
    pub n_star: f64,
    pub n_inf: f64,
    pub n_alg: f64,
}

/// Half-width of the Wilson 95% score interval.
pub fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt()
}

/// One row per grid point, in grid order. Thresholds that are undefined for
/// the configured `(p, s)` are reported as NaN.
pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    let regime = config.regime_spec()?;
    let threshold = |kind| recovery_threshold(kind, &regime).unwrap_or(f64::NAN);
    let (n_star, n_inf, n_alg) = (
        threshold(ThresholdKind::NStar),
        threshold(ThresholdKind::NInf),
        threshold(ThresholdKind::NAlg),
    );
    let mut rows: Vec<SummaryRow> = config
        .grid
        .iter()
        .map(|&(n1, n2)| SummaryRow {
            n1,
            n2,
            n: n1 + n2,
            trials: 0,
            recovered: 0,
            recovery_rate: 0.0,
            ci95: 0.0,
            mean_error: 0.0,
            n_star,
            n_inf,
            n_alg,
        })
        .collect();
    let mut error_sums = vec![0u64; rows.len()];
    for r in records {
        let row = rows
            .get_mut(r.point)
            .ok_or_else(|| Error::data(format!("record for unknown grid point {}", r.point)))?;
        row.trials += 1;
        row.recovered += u64::from(r.recovered);
        error_sums[r.point] += r.error_count as u64;
    }
    for (row, errors) in rows.iter_mut().zip(error_sums) {
        if row.trials == 0 {
            return Err(Error::data(format!("grid point ({}, {}) has no trials", row.n1, row.n2)));
        }
        row.recovery_rate = row.recovered as f64 / row.trials as f64;
        row.ci95 = wilson_half_width(row.recovered, row.trials);
        row.mean_error = errors as f64 / row.trials as f64;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
}

pub const SUMMARY_HEADER: &str = "n1,n2,n,trials,recovered,recovery_rate,ci95,mean_error,n_star,n_inf,n_alg";
pub const TRIALS_HEADER: &str = "n1,n2,trial,seed,recovered,error_count,wall_ms,failed";

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n1,
            r.n2,
            r.n,
            r.trials,
            r.recovered,
            format_g17(r.recovery_rate),
            format_g17(r.ci95),
            format_g17(r.mean_error),
            format_g17(r.n_star),
            format_g17(r.n_inf),
            format_g17(r.n_alg)
        );
    }
    out
}

pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n1,
            r.n2,
            r.trial,
            r.seed,
            u8::from(r.recovered),
            r.error_count,
            format_g17(r.wall_ms),
            u8::from(r.failed)
        );
    }
    out
}

/// Recovery rate against `n` with dashed vertical lines at the finite
/// thresholds.
pub fn phase_svg(summary: &[SummaryRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let mut points: Vec<(f64, f64)> = summary.iter().map(|r| (r.n as f64, r.recovery_rate)).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let markers: Vec<(&str, f64)> = summary
        .first()
        .map(|r| vec![("n_star", r.n_star), ("n_inf", r.n_inf), ("n_alg", r.n_alg)])
        .unwrap_or_default()
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .collect();
    let x_max = points
        .iter()
        .map(|p| p.0)
        .chain(markers.iter().map(|m| m.1))
        .fold(1.0, f64::max);
    let sx = |x: f64| M + x / x_max * (W - 2.0 * M);
    let sy = |y: f64| H - M - y * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{M}" y1="{y0}" x2="{M}" y2="{M}" stroke="black"/>"#,
        y0 = H - M,
        x1 = W - M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">n</text><text x="12" y="{}" font-size="12">rate</text>"#,
        W / 2.0,
        H - 12.0,
        H / 2.0
    );
    for (name, v) in &markers {
        let x = sx(*v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{M}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/><text x="{:.2}" y="{:.2}" font-size="10">{name}</text>"#,
            H - M,
            x + 2.0,
            M + 10.0
        );
    }
    let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        path.join(" ")
    );
    for &(x, y) in &points {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the requested outputs into `out_dir` and returns their paths.
pub fn emit_outputs(
    summary: &[SummaryRow],
    records: &[TrialRecord],
    out_dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = Vec::new();
    let mut write = |name: &str, contents: String| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        manifest.push(path);
        Ok(())
    };
    if formats.contains(&OutputFormat::Csv) {
        write("summary.csv", summary_csv(summary))?;
        write("trials.csv", trials_csv(records))?;
    }
    if formats.contains(&OutputFormat::Svg) {
        write("phase.svg", phase_svg(summary))?;
    }
    Ok(manifest)
}
