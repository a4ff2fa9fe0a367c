//! Closed-form sample-size thresholds, sufficient conditions for combinatorial
//! recovery, and the Price of Quality.
//!
//! Both sufficient conditions are linear in the block sizes,
//! `n1 * alpha1 + n2 * alpha2 >= (1 + epsilon) * n_star`, with per-sample
//! log factors that depend on whether the decoder knows the noise variances.
//! Natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Whether the decoder ignores (agnostic) or uses (informed) per-sample noise
/// variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Agnostic,
    Informed,
}

/// `-x ln x - (1 - x) ln(1 - x)` on the open interval.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("binary entropy needs 0 < x < 1, got {x}")));
    }
    Ok(-x * x.ln() - (1.0 - x) * (-x).ln_1p())
}

/// Binary entropy on the closed interval, with the limit value 0 at 0 and 1.
pub fn binary_entropy_closed(x: f64) -> Result<f64> {
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    binary_entropy(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegimeKind {
    Sublinear,
    Linear { alpha: f64 },
}

/// Scaling regime used to select `n_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub kind: RegimeKind,
    pub p: usize,
    pub s: usize,
}

impl RegimeSpec {
    pub fn sublinear(p: usize, s: usize) -> Result<Self> {
        let spec = Self {
            kind: RegimeKind::Sublinear,
            p,
            s,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Linear regime with `s = round(alpha * p)`.
    pub fn linear(p: usize, alpha: f64) -> Result<Self> {
        let spec = Self {
            kind: RegimeKind::Linear { alpha },
            p,
            s: (alpha * p as f64).round() as usize,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.s == 0 {
            return Err(Error::domain("regime needs p >= 1 and s >= 1"));
        }
        match self.kind {
            RegimeKind::Sublinear if self.s >= self.p => Err(Error::domain(format!(
                "sublinear regime needs s < p (s = {}, p = {})",
                self.s, self.p
            ))),
            RegimeKind::Linear { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(Error::domain(format!("linear regime needs alpha in (0, 1), got {alpha}")))
            }
            RegimeKind::Linear { alpha } if (self.s as f64 - alpha * self.p as f64).abs() > 0.5 => {
                Err(Error::domain(format!(
                    "linear regime needs |s - alpha p| <= 0.5 (s = {}, alpha p = {})",
                    self.s,
                    alpha * self.p as f64
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// Sufficiency budget of the combinatorial decoders.
    NStar,
    /// Information-theoretic threshold `2 s ln(p/s) / ln s`.
    NInf,
    /// Lasso threshold `2 s ln(p - s) + s + 1`.
    NAlg,
}

pub fn recovery_threshold(kind: ThresholdKind, regime: &RegimeSpec) -> Result<f64> {
    regime.validate()?;
    let p = regime.p as f64;
    let s = regime.s as f64;
    match kind {
        ThresholdKind::NStar => match regime.kind {
            RegimeKind::Sublinear => Ok(2.0 * s * (p / s).ln()),
            RegimeKind::Linear { alpha } => Ok(2.0 * binary_entropy(alpha)? * p),
        },
        ThresholdKind::NInf => {
            if regime.s < 2 {
                return Err(Error::domain("n_inf needs s >= 2 (ln s must be positive)"));
            }
            Ok(2.0 * s * (p / s).ln() / s.ln())
        }
        ThresholdKind::NAlg => n_alg(regime.p, regime.s),
    }
}

/// `2 s ln(p - s) + s + 1`.
pub fn n_alg(p: usize, s: usize) -> Result<f64> {
    if s >= p {
        return Err(Error::domain(format!("n_alg needs s < p (s = {s}, p = {p})")));
    }
    let s_f = s as f64;
    Ok(2.0 * s_f * ((p - s) as f64).ln() + s_f + 1.0)
}

/// Agnostic per-sample factor `ln(1 + delta (2 vmax - v) s / (2 vmax^2))` for a
/// sample of variance `v` when the largest variance is `vmax`.
fn agnostic_term(variance: f64, max_variance: f64, delta_s: f64) -> f64 {
    (delta_s * (2.0 * max_variance - variance) / (2.0 * max_variance * max_variance)).ln_1p()
}

/// Informed per-sample factor `ln(1 + delta s / (2 v))`.
fn informed_term(variance: f64, delta_s: f64) -> f64 {
    (delta_s / (2.0 * variance)).ln_1p()
}

/// Per-sample coefficients `(alpha1, alpha2)` of the two-block condition.
pub fn coefficients(setting: Setting, sigma1_sq: f64, sigma2_sq: f64, s: usize, delta: f64) -> Result<(f64, f64)> {
    check_variances(sigma1_sq, sigma2_sq)?;
    check_delta(delta)?;
    if s == 0 {
        return Err(Error::domain("sparsity must be at least 1"));
    }
    let ds = delta * s as f64;
    assert!(2.0 * sigma2_sq - sigma1_sq > 0.0);
    Ok(match setting {
        Setting::Agnostic => (
            agnostic_term(sigma1_sq, sigma2_sq, ds),
            agnostic_term(sigma2_sq, sigma2_sq, ds),
        ),
        Setting::Informed => (informed_term(sigma1_sq, ds), informed_term(sigma2_sq, ds)),
    })
}

fn check_variances(sigma1_sq: f64, sigma2_sq: f64) -> Result<()> {
    if !(sigma1_sq > 0.0 && sigma1_sq.is_finite() && sigma2_sq.is_finite()) {
        return Err(Error::domain("noise variances must be positive and finite"));
    }
    if sigma1_sq > sigma2_sq {
        return Err(Error::domain(format!(
            "sigma1_sq ({sigma1_sq}) must not exceed sigma2_sq ({sigma2_sq})"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Noise layout a sufficiency check is evaluated for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum NoiseLayout {
    TwoBlock {
        n1: usize,
        n2: usize,
        sigma1_sq: f64,
        sigma2_sq: f64,
    },
    /// One variance per sample (squared singular values of the noise scale).
    GeneralSigma { variances: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyQuery {
    pub setting: Setting,
    pub layout: NoiseLayout,
    pub s: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub regime: RegimeSpec,
}

impl SufficiencyQuery {
    pub fn two_block(
        setting: Setting,
        n1: usize,
        n2: usize,
        sigma1_sq: f64,
        sigma2_sq: f64,
        delta: f64,
        epsilon: f64,
        regime: RegimeSpec,
    ) -> Self {
        Self {
            setting,
            layout: NoiseLayout::TwoBlock {
                n1,
                n2,
                sigma1_sq,
                sigma2_sq,
            },
            s: regime.s,
            delta,
            epsilon,
            regime,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckForm {
    Agnostic,
    Informed,
    GeneralSigmaAgnostic,
    GeneralSigmaInformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyCheck {
    pub setting: CheckForm,
    /// Per-sample factor of the smallest-variance samples.
    pub coeff1: f64,
    /// Per-sample factor of the largest-variance samples.
    pub coeff2: f64,
    /// Per-sample factors, only for the general-Sigma form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<f64>>,
    pub lhs: f64,
    pub n_star: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub holds: bool,
}

impl SufficiencyCheck {
    /// `(1 + epsilon) n_star`.
    pub fn rhs(&self) -> f64 {
        (1.0 + self.epsilon) * self.n_star
    }

    /// Left-hand side at real-valued block sizes (two-block forms).
    pub fn continuous_lhs(&self, n1: f64, n2: f64) -> f64 {
        n1 * self.coeff1 + n2 * self.coeff2
    }

    pub fn continuous_holds(&self, n1: f64, n2: f64) -> bool {
        self.continuous_lhs(n1, n2) >= self.rhs()
    }

    /// `coeff1 / coeff2`.
    pub fn price_of_quality(&self) -> f64 {
        self.coeff1 / self.coeff2
    }
}

pub fn check_sufficient(query: &SufficiencyQuery) -> Result<SufficiencyCheck> {
    if !(query.epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {}", query.epsilon)));
    }
    evaluate(query)
}

fn evaluate(query: &SufficiencyQuery) -> Result<SufficiencyCheck> {
    check_delta(query.delta)?;
    if !(query.epsilon >= 0.0 && query.epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be finite and nonnegative, got {}", query.epsilon)));
    }
    if query.s != query.regime.s {
        return Err(Error::domain(format!(
            "query sparsity {} differs from regime sparsity {}",
            query.s, query.regime.s
        )));
    }
    let n_star = recovery_threshold(ThresholdKind::NStar, &query.regime)?;
    let rhs = (1.0 + query.epsilon) * n_star;
    let ds = query.delta * query.s as f64;

    let (form, coeff1, coeff2, per_sample, lhs) = match &query.layout {
        NoiseLayout::TwoBlock {
            n1,
            n2,
            sigma1_sq,
            sigma2_sq,
        } => {
            let (a1, a2) = coefficients(query.setting, *sigma1_sq, *sigma2_sq, query.s, query.delta)?;
            let form = match query.setting {
                Setting::Agnostic => CheckForm::Agnostic,
                Setting::Informed => CheckForm::Informed,
            };
            (form, a1, a2, None, *n1 as f64 * a1 + *n2 as f64 * a2)
        }
        NoiseLayout::GeneralSigma { variances } => {
            if variances.is_empty() {
                return Err(Error::domain("general-Sigma check needs at least one sample variance"));
            }
            if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::domain("sample variances must be positive and finite"));
            }
            let vmax = variances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let vmin = variances.iter().copied().fold(f64::INFINITY, f64::min);
            let (form, term): (CheckForm, Box<dyn Fn(f64) -> f64>) = match query.setting {
                Setting::Agnostic => (
                    CheckForm::GeneralSigmaAgnostic,
                    Box::new(move |v| agnostic_term(v, vmax, ds)),
                ),
                Setting::Informed => (
                    CheckForm::GeneralSigmaInformed,
                    Box::new(move |v| informed_term(v, ds)),
                ),
            };
            let terms: Vec<f64> = variances.iter().map(|&v| term(v)).collect();
            let lhs = terms.iter().sum();
            (form, term(vmin), term(vmax), Some(terms), lhs)
        }
    };

    Ok(SufficiencyCheck {
        setting: form,
        coeff1,
        coeff2,
        per_sample,
        lhs,
        n_star,
        epsilon: query.epsilon,
        delta: query.delta,
        holds: lhs >= rhs,
    })
}

/// Price of Quality `alpha1 / alpha2`: low-quality samples worth one
/// high-quality sample in the sufficient condition.
pub fn price_of_quality(setting: Setting, sigma1_sq: f64, sigma2_sq: f64, s: usize, delta: f64) -> Result<f64> {
    let (a1, a2) = coefficients(setting, sigma1_sq, sigma2_sq, s, delta)?;
    Ok(a1 / a2)
}

/// Regime labels for the leading-order Price of Quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticRegime {
    /// `s >> sigma2_sq`.
    HighSnr2,
    /// `s << sigma2_sq`.
    LowSnr2,
    /// Both SNRs large.
    HighSnr,
    /// Both SNRs small (`s << sigma1_sq`).
    LowSnr,
    /// `sigma1_sq << s << sigma2_sq`.
    LowSnr2HighSnr1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoqAsymptote {
    pub value: f64,
    /// The formula holds only up to a constant factor.
    pub order_only: bool,
}

/// Leading-order Price of Quality in a scaling regime. The caller is
/// responsible for the regime premise.
pub fn poq_asymptotic(
    setting: Setting,
    regime: AsymptoticRegime,
    sigma1_sq: f64,
    sigma2_sq: f64,
    s: usize,
) -> Result<PoqAsymptote> {
    check_variances(sigma1_sq, sigma2_sq)?;
    let s_f = s as f64;
    let exact = |value| Ok(PoqAsymptote { value, order_only: false });
    use AsymptoticRegime::*;
    match (setting, regime) {
        (Setting::Agnostic, HighSnr2 | HighSnr) => exact(1.0),
        (Setting::Agnostic, LowSnr2 | LowSnr) => exact(2.0 - sigma1_sq / sigma2_sq),
        (Setting::Agnostic, LowSnr2HighSnr1) => Err(Error::domain(
            "no agnostic asymptote is available for the low-SNR2 / high-SNR1 regime",
        )),
        (Setting::Informed, LowSnr) => exact(sigma2_sq / sigma1_sq),
        (Setting::Informed, HighSnr) => {
            if sigma2_sq >= s_f {
                return Err(Error::domain(format!(
                    "high-SNR informed asymptote needs sigma2_sq < s (sigma2_sq = {sigma2_sq}, s = {s})"
                )));
            }
            exact((s_f / sigma1_sq).ln() / (s_f / sigma2_sq).ln())
        }
        (Setting::Informed, LowSnr2HighSnr1) => {
            if sigma1_sq >= s_f {
                return Err(Error::domain("low-SNR2 / high-SNR1 informed asymptote needs sigma1_sq < s"));
            }
            Ok(PoqAsymptote {
                value: (s_f / sigma1_sq).ln() / (s_f / sigma2_sq),
                order_only: true,
            })
        }
        (Setting::Informed, HighSnr2 | LowSnr2) => Err(Error::domain(
            "informed asymptotes are indexed by HighSnr, LowSnr or LowSnr2HighSnr1",
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub n1: usize,
    /// Smallest integer `n2` for which the condition holds.
    pub n2: usize,
    /// Real-valued `n2` solving the condition with equality (clamped at 0).
    pub n2_continuous: f64,
}

/// Minimal `n2` for each `n1` in `n1_grid`. The query's own block sizes are
/// ignored; its layout must be two-block. `epsilon = 0` is accepted here.
pub fn sample_frontier(template: &SufficiencyQuery, n1_grid: &[usize]) -> Result<Vec<FrontierPoint>> {
    if !matches!(template.layout, NoiseLayout::TwoBlock { .. }) {
        return Err(Error::domain("sample frontier needs a two-block noise layout"));
    }
    let base = evaluate(template)?;
    let (a1, a2) = (base.coeff1, base.coeff2);
    if !(a2 > 0.0) {
        return Err(Error::domain("frontier needs a positive low-quality coefficient"));
    }
    let rhs = base.rhs();
    let holds_at = |n1: usize, n2: usize| n1 as f64 * a1 + n2 as f64 * a2 >= rhs;

    Ok(n1_grid
        .iter()
        .map(|&n1| {
            let cont = ((rhs - n1 as f64 * a1) / a2).max(0.0);
            let mut n2 = cont.ceil() as usize;
            // Settle floating-point rounding against the check's own arithmetic.
            while !holds_at(n1, n2) {
                n2 += 1;
            }
            while n2 > 0 && holds_at(n1, n2 - 1) {
                n2 -= 1;
            }
            FrontierPoint {
                n1,
                n2,
                n2_continuous: cont,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn entropy_values() {
        assert!(close(binary_entropy(0.5).unwrap(), std::f64::consts::LN_2, 1e-15));
        assert_eq!(binary_entropy(0.1).unwrap(), binary_entropy(0.9).unwrap());
        // -0.25 ln 0.25 - 0.75 ln 0.75
        assert!(close(binary_entropy(0.25).unwrap(), 0.562_335_144_618_808_9, 1e-12));
        assert!(binary_entropy(0.0).is_err());
        assert!(binary_entropy(1.0).is_err());
        assert_eq!(binary_entropy_closed(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy_closed(1.0).unwrap(), 0.0);
    }

    #[test]
    fn thresholds() {
        let r = RegimeSpec::sublinear(1000, 10).unwrap();
        assert!(close(recovery_threshold(ThresholdKind::NInf, &r).unwrap(), 40.0, 1e-12));
        let r = RegimeSpec::sublinear(200, 5).unwrap();
        let expected = 10.0 * 195f64.ln() + 6.0;
        assert!(close(recovery_threshold(ThresholdKind::NAlg, &r).unwrap(), expected, 1e-12));
        assert!(close(expected, 58.73, 0.005));
        let r = RegimeSpec::linear(100, 0.5).unwrap();
        let v = recovery_threshold(ThresholdKind::NStar, &r).unwrap();
        assert!(close(v, 200.0 * std::f64::consts::LN_2, 1e-12));
        assert!(close(v, 138.629, 5e-4));
    }

    #[test]
    fn n_inf_rejects_unit_sparsity() {
        let r = RegimeSpec::sublinear(50, 1).unwrap();
        assert!(matches!(
            recovery_threshold(ThresholdKind::NInf, &r),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn regime_validation() {
        assert!(RegimeSpec::sublinear(10, 10).is_err());
        assert!(RegimeSpec::linear(10, 1.2).is_err());
        let bad = RegimeSpec {
            kind: RegimeKind::Linear { alpha: 0.5 },
            p: 10,
            s: 7,
        };
        assert!(bad.validate().is_err());
    }

    fn query(setting: Setting, n1: usize, n2: usize, s1: f64, s2: f64) -> SufficiencyQuery {
        SufficiencyQuery::two_block(setting, n1, n2, s1, s2, 0.5, 0.5, RegimeSpec::sublinear(100, 8).unwrap())
    }

    #[test]
    fn agnostic_coefficients() {
        let c = check_sufficient(&query(Setting::Agnostic, 10, 10, 1.0, 4.0)).unwrap();
        assert!(close(c.coeff1, 1.875f64.ln(), 1e-15));
        assert!(close(c.coeff2, 1.5f64.ln(), 1e-15));
        assert!(close(c.coeff1, 0.628609, 1e-6));
        assert!(close(c.coeff2, 0.405465, 1e-6));
        assert_eq!(c.lhs, 10.0 * c.coeff1 + 10.0 * c.coeff2);
    }

    #[test]
    fn one_block_collapse() {
        let c = check_sufficient(&query(Setting::Agnostic, 0, 37, 1.0, 4.0)).unwrap();
        assert_eq!(c.lhs, 37.0 * (0.5f64 * 8.0 / 8.0).ln_1p());
    }

    #[test]
    fn informed_homogeneous_collapse() {
        let c = check_sufficient(&query(Setting::Informed, 3, 4, 2.5, 2.5)).unwrap();
        assert_eq!(c.coeff1, c.coeff2);
    }

    #[test]
    fn holds_iff_rhs() {
        for n2 in 0..200 {
            let c = check_sufficient(&query(Setting::Agnostic, 5, n2, 1.0, 4.0)).unwrap();
            assert_eq!(c.holds, c.lhs >= 1.5 * c.n_star);
        }
    }

    #[test]
    fn invalid_delta_epsilon() {
        let mut q = query(Setting::Agnostic, 1, 1, 1.0, 4.0);
        q.delta = 1.0;
        assert!(check_sufficient(&q).is_err());
        let mut q = query(Setting::Agnostic, 1, 1, 1.0, 4.0);
        q.epsilon = 0.0;
        assert!(check_sufficient(&q).is_err());
    }

    #[test]
    fn general_sigma_matches_two_block() {
        for setting in [Setting::Agnostic, Setting::Informed] {
            let two = check_sufficient(&query(setting, 7, 13, 0.3, 2.2)).unwrap();
            let mut q = query(setting, 0, 0, 0.3, 2.2);
            let mut variances = vec![0.3; 7];
            variances.extend(std::iter::repeat_n(2.2, 13));
            q.layout = NoiseLayout::GeneralSigma { variances };
            let gen = check_sufficient(&q).unwrap();
            assert_eq!(gen.coeff1, two.coeff1);
            assert_eq!(gen.coeff2, two.coeff2);
            assert!(close(gen.lhs, two.lhs, 1e-12 * two.lhs));
            assert_eq!(gen.holds, two.holds);
        }
    }

    #[test]
    fn poq_values() {
        assert_eq!(price_of_quality(Setting::Agnostic, 2.0, 2.0, 8, 0.5).unwrap(), 1.0);
        assert_eq!(price_of_quality(Setting::Informed, 2.0, 2.0, 8, 0.5).unwrap(), 1.0);
        let ag = price_of_quality(Setting::Agnostic, 1.0, 4.0, 8, 0.5).unwrap();
        assert!(close(ag, 1.875f64.ln() / 1.5f64.ln(), 1e-14));
        assert!(close(ag, 1.5504, 1e-4));
        let inf = price_of_quality(Setting::Informed, 1.0, 4.0, 8, 0.5).unwrap();
        assert!(close(inf, 3f64.ln() / 1.5f64.ln(), 1e-14));
        assert!(close(inf, 2.70951, 5e-6));
    }

    #[test]
    fn asymptotes() {
        use AsymptoticRegime::*;
        let v = poq_asymptotic(Setting::Agnostic, HighSnr2, 0.3, 0.9, 1000).unwrap();
        assert_eq!(v.value, 1.0);
        let v = poq_asymptotic(Setting::Agnostic, LowSnr2, 1.0, 4.0, 1).unwrap();
        assert_eq!(v.value, 1.75);
        let v = poq_asymptotic(Setting::Informed, LowSnr, 1e4, 1e6, 10).unwrap();
        assert!(close(v.value, 100.0, 1e-12));
        let v = poq_asymptotic(Setting::Informed, HighSnr, 1.0, 10.0, 1000).unwrap();
        assert!(close(v.value, 1000f64.ln() / 100f64.ln(), 1e-12));
        let v = poq_asymptotic(Setting::Informed, LowSnr2HighSnr1, 0.1, 1e4, 10).unwrap();
        assert!(v.order_only);
        assert!(poq_asymptotic(Setting::Informed, HighSnr, 1.0, 20.0, 10).is_err());
        assert!(poq_asymptotic(Setting::Agnostic, LowSnr2HighSnr1, 1.0, 20.0, 10).is_err());
    }

    #[test]
    fn exact_poq_approaches_asymptotes() {
        // Agnostic, s >> sigma2_sq: gamma -> 1 (slowly, log ratio).
        let g = price_of_quality(Setting::Agnostic, 0.5, 1.0, 1_000_000_000, 0.5).unwrap();
        assert!(g > 1.0 && g < 1.05);
        // Agnostic, s << sigma2_sq: gamma -> 2 - r.
        let g = price_of_quality(Setting::Agnostic, 1e3, 4e3, 1, 0.5).unwrap();
        assert!(close(g, 1.75, 1e-3));
        // Informed low SNR.
        let g = price_of_quality(Setting::Informed, 1e4, 1e6, 1, 0.5).unwrap();
        assert!(close(g, 100.0, 0.1));
    }

    #[test]
    fn frontier_examples() {
        let mut q = query(Setting::Agnostic, 0, 0, 1.0, 4.0);
        q.epsilon = 0.0;
        let pts = sample_frontier(&q, &[0]).unwrap();
        // ceil(2 * 8 * ln 12.5 / ln 1.5) = 100
        assert_eq!(pts[0].n2, 100);
        assert!(close(pts[0].n2_continuous, 16.0 * 12.5f64.ln() / 1.5f64.ln(), 1e-9));

        let q = query(Setting::Agnostic, 0, 0, 1.0, 4.0);
        let big = sample_frontier(&q, &[1000]).unwrap();
        assert_eq!(big[0].n2, 0);

        let grid: Vec<usize> = (0..150).collect();
        let pts = sample_frontier(&q, &grid).unwrap();
        assert!(pts.windows(2).all(|w| w[1].n2 <= w[0].n2));
        for pt in &pts {
            let mut probe = q.clone();
            probe.layout = NoiseLayout::TwoBlock { n1: pt.n1, n2: pt.n2, sigma1_sq: 1.0, sigma2_sq: 4.0 };
            assert!(check_sufficient(&probe).unwrap().holds);
            if pt.n2 > 0 {
                probe.layout = NoiseLayout::TwoBlock { n1: pt.n1, n2: pt.n2 - 1, sigma1_sq: 1.0, sigma2_sq: 4.0 };
                assert!(!check_sufficient(&probe).unwrap().holds);
            }
        }
    }

    #[test]
    fn homogeneous_frontier_has_unit_slope() {
        let q = query(Setting::Agnostic, 0, 0, 2.0, 2.0);
        let pts = sample_frontier(&q, &[0, 1, 2, 3]).unwrap();
        for w in pts.windows(2) {
            assert!(close(w[0].n2_continuous - w[1].n2_continuous, 1.0, 1e-9));
        }
    }
}
