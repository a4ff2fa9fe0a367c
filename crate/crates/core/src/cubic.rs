//! Real roots of polynomials up to degree three.

use std::f64::consts::PI;

const NEWTON_STEPS: usize = 2;

fn eval(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn deriv(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

fn polish(c: &[f64; 4], mut x: f64) -> f64 {
    for _ in 0..NEWTON_STEPS {
        let d = deriv(c, x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - eval(c, x) / d;
        if !next.is_finite() {
            break;
        }
        // Keep the step only if it does not make the residual worse.
        if eval(c, next).abs() <= eval(c, x).abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, ascending, each polished by
/// two Newton steps. Repeated roots appear once. Falls back to the quadratic
/// or linear formula when leading coefficients vanish; the zero polynomial
/// yields no roots.
pub fn real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let coeffs = [c3, c2, c1, c0];
    let mut roots = if c3 != 0.0 {
        cardano(c3, c2, c1, c0)
    } else if c2 != 0.0 {
        quadratic(c2, c1, c0)
    } else if c1 != 0.0 {
        vec![-c0 / c1]
    } else {
        Vec::new()
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    // Stable form avoiding cancellation.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn cardano(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    // Depressed cubic t^3 + p t + q with x = t - b/3.
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;

    if p == 0.0 && q == 0.0 {
        return vec![-shift];
    }
    if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect()
    } else if disc == 0.0 {
        let u = (-q / 2.0).cbrt();
        vec![2.0 * u - shift, -u - shift]
    } else {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift]
    }
}
