//! Gauss hypergeometric function `2F1(a, b; c; -x)` for `x >= 0`.
//!
//! Small arguments go through a Pfaff transformation onto `w = x/(1+x)`,
//! large ones through the connection formula onto `-1/x`. The scaled
//! variant returns `x^p · 2F1` so callers can cancel the large-`x`
//! power-law growth before it overflows.

use super::gamma::{gamma, rgamma};
use crate::error::{invalid, numerical, Result};

const MAX_TERMS: usize = 200_000;
const EPS: f64 = 1e-17;
/// Above this argument the connection formula is used.
const PFAFF_LIMIT: f64 = 1.0;

/// `Σ_{k≥1} (p)_k (q)_k / ((c)_k k!) w^k`, i.e. the series minus its leading 1.
fn series_tail(p: f64, q: f64, c: f64, w: f64) -> Option<f64> {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (p + kf) * (q + kf) / ((c + kf) * (kf + 1.0)) * w;
        sum += term;
        if term == 0.0 {
            return Some(sum);
        }
        let next = kf + 1.0;
        let ratio = ((p + next) * (q + next) / ((c + next) * (next + 1.0)) * w).abs();
        if ratio < 1.0 && term.abs() * ratio / (1.0 - ratio) <= EPS * (1.0 + sum).abs() {
            return Some(sum);
        }
    }
    None
}

fn fail(a: f64, b: f64, c: f64, x: f64) -> crate::error::Error {
    numerical(
        "gauss_2f1_neg",
        format!("series did not converge for a={a}, b={b}, c={c}, x={x}"),
    )
}

/// `2F1(a,b;c;-x) - 1` through a Pfaff transformation.
fn pfaff_minus_one(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let w = x / (1.0 + x);
    // Both transformations are exact; take the one whose first term is smaller.
    let (e, p, q) = if (b * (c - a)).abs() <= (a * (c - b)).abs() {
        (b, b, c - a)
    } else {
        (a, a, c - b)
    };
    let tail = series_tail(p, q, c, w).ok_or_else(|| fail(a, b, c, x))?;
    let pre_m1 = (-e * x.ln_1p()).exp_m1();
    Ok(pre_m1 + (1.0 + pre_m1) * tail)
}

fn check(a: f64, b: f64, c: f64, x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("must be nonnegative, got {x}")));
    }
    if c <= 0.0 && c == c.round() {
        return Err(invalid("c", format!("must not be a nonpositive integer, got {c}")));
    }
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(invalid("gauss_2f1_neg", format!("non-finite parameters ({a}, {b}, {c})")));
    }
    Ok(())
}

fn integer_gap(a: f64, b: f64) -> bool {
    let d = a - b;
    (d - d.round()).abs() < 1e-12
}

/// Connection-formula evaluation of `x^p · 2F1(a,b;c;-x)` for large `x`.
fn connection_scaled(a: f64, b: f64, c: f64, x: f64, p: f64) -> Result<f64> {
    let y = 1.0 / x;
    let ln_x = x.ln();
    let gc = gamma(c);
    let k1 = gc * gamma(b - a) * rgamma(b) * rgamma(c - a);
    let k2 = gc * gamma(a - b) * rgamma(a) * rgamma(c - b);
    let mut total = 0.0;
    if k1 != 0.0 {
        let inner = pfaff_minus_one(a, a - c + 1.0, a - b + 1.0, y)?;
        total += k1 * ((p - a) * ln_x).exp() * (1.0 + inner);
    }
    if k2 != 0.0 {
        let inner = pfaff_minus_one(b, b - c + 1.0, b - a + 1.0, y)?;
        total += k2 * ((p - b) * ln_x).exp() * (1.0 + inner);
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(numerical(
            "gauss_2f1_neg",
            format!("non-finite connection result for a={a}, b={b}, c={c}, x={x}"),
        ))
    }
}

/// `2F1(a, b; c; -x)` for `x >= 0`.
pub fn gauss_2f1_neg(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    gauss_2f1_neg_scaled(a, b, c, x, 0.0)
}

/// `x^p · 2F1(a, b; c; -x)`; at `x = 0` this is 1 for `p = 0` and 0 for `p > 0`.
pub fn gauss_2f1_neg_scaled(a: f64, b: f64, c: f64, x: f64, p: f64) -> Result<f64> {
    check(a, b, c, x)?;
    if x == 0.0 {
        return if p == 0.0 {
            Ok(1.0)
        } else if p > 0.0 {
            Ok(0.0)
        } else {
            Err(invalid("p", format!("x^p diverges at x = 0 for p = {p}")))
        };
    }
    if x <= PFAFF_LIMIT || integer_gap(a, b) {
        let v = 1.0 + pfaff_minus_one(a, b, c, x)?;
        Ok(if p == 0.0 { v } else { (p * x.ln()).exp() * v })
    } else {
        connection_scaled(a, b, c, x, p)
    }
}

/// `2F1(a, b; c; -x) - 1`, accurate when the result is small.
pub fn gauss_2f1_neg_minus_one(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    check(a, b, c, x)?;
    if x <= PFAFF_LIMIT || integer_gap(a, b) {
        pfaff_minus_one(a, b, c, x)
    } else {
        Ok(connection_scaled(a, b, c, x, 0.0)? - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        // 2F1(1,1;2;-x) = ln(1+x)/x
        for &x in &[1e-6, 0.3, 1.0, 2.5, 40.0] {
            let v = gauss_2f1_neg(1.0, 1.0, 2.0, x).unwrap();
            let want = x.ln_1p() / x;
            assert!((v - want).abs() <= 1e-13 * want, "x={x}: {v} vs {want}");
        }
        // a = b sits on the connection formula's poles, and the fallback
        // series is too slow this far out
        let err = gauss_2f1_neg(1.0, 1.0, 2.0, 1e4).unwrap_err().to_string();
        assert!(err.contains("x=10000"), "{err}");
        // 2F1(a,b;b;-x) = (1+x)^-a
        for &x in &[0.5, 3.0, 100.0] {
            let v = gauss_2f1_neg(0.7, 1.3, 1.3, x).unwrap();
            let want = (1.0 + x).powf(-0.7);
            assert!((v - want).abs() <= 1e-13 * want);
        }
        // 2F1(1/2,1;3/2;-x²) = atan(x)/x
        for &t in &[0.2, 1.0, 3.0, 50.0] {
            let v = gauss_2f1_neg(0.5, 1.0, 1.5, t * t).unwrap();
            let want = t.atan() / t;
            assert!((v - want).abs() <= 1e-13 * want);
        }
    }

    #[test]
    fn scaled_matches_unscaled() {
        let (a, b, c) = (-0.5, 1.0, 0.5);
        for &x in &[0.1, 0.9, 1.1, 30.0] {
            let s = gauss_2f1_neg_scaled(a, b, c, x, 0.5).unwrap();
            let u = gauss_2f1_neg(a, b, c, x).unwrap();
            assert!((s - x.sqrt() * u).abs() <= 1e-13 * s.abs());
        }
        assert_eq!(gauss_2f1_neg_scaled(a, b, c, 0.0, 0.5).unwrap(), 0.0);
        assert!(gauss_2f1_neg_scaled(a, b, c, 0.0, -0.5).is_err());
    }

    #[test]
    fn minus_one_small_argument() {
        let x = 1e-12;
        let v = gauss_2f1_neg_minus_one(-0.5, 1.0, 0.5, x).unwrap();
        // first-order term: ab/c · (-x) = x
        assert!((v - x).abs() < 1e-20);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gauss_2f1_neg(1.0, 1.0, 2.0, -1.0).is_err());
        assert!(gauss_2f1_neg(1.0, 1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn integer_gap_uses_series() {
        // a - b = 1 sits on the connection formula's poles.
        let v = gauss_2f1_neg(2.0, 1.0, 3.0, 5.0).unwrap();
        // 2F1(2,1;3;-x) = 2(x - ln(1+x))/x²
        let want = 2.0 * (5.0 - 6f64.ln()) / 25.0;
        assert!((v - want).abs() < 1e-12);
    }
}
