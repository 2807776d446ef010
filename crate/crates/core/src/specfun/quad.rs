//! Globally adaptive 15-point Gauss–Kronrod quadrature.

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_sum = abs_sum * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Segment { lo, hi, value, error }
}

fn adapt<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> QuadResult {
    let mut segments = vec![gk15(&mut f, lo, hi)];
    let mut evaluations = 15;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= tol * (1.0 + value.abs()) {
            return QuadResult { value, abs_error: error, evaluations, converged: true };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let seg = segments[worst];
        let mid = 0.5 * (seg.lo + seg.hi);
        let too_narrow = mid <= seg.lo || mid >= seg.hi;
        if segments.len() >= MAX_INTERVALS || too_narrow || !error.is_finite() {
            return QuadResult { value, abs_error: error, evaluations, converged: false };
        }
        segments[worst] = gk15(&mut f, seg.lo, mid);
        segments.push(gk15(&mut f, mid, seg.hi));
        evaluations += 30;
    }
}

/// Integral of `f` over `[lo, hi]`; `hi` may be `+∞`.
///
/// Stops once the estimated error is within `tol·(1 + |value|)`.
pub fn adaptive_quad<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> QuadResult {
    adaptive_quad_scaled(f, lo, hi, tol, 1.0)
}

/// As [`adaptive_quad`], with `scale` setting where the semi-infinite map
/// `v = lo + scale·t/(1-t)` puts the middle of `[0, 1)`.
pub fn adaptive_quad_scaled<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    scale: f64,
) -> QuadResult {
    if lo == hi {
        return QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true };
    }
    if hi.is_infinite() {
        adapt(
            |t: f64| {
                let om = 1.0 - t;
                if om <= 0.0 {
                    return 0.0;
                }
                let v = lo + scale * t / om;
                if !v.is_finite() {
                    return 0.0;
                }
                let fv = f(v);
                if fv == 0.0 {
                    0.0
                } else {
                    fv * scale / (om * om)
                }
            },
            0.0,
            1.0,
            tol,
        )
    } else {
        adapt(f, lo, hi, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = adaptive_quad(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((r.value - 8.0).abs() < 1e-13);
        assert!(r.converged);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn semi_infinite() {
        let r = adaptive_quad(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-12);
        assert!((r.value - 1.0).abs() < 1e-11);
        let r = adaptive_quad_scaled(|x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, 1e-12, 3.0);
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        let r = adaptive_quad(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((r.value - 2.0).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn budget_exhaustion_flagged() {
        let r = adaptive_quad(|x: f64| (1.0 / x).sin() / x, 1e-9, 1.0, 1e-14);
        assert!(!r.converged);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_quad(|x| x, 1.0, 1.0, 1e-8).value, 0.0);
    }
}
