//! Moments of the CSTP upper bound, the beta-matched meta distribution and
//! the CSTP variance.
//!
//! The bound replaces the Gamma(D, 1) serving gain's CCDF by
//! `1 - (1 - e^{-βx})^D`, `β = (D!)^{-1/D}`, which expands into an
//! alternating sum of Laplace transforms of the interference. Each term is
//! an "atom" `(weight, argument)`; the first moment is linear in the atoms
//! and the second moment bilinear.

use crate::analytic::{integrate_serving, serving_map, tail_j, tail_t, InLoadStats, UnitBands};
use crate::error::{invalid, Result};
use crate::model::{InScheme, Interferer, NetworkConfig, SchemeKind};
use crate::specfun::{adaptive_quad, adaptive_quad_scaled, ln_gamma, reg_inc_beta, QuadResult};

/// Default resolution of a meta-distribution curve.
pub const META_GRID_POINTS: usize = 201;

/// Relative gap under which two bound arguments use the Taylor form.
const NEAR_EQUAL: f64 = 1e-3;

/// `(D!)^{-1/D}`.
pub fn bound_beta(d: usize) -> f64 {
    let df = d as f64;
    (-ln_gamma(df + 1.0) / df).exp()
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        .exp()
        .round()
}

/// Upper bound on the CSTP of one realization with explicit interferers.
pub fn upper_bound_cstp(
    interferers: &[Interferer],
    z: f64,
    theta: usize,
    tau: f64,
    cfg: &NetworkConfig,
) -> Result<f64> {
    if theta > cfg.l || theta >= cfg.m {
        return Err(invalid("theta", format!("must be at most L = {}, got {theta}", cfg.l)));
    }
    if !(z > 0.0) {
        return Err(invalid("z", format!("serving distance must be positive, got {z}")));
    }
    let d = cfg.m - theta;
    let beta = bound_beta(d);
    let s = tau * z.powf(cfg.alpha);
    let mut total = 0.0;
    for i in 1..=d {
        let si = i as f64 * beta * s;
        let prod: f64 = interferers
            .iter()
            .filter(|x| !x.nulled)
            .map(|x| 1.0 / (1.0 + si * x.radius.powf(-cfg.alpha)))
            .product();
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * binomial(d, i) * prod;
    }
    Ok(total.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug)]
struct Atom {
    weight: f64,
    arg: f64,
}

/// Alternating-sum terms over `θ` and `i`, with arguments `iβ_{M-θ}τ`.
fn atoms(tau: f64, cfg: &NetworkConfig, stats: &InLoadStats) -> Vec<Atom> {
    let mut out = Vec::new();
    for (theta, &p) in stats.theta_i_pmf.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let d = cfg.m - theta;
        let beta = bound_beta(d);
        for i in 1..=d {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            out.push(Atom { weight: sign * p * binomial(d, i), arg: i as f64 * beta * tau });
        }
    }
    out
}

/// `∫ (1 - 1/((1 + a t^-α)(1 + b t^-α))) ν(t) t dt` given the single-argument
/// exponents `[E_0, E_1]` at `a` and `b`; `series(c, 4)` supplies `E_0..E_3`
/// at the midpoint when the two arguments nearly coincide.
fn pair_exponent<S>(a: f64, ea: [f64; 2], b: f64, eb: [f64; 2], series: S) -> Result<f64>
where
    S: Fn(f64, usize) -> Result<Vec<f64>>,
{
    if a == b {
        return Ok(ea[0] + ea[1]);
    }
    let scale = a.abs().max(b.abs());
    if (a - b).abs() > NEAR_EQUAL * scale {
        return Ok((a * ea[0] - b * eb[0]) / (a - b));
    }
    // divided difference of c·E_0(c) expanded about the midpoint
    let mid = 0.5 * (a + b);
    let h = a - b;
    let e = series(mid, 4)?;
    let third = 6.0 * (e[3] - e[2]) / (mid * mid);
    Ok(e[0] + e[1] + third * h * h / 24.0)
}

/// `[E_0, E_1]` at every atom's argument.
struct AtomExponents {
    first: Vec<[f64; 2]>,
}

impl AtomExponents {
    fn new(unit: &UnitBands, atoms: &[Atom], alpha: f64) -> Result<AtomExponents> {
        let first = atoms
            .iter()
            .map(|a| {
                let e = unit.exponent_series(a.arg, alpha, 2)?;
                Ok([e[0], e[1]])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomExponents { first })
    }

    /// `Σ_{k,l} w_k w_l f(H(c_k, c_l))`, visiting each unordered pair once.
    fn bilinear(
        &self,
        unit: &UnitBands,
        atoms: &[Atom],
        alpha: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        let series = |c: f64, dim: usize| unit.exponent_series(c, alpha, dim);
        let mut total = 0.0;
        for k in 0..atoms.len() {
            let (ak, ek) = (atoms[k], self.first[k]);
            total += ak.weight * ak.weight * f(ek[0] + ek[1]);
            for (al, el) in atoms[k + 1..].iter().zip(&self.first[k + 1..]) {
                let h = pair_exponent(ak.arg, ek, al.arg, *el, series)?;
                total += 2.0 * ak.weight * al.weight * f(h);
            }
        }
        Ok(total)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(invalid("tau", format!("must be finite and nonnegative, got {tau}")))
    }
}

/// First moment of the CSTP upper bound, fixed scheme.
pub fn m1_fixed(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !matches!(cfg.scheme, InScheme::Fixed { .. }) {
        return Err(invalid("scheme", "m1_fixed needs the fixed scheme"));
    }
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let stats = InLoadStats::new(cfg)?;
    let atoms = atoms(tau, cfg, &stats);
    let (z_of, split) = serving_map(cfg);
    let xi = cfg.xi;
    let v = integrate_serving(
        |u| {
            let unit = UnitBands::for_config(cfg, stats.epsilon, z_of(u));
            let mut acc = 0.0;
            for a in &atoms {
                acc += a.weight * (-2.0 * xi * u * unit.exponent(a.arg, cfg.alpha)?).exp();
            }
            Ok(acc)
        },
        split,
        "m1_fixed",
    )?;
    Ok(v.clamp(0.0, 1.0))
}

/// First moment of the CSTP upper bound, flexible scheme (closed form).
pub fn m1_flexible(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let InScheme::Flexible { mu } = cfg.scheme else {
        return Err(invalid("scheme", "m1_flexible needs the flexible scheme"));
    };
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let stats = InLoadStats::new(cfg)?;
    let unit = UnitBands::new(stats.epsilon, cfg.xi, mu);
    let mut acc = 0.0;
    for a in atoms(tau, cfg, &stats) {
        acc += a.weight / (1.0 + 2.0 * cfg.xi * unit.exponent(a.arg, cfg.alpha)?);
    }
    Ok(acc.clamp(0.0, 1.0))
}

pub fn m1(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    match cfg.scheme {
        InScheme::Fixed { .. } => m1_fixed(tau, cfg),
        InScheme::Flexible { .. } => m1_flexible(tau, cfg),
    }
}

/// Second moment of the CSTP upper bound (either scheme).
pub fn m2(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let stats = InLoadStats::new(cfg)?;
    let atoms = atoms(tau, cfg, &stats);
    let alpha = cfg.alpha;
    let xi = cfg.xi;
    let v = match cfg.scheme {
        InScheme::Flexible { mu } => {
            // the serving-distance integral of e^{-2πλz²H} is 1/(1 + 2ξH)
            let unit = UnitBands::new(stats.epsilon, xi, mu);
            let ex = AtomExponents::new(&unit, &atoms, alpha)?;
            ex.bilinear(&unit, &atoms, alpha, |h| 1.0 / (1.0 + 2.0 * xi * h))?
        }
        InScheme::Fixed { .. } => {
            let (z_of, split) = serving_map(cfg);
            integrate_serving(
                |u| {
                    let unit = UnitBands::for_config(cfg, stats.epsilon, z_of(u));
                    let ex = AtomExponents::new(&unit, &atoms, alpha)?;
                    ex.bilinear(&unit, &atoms, alpha, |h| (-2.0 * xi * u * h).exp())
                },
                split,
                "m2",
            )?
        }
    };
    Ok(v.clamp(0.0, 1.0))
}

/// The flexible second moment with the serving distance integrated
/// numerically instead of in closed form.
pub fn m2_flexible_by_quadrature(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let InScheme::Flexible { mu } = cfg.scheme else {
        return Err(invalid("scheme", "needs the flexible scheme"));
    };
    check_tau(tau)?;
    let stats = InLoadStats::new(cfg)?;
    let atoms = atoms(tau, cfg, &stats);
    let unit = UnitBands::new(stats.epsilon, cfg.xi, mu);
    let ex = AtomExponents::new(&unit, &atoms, cfg.alpha)?;
    let xi = cfg.xi;
    integrate_serving(
        |u| ex.bilinear(&unit, &atoms, cfg.alpha, |h| (-2.0 * xi * u * h).exp()),
        None,
        "m2_flexible_by_quadrature",
    )
}

/// `∫_Ω (1 - 1/((1 + i·x v^-α)(1 + j·y v^-α))) v dv` by adaptive quadrature.
pub fn h_ij(omega: (f64, f64), x: f64, y: f64, i: usize, j: usize, alpha: f64) -> Result<QuadResult> {
    let (lo, hi) = omega;
    if !(lo >= 0.0) || !(hi >= lo) {
        return Err(invalid("omega", format!("need 0 <= lo <= hi, got [{lo}, {hi})")));
    }
    if !(alpha > 2.0) {
        return Err(invalid("alpha", format!("must exceed 2, got {alpha}")));
    }
    let a = i as f64 * x;
    let b = j as f64 * y;
    if lo == hi || (a == 0.0 && b == 0.0) {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true });
    }
    // In ln v the power-law tail decays exponentially; split around the
    // radius where the integrand turns over.
    let g = |t: f64| {
        let v = t.exp();
        if !v.is_finite() {
            return 0.0;
        }
        let u = v.powf(-alpha);
        let one_minus = (a * u + b * u + a * b * u * u) / ((1.0 + a * u) * (1.0 + b * u));
        one_minus * v * v
    };
    let peak = a.max(b).ln() / alpha;
    let t_lo = if lo == 0.0 { peak - 40.0 } else { lo.ln() };
    let t_hi = if hi.is_infinite() { f64::INFINITY } else { hi.ln() };
    let mut edges = vec![t_lo];
    for e in [peak - 5.0, peak + 5.0] {
        if e > t_lo && e < t_hi {
            edges.push(e);
        }
    }
    let mut parts = Vec::new();
    for w in edges.windows(2) {
        parts.push(adaptive_quad(g, w[0], w[1], 1e-13));
    }
    let last = *edges.last().expect("nonempty");
    parts.push(if t_hi.is_infinite() {
        adaptive_quad_scaled(g, last, f64::INFINITY, 1e-13, 5.0)
    } else {
        adaptive_quad(g, last, t_hi, 1e-13)
    });
    let mut out = QuadResult { value: 0.0, abs_error: 0.0, evaluations: 0, converged: true };
    for p in parts {
        out.value += p.value;
        out.abs_error += p.abs_error;
        out.evaluations += p.evaluations;
        out.converged &= p.converged;
    }
    Ok(out)
}

/// The same integral as [`h_ij`] through partial fractions and the
/// hypergeometric tail integrals.
pub fn h_ij_closed(omega: (f64, f64), x: f64, y: f64, i: usize, j: usize, alpha: f64) -> Result<f64> {
    let (lo, hi) = omega;
    if !(lo >= 0.0) || !(hi >= lo) {
        return Err(invalid("omega", format!("need 0 <= lo <= hi, got [{lo}, {hi})")));
    }
    let series = |c: f64, dim: usize| -> Result<Vec<f64>> {
        let mut out = vec![tail_t(c, lo, alpha)? - tail_t(c, hi, alpha)?];
        for m in 1..dim {
            out.push(tail_j(m, c, lo, alpha)? - tail_j(m, c, hi, alpha)?);
        }
        Ok(out)
    };
    let a = i as f64 * x;
    let b = j as f64 * y;
    let ea = series(a, 2)?;
    let eb = series(b, 2)?;
    pair_exponent(a, [ea[0], ea[1]], b, [eb[0], eb[1]], series)
}

/// First and second moments of the CSTP upper bound at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    /// Beta shape sum; infinite when the moments are degenerate.
    pub kappa: f64,
    pub tau: f64,
    pub scheme: SchemeKind,
}

impl MomentSummary {
    pub fn new(m1: f64, m2: f64, tau: f64, scheme: SchemeKind) -> MomentSummary {
        let var = m2 - m1 * m1;
        let kappa = if var < 1e-12 || m1 <= 0.0 || m1 >= 1.0 {
            f64::INFINITY
        } else {
            (m1 - m2) * (1.0 - m1) / var
        };
        MomentSummary { m1, m2, kappa, tau, scheme }
    }

    pub fn compute(tau: f64, cfg: &NetworkConfig) -> Result<MomentSummary> {
        Ok(MomentSummary::new(m1(tau, cfg)?, m2(tau, cfg)?, tau, cfg.scheme.kind()))
    }

    pub fn variance(&self) -> f64 {
        (self.m2 - self.m1 * self.m1).max(0.0)
    }

    /// True when the beta fit collapses to a point mass at `m1`.
    pub fn is_degenerate(&self) -> bool {
        !(self.kappa.is_finite() && self.kappa > 0.0)
    }

    /// Shape parameters `(m1·κ/(1-m1), κ)` of the matched beta law.
    pub fn beta_shape(&self) -> Option<(f64, f64)> {
        if self.is_degenerate() {
            None
        } else {
            Some((self.m1 * self.kappa / (1.0 - self.m1), self.kappa))
        }
    }
}

/// Beta-matched CCDF of the CSTP at reliability `x`. Degenerate moments give
/// a step down at `m1`; check [`MomentSummary::is_degenerate`].
pub fn beta_meta(ms: &MomentSummary, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("must lie in [0, 1], got {x}")));
    }
    match ms.beta_shape() {
        None => Ok(if x < ms.m1 { 1.0 } else { 0.0 }),
        Some((a, b)) => Ok(1.0 - reg_inc_beta(x, a, b)?),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaCurve {
    /// `(x, F̄(x))` over `[0, 1]`, clustered toward both ends where the beta
    /// CCDF can have unbounded slope.
    pub points: Vec<(f64, f64)>,
    /// 1 for a per-file curve, the hit mass for a total curve.
    pub weight: f64,
    pub degenerate: bool,
}

impl MetaCurve {
    pub fn from_moments(ms: &MomentSummary, weight: f64, n_points: usize) -> Result<MetaCurve> {
        if n_points < 2 {
            return Err(invalid("n_points", "need at least two grid points"));
        }
        let points = (0..n_points)
            .map(|k| {
                let phase = std::f64::consts::PI * k as f64 / (n_points - 1) as f64;
                let x = (0.5 * (1.0 - phase.cos())).clamp(0.0, 1.0);
                Ok((x, weight * beta_meta(ms, x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetaCurve { points, weight, degenerate: ms.is_degenerate() })
    }

    /// Trapezoid integral over `x`.
    pub fn integral(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }
}

/// Hit-mass weighted CSTP variance.
pub fn variance_total(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let ms = MomentSummary::compute(tau, cfg)?;
    Ok(cfg.cache_design()?.hit_mass * ms.variance())
}

/// Fraction of all users whose link reliability exceeds `x`.
pub fn meta_total(x: f64, tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    let ms = MomentSummary::compute(tau, cfg)?;
    Ok(cfg.cache_design()?.hit_mass * beta_meta(&ms, x)?)
}
