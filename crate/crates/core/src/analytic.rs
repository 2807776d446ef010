//! Nulling load statistics, interferer densities and the per-file STP of
//! both nulling schemes.
//!
//! Radii inside the kernels are measured in units of the serving distance
//! `z`, which turns the fixed scheme into the flexible one with the
//! z-dependent ratio `R_c / z`.

use std::f64::consts::PI;

use crate::error::{invalid, numerical, Result};
use crate::model::{InScheme, NetworkConfig};
use crate::specfun::{
    adaptive_quad, adaptive_quad_scaled, beta_fn, gauss_2f1_neg, gauss_2f1_neg_minus_one,
    gauss_2f1_neg_scaled, ln_gamma, lt_toeplitz_exp_column, lt_toeplitz_inv_column,
    reg_lower_gamma, sinc,
};

/// Tolerance for integrals over the serving distance.
pub const SERVING_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct InLoadStats {
    /// Mean number of nulling requests a BS receives.
    pub theta_bar: f64,
    /// Probability that a received request is not honored.
    pub epsilon: f64,
    /// `P[Θ_I = θ]` for `θ = 0..=L`.
    pub theta_i_pmf: Vec<f64>,
}

impl InLoadStats {
    pub fn new(cfg: &NetworkConfig) -> Result<InLoadStats> {
        let theta_bar = mean_in_requests(cfg);
        Ok(InLoadStats {
            theta_bar,
            epsilon: in_missing_prob(theta_bar, cfg.l),
            theta_i_pmf: theta_i_pmf(theta_bar, cfg.l)?,
        })
    }
}

fn fixed_load(r_c: f64, lambda_bs: f64, xi: f64) -> f64 {
    let y = PI * lambda_bs * r_c * r_c;
    y + (-y / xi).exp_m1()
}

fn flexible_load(mu: f64, xi: f64) -> f64 {
    let mu2 = mu * mu;
    xi * mu2 - mu2.min(1.0)
}

pub fn mean_in_requests(cfg: &NetworkConfig) -> f64 {
    match cfg.scheme {
        InScheme::Fixed { r_c } => fixed_load(r_c, cfg.lambda_bs, cfg.xi),
        InScheme::Flexible { mu } => flexible_load(mu, cfg.xi),
    }
}

/// Poisson mass for the number of requests a BS receives.
pub fn theta_r_pmf(theta_bar: f64, theta: usize) -> f64 {
    if theta_bar == 0.0 {
        return if theta == 0 { 1.0 } else { 0.0 };
    }
    let k = theta as f64;
    (k * theta_bar.ln() - theta_bar - ln_gamma(k + 1.0)).exp()
}

/// Distribution of the number of requests a BS honors, capped at `l`.
pub fn theta_i_pmf(theta_bar: f64, l: usize) -> Result<Vec<f64>> {
    if !(theta_bar >= 0.0) {
        return Err(invalid("theta_bar", format!("must be nonnegative, got {theta_bar}")));
    }
    let mut pmf: Vec<f64> = (0..l).map(|k| theta_r_pmf(theta_bar, k)).collect();
    pmf.push(if l == 0 { 1.0 } else { reg_lower_gamma(l as f64, theta_bar)? });
    Ok(pmf)
}

/// Probability that a nulling request is dropped because the receiving BS
/// has already spent its `l` nulling DoF.
pub fn in_missing_prob(theta_bar: f64, l: usize) -> f64 {
    if theta_bar == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let ln_tb = theta_bar.ln();
    let mut sum = 0.0;
    let mut theta = l;
    loop {
        let k = theta as f64;
        let term = ((k + 1.0 - l as f64).ln() - ln_gamma(k + 2.0) + k * ln_tb - theta_bar).exp();
        sum += term;
        // terms rise until the Poisson mode, so only stop once past it
        if (k > theta_bar && term < 1e-17 * sum.max(1e-300)) || theta > l + 100_000 {
            break;
        }
        theta += 1;
    }
    sum.clamp(0.0, 1.0)
}

/// One annulus of interferers with a constant density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    /// Interferer density in m⁻².
    pub density: f64,
    /// Inner radius in meters.
    pub inner: f64,
    /// Outer radius in meters, possibly infinite.
    pub outer: f64,
}

/// The three annuli of interferers seen by a user at serving distance `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfererBands {
    pub bands: [Band; 3],
    pub a_coef: f64,
    pub b_coef: f64,
}

/// Relative densities and radii in units of the serving distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct UnitBands {
    pub nu: [f64; 3],
    pub rho: [f64; 2],
}

impl UnitBands {
    /// Bands for a nulling range of `range_ratio` serving distances.
    pub fn new(epsilon: f64, xi: f64, range_ratio: f64) -> UnitBands {
        let non_caching = 1.0 - 1.0 / xi;
        if range_ratio < 1.0 {
            UnitBands { nu: [epsilon * non_caching, non_caching, 1.0], rho: [range_ratio, 1.0] }
        } else {
            UnitBands { nu: [epsilon * non_caching, epsilon, 1.0], rho: [1.0, range_ratio] }
        }
    }

    pub fn for_config(cfg: &NetworkConfig, epsilon: f64, z: f64) -> UnitBands {
        let ratio = match cfg.scheme {
            InScheme::Fixed { r_c } => r_c / z,
            InScheme::Flexible { mu } => mu,
        };
        UnitBands::new(epsilon, cfg.xi, ratio)
    }

    /// Weights on the tail integrals starting at radius 0, `rho[0]`, `rho[1]`.
    fn steps(&self) -> [(f64, f64); 3] {
        [
            (self.nu[0], 0.0),
            (self.nu[1] - self.nu[0], self.rho[0]),
            (self.nu[2] - self.nu[1], self.rho[1]),
        ]
    }

    /// `Σ_k ν_k ∫_{Ω_k} (1 - 1/(1 + s t^-α)) t dt`.
    pub fn exponent(&self, s: f64, alpha: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, r) in self.steps() {
            if w != 0.0 {
                acc += w * tail_t(s, r, alpha)?;
            }
        }
        Ok(acc)
    }

    /// The exponent followed by its scaled derivatives
    /// `Σ_k ν_k ∫_{Ω_k} s^m t^{1-αm} / (1 + s t^-α)^{m+1} dt`, `m = 1..dim`.
    pub fn exponent_series(&self, s: f64, alpha: f64, dim: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(dim);
        out.push(self.exponent(s, alpha)?);
        for m in 1..dim {
            let mut acc = 0.0;
            for (w, r) in self.steps() {
                if w != 0.0 {
                    acc += w * tail_j(m, s, r, alpha)?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

pub fn interferer_bands(cfg: &NetworkConfig, stats: &InLoadStats, z: f64) -> Result<InterfererBands> {
    if !(z > 0.0) {
        return Err(invalid("z", format!("serving distance must be positive, got {z}")));
    }
    let unit = UnitBands::for_config(cfg, stats.epsilon, z);
    let eps = stats.epsilon;
    let non_caching = 1.0 - 1.0 / cfg.xi;
    let (a_coef, b_coef) = match cfg.scheme {
        InScheme::Fixed { r_c } if z < r_c => (eps, 1.0),
        InScheme::Fixed { .. } => (1.0, non_caching),
        InScheme::Flexible { mu } if mu < 1.0 => (non_caching, 1.0),
        InScheme::Flexible { .. } => (1.0, eps),
    };
    let lam = cfg.lambda_bs;
    let edges = [0.0, unit.rho[0] * z, unit.rho[1] * z, f64::INFINITY];
    let bands = std::array::from_fn(|k| Band {
        density: unit.nu[k] * lam,
        inner: edges[k],
        outer: edges[k + 1],
    });
    Ok(InterfererBands { bands, a_coef, b_coef })
}

/// `2F1(-2/α, 1; 1-2/α; -x) - 1`.
pub fn f_func(x: f64, alpha: f64) -> Result<f64> {
    let d = 2.0 / alpha;
    gauss_2f1_neg_minus_one(-d, 1.0, 1.0 - d, x)
}

/// `2F1(1+m, m-2/α; m-2/α+1; -x) / (αm - 2)`.
pub fn f_tilde(m: usize, x: f64, alpha: f64) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    let d = 2.0 / alpha;
    let mf = m as f64;
    Ok(gauss_2f1_neg(1.0 + mf, mf - d, mf - d + 1.0, x)? / (alpha * mf - 2.0))
}

/// `∫_ρ^∞ (1 - 1/(1 + s v^-α)) v dv`.
pub(crate) fn tail_t(s: f64, rho: f64, alpha: f64) -> Result<f64> {
    if s == 0.0 || rho == f64::INFINITY {
        return Ok(0.0);
    }
    let d = 2.0 / alpha;
    if rho == 0.0 {
        return Ok(s.powf(d) / (2.0 * sinc(d)));
    }
    let x = (s.ln() - alpha * rho.ln()).exp();
    if x <= 1.0 {
        Ok(0.5 * rho * rho * f_func(x, alpha)?)
    } else {
        let scaled = gauss_2f1_neg_scaled(-d, 1.0, 1.0 - d, x, -d)?;
        Ok(0.5 * s.powf(d) * (scaled - x.powf(-d)))
    }
}

/// `∫_ρ^∞ s^m v^{1-αm} / (1 + s v^-α)^{m+1} dv` for `m ≥ 1`.
pub(crate) fn tail_j(m: usize, s: f64, rho: f64, alpha: f64) -> Result<f64> {
    if s == 0.0 || rho == f64::INFINITY {
        return Ok(0.0);
    }
    let d = 2.0 / alpha;
    let mf = m as f64;
    if rho == 0.0 {
        return Ok(s.powf(d) * beta_fn(mf - d, 1.0 + d)? / alpha);
    }
    let x = (s.ln() - alpha * rho.ln()).exp();
    if x <= 1.0 {
        let pre = (mf * s.ln() + (2.0 - alpha * mf) * rho.ln()).exp();
        Ok(pre * f_tilde(m, x, alpha)?)
    } else {
        let scaled = gauss_2f1_neg_scaled(1.0 + mf, mf - d, mf - d + 1.0, x, mf - d)?;
        Ok(s.powf(d) * scaled / (alpha * mf - 2.0))
    }
}

/// First column `q_0..q_{dim-1}` of the Toeplitz generator for a user at
/// serving distance `z` (fixed or flexible scheme).
pub fn q_vector(z: f64, tau: f64, cfg: &NetworkConfig, stats: &InLoadStats, dim: usize) -> Result<Vec<f64>> {
    if !(z > 0.0) {
        return Err(invalid("z", format!("serving distance must be positive, got {z}")));
    }
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("must be nonnegative, got {tau}")));
    }
    let unit = UnitBands::for_config(cfg, stats.epsilon, z);
    let scale = 2.0 * PI * cfg.lambda_bs * z * z;
    let mut q = unit.exponent_series(tau, cfg.alpha, dim)?;
    for (m, v) in q.iter_mut().enumerate() {
        *v *= if m == 0 { -scale } else { scale };
    }
    Ok(q)
}

/// `(w_0, [w_1..w_{dim-1}])` for the flexible scheme, where the Laplace
/// exponent at serving distance `z` is `-πλz²w_0`.
pub fn w_vector(tau: f64, cfg: &NetworkConfig, stats: &InLoadStats, dim: usize) -> Result<(f64, Vec<f64>)> {
    let InScheme::Flexible { mu } = cfg.scheme else {
        return Err(invalid("scheme", "w_vector needs the flexible scheme"));
    };
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("must be nonnegative, got {tau}")));
    }
    let unit = UnitBands::new(stats.epsilon, cfg.xi, mu);
    let series = unit.exponent_series(tau, cfg.alpha, dim)?;
    Ok((2.0 * series[0], series[1..].iter().map(|v| 2.0 * v).collect()))
}

/// Integrate `g(u) e^{-u}` over `u ∈ [0, ∞)`, where `u = π(λ/ξ)z²`, optionally
/// splitting at a kink.
pub(crate) fn integrate_serving<F>(mut g: F, split: Option<f64>, routine: &'static str) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut failure = None;
    let mut h = |u: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        match g(u) {
            Ok(v) => v * (-u).exp(),
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let mut parts = Vec::with_capacity(2);
    match split {
        Some(uc) if uc > 0.0 && uc.is_finite() => {
            parts.push(adaptive_quad(&mut h, 0.0, uc, SERVING_TOL));
            parts.push(adaptive_quad_scaled(&mut h, uc, f64::INFINITY, SERVING_TOL, 1.0));
        }
        _ => parts.push(adaptive_quad_scaled(&mut h, 0.0, f64::INFINITY, SERVING_TOL, 1.0)),
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let mut total = 0.0;
    for r in parts {
        if !r.converged && r.abs_error > 1e-6 {
            return Err(numerical(
                routine,
                format!("serving-distance integral did not converge (error estimate {:.3e})", r.abs_error),
            ));
        }
        total += r.value;
    }
    Ok(total)
}

/// Serving distance as a function of `u = π(λ/ξ)z²`, and the split point for
/// the fixed scheme's kink at `z = R_c`.
pub(crate) fn serving_map(cfg: &NetworkConfig) -> (impl Fn(f64) -> f64, Option<f64>) {
    let rate = PI * cfg.lambda_bs / cfg.xi;
    let split = match cfg.scheme {
        InScheme::Fixed { r_c } => Some(rate * r_c * r_c),
        InScheme::Flexible { .. } => None,
    };
    (move |u: f64| (u / rate).sqrt(), split)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(invalid("tau", format!("must be finite and nonnegative, got {tau}")))
    }
}

/// Per-file STP under the fixed scheme.
pub fn stp_fixed_file(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !matches!(cfg.scheme, InScheme::Fixed { .. }) {
        return Err(invalid("scheme", "stp_fixed_file needs the fixed scheme"));
    }
    check_tau(tau)?;
    let stats = InLoadStats::new(cfg)?;
    if tau == 0.0 {
        return Ok(1.0);
    }
    let (z_of, split) = serving_map(cfg);
    let pmf = &stats.theta_i_pmf;
    let value = integrate_serving(
        |u| {
            let z = z_of(u);
            let q = q_vector(z, tau, cfg, &stats, cfg.m)?;
            let col = lt_toeplitz_exp_column(&q, cfg.m)?;
            Ok(pmf.iter().enumerate().map(|(th, p)| p * col.prefix_sum(cfg.m - th)).sum())
        },
        split,
        "stp_fixed_file",
    )?;
    Ok(value.clamp(0.0, 1.0))
}

/// Per-file STP under the flexible scheme (closed form, no quadrature).
pub fn stp_flexible_file(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    check_tau(tau)?;
    let stats = InLoadStats::new(cfg)?;
    let (w0, sub) = w_vector(tau, cfg, &stats, cfg.m)?;
    let col = lt_toeplitz_inv_column(1.0 / cfg.xi + w0, &sub, cfg.m)?;
    let value: f64 = stats
        .theta_i_pmf
        .iter()
        .enumerate()
        .map(|(th, p)| p * col.prefix_sum(cfg.m - th))
        .sum();
    Ok((value / cfg.xi).clamp(0.0, 1.0))
}

pub fn stp_file(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    match cfg.scheme {
        InScheme::Fixed { .. } => stp_fixed_file(tau, cfg),
        InScheme::Flexible { .. } => stp_flexible_file(tau, cfg),
    }
}

/// STP over all requests, counting uncached files as failures.
pub fn stp_total(tau: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(cfg.cache_design()?.hit_mass * stp_file(tau, cfg)?)
}

/// Fixed range `R_c` giving the same mean nulling load as flexible ratio `mu`.
pub fn match_fixed_range(mu: f64, lambda_bs: f64, xi: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(invalid("mu", format!("must be finite and nonnegative, got {mu}")));
    }
    if !(lambda_bs > 0.0) || !(xi >= 1.0) {
        return Err(invalid("match_fixed_range", format!("need lambda_bs > 0 and xi >= 1, got {lambda_bs}, {xi}")));
    }
    let target = flexible_load(mu, xi);
    if target <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 10.0 * (xi * mu * mu / (PI * lambda_bs)).sqrt();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fixed_load(mid, lambda_bs, xi) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Flexible ratio `mu` giving the same mean nulling load as fixed range `r_c`.
pub fn match_flexible_ratio(r_c: f64, lambda_bs: f64, xi: f64) -> Result<f64> {
    if !(r_c >= 0.0) || !r_c.is_finite() {
        return Err(invalid("r_c", format!("must be finite and nonnegative, got {r_c}")));
    }
    let target = fixed_load(r_c, lambda_bs, xi);
    if target <= 0.0 {
        return Ok(0.0);
    }
    if xi > 1.0 && target <= xi - 1.0 {
        Ok((target / (xi - 1.0)).sqrt())
    } else {
        Ok(((target + 1.0) / xi).sqrt())
    }
}
