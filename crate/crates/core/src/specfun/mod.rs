//! Special functions and structured linear algebra used by the analytic
//! formulas: gamma-family functions, the Gauss hypergeometric function at
//! negative argument, lower-triangular Toeplitz column recurrences and an
//! adaptive Gauss–Kronrod integrator.
//!
//! Everything here is pure and reentrant.

mod gamma;
mod hyper;
mod quad;
mod toeplitz;

pub use gamma::{beta_fn, gamma, ln_beta, ln_gamma, reg_inc_beta, reg_lower_gamma, rgamma};
pub use hyper::{gauss_2f1_neg, gauss_2f1_neg_minus_one, gauss_2f1_neg_scaled};
pub use quad::{adaptive_quad, adaptive_quad_scaled, QuadResult, DEFAULT_TOL};
pub use toeplitz::{lt_toeplitz_exp_column, lt_toeplitz_inv_column, ToeplitzColumn};

/// Normalized sinc, `sin(πx)/(πx)`, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    let px = std::f64::consts::PI * x;
    if px.abs() < 1e-5 {
        // Taylor: 1 - (πx)²/6 + (πx)⁴/120
        let p2 = px * px;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        px.sin() / px
    }
}
