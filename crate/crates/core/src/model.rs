//! Network configuration, file popularity and the caching design.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// How a user picks the interferers it asks to null.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum InScheme {
    /// Every interferer within `r_c` meters.
    Fixed { r_c: f64 },
    /// Every interferer within `mu` times the user's serving distance.
    Flexible { mu: f64 },
}

impl InScheme {
    pub fn kind(&self) -> SchemeKind {
        match self {
            InScheme::Fixed { .. } => SchemeKind::Fixed,
            InScheme::Flexible { .. } => SchemeKind::Flexible,
        }
    }

    /// The scheme's range parameter: meters for fixed, a ratio for flexible.
    pub fn range(&self) -> f64 {
        match *self {
            InScheme::Fixed { r_c } => r_c,
            InScheme::Flexible { mu } => mu,
        }
    }

    pub fn with_range(&self, value: f64) -> InScheme {
        match self {
            InScheme::Fixed { .. } => InScheme::Fixed { r_c: value },
            InScheme::Flexible { .. } => InScheme::Flexible { mu: value },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Fixed,
    Flexible,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::Fixed => "fixed",
            SchemeKind::Flexible => "flexible",
        })
    }
}

fn default_tx_power() -> f64 {
    46.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Antennas per BS.
    #[serde(rename = "M")]
    pub m: usize,
    /// Maximum DoF a BS spends on nulling.
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: f64,
    /// BS density in m⁻².
    pub lambda_bs: f64,
    /// User density in m⁻².
    pub lambda_u: f64,
    /// Library size.
    #[serde(rename = "N")]
    pub n: usize,
    /// Cache size per BS.
    #[serde(rename = "C")]
    pub c: usize,
    pub gamma_z: f64,
    /// File diversity gain, `N_c / C`.
    pub xi: f64,
    #[serde(flatten)]
    pub scheme: InScheme,
    /// Not used by any SIR computation.
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            m: 8,
            l: 2,
            alpha: 4.0,
            lambda_bs: 1e-4,
            lambda_u: 8e-4,
            n: 100,
            c: 40,
            gamma_z: 0.8,
            xi: 1.75,
            scheme: InScheme::Flexible { mu: 0.8 },
            tx_power_dbm: 46.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(invalid("M", "must be at least 1"));
        }
        if self.l + 1 > self.m {
            return Err(invalid("L", format!("must be at most M-1 = {}, got {}", self.m - 1, self.l)));
        }
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("must exceed 2, got {}", self.alpha)));
        }
        if !(self.lambda_bs > 0.0) || !self.lambda_bs.is_finite() {
            return Err(invalid("lambda_bs", format!("must be positive, got {}", self.lambda_bs)));
        }
        if !(self.lambda_u > 0.0) || !self.lambda_u.is_finite() {
            return Err(invalid("lambda_u", format!("must be positive, got {}", self.lambda_u)));
        }
        if self.n < 1 {
            return Err(invalid("N", "must be at least 1"));
        }
        if self.c < 1 || self.c > self.n {
            return Err(invalid("C", format!("must lie in [1, N = {}], got {}", self.n, self.c)));
        }
        if !(self.gamma_z >= 0.0) || !self.gamma_z.is_finite() {
            return Err(invalid("gamma_z", format!("must be nonnegative, got {}", self.gamma_z)));
        }
        let xi_max = self.xi_max();
        if !(self.xi >= 1.0 - 1e-12 && self.xi <= xi_max + 1e-12) {
            return Err(invalid("xi", format!("must lie in [1, N/C = {xi_max}], got {}", self.xi)));
        }
        let range = self.scheme.range();
        if !(range >= 0.0) || !range.is_finite() {
            let name = match self.scheme {
                InScheme::Fixed { .. } => "r_c",
                InScheme::Flexible { .. } => "mu",
            };
            return Err(invalid(name, format!("must be nonnegative, got {range}")));
        }
        Ok(())
    }

    pub fn xi_max(&self) -> f64 {
        self.n as f64 / self.c as f64
    }

    /// `2/α`.
    pub fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    pub fn popularity(&self) -> Result<Popularity> {
        zipf_popularity(self.n, self.gamma_z)
    }

    pub fn cache_design(&self) -> Result<CacheDesign> {
        fudc_design(&self.popularity()?, self.c, self.xi)
    }

    pub fn with_scheme(&self, scheme: InScheme) -> NetworkConfig {
        NetworkConfig { scheme, ..self.clone() }
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// Request probabilities `a_n`, most popular first.
#[derive(Clone, Debug, PartialEq)]
pub struct Popularity {
    weights: Vec<f64>,
}

impl Popularity {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Probability that a request falls in the `k` most popular files.
    pub fn head_mass(&self, k: usize) -> f64 {
        self.weights[..k.min(self.weights.len())].iter().sum()
    }
}

pub fn zipf_popularity(n: usize, gamma_z: f64) -> Result<Popularity> {
    if n == 0 {
        return Err(invalid("N", "library must hold at least one file"));
    }
    let raw: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-gamma_z)).collect();
    let total: f64 = raw.iter().sum();
    Ok(Popularity { weights: raw.into_iter().map(|w| w / total).collect() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheDesign {
    /// Number of most popular files eligible for caching.
    pub n_c: usize,
    /// Probability that a BS caches a given eligible file.
    pub t_c: f64,
    /// Probability that a request is for an eligible file.
    pub hit_mass: f64,
}

/// Caching design where each BS stores `C` files drawn uniformly from the
/// `round(ξC)` most popular.
pub fn fudc_design(popularity: &Popularity, c: usize, xi: f64) -> Result<CacheDesign> {
    let n = popularity.len();
    if c == 0 || c > n {
        return Err(invalid("C", format!("must lie in [1, N = {n}], got {c}")));
    }
    let xi_max = n as f64 / c as f64;
    if !(xi >= 1.0 - 1e-12 && xi <= xi_max + 1e-12) {
        return Err(invalid("xi", format!("must lie in [1, {xi_max}], got {xi}")));
    }
    let n_c = ((xi * c as f64).round() as usize).clamp(c, n);
    Ok(CacheDesign {
        n_c,
        t_c: c as f64 / n_c as f64,
        hit_mass: popularity.head_mass(n_c),
    })
}

/// Density of the distance to the nearest BS caching a given file.
pub fn serving_distance_pdf(z: f64, lambda_bs: f64, xi: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    let rate = PI * lambda_bs / xi;
    2.0 * rate * z * (-rate * z * z).exp()
}

/// An interfering BS as seen from the typical user.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    /// Distance to the typical user in meters.
    pub radius: f64,
    /// Whether the BS spends a DoF to null its signal at the typical user.
    pub nulled: bool,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
