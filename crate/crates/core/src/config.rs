//! JSON config document: network fields at the top level plus optional
//! `optimize` and `montecarlo` sections.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::model::{db_to_linear, InScheme, NetworkConfig};
use crate::montecarlo::{default_region_radius, MonteCarloConfig};
use crate::optimizer::{Bounds, Objective, OptimizationProblem, Point, Precisions};

const NETWORK_KEYS: &[&str] = &["M", "L", "alpha", "lambda_bs", "lambda_u", "N", "C", "gamma_z", "xi", "scheme", "tx_power_dbm"];
const SECTION_KEYS: &[&str] = &["optimize", "montecarlo"];

/// Optimizer settings; missing fields take the defaults of
/// [`OptimizationProblem::with_defaults`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub objective: Objective,
    #[serde(default)]
    pub tau_db: Option<f64>,
    #[serde(default)]
    pub bounds: Option<Bounds>,
    #[serde(default)]
    pub precisions: Option<Precisions>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    #[serde(default)]
    pub initial: Option<Point>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            objective: Objective::Stp,
            tau_db: None,
            bounds: None,
            precisions: None,
            max_rounds: None,
            initial: None,
        }
    }
}

impl OptimizeSection {
    /// Problem at `tau_db` (falling back to the section's value, then 0 dB).
    pub fn problem(&self, cfg: &NetworkConfig, tau_db: Option<f64>) -> Result<OptimizationProblem> {
        let tau = db_to_linear(tau_db.or(self.tau_db).unwrap_or(0.0));
        let mut p = OptimizationProblem::with_defaults(self.objective, tau, cfg)?;
        let mut moved_box = false;
        if let Some(b) = self.bounds {
            p.bounds = b;
            moved_box = true;
        }
        if let Some(pr) = self.precisions {
            p.precisions = pr;
            moved_box = true;
        }
        if moved_box {
            p.initial = crate::optimizer::midpoint(&p.bounds, &p.precisions);
        }
        if let Some(r) = self.max_rounds {
            p.max_rounds = r;
        }
        if let Some(init) = self.initial {
            p.initial = init;
        }
        p.validate(cfg)?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_topologies")]
    pub n_topologies: usize,
    #[serde(default = "default_fading")]
    pub n_fading: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub region_radius: Option<f64>,
    #[serde(default)]
    pub guard_radius: Option<f64>,
}

fn default_topologies() -> usize {
    2000
}

fn default_fading() -> usize {
    500
}

fn default_seed() -> u64 {
    42
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            n_topologies: default_topologies(),
            n_fading: default_fading(),
            seed: default_seed(),
            region_radius: None,
            guard_radius: None,
        }
    }
}

impl MonteCarloSection {
    pub fn resolve(&self, cfg: &NetworkConfig) -> Result<MonteCarloConfig> {
        let region_radius = self.region_radius.unwrap_or_else(|| default_region_radius(cfg));
        let mc = MonteCarloConfig {
            n_topologies: self.n_topologies,
            n_fading: self.n_fading,
            region_radius,
            guard_radius: self.guard_radius.unwrap_or(0.5 * region_radius),
            seed: self.seed,
        };
        mc.validate()?;
        Ok(mc)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    #[serde(flatten)]
    pub network: NetworkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSection>,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<ConfigDocument> {
        let value: Value = serde_json::from_str(text)?;
        check_keys(&value)?;
        let doc: ConfigDocument = serde_json::from_value(value).map_err(|e| invalid("config", e.to_string()))?;
        doc.network.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<ConfigDocument> {
        let text = std::fs::read_to_string(path)?;
        ConfigDocument::from_json(&text)
    }
}

/// Reject top-level keys that no field claims, including the range key of
/// the other scheme.
fn check_keys(value: &Value) -> Result<()> {
    let obj = value.as_object().ok_or_else(|| invalid("config", "top level must be a JSON object"))?;
    let range_key = match obj.get("scheme").and_then(Value::as_str) {
        Some("fixed") => "r_c",
        Some("flexible") => "mu",
        Some(other) => return Err(invalid("scheme", format!("must be \"fixed\" or \"flexible\", got \"{other}\""))),
        None => return Err(invalid("scheme", "missing")),
    };
    for key in obj.keys() {
        let known = NETWORK_KEYS.contains(&key.as_str()) || SECTION_KEYS.contains(&key.as_str()) || key == range_key;
        if !known {
            return Err(Error::InvalidParameter { name: "config", reason: format!("unknown key \"{key}\"") });
        }
    }
    Ok(())
}

/// Default document as pretty JSON, handy as a template.
pub fn default_document_json() -> String {
    let doc = ConfigDocument {
        network: NetworkConfig { scheme: InScheme::Flexible { mu: 0.8 }, ..NetworkConfig::default() },
        optimize: Some(OptimizeSection::default()),
        montecarlo: Some(MonteCarloSection::default()),
    };
    serde_json::to_string_pretty(&doc).expect("document serializes")
}
