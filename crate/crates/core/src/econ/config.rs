use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EconError, Result};

/// Progressivity parameters are singular at 1; valid range is `[0, 1 - XI_EPS]`.
pub const XI_EPS: f64 = 1e-3;

const S1: &str = include_str!("../../scenarios/s1.json");
const S2: &str = include_str!("../../scenarios/s2.json");
const S3: &str = include_str!("../../scenarios/s3.json");

/// Government objective used for `gov_reward`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GovObjective {
    /// `(Y_t - Y_{t-1}) / max(Y_{t-1}, eps) - gini_weight * G_w`
    #[default]
    GrowthMinusGini,
    /// Relative GDP growth only.
    Growth,
}

/// The five-tuple fiscal action: income-tax level/progressivity, asset-tax
/// level/progressivity and the spending-to-output ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovAction {
    pub tau: f64,
    pub xi: f64,
    pub tau_a: f64,
    pub xi_a: f64,
    pub spend_ratio: f64,
}

impl Default for GovAction {
    fn default() -> Self {
        Self {
            tau: 0.2,
            xi: 0.1,
            tau_a: 0.02,
            xi_a: 0.05,
            spend_ratio: 0.1,
        }
    }
}

impl GovAction {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        let prog = |v: f64| (0.0..=1.0 - XI_EPS).contains(&v);
        let checks: [(&'static str, f64, bool); 5] = [
            ("tau", self.tau, unit(self.tau)),
            ("xi", self.xi, prog(self.xi)),
            ("tau_a", self.tau_a, unit(self.tau_a)),
            ("xi_a", self.xi_a, prog(self.xi_a)),
            ("spend_ratio", self.spend_ratio, unit(self.spend_ratio)),
        ];
        for (what, value, ok) in checks {
            if !ok {
                return Err(EconError::Domain { what, value });
            }
        }
        Ok(())
    }
}

/// Structural parameters of one economic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub depreciation_rate: f64,
    pub consumption_tax_rate: f64,
    pub interest_rate: f64,
    pub gini_weight: f64,
    pub n_households: usize,
    pub max_years: usize,
    pub eta: f64,
    pub gamma_frisch: f64,
    #[serde(default)]
    pub log_utility: bool,
    pub capital_share: f64,
    pub h_max: f64,
    pub asset_log_mean: f64,
    pub asset_log_sd: f64,
    pub efficiency_log_mean: f64,
    pub efficiency_log_sd: f64,
    #[serde(default)]
    pub gov_objective: GovObjective,
    #[serde(default)]
    pub government: GovAction,
}

impl ScenarioConfig {
    /// Bundled preset `s1`, `s2` or `s3`.
    pub fn preset(name: &str) -> Result<Self> {
        let raw = match name {
            "s1" => S1,
            "s2" => S2,
            "s3" => S3,
            other => return Err(EconError::UnknownPreset(other.to_string())),
        };
        Self::from_json(raw)
    }

    /// Loads a preset name or a JSON file path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "s1" | "s2" | "s3" => Self::preset(name_or_path),
            path => Self::from_file(path),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EconError::InvalidConfig(msg));
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        for (what, v) in [
            ("depreciation_rate", self.depreciation_rate),
            ("consumption_tax_rate", self.consumption_tax_rate),
            ("interest_rate", self.interest_rate),
            ("capital_share", self.capital_share),
        ] {
            if !open_unit(v) {
                return bad(format!("{what} must lie in (0,1), got {v}"));
            }
        }
        if self.n_households < 2 {
            return bad(format!("n_households must be >= 2, got {}", self.n_households));
        }
        if self.max_years < 1 {
            return bad("max_years must be >= 1".into());
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.eta == 1.0 && !self.log_utility {
            return bad("eta = 1 requires log_utility".into());
        }
        if !(self.gamma_frisch > 0.0) {
            return bad(format!("gamma_frisch must be positive, got {}", self.gamma_frisch));
        }
        if !(self.h_max > 0.0) {
            return bad(format!("h_max must be positive, got {}", self.h_max));
        }
        if !(self.gini_weight >= 0.0) {
            return bad(format!("gini_weight must be >= 0, got {}", self.gini_weight));
        }
        if !(self.asset_log_sd >= 0.0 && self.efficiency_log_sd >= 0.0) {
            return bad("log-normal sd must be >= 0".into());
        }
        self.government.validate()
    }
}
