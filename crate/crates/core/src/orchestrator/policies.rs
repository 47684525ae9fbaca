use rand::Rng;

use crate::econ::{asset_tax, income_tax, utility, GovAction, ScenarioConfig, UtilityParams, XI_EPS};

/// Uniform raw action in `[-1, 1]^2`.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]
}

/// What the rule baseline looks at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleObs {
    pub wage: f64,
    pub efficiency: f64,
    pub assets: f64,
}

pub const RULE_GRID: usize = 21;

fn grid_point(k: usize) -> f64 {
    -1.0 + 2.0 * k as f64 / (RULE_GRID - 1) as f64
}

/// One-period utility of a raw action, taking the wage as given.
/// `None` when the action leaves no consumption.
pub fn myopic_utility(obs: &RuleObs, raw: [f64; 2], cfg: &ScenarioConfig, gov: &GovAction) -> Option<f64> {
    let p = (raw[0] + 1.0) / 2.0;
    let h = (raw[1] + 1.0) / 2.0 * cfg.h_max;
    let income = obs.wage * obs.efficiency * h + cfg.interest_rate * obs.assets;
    let t_inc = income_tax(income.max(0.0), gov.tau, gov.xi).ok()?;
    let t_ast = asset_tax(obs.assets.max(0.0), gov.tau_a, gov.xi_a).ok()?;
    let z = income - t_inc + obs.assets - t_ast;
    let c = (1.0 - p) * z / (1.0 + cfg.consumption_tax_rate);
    if !(c > 0.0) {
        return None;
    }
    let prefs = UtilityParams {
        eta: cfg.eta,
        gamma_frisch: cfg.gamma_frisch,
        log_utility: cfg.log_utility,
    };
    utility(c, h, &prefs).ok()
}

/// Argmax of [`myopic_utility`] over a 21 x 21 grid of raw actions; the first
/// maximizer in scan order (savings outer, labor inner) wins.
pub fn rule_policy(obs: &RuleObs, cfg: &ScenarioConfig, gov: &GovAction) -> [f64; 2] {
    let mut best = [-1.0, -1.0];
    let mut best_u = f64::NEG_INFINITY;
    for i in 0..RULE_GRID {
        for j in 0..RULE_GRID {
            let raw = [grid_point(i), grid_point(j)];
            if let Some(u) = myopic_utility(obs, raw, cfg, gov) {
                if u > best_u {
                    best_u = u;
                    best = raw;
                }
            }
        }
    }
    best
}

/// Uniform fiscal action inside the valid bounds.
pub fn random_gov_action<R: Rng + ?Sized>(rng: &mut R) -> GovAction {
    GovAction {
        tau: rng.random_range(0.0..0.5),
        xi: rng.random_range(0.0..0.5 - XI_EPS),
        tau_a: rng.random_range(0.0..0.1),
        xi_a: rng.random_range(0.0..0.5 - XI_EPS),
        spend_ratio: rng.random_range(0.0..0.3),
    }
}
