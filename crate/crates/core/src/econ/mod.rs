//! Heterogeneous-household economy with HSV taxation.
//!
//! Households choose a savings rate and labor hours each period; income is
//! labor income plus exogenous interest on assets, taxed by nonlinear HSV
//! schedules on income and on assets. Output is Cobb-Douglas in aggregate
//! assets and effective labor.

mod config;
mod env;
mod gini;
mod production;
mod tax;
mod utility;

pub use config::{GovAction, GovObjective, ScenarioConfig, XI_EPS};
pub use env::{
    macro_indicators, reset_state, step_state, DoneReason, Economy, EconomyState, GlobalObs,
    HouseholdAction, HouseholdLedger, HouseholdObs, MacroIndicators, StepOutcome, C_MIN,
};
pub use gini::wealth_gini;
pub use production::{household_income, produce, Production};
pub use tax::{asset_tax, income_tax};
pub use utility::{utility, UtilityParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EconError {
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("expected {expected} household actions, got {got}")]
    ActionDimension { expected: usize, got: usize },
    #[error("household {index} action out of bounds: savings_rate={savings_rate}, labor={labor}")]
    ActionBounds {
        index: usize,
        savings_rate: f64,
        labor: f64,
    },
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),
    #[error("scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EconError> = std::result::Result<T, E>;
