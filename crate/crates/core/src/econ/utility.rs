use super::{EconError, Result};
use crate::Scalar;

/// Preference parameters: relative risk aversion `eta` and inverse Frisch
/// elasticity `gamma_frisch`. `log_utility` replaces the CRRA term with `ln c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams<F> {
    pub eta: F,
    pub gamma_frisch: F,
    pub log_utility: bool,
}

/// Period utility `c^(1-eta)/(1-eta) - h^(1+gamma)/(1+gamma)`.
pub fn utility<F: Scalar>(consumption: F, hours: F, params: &UtilityParams<F>) -> Result<F> {
    if !(consumption > F::zero()) || !consumption.is_finite() {
        return Err(EconError::Domain {
            what: "consumption",
            value: consumption.to_f64_lossy(),
        });
    }
    if !(hours >= F::zero()) {
        return Err(EconError::Domain {
            what: "hours",
            value: hours.to_f64_lossy(),
        });
    }
    let consumption_term = if params.log_utility {
        consumption.ln()
    } else {
        let k = F::one() - params.eta;
        consumption.powf(k) / k
    };
    let g = F::one() + params.gamma_frisch;
    Ok(consumption_term - hours.powf(g) / g)
}
