use super::{EconError, Result, XI_EPS};
use crate::Scalar;

fn check<F: Scalar>(x: F, level: F, prog: F, names: [&'static str; 3]) -> Result<()> {
    if !(x >= F::zero()) || !x.is_finite() {
        return Err(EconError::Domain {
            what: names[0],
            value: x.to_f64_lossy(),
        });
    }
    if !(level >= F::zero() && level < F::one()) {
        return Err(EconError::Domain {
            what: names[1],
            value: level.to_f64_lossy(),
        });
    }
    if !(prog >= F::zero() && prog <= F::of(1.0 - XI_EPS)) {
        return Err(EconError::Domain {
            what: names[2],
            value: prog.to_f64_lossy(),
        });
    }
    Ok(())
}

fn hsv<F: Scalar>(x: F, level: F, prog: F) -> F {
    if x == F::zero() {
        return F::zero();
    }
    let keep = F::one() - prog;
    x - (F::one() - level) * x.powf(keep) / keep
}

/// HSV income tax `T(i) = i - (1-tau) i^(1-xi) / (1-xi)`.
///
/// Negative values are transfers. `T(0) = 0`.
pub fn income_tax<F: Scalar>(income: F, tau: F, xi: F) -> Result<F> {
    check(income, tau, xi, ["income", "tau", "xi"])?;
    Ok(hsv(income, tau, xi))
}

/// HSV asset tax `T^a(a) = a - (1-tau_a)/(1-xi_a) a^(1-xi_a)`.
pub fn asset_tax<F: Scalar>(assets: F, tau_a: F, xi_a: F) -> Result<F> {
    check(assets, tau_a, xi_a, ["assets", "tau_a", "xi_a"])?;
    Ok(hsv(assets, tau_a, xi_a))
}
