use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Production<F> {
    pub output: F,
    pub wage: F,
}

/// Cobb-Douglas output `Y = K^alpha L^(1-alpha)` with `K = sum a_i`,
/// `L = sum e_i h_i`, and the wage set to the marginal product of labor.
///
/// With no effective labor, output is zero and the wage carries over.
pub fn produce<F: Scalar>(
    assets: &[F],
    efficiency: &[F],
    hours: &[F],
    capital_share: F,
    prev_wage: F,
) -> Production<F> {
    let capital: F = assets.iter().copied().sum();
    let labor: F = efficiency
        .iter()
        .zip(hours)
        .map(|(&e, &h)| e * h)
        .sum();
    if labor <= F::zero() {
        return Production {
            output: F::zero(),
            wage: prev_wage,
        };
    }
    let output = capital.powf(capital_share) * labor.powf(F::one() - capital_share);
    Production {
        output,
        wage: (F::one() - capital_share) * output / labor,
    }
}

/// `i = W e h + r a`.
#[inline]
pub fn household_income<F: Scalar>(wage: F, efficiency: F, hours: F, rate: F, assets: F) -> F {
    wage * efficiency * hours + rate * assets
}
