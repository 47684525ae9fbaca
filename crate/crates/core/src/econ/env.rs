use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::{
    asset_tax, household_income, income_tax, produce, utility, wealth_gini, EconError,
    GovAction, GovObjective, Result, ScenarioConfig, UtilityParams,
};
use crate::Scalar;

/// Consumption below this level counts as collapse.
pub const C_MIN: f64 = 1e-8;
const GROWTH_EPS: f64 = 1e-8;

/// A household's savings rate `p in [0,1]` and labor hours `h in [0, h_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdAction<F> {
    pub savings_rate: F,
    pub labor: F,
}

impl<F: Scalar> HouseholdAction<F> {
    /// Maps a raw policy output in `[-1,1]^2` affinely onto the action box.
    /// Inputs outside `[-1,1]` are clamped first.
    pub fn from_raw(raw: [F; 2], h_max: F) -> Self {
        let unit = |x: F| (x.max(-F::one()).min(F::one()) + F::one()) / F::of(2.0);
        Self {
            savings_rate: unit(raw[0]),
            labor: h_max * unit(raw[1]),
        }
    }

    pub fn to_raw(&self, h_max: F) -> [F; 2] {
        let two = F::of(2.0);
        [
            two * self.savings_rate - F::one(),
            two * self.labor / h_max - F::one(),
        ]
    }

    fn in_bounds(&self, h_max: F) -> bool {
        self.savings_rate >= F::zero()
            && self.savings_rate <= F::one()
            && self.labor >= F::zero()
            && self.labor <= h_max
    }
}

/// Wage plus group means for the richest decile and the poorest half.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalObs<F> {
    pub wage: F,
    pub assets_rich: F,
    pub assets_poor: F,
    pub income_rich: F,
    pub income_poor: F,
    pub efficiency_rich: F,
    pub efficiency_poor: F,
}

impl<F: Scalar> GlobalObs<F> {
    pub const DIM: usize = 7;

    /// Groups are recomputed from the given wealth ranking: the top
    /// `ceil(N/10)` and the bottom `floor(N/2)` households by assets, ties
    /// broken by index.
    pub fn from_households(wage: F, assets: &[F], incomes: &[F], efficiency: &[F]) -> Self {
        let n = assets.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            assets[i]
                .partial_cmp(&assets[j])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let n_rich = (n + 9) / 10;
        let n_poor = (n / 2).max(1);
        let poor = &order[..n_poor.min(n)];
        let rich = &order[n.saturating_sub(n_rich)..];
        let avg = |idx: &[usize], v: &[F]| {
            if idx.is_empty() {
                F::zero()
            } else {
                idx.iter().map(|&i| v[i]).sum::<F>() / F::of(idx.len() as f64)
            }
        };
        Self {
            wage,
            assets_rich: avg(rich, assets),
            assets_poor: avg(poor, assets),
            income_rich: avg(rich, incomes),
            income_poor: avg(poor, incomes),
            efficiency_rich: avg(rich, efficiency),
            efficiency_poor: avg(poor, efficiency),
        }
    }

    pub fn to_vec(&self) -> Vec<F> {
        vec![
            self.wage,
            self.assets_rich,
            self.assets_poor,
            self.income_rich,
            self.income_poor,
            self.efficiency_rich,
            self.efficiency_poor,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

/// What one household sees: the shared global observation plus its own state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdObs<F> {
    pub global: GlobalObs<F>,
    pub assets: F,
    pub efficiency: F,
    pub income: F,
}

impl<F: Scalar> HouseholdObs<F> {
    pub const DIM: usize = GlobalObs::<f64>::DIM + 3;

    pub fn to_vec(&self) -> Vec<F> {
        let mut v = self.global.to_vec();
        v.extend([self.assets, self.efficiency, self.income]);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyState<F> {
    pub t: usize,
    pub assets: Vec<F>,
    pub efficiency: Vec<F>,
    /// Income earned in the last period (reference income at reset).
    pub incomes: Vec<F>,
    pub wage: F,
    pub gdp: F,
    pub debt: F,
    /// Cumulative utility of all households since reset.
    pub welfare: F,
    pub last_global_obs: GlobalObs<F>,
}

impl<F: Scalar> EconomyState<F> {
    pub fn n_households(&self) -> usize {
        self.assets.len()
    }

    pub fn is_finite(&self) -> bool {
        self.assets
            .iter()
            .chain(&self.efficiency)
            .chain(&self.incomes)
            .chain([&self.wage, &self.gdp, &self.debt, &self.welfare])
            .all(|v| v.is_finite())
            && self.last_global_obs.is_finite()
    }

    pub fn household_obs(&self, i: usize) -> HouseholdObs<F> {
        HouseholdObs {
            global: self.last_global_obs,
            assets: self.assets[i],
            efficiency: self.efficiency[i],
            income: self.incomes[i],
        }
    }

    pub fn indicators(&self) -> MacroIndicators<F> {
        macro_indicators(&self.assets, self.welfare, self.gdp)
    }
}

/// The indicator vector `(G_w, W, Y)`: wealth Gini, cumulative social welfare
/// and GDP per capita.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MacroIndicators<F> {
    pub wealth_gini: F,
    pub social_welfare: F,
    pub gdp_per_capita: F,
}

impl<F: Scalar> MacroIndicators<F> {
    pub fn to_array(&self) -> [F; 3] {
        [self.wealth_gini, self.social_welfare, self.gdp_per_capita]
    }
}

pub fn macro_indicators<F: Scalar>(assets: &[F], cumulative_welfare: F, gdp: F) -> MacroIndicators<F> {
    let n = assets.len().max(1);
    MacroIndicators {
        wealth_gini: wealth_gini(assets),
        social_welfare: cumulative_welfare,
        gdp_per_capita: gdp / F::of(n as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Truncation,
    /// Non-positive disposable resources.
    CollapseResources,
    /// Consumption below [`C_MIN`].
    CollapseConsumption,
    /// A non-finite quantity appeared.
    CollapseNonFinite,
}

impl DoneReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DoneReason::Truncation => "truncation",
            DoneReason::CollapseResources => "collapse_resources",
            DoneReason::CollapseConsumption => "collapse_consumption",
            DoneReason::CollapseNonFinite => "collapse_nonfinite",
        }
    }

    pub fn is_collapse(&self) -> bool {
        !matches!(self, DoneReason::Truncation)
    }
}

/// Per-household bookkeeping for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdLedger<F> {
    pub assets: F,
    pub hours: F,
    pub income: F,
    pub income_tax: F,
    pub asset_tax: F,
    /// `z = i - T(i) + a - T^a(a)`
    pub disposable: F,
    /// End-of-period asset purchase `p z`.
    pub savings: F,
    pub consumption: F,
    /// Next period's assets after depreciation.
    pub next_assets: F,
}

impl<F: Scalar> HouseholdLedger<F> {
    /// `(1+tau_s) c + a' - (i - T(i) + a - T^a(a))` with `a'` the savings.
    pub fn budget_residual(&self, consumption_tax: F) -> F {
        (F::one() + consumption_tax) * self.consumption + self.savings
            - (self.income - self.income_tax + self.assets - self.asset_tax)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<F> {
    pub rewards: Vec<F>,
    pub gov_reward: F,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
    pub indicators: MacroIndicators<F>,
    pub ledger: Vec<HouseholdLedger<F>>,
    pub output: F,
    pub wage: F,
    pub tax_revenue: F,
    pub spending: F,
}

fn utility_params<F: Scalar>(cfg: &ScenarioConfig) -> UtilityParams<F> {
    UtilityParams {
        eta: F::of(cfg.eta),
        gamma_frisch: F::of(cfg.gamma_frisch),
        log_utility: cfg.log_utility,
    }
}

/// Draws initial assets and efficiencies from the configured log-normals.
///
/// The initial wage and GDP come from production at reference hours `h_max / 2`.
pub fn reset_state<F: Scalar>(cfg: &ScenarioConfig, seed: u64) -> Result<EconomyState<F>> {
    cfg.validate()?;
    let n = cfg.n_households;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lognormal = |mu: f64, sd: f64| {
        LogNormal::new(mu, sd).map_err(|e| EconError::InvalidConfig(e.to_string()))
    };
    let asset_dist = lognormal(cfg.asset_log_mean, cfg.asset_log_sd)?;
    let eff_dist = lognormal(cfg.efficiency_log_mean, cfg.efficiency_log_sd)?;
    let assets: Vec<F> = (0..n).map(|_| F::of(asset_dist.sample(&mut rng))).collect();
    let efficiency: Vec<F> = (0..n).map(|_| F::of(eff_dist.sample(&mut rng))).collect();

    let ref_hours = vec![F::of(0.5 * cfg.h_max); n];
    let prod = produce(
        &assets,
        &efficiency,
        &ref_hours,
        F::of(cfg.capital_share),
        F::zero(),
    );
    let rate = F::of(cfg.interest_rate);
    let incomes: Vec<F> = (0..n)
        .map(|i| household_income(prod.wage, efficiency[i], ref_hours[i], rate, assets[i]))
        .collect();
    let obs = GlobalObs::from_households(prod.wage, &assets, &incomes, &efficiency);
    Ok(EconomyState {
        t: 0,
        assets,
        efficiency,
        incomes,
        wage: prod.wage,
        gdp: prod.output,
        debt: F::zero(),
        welfare: F::zero(),
        last_global_obs: obs,
    })
}

/// Advances the economy one period. Pure: the input state is not modified.
pub fn step_state<F: Scalar>(
    state: &EconomyState<F>,
    cfg: &ScenarioConfig,
    gov: &GovAction,
    actions: &[HouseholdAction<F>],
) -> Result<(EconomyState<F>, StepOutcome<F>)> {
    let n = state.n_households();
    if actions.len() != n {
        return Err(EconError::ActionDimension {
            expected: n,
            got: actions.len(),
        });
    }
    let h_max = F::of(cfg.h_max);
    for (index, a) in actions.iter().enumerate() {
        if !a.in_bounds(h_max) {
            return Err(EconError::ActionBounds {
                index,
                savings_rate: a.savings_rate.to_f64_lossy(),
                labor: a.labor.to_f64_lossy(),
            });
        }
    }
    gov.validate()?;

    let tau_s = F::of(cfg.consumption_tax_rate);
    let rate = F::of(cfg.interest_rate);
    let keep = F::one() - F::of(cfg.depreciation_rate);
    let (tau, xi, tau_a, xi_a) = (F::of(gov.tau), F::of(gov.xi), F::of(gov.tau_a), F::of(gov.xi_a));
    let prefs = utility_params::<F>(cfg);
    let c_min = F::of(C_MIN);

    let hours: Vec<F> = actions.iter().map(|a| a.labor).collect();
    let prod = produce(
        &state.assets,
        &state.efficiency,
        &hours,
        F::of(cfg.capital_share),
        state.wage,
    );

    let mut collapse: Option<DoneReason> = None;
    let mut ledger = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for (i, act) in actions.iter().enumerate() {
        let a = state.assets[i];
        let income = household_income(prod.wage, state.efficiency[i], act.labor, rate, a);
        let t_inc = income_tax(income.max(F::zero()), tau, xi)?;
        let t_ast = asset_tax(a.max(F::zero()), tau_a, xi_a)?;
        let disposable = income - t_inc + a - t_ast;
        let savings = act.savings_rate * disposable;
        let consumption = (F::one() - act.savings_rate) * disposable / (F::one() + tau_s);
        let next_assets = keep * savings;

        let finite = [income, t_inc, t_ast, disposable, savings, consumption]
            .iter()
            .all(|v| v.is_finite());
        let this_collapse = if !finite {
            Some(DoneReason::CollapseNonFinite)
        } else if disposable <= F::zero() {
            Some(DoneReason::CollapseResources)
        } else if consumption < c_min {
            Some(DoneReason::CollapseConsumption)
        } else {
            None
        };
        if collapse.is_none() {
            collapse = this_collapse;
        }
        let c_eff = if consumption.is_finite() {
            consumption.max(c_min)
        } else {
            c_min
        };
        rewards.push(utility(c_eff, act.labor, &prefs)?);
        ledger.push(HouseholdLedger {
            assets: a,
            hours: act.labor,
            income,
            income_tax: t_inc,
            asset_tax: t_ast,
            disposable,
            savings,
            consumption,
            next_assets,
        });
    }

    let spending = F::of(gov.spend_ratio) * prod.output;
    let tax_revenue: F = ledger
        .iter()
        .map(|l| l.income_tax + l.asset_tax + tau_s * l.consumption)
        .sum();
    let debt = (F::one() + rate) * state.debt + spending - tax_revenue;

    let mut next_assets: Vec<F> = ledger.iter().map(|l| l.next_assets.max(F::zero())).collect();
    if next_assets.iter().any(|v| !v.is_finite()) {
        next_assets = state.assets.clone();
    }
    let incomes: Vec<F> = ledger
        .iter()
        .zip(&state.incomes)
        .map(|(l, &prev)| if l.income.is_finite() { l.income } else { prev })
        .collect();
    let welfare = state.welfare + rewards.iter().copied().sum::<F>();
    let indicators = macro_indicators(&next_assets, welfare, prod.output);

    let growth = (prod.output - state.gdp) / state.gdp.max(F::of(GROWTH_EPS));
    let gov_reward = match cfg.gov_objective {
        GovObjective::GrowthMinusGini => growth - F::of(cfg.gini_weight) * indicators.wealth_gini,
        GovObjective::Growth => growth,
    };

    let t = state.t + 1;
    let done_reason = collapse.or(if t >= cfg.max_years {
        Some(DoneReason::Truncation)
    } else {
        None
    });
    let mut next = EconomyState {
        t,
        last_global_obs: GlobalObs::from_households(prod.wage, &next_assets, &incomes, &state.efficiency),
        assets: next_assets,
        efficiency: state.efficiency.clone(),
        incomes,
        wage: prod.wage,
        gdp: prod.output,
        debt,
        welfare,
    };
    let done_reason = if next.is_finite() {
        done_reason
    } else {
        next.debt = state.debt;
        next.wage = state.wage;
        next.gdp = state.gdp;
        next.welfare = state.welfare;
        next.last_global_obs = state.last_global_obs;
        Some(DoneReason::CollapseNonFinite)
    };

    Ok((
        next,
        StepOutcome {
            rewards,
            gov_reward,
            done: done_reason.is_some(),
            done_reason,
            indicators,
            ledger,
            output: prod.output,
            wage: prod.wage,
            tax_revenue,
            spending,
        },
    ))
}

/// Stateful wrapper around [`reset_state`] / [`step_state`].
#[derive(Debug, Clone)]
pub struct Economy<F> {
    config: ScenarioConfig,
    state: EconomyState<F>,
}

impl<F: Scalar> Economy<F> {
    pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            state: reset_state(config, seed)?,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &EconomyState<F> {
        &self.state
    }

    pub fn n_households(&self) -> usize {
        self.state.n_households()
    }

    pub fn step(&mut self, gov: &GovAction, actions: &[HouseholdAction<F>]) -> Result<StepOutcome<F>> {
        let (next, outcome) = step_state(&self.state, &self.config, gov, actions)?;
        self.state = next;
        Ok(outcome)
    }
}
