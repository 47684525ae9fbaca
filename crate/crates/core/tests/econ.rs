use lamp_core::econ::{
    asset_tax, household_income, income_tax, produce, reset_state, step_state, utility, wealth_gini, GovAction,
    HouseholdAction, ScenarioConfig, UtilityParams, XI_EPS,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// x - (1-t) x^(1-k) / (1-k) evaluated at 40 significant digits (mpmath) for the
// exact binary value of each f64 input.
const HSV_ORACLE: [(f64, f64, f64, f64); 8] = [
    (2.0, 0.2, 0.1, 0.341_274_681_712_342_390_759_643_2),
    (3.0, 0.05, 0.2, 0.140_233_186_229_178_198_584_638_3),
    (0.5, 0.3, 0.5, -0.489_949_493_661_166_549_862_106_7),
    (17.25, 0.45, 0.8, 12.389_392_936_125_763_524_151_1),
    (1e-3, 0.1, 0.3, -0.009_212_791_589_312_189_860_644_372),
    (250.0, 0.6, 0.95, 239.456_446_952_660_605_853_938_4),
    (1.0, 0.0, 0.999, -998.999_999_999_999_111_821_580_3),
    (7.5, 0.99, 0.0, 7.424_999_999_999_999_933_386_619),
];

#[test]
fn hsv_matches_high_precision_values() {
    for (x, level, prog, want) in HSV_ORACLE {
        let got_i = income_tax(x, level, prog).unwrap();
        let got_a = asset_tax(x, level, prog).unwrap();
        let tol = 1e-10 * want.abs().max(1.0);
        assert!((got_i - want).abs() < tol, "income_tax({x},{level},{prog}) = {got_i}, want {want}");
        assert_eq!(got_i, got_a);
    }
}

#[test]
fn hsv_reduces_to_flat_tax() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let x: f64 = rng.random_range(0.0..1e3);
        let t: f64 = rng.random_range(0.0..1.0);
        assert!((income_tax(x, t, 0.0).unwrap() - t * x).abs() < 1e-12 * x.max(1.0));
        assert!((asset_tax(x, t, 0.0).unwrap() - t * x).abs() < 1e-12 * x.max(1.0));
    }
}

#[test]
fn scenario_presets() {
    let s2 = ScenarioConfig::preset("s2").unwrap();
    assert_eq!(s2.depreciation_rate, 0.12);
    for name in ["s1", "s2", "s3"] {
        let c = ScenarioConfig::preset(name).unwrap();
        assert_eq!(c.n_households, 10);
        assert_eq!(c.eta, 2.0);
        assert_eq!(c.gamma_frisch, 1.0);
    }
}

fn hsv_ref(x: f64, t: f64, k: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x - (1.0 - t) * x.powf(1.0 - k) / (1.0 - k)
    }
}

fn random_gov(rng: &mut ChaCha8Rng) -> GovAction {
    GovAction {
        tau: rng.random_range(0.0..0.6),
        xi: rng.random_range(0.0..0.6),
        tau_a: rng.random_range(0.0..0.1),
        xi_a: rng.random_range(0.0..0.6),
        spend_ratio: rng.random_range(0.0..0.3),
    }
}

/// Budget identity recomputed from first principles on every household-step.
#[test]
fn budget_identity_holds_over_random_steps() {
    for name in ["s1", "s2", "s3"] {
        let cfg = ScenarioConfig::preset(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = reset_state::<f64>(&cfg, 1).unwrap();
        let mut checked = 0;
        for step in 0..1000 {
            let gov = random_gov(&mut rng);
            let acts: Vec<_> = (0..cfg.n_households)
                .map(|_| HouseholdAction {
                    savings_rate: rng.random_range(0.05..0.95),
                    labor: rng.random_range(0.0..=cfg.h_max),
                })
                .collect();
            let (next, out) = step_state(&state, &cfg, &gov, &acts).unwrap();
            for (i, l) in out.ledger.iter().enumerate() {
                let a = state.assets[i];
                let inc = out.wage * state.efficiency[i] * acts[i].labor + cfg.interest_rate * a;
                let z = inc - hsv_ref(inc, gov.tau, gov.xi) + a - hsv_ref(a, gov.tau_a, gov.xi_a);
                let resid = (1.0 + cfg.consumption_tax_rate) * l.consumption + l.savings - z;
                assert!(resid.abs() < 1e-9 * z.abs().max(1.0), "{name} step {step} hh {i}: {resid}");
                assert!(l.budget_residual(cfg.consumption_tax_rate).abs() < 1e-9 * z.abs().max(1.0));
                checked += 1;
            }
            state = if out.done { reset_state(&cfg, step as u64 + 2).unwrap() } else { next };
        }
        assert_eq!(checked, 1000 * cfg.n_households);
    }
}

#[test]
fn welfare_accumulates_rewards() {
    let cfg = ScenarioConfig::preset("s1").unwrap();
    let mut state = reset_state::<f64>(&cfg, 3).unwrap();
    let acts = vec![HouseholdAction { savings_rate: 0.4, labor: 0.6 }; cfg.n_households];
    let mut sum = 0.0;
    for _ in 0..20 {
        let (next, out) = step_state(&state, &cfg, &cfg.government, &acts).unwrap();
        sum += out.rewards.iter().sum::<f64>();
        assert!((next.welfare - sum).abs() < 1e-9 * sum.abs().max(1.0));
        assert_eq!(out.indicators.wealth_gini, wealth_gini(&next.assets));
        state = next;
    }
}

#[test]
fn production_and_income_examples() {
    let p = produce(&[1.0f64, 3.0], &[1.0, 2.0], &[1.0, 0.5], 0.5, 0.0);
    assert!((p.output - 8f64.sqrt()).abs() < 1e-12);
    assert!((p.wage - 0.5 * p.output / 2.0).abs() < 1e-12);
    assert!((household_income(0.64f64, 2.0, 0.5, 0.04, 3.0) - 0.76).abs() < 1e-12);
}

fn rat(v: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn gini_pairwise(x: &[BigRational]) -> BigRational {
    let total: BigRational = x.iter().cloned().sum();
    if total.is_zero() {
        return BigRational::zero();
    }
    let mut s = BigRational::zero();
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (BigRational::from_integer(BigInt::from(2 * x.len())) * total)
}

#[test]
fn gini_special_cases() {
    assert_eq!(wealth_gini(&[4.0f64; 10]), 0.0);
    let mut v = vec![0.0f64; 10];
    v[7] = 3.5;
    assert_eq!(wealth_gini(&v), 0.9);
    let r = wealth_gini(&[rat(3), rat(1), rat(2)]);
    assert_eq!(r, gini_pairwise(&[rat(3), rat(1), rat(2)]));
}

/// 200 random vectors: exact equality with the pairwise formula, and a strict
/// decrease under any order-preserving rich-to-poor transfer.
#[test]
fn gini_pigou_dalton_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let n = rng.random_range(2..12);
        let raw: Vec<u32> = (0..n).map(|_| rng.random_range(0..1000)).collect();
        let x: Vec<BigRational> = raw.iter().map(|&v| rat(v)).collect();
        let g = wealth_gini(&x);
        assert_eq!(g, gini_pairwise(&x));

        let (mut lo, mut hi) = (0, 0);
        for i in 0..n {
            if raw[i] < raw[lo] {
                lo = i;
            }
            if raw[i] > raw[hi] {
                hi = i;
            }
        }
        if raw[hi] == raw[lo] {
            continue;
        }
        let gap = rat(raw[hi] - raw[lo]);
        let delta = gap * BigRational::new(BigInt::from(rng.random_range(1..50)), BigInt::from(100));
        let mut y = x.clone();
        y[hi] -= delta.clone();
        y[lo] += delta;
        let g2 = wealth_gini(&y);
        assert_eq!(g2, gini_pairwise(&y));
        assert!(g2 < g, "transfer did not reduce inequality");
    }
}

const CRRA: UtilityParams<f64> = UtilityParams {
    eta: 2.0,
    gamma_frisch: 1.0,
    log_utility: false,
};

proptest! {
    #[test]
    fn flat_tax_identity(x in 0.0f64..1e6, t in 0.0f64..0.999) {
        prop_assert!((income_tax(x, t, 0.0).unwrap() - t * x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn hsv_monotone_in_base(x in 0.01f64..1e3, dx in 0.01f64..10.0, t in 0.0f64..0.9, k in 0.0f64..(1.0 - XI_EPS)) {
        // marginal rate 1 - (1-t) x^(-k) can be negative, but after-tax income rises
        let after = |v: f64| v - income_tax(v, t, k).unwrap();
        prop_assert!(after(x + dx) > after(x));
    }

    #[test]
    fn utility_derivatives(c in 0.05f64..20.0, h in 0.05f64..1.0) {
        let e = 1e-6;
        let du_dc = (utility(c + e, h, &CRRA).unwrap() - utility(c - e, h, &CRRA).unwrap()) / (2.0 * e);
        let du_dh = (utility(c, h + e, &CRRA).unwrap() - utility(c, h - e, &CRRA).unwrap()) / (2.0 * e);
        prop_assert!((du_dc - c.powi(-2)).abs() < 1e-5 * c.powi(-2).max(1.0));
        prop_assert!((du_dh + h).abs() < 1e-6);
    }

    #[test]
    fn gini_in_range_and_scale_free(v in prop::collection::vec(0.0f64..100.0, 2..20), s in 0.1f64..50.0) {
        let g = wealth_gini(&v);
        let n = v.len() as f64;
        prop_assert!(g >= -1e-12 && g <= (n - 1.0) / n + 1e-12);
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        prop_assert!((wealth_gini(&scaled) - g).abs() < 1e-9);
    }

    #[test]
    fn step_keeps_assets_nonnegative(seed in 0u64..1000, p in 0.01f64..0.99, h in 0.0f64..1.0) {
        let cfg = ScenarioConfig::preset("s1").unwrap();
        let s = reset_state::<f64>(&cfg, seed).unwrap();
        let acts = vec![HouseholdAction { savings_rate: p, labor: h * cfg.h_max }; cfg.n_households];
        let (next, out) = step_state(&s, &cfg, &cfg.government, &acts).unwrap();
        prop_assert!(next.assets.iter().all(|a| *a >= 0.0 && a.is_finite()));
        prop_assert!(out.rewards.iter().all(|r| r.is_finite()));
        prop_assert_eq!(next.t, 1);
    }
}
