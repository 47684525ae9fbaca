use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewsKind {
    Long,
    Short,
    None,
}

impl NewsKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NewsKind::Long => "long",
            NewsKind::Short => "short",
            NewsKind::None => "none",
        }
    }
}

/// How an indicator change is measured against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChangeMode {
    /// `|x_t - x_{t-1}| / max(|x_{t-1}|, eps_rel)`
    #[default]
    Relative,
    /// `|x_t - x_{t-1}|`
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub long_interval: usize,
    pub sigma: f64,
    pub mode: ChangeMode,
    pub eps_rel: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            long_interval: 20,
            sigma: 0.4,
            mode: ChangeMode::Relative,
            eps_rel: 1e-8,
        }
    }
}

/// Largest per-indicator change between two snapshots.
pub fn max_change(current: &[f64], previous: &[f64], mode: ChangeMode, eps_rel: f64) -> f64 {
    current
        .iter()
        .zip(previous)
        .map(|(&c, &p)| match mode {
            ChangeMode::Relative => (c - p).abs() / p.abs().max(eps_rel),
            ChangeMode::Absolute => (c - p).abs(),
        })
        .fold(0.0, f64::max)
}

/// Long at positive multiples of the interval, otherwise short when some
/// indicator moved by more than `sigma`, otherwise none.
pub fn classify_news_type(current: &[f64], previous: Option<&[f64]>, t: usize, cfg: &SchedulerConfig) -> NewsKind {
    if t > 0 && cfg.long_interval > 0 && t % cfg.long_interval == 0 {
        return NewsKind::Long;
    }
    match previous {
        Some(prev) if t >= 1 && max_change(current, prev, cfg.mode, cfg.eps_rel) > cfg.sigma => NewsKind::Short,
        _ => NewsKind::None,
    }
}

/// Seeded Bernoulli trigger used when the timing rule is ablated: one uniform
/// draw per step, long with `p_long`, short with `p_short`.
#[derive(Debug, Clone)]
pub struct RandomTrigger {
    pub p_long: f64,
    pub p_short: f64,
    rng: ChaCha8Rng,
}

impl RandomTrigger {
    pub fn new(p_long: f64, p_short: f64, seed: u64) -> Self {
        assert!(p_long >= 0.0 && p_short >= 0.0 && p_long + p_short <= 1.0, "trigger rates");
        Self {
            p_long,
            p_short,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_kind(&mut self) -> NewsKind {
        let u: f64 = self.rng.random();
        if u < self.p_long {
            NewsKind::Long
        } else if u < self.p_long + self.p_short {
            NewsKind::Short
        } else {
            NewsKind::None
        }
    }
}
