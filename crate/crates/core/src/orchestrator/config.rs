use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{OrchestratorError, Result};
use crate::econ::{utility, ScenarioConfig, UtilityParams, C_MIN};
use crate::embed::EmbedSources;
use crate::marl::RewardScale;
use crate::think::ChangeMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Language-augmented actors.
    Lamp,
    /// Numeric actors only.
    Maddpg,
    Random,
    Rule,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lamp" => Some(Self::Lamp),
            "maddpg" => Some(Self::Maddpg),
            "random" => Some(Self::Random),
            "rule" => Some(Self::Rule),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lamp => "lamp",
            Self::Maddpg => "maddpg",
            Self::Random => "random",
            Self::Rule => "rule",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Self::Lamp | Self::Maddpg)
    }

    pub fn uses_language(self) -> bool {
        self == Self::Lamp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Speak,
    ExperiencePool,
    LongTerm,
    ShortTerm,
    TimingScheduler,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Speak,
        Ablation::ExperiencePool,
        Ablation::LongTerm,
        Ablation::ShortTerm,
        Ablation::TimingScheduler,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "speak" => Some(Self::Speak),
            "experience_pool" | "pool" => Some(Self::ExperiencePool),
            "long_term" | "long" => Some(Self::LongTerm),
            "short_term" | "short" => Some(Self::ShortTerm),
            "timing_scheduler" | "scheduler" => Some(Self::TimingScheduler),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Speak => "speak",
            Self::ExperiencePool => "experience_pool",
            Self::LongTerm => "long_term",
            Self::ShortTerm => "short_term",
            Self::TimingScheduler => "timing_scheduler",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Scripted,
    Remote,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scripted" => Some(Self::Scripted),
            "remote" => Some(Self::Remote),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Hashing,
    Remote,
}

/// How the government acts each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GovPolicy {
    /// The scenario's fiscal action every period.
    #[default]
    Fixed,
    /// Uniform draws inside the valid fiscal bounds (stress testing).
    Random,
}

/// Everything a run needs; serialized verbatim into `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    pub episodes: usize,
    pub steps: usize,
    pub backend: BackendKind,
    pub policy: PolicyKind,
    pub ablations: BTreeSet<Ablation>,
    pub out_dir: Option<PathBuf>,

    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub projection_lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub warmup_factor: usize,
    pub explore_sigma: f64,
    pub reward_scale: RewardScale,
    /// Critic target added on collapse. `None`: the scaled utility floor
    /// `u(C_MIN, h_max)` held forever, or zero under `RewardScale::Raw`.
    pub collapse_value: Option<f64>,

    pub long_interval: usize,
    pub sigma: f64,
    pub change_mode: ChangeMode,
    /// Short-news rate of the random trigger used when the timing rule is ablated.
    pub random_short_rate: f64,
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,

    pub embed_dim: usize,
    pub encoder: EncoderKind,
    pub encoder_dim: usize,
    pub embed_sources: EmbedSources,
    pub selector_key_dim: usize,
    pub train_selector: bool,
    pub selector_lr: f64,

    pub gov_policy: GovPolicy,
    pub eval_harvest: bool,
    pub pool_file: Option<PathBuf>,
    pub fallback_to_scripted: bool,
    /// Write `checkpoint.json` every this many episodes (0: only at the end).
    pub checkpoint_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "s1".into(),
            seed: 7,
            episodes: 20,
            steps: 100,
            backend: BackendKind::Scripted,
            policy: PolicyKind::Lamp,
            ablations: BTreeSet::new(),
            out_dir: None,
            gamma: 0.975,
            tau: 5e-3,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            projection_lr: 3e-4,
            buffer_capacity: 1_000_000,
            batch_size: 64,
            warmup_factor: 10,
            explore_sigma: 0.1,
            reward_scale: RewardScale::Symlog,
            collapse_value: None,
            long_interval: 20,
            sigma: 0.4,
            change_mode: ChangeMode::Relative,
            random_short_rate: 0.1,
            k1: 3,
            k2: 5,
            k3: 3,
            embed_dim: 5,
            encoder: EncoderKind::Hashing,
            encoder_dim: 256,
            embed_sources: EmbedSources::UNION,
            selector_key_dim: 16,
            train_selector: false,
            selector_lr: 1e-2,
            gov_policy: GovPolicy::Fixed,
            eval_harvest: false,
            pool_file: None,
            fallback_to_scripted: false,
            checkpoint_every: 0,
        }
    }
}

impl RunConfig {
    pub fn ablated(&self, a: Ablation) -> bool {
        self.ablations.contains(&a)
    }

    /// Short name for plots: the policy plus any ablations.
    pub fn label(&self) -> String {
        let mut s = self.policy.as_str().to_string();
        for a in &self.ablations {
            s.push_str("-wo-");
            s.push_str(a.as_str());
        }
        s
    }

    pub fn terminal_value(&self, scenario: &ScenarioConfig) -> f64 {
        if let Some(v) = self.collapse_value {
            return v;
        }
        if self.reward_scale == RewardScale::Raw {
            return 0.0;
        }
        let prefs = UtilityParams {
            eta: scenario.eta,
            gamma_frisch: scenario.gamma_frisch,
            log_utility: scenario.log_utility,
        };
        let floor = utility(C_MIN, scenario.h_max, &prefs).unwrap_or(0.0);
        self.reward_scale.apply(floor) / (1.0 - self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OrchestratorError::Config(m));
        if !self.ablations.is_empty() && self.policy != PolicyKind::Lamp {
            return bad(format!("ablations require policy lamp, got {}", self.policy.as_str()));
        }
        if self.episodes == 0 || self.steps == 0 {
            return bad("episodes and steps must be positive".into());
        }
        let positive = [
            ("gamma", self.gamma),
            ("tau", self.tau),
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("projection_lr", self.projection_lr),
            ("sigma", self.sigma),
            ("selector_lr", self.selector_lr),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.gamma >= 1.0 || self.tau > 1.0 {
            return bad("gamma must be < 1 and tau <= 1".into());
        }
        let counts = [
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("long_interval", self.long_interval),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("encoder_dim", self.encoder_dim),
            ("selector_key_dim", self.selector_key_dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.policy == PolicyKind::Lamp && self.embed_dim == 0 {
            return bad("embed_dim must be positive for lamp".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity must be at least batch_size".into());
        }
        let p_long = 1.0 / self.long_interval as f64;
        if !(0.0..=1.0 - p_long).contains(&self.random_short_rate) {
            return bad(format!("random_short_rate must lie in [0, {}]", 1.0 - p_long));
        }
        if self.explore_sigma < 0.0 {
            return bad("explore_sigma must be >= 0".into());
        }
        if let RewardScale::Clip(c) = self.reward_scale {
            if !(c > 0.0) {
                return bad("reward clip must be positive".into());
            }
        }
        if self.collapse_value.is_some_and(|v| !v.is_finite()) {
            return bad("collapse_value must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablations_need_lamp() {
        let mut c = RunConfig::default();
        c.ablations.insert(Ablation::Speak);
        assert!(c.validate().is_ok());
        c.policy = PolicyKind::Maddpg;
        assert!(c.validate().is_err());
    }

    #[test]
    fn labels() {
        let mut c = RunConfig::default();
        assert_eq!(c.label(), "lamp");
        c.ablations.insert(Ablation::Speak);
        assert_eq!(c.label(), "lamp-wo-speak");
    }
}
