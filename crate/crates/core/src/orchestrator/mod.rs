//! The episode loop: news, reasoning, speaking, acting, stepping, training and
//! harvesting, plus baselines, ablations and run artifacts.

mod config;
mod events;
mod metrics;
mod policies;
mod runner;

pub use config::{Ablation, BackendKind, EncoderKind, GovPolicy, PolicyKind, RunConfig};
pub use events::{read_events, validate_event_log, Event, EventCounts, EventLog};
pub use metrics::{
    read_eval, read_metrics, write_eval, write_metrics, EpisodeRow, EvalRow, RunMetrics, StepRow, AUDIT_JSONL,
    CHECKPOINT_JSON, CONFIG_JSON, EPISODES_CSV, EPISODE_HEADER, EVAL_CSV, EVENTS_LOG, STEPS_CSV, STEP_HEADER,
};
pub use policies::{myopic_utility, random_gov_action, random_policy, rule_policy, RuleObs, RULE_GRID};
pub use runner::{
    aggregate_eval, global_features, local_features, run_eval, run_training, simulate, RunCheckpoint, RunOutput,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Econ(#[from] crate::econ::EconError),
    #[error(transparent)]
    Marl(#[from] crate::marl::MarlError),
    #[error(transparent)]
    Llm(#[from] crate::llm::LlmError),
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
    #[error(transparent)]
    Pool(#[from] crate::think::PoolError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = OrchestratorError> = std::result::Result<T, E>;
