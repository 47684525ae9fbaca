//! Centralized critic, decentralized actors: replay, losses and the update
//! routine.

mod buffer;
mod checkpoint;
mod maddpg;

pub use buffer::ReplayBuffer;
pub use checkpoint::MaddpgCheckpoint;
pub use maddpg::{AgentNets, Maddpg, MaddpgConfig, RewardScale, StepMetrics, Transition};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum MarlError {
    #[error("non-finite {0} loss; update skipped")]
    NonFiniteLoss(&'static str),
    #[error("shape: {0}")]
    Shape(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T, E = MarlError> = std::result::Result<T, E>;
