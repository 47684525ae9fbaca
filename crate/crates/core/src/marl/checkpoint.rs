use serde::{Deserialize, Serialize};

use super::{AgentNets, MaddpgConfig, MarlError, Result};
use crate::embed::Projection;
use crate::nn::MlpCheckpoint;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCheckpoint {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weights: Vec<f64>,
}

impl ProjectionCheckpoint {
    fn from_projection<F: Scalar>(p: &Projection<F>) -> Self {
        Self {
            out_dim: p.out_dim(),
            in_dim: p.in_dim(),
            weights: p.params().iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }

    fn to_projection<F: Scalar>(&self) -> Result<Projection<F>> {
        Projection::from_weights(
            self.out_dim,
            self.in_dim,
            self.weights.iter().map(|&v| F::of(v)).collect(),
        )
        .ok_or_else(|| MarlError::Shape("projection checkpoint size".into()))
    }
}

/// Online and target parameters of every network (optimizer moments are not kept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaddpgCheckpoint {
    pub config: MaddpgConfig,
    pub actors: Vec<MlpCheckpoint>,
    pub target_actors: Vec<MlpCheckpoint>,
    pub critic: MlpCheckpoint,
    pub target_critic: MlpCheckpoint,
    pub projection: ProjectionCheckpoint,
    pub target_projection: ProjectionCheckpoint,
}

impl MaddpgCheckpoint {
    pub fn from_nets<F: Scalar>(nets: &AgentNets<F>) -> Self {
        Self {
            config: nets.cfg.clone(),
            actors: nets.actors.iter().map(MlpCheckpoint::from_mlp).collect(),
            target_actors: nets.target_actors.iter().map(MlpCheckpoint::from_mlp).collect(),
            critic: MlpCheckpoint::from_mlp(&nets.critic),
            target_critic: MlpCheckpoint::from_mlp(&nets.target_critic),
            projection: ProjectionCheckpoint::from_projection(&nets.projection),
            target_projection: ProjectionCheckpoint::from_projection(&nets.target_projection),
        }
    }

    pub fn to_nets<F: Scalar>(&self) -> Result<AgentNets<F>> {
        let actors = self
            .actors
            .iter()
            .map(MlpCheckpoint::to_mlp)
            .collect::<Result<Vec<_>, _>>()?;
        let mut nets = AgentNets::from_nets(
            self.config.clone(),
            actors,
            self.critic.to_mlp()?,
            self.projection.to_projection()?,
        );
        nets.target_actors = self
            .target_actors
            .iter()
            .map(MlpCheckpoint::to_mlp)
            .collect::<Result<Vec<_>, _>>()?;
        nets.target_critic = self.target_critic.to_mlp()?;
        nets.target_projection = self.target_projection.to_projection()?;
        if nets.actors.len() != self.config.n_agents || nets.target_actors.len() != self.config.n_agents {
            return Err(MarlError::Shape("actor count differs from n_agents".into()));
        }
        Ok(nets)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(raw: &str) -> serde_json::Result<Self> {
        serde_json::from_str(raw)
    }
}
