use serde::{Deserialize, Serialize};

use super::{Activation, Mlp, Result};
use crate::Scalar;

/// Serializable parameter tree of an [`Mlp`] with its shape metadata.
///
/// Parameters are stored as `f64`, so `f32` and `f64` networks round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub params: Vec<f64>,
}

impl MlpCheckpoint {
    pub fn from_mlp<F: Scalar>(net: &Mlp<F>) -> Self {
        Self {
            sizes: net.sizes().to_vec(),
            activations: net.activations().to_vec(),
            params: net.params().iter().map(|p| p.to_f64_lossy()).collect(),
        }
    }

    pub fn to_mlp<F: Scalar>(&self) -> Result<Mlp<F>> {
        Mlp::from_parts(
            self.sizes.clone(),
            self.activations.clone(),
            self.params.iter().map(|&p| F::of(p)).collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        Ok(serde_json::from_str(raw)?)
    }
}
