//! Minimal dense networks with exact reverse-mode gradients, Adam, Polyak
//! averaging and a JSON checkpoint format.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::Adam;
pub use checkpoint::MlpCheckpoint;
pub use mlp::{Activation, ForwardTrace, GradientSet, Mlp};

use crate::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] serde_json::Error),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn polyak_update<F: Scalar>(target: &mut [F], online: &[F], tau: F) {
    assert_eq!(target.len(), online.len(), "polyak shapes differ");
    let keep = F::one() - tau;
    for (t, &o) in target.iter_mut().zip(online) {
        *t = tau * o + keep * *t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyak_edges() {
        let mut t = vec![1.0, -2.0];
        polyak_update(&mut t, &[5.0, 7.0], 1.0);
        assert_eq!(t, vec![5.0, 7.0]);
        let mut t = vec![1.0, -2.0];
        polyak_update(&mut t, &[5.0, 7.0], 0.0);
        assert_eq!(t, vec![1.0, -2.0]);
        let mut t = vec![2.0];
        polyak_update(&mut t, &[4.0], 0.5);
        assert_eq!(t, vec![3.0]);
    }
}
