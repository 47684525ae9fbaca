//! Language-augmented multi-agent policy learning for a heterogeneous-household
//! economy.
//!
//! The crate is organised bottom-up:
//!
//! - [`econ`]: the household economy (HSV taxes, production, budget, welfare).
//! - [`nn`]: dense networks with exact reverse-mode gradients, Adam and Polyak averaging.
//! - [`marl`]: centralized-critic / decentralized-actor deterministic policy gradients.
//! - [`embed`]: text encoders, pooling and the trainable projection.
//! - [`llm`]: language backends (remote chat-completions or scripted) and response schemas.
//! - [`think`]: news scheduling, reasoning and the two-tier experience pool.
//! - [`speak`]: candidate statements, attention selection, broadcast and reflection.
//! - [`orchestrator`]: the episode loop, baselines, ablations and run artifacts.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below pin
//! the double-precision types the trainer uses.

pub mod econ;
pub mod embed;
pub mod llm;
pub mod marl;
pub mod nn;
pub mod orchestrator;
pub mod speak;
pub mod think;
pub mod util;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the simulator and the networks: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Economy = econ::Economy<f64>;
pub type EconomyState = econ::EconomyState<f64>;
pub type GlobalObs = econ::GlobalObs<f64>;
pub type HouseholdAction = econ::HouseholdAction<f64>;
pub type MacroIndicators = econ::MacroIndicators<f64>;
pub type Mlp = nn::Mlp<f64>;
pub type Adam = nn::Adam<f64>;
pub type Projection = embed::Projection<f64>;
pub type Transition = marl::Transition<f64>;
pub type Maddpg = marl::Maddpg<f64>;
