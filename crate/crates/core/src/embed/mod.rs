//! Text to fixed-size vectors: a frozen encoder, mean pooling, a trainable
//! linear projection and unit normalization.

mod encoder;
mod projection;

pub use encoder::{HashingEncoder, RemoteEncoder, TextEncoder};
pub use projection::Projection;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("encoder returned {got} dimensions, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("embedding transport: {0}")]
    Transport(String),
    #[error("embedding response: {0}")]
    Response(String),
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;

/// Mean of the encoded texts; the zero vector for an empty list.
pub fn pool_texts<S: AsRef<str>>(encoder: &dyn TextEncoder, texts: &[S]) -> Result<Vec<f64>> {
    let dim = encoder.dim();
    let mut pooled = vec![0.0; dim];
    if texts.is_empty() {
        return Ok(pooled);
    }
    for t in texts {
        let v = encoder.encode(t.as_ref())?;
        if v.len() != dim {
            return Err(EmbedError::Dimension { expected: dim, got: v.len() });
        }
        for (p, x) in pooled.iter_mut().zip(v) {
            *p += x;
        }
    }
    let n = texts.len() as f64;
    pooled.iter_mut().for_each(|p| *p /= n);
    Ok(pooled)
}

/// `m = P h / ||P h||`, or zero when `P h` is zero.
pub fn project_normalize<F: Scalar>(projection: &Projection<F>, pooled: &[F]) -> Result<Vec<F>> {
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite("pooled vector"));
    }
    Ok(projection.embed(pooled))
}

/// Which texts enter an agent's pooled vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedSources {
    pub reasoning: bool,
    pub reflection: bool,
    pub statement: bool,
    pub news: bool,
}

impl Default for EmbedSources {
    fn default() -> Self {
        Self::UNION
    }
}

impl EmbedSources {
    /// Reasoning, reflection, own statement and latest news.
    pub const UNION: Self = Self {
        reasoning: true,
        reflection: true,
        statement: true,
        news: true,
    };
    /// Private reasoning and reflection only.
    pub const REASONING_REFLECTION: Self = Self {
        reasoning: true,
        reflection: true,
        statement: false,
        news: false,
    };
    /// Own statement and latest news only.
    pub const STATEMENT_NEWS: Self = Self {
        reasoning: false,
        reflection: false,
        statement: true,
        news: true,
    };
    pub const NONE: Self = Self {
        reasoning: false,
        reflection: false,
        statement: false,
        news: false,
    };

    /// Parses `union`, `reasoning-reflection`, `statement-news`, `none`, or a
    /// comma list of `reasoning,reflection,statement,news`.
    pub fn parse(spec: &str) -> Option<Self> {
        match spec {
            "union" | "all" => return Some(Self::UNION),
            "reasoning-reflection" => return Some(Self::REASONING_REFLECTION),
            "statement-news" => return Some(Self::STATEMENT_NEWS),
            "none" => return Some(Self::NONE),
            _ => {}
        }
        let mut s = Self::NONE;
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "reasoning" => s.reasoning = true,
                "reflection" => s.reflection = true,
                "statement" => s.statement = true,
                "news" => s.news = true,
                _ => return None,
            }
        }
        Some(s)
    }
}

/// The latest texts an agent holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgentTexts {
    pub reasoning: Option<String>,
    pub reflection: Option<String>,
    pub statement: Option<String>,
    pub news: Option<String>,
}

impl AgentTexts {
    /// Texts selected by `sources`, in the fixed order reasoning, reflection,
    /// statement, news.
    pub fn selected(&self, sources: EmbedSources) -> Vec<&str> {
        [
            (sources.reasoning, &self.reasoning),
            (sources.reflection, &self.reflection),
            (sources.statement, &self.statement),
            (sources.news, &self.news),
        ]
        .into_iter()
        .filter_map(|(on, t)| if on { t.as_deref() } else { None })
        .collect()
    }
}

/// Pools the enabled texts and projects them. Returns `(pooled, m)`.
pub fn build_agent_embedding<F: Scalar>(
    texts: &AgentTexts,
    sources: EmbedSources,
    projection: &Projection<F>,
    encoder: &dyn TextEncoder,
) -> Result<(Vec<f64>, Vec<F>)> {
    let pooled = pool_texts(encoder, &texts.selected(sources))?;
    let pooled_f: Vec<F> = pooled.iter().map(|&v| F::of(v)).collect();
    let m = project_normalize(projection, &pooled_f)?;
    Ok((pooled, m))
}
