//! Language backends behind one interface: a remote chat-completions client and
//! a deterministic scripted stand-in. Every response is schema-validated before
//! it leaves this module.

mod audit;
pub mod prompts;
mod remote;
mod schema;
mod scripted;

pub use audit::{AuditLog, AuditRecord};
pub use remote::{RemoteBackend, RemoteConfig};
pub use schema::{extract_json_object, parse_lenient, validate};
pub use scripted::{phrase_bank, provenance, ScriptedBackend};

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which prompt a request was rendered from; also names its response schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    LongReason,
    ShortReason,
    Reflect,
    LongNews,
    ShortNews,
    Candidates,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 6] = [
        TemplateKind::LongReason,
        TemplateKind::ShortReason,
        TemplateKind::Reflect,
        TemplateKind::LongNews,
        TemplateKind::ShortNews,
        TemplateKind::Candidates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::LongReason => "long_reason",
            TemplateKind::ShortReason => "short_reason",
            TemplateKind::Reflect => "reflect",
            TemplateKind::LongNews => "long_news",
            TemplateKind::ShortNews => "short_news",
            TemplateKind::Candidates => "candidates",
        }
    }
}

/// Numeric facts the scripted backend answers from. Remote backends ignore it.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ScriptContext {
    #[default]
    None,
    /// Global observation vectors of the window, oldest first.
    News { previous: Vec<f64>, current: Vec<f64> },
    /// Own state plus every household's wealth (own included).
    Reason {
        productivity: f64,
        wealth: f64,
        all_wealth: Vec<f64>,
    },
    Candidates { status: u8 },
    /// All broadcast statements in agent order.
    Reflect { agent: usize, statements: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptRequest {
    pub kind: TemplateKind,
    pub prompt: String,
    pub agent: Option<usize>,
    pub period: usize,
    /// Array length required by the reflection schema.
    pub expected_num: usize,
    pub context: ScriptContext,
}

/// A response that passed its schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmResponse {
    LongReason {
        analysis: String,
        economic_status: u8,
        reasoning: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        statements: Option<Vec<String>>,
    },
    ShortReason {
        economic_status: u8,
        reasoning: String,
    },
    Reflect {
        wealth_guesses: Vec<u8>,
        trust_levels: Vec<u8>,
        reflection_text: String,
    },
    News {
        text: String,
    },
    Candidates {
        statements: [String; 3],
    },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("response rejected: {reason}")]
    Format { reason: String, raw: String },
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("backend returned a {got} response to a {expected} request")]
    KindMismatch { expected: &'static str, got: &'static str },
}

pub type Result<T, E = LlmError> = std::result::Result<T, E>;

/// One round trip to a backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub backend: String,
    pub raw: String,
    /// Rejection or transport reason; `None` when accepted.
    pub error: Option<String>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub result: Result<LlmResponse>,
    pub attempts: Vec<Attempt>,
    pub fell_back: bool,
}

pub trait LanguageBackend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &PromptRequest) -> Completion;
    /// Whether concurrent fan-out is worthwhile.
    fn is_remote(&self) -> bool {
        false
    }
}

/// Wraps a backend with per-kind call counts and the audit log.
pub struct LlmClient {
    backend: Box<dyn LanguageBackend>,
    audit: Option<AuditLog>,
    counts: Mutex<BTreeMap<TemplateKind, u64>>,
    fallbacks: Mutex<u64>,
}

impl LlmClient {
    pub fn new(backend: Box<dyn LanguageBackend>, audit: Option<AuditLog>) -> Self {
        Self {
            backend,
            audit,
            counts: Mutex::new(BTreeMap::new()),
            fallbacks: Mutex::new(0),
        }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn is_remote(&self) -> bool {
        self.backend.is_remote()
    }

    pub fn complete(&self, request: &PromptRequest) -> Result<LlmResponse> {
        let started = Instant::now();
        let done = self.backend.complete(request);
        *self.counts.lock().expect("counts lock").entry(request.kind).or_insert(0) += 1;
        if done.fell_back {
            *self.fallbacks.lock().expect("fallback lock") += 1;
            log::warn!(
                "{} request for agent {:?} at t={} fell back to the scripted backend",
                request.kind.as_str(),
                request.agent,
                request.period
            );
        }
        if let Some(audit) = &self.audit {
            let total_ms = started.elapsed().as_secs_f64() * 1e3;
            for a in &done.attempts {
                audit.append(&AuditRecord {
                    period: request.period,
                    agent: request.agent,
                    kind: request.kind,
                    backend: a.backend.clone(),
                    latency_ms: a.latency_ms,
                    accepted: a.error.is_none(),
                    reason: a.error.clone(),
                    raw: a.raw.clone(),
                });
            }
            log::trace!("{} completed in {total_ms:.1} ms", request.kind.as_str());
        }
        done.result
    }

    /// Calls issued so far, by template kind.
    pub fn counts(&self) -> BTreeMap<TemplateKind, u64> {
        self.counts.lock().expect("counts lock").clone()
    }

    pub fn total_calls(&self) -> u64 {
        self.counts().values().sum()
    }

    pub fn fallbacks(&self) -> u64 {
        *self.fallbacks.lock().expect("fallback lock")
    }
}
