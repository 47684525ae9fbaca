use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{parse_lenient, Attempt, Completion, LanguageBackend, LlmError, PromptRequest, ScriptedBackend};

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub format_retries: usize,
    /// Sleep before each transport retry; its length is the retry budget.
    pub transport_backoff: Vec<Duration>,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub fallback_to_scripted: bool,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            temperature: 0.0,
            format_retries: 1,
            transport_backoff: vec![Duration::from_millis(500), Duration::from_secs(2)],
            max_in_flight: 4,
            timeout: Duration::from_secs(120),
            fallback_to_scripted: false,
        }
    }

    /// Reads `LAMP_LLM_ENDPOINT`, `LAMP_LLM_MODEL` and `LAMP_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, LlmError> {
        let endpoint = std::env::var("LAMP_LLM_ENDPOINT")
            .map_err(|_| LlmError::Config("LAMP_LLM_ENDPOINT is not set".into()))?;
        let model = std::env::var("LAMP_LLM_MODEL")
            .map_err(|_| LlmError::Config("LAMP_LLM_MODEL is not set".into()))?;
        let mut cfg = Self::new(endpoint, model);
        cfg.api_key = std::env::var("LAMP_LLM_API_KEY").ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

/// Counting semaphore for the in-flight cap.
struct Gate {
    used: Mutex<usize>,
    freed: Condvar,
    cap: usize,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut used = self.used.lock().expect("gate lock");
        while *used >= self.cap {
            used = self.freed.wait(used).expect("gate wait");
        }
        *used += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("gate lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Chat-completions client with format and transport retries.
pub struct RemoteBackend {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    gate: Gate,
    fallback: Option<ScriptedBackend>,
    name: String,
}

impl RemoteBackend {
    /// `fallback_seed` seeds the scripted backend used when
    /// `fallback_to_scripted` is on.
    pub fn new(cfg: RemoteConfig, fallback_seed: u64) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .build()
            .into();
        Self {
            agent,
            gate: Gate {
                used: Mutex::new(0),
                freed: Condvar::new(),
                cap: cfg.max_in_flight.max(1),
            },
            fallback: cfg.fallback_to_scripted.then(|| ScriptedBackend::new(fallback_seed)),
            name: format!("remote:{}", cfg.model),
            cfg,
        }
    }

    fn post(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": self.cfg.temperature,
        });
        let mut req = self.agent.post(&self.cfg.endpoint);
        if let Some(k) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let _slot = self.gate.acquire();
        let mut resp = req.send_json(&body).map_err(|e| LlmError::Transport(e.to_string()))?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(format!("unreadable body: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::Transport("response has no choices[0].message.content".into()))
    }

    fn post_with_backoff(&self, prompt: &str, attempts: &mut Vec<Attempt>) -> Result<String, LlmError> {
        let mut waits = self.cfg.transport_backoff.iter();
        loop {
            let started = Instant::now();
            match self.post(prompt) {
                Ok(raw) => return Ok(raw),
                Err(e) => {
                    attempts.push(Attempt {
                        backend: self.name.clone(),
                        raw: String::new(),
                        error: Some(e.to_string()),
                        latency_ms: started.elapsed().as_secs_f64() * 1e3,
                    });
                    match waits.next() {
                        Some(d) => thread::sleep(*d),
                        None => return Err(e),
                    }
                }
            }
        }
    }
}

impl LanguageBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn is_remote(&self) -> bool {
        true
    }

    fn complete(&self, req: &PromptRequest) -> Completion {
        let mut attempts = Vec::new();
        let mut prompt = req.prompt.clone();
        let mut result = Err(LlmError::Transport("no attempt made".into()));
        for round in 0..=self.cfg.format_retries {
            let started = Instant::now();
            let raw = match self.post_with_backoff(&prompt, &mut attempts) {
                Ok(raw) => raw,
                Err(e) => {
                    result = Err(e);
                    break;
                }
            };
            let parsed = parse_lenient(&raw, req.kind, req.expected_num);
            attempts.push(Attempt {
                backend: self.name.clone(),
                raw,
                error: parsed.as_ref().err().map(ToString::to_string),
                latency_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            match parsed {
                Ok(r) => {
                    result = Ok(r);
                    break;
                }
                Err(e) => {
                    if round < self.cfg.format_retries {
                        prompt = format!(
                            "{}\n\nYour previous reply was rejected ({e}). Reply with only the JSON object described above.",
                            req.prompt
                        );
                    }
                    result = Err(e);
                }
            }
        }
        if result.is_err() {
            if let Some(fb) = &self.fallback {
                let done = fb.complete(req);
                attempts.extend(done.attempts);
                return Completion {
                    result: done.result,
                    attempts,
                    fell_back: true,
                };
            }
        }
        Completion {
            result,
            attempts,
            fell_back: false,
        }
    }
}
