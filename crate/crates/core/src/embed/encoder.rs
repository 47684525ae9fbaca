use std::time::Duration;

use serde_json::{json, Value};

use super::{EmbedError, Result};
use crate::util::fnv1a;

/// A frozen sentence encoder `E: text -> R^D`.
pub trait TextEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Result<Vec<f64>>;
    fn name(&self) -> String;
}

/// Signed feature hashing of lower-cased character 2- and 3-grams,
/// L2-normalized. Deterministic and offline.
#[derive(Debug, Clone)]
pub struct HashingEncoder {
    dim: usize,
    seed: u64,
}

impl HashingEncoder {
    pub const DEFAULT_DIM: usize = 256;

    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        Self { dim, seed }
    }
}

impl Default for HashingEncoder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM, 0)
    }
}

impl TextEncoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut v = vec![0.0; self.dim];
        let mut buf = String::new();
        for n in [2usize, 3] {
            for w in chars.windows(n) {
                buf.clear();
                buf.extend(w);
                let h = fnv1a(self.seed ^ n as u64, buf.as_bytes());
                let slot = (h % self.dim as u64) as usize;
                v[slot] += if h >> 63 == 0 { 1.0 } else { -1.0 };
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }

    fn name(&self) -> String {
        format!("hashing-ngram-{}", self.dim)
    }
}

/// An embeddings HTTP endpoint that accepts `{"model", "input"}` and returns
/// `{"data": [{"embedding": [...]}]}` or `{"embedding": [...]}`.
pub struct RemoteEncoder {
    agent: ureq::Agent,
    endpoint: String,
    model: Option<String>,
    api_key: Option<String>,
    dim: usize,
}

impl RemoteEncoder {
    /// Connects and probes the output dimension with a short request.
    pub fn connect(endpoint: &str, model: Option<String>, api_key: Option<String>) -> Result<Self> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        let mut enc = Self {
            agent,
            endpoint: endpoint.to_string(),
            model,
            api_key,
            dim: 0,
        };
        enc.dim = enc.request("probe")?.len();
        if enc.dim == 0 {
            return Err(EmbedError::Response("empty embedding".into()));
        }
        Ok(enc)
    }

    /// Reads `LAMP_EMBED_ENDPOINT`, `LAMP_EMBED_MODEL` and `LAMP_LLM_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("LAMP_EMBED_ENDPOINT")
            .map_err(|_| EmbedError::Transport("LAMP_EMBED_ENDPOINT is not set".into()))?;
        Self::connect(
            &endpoint,
            std::env::var("LAMP_EMBED_MODEL").ok(),
            std::env::var("LAMP_LLM_API_KEY").ok(),
        )
    }

    fn request(&self, text: &str) -> Result<Vec<f64>> {
        let mut body = json!({ "input": text });
        if let Some(m) = &self.model {
            body["model"] = Value::String(m.clone());
        }
        let mut req = self.agent.post(&self.endpoint);
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Response(e.to_string()))?;
        parse_embedding(&v)
    }
}

/// Extracts the vector from either supported response layout.
pub(crate) fn parse_embedding(v: &Value) -> Result<Vec<f64>> {
    let arr = v
        .pointer("/data/0/embedding")
        .or_else(|| v.get("embedding"))
        .and_then(Value::as_array)
        .ok_or_else(|| EmbedError::Response("no embedding array".into()))?;
    let out: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
    let out = out.ok_or_else(|| EmbedError::Response("non-numeric embedding".into()))?;
    if out.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::NonFinite("encoder output"));
    }
    Ok(out)
}

impl TextEncoder for RemoteEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Vec<f64>> {
        let v = self.request(text)?;
        if v.len() != self.dim {
            return Err(EmbedError::Dimension { expected: self.dim, got: v.len() });
        }
        Ok(v)
    }

    fn name(&self) -> String {
        format!("remote:{}", self.model.as_deref().unwrap_or(&self.endpoint))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_is_deterministic_and_unit_norm() {
        let e = HashingEncoder::default();
        let a = e.encode("Wages rose sharply this year.").unwrap();
        let b = e.encode("Wages rose sharply this year.").unwrap();
        assert_eq!(a, b);
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similar_texts_are_closer_than_unrelated() {
        let e = HashingEncoder::default();
        let cos = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let a = e.encode("taxes on wealth are rising").unwrap();
        let b = e.encode("taxes on wealth are increasing").unwrap();
        let c = e.encode("zebra quokka xylophone").unwrap();
        assert!(cos(&a, &b) > cos(&a, &c));
    }

    #[test]
    fn short_text_is_zero() {
        let e = HashingEncoder::new(16, 1);
        assert_eq!(e.encode("x").unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn parses_both_layouts() {
        let a = json!({"data": [{"embedding": [0.5, -1.0]}]});
        let b = json!({"embedding": [1.0, 2.0, 3.0]});
        assert_eq!(parse_embedding(&a).unwrap(), vec![0.5, -1.0]);
        assert_eq!(parse_embedding(&b).unwrap().len(), 3);
        assert!(parse_embedding(&json!({"x": 1})).is_err());
    }
}
