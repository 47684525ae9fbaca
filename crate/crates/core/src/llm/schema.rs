use serde_json::{Map, Value};

use super::{LlmError, LlmResponse, TemplateKind};

/// First balanced `{...}` in `raw`, skipping braces inside JSON strings.
/// Surrounding prose and code fences are ignored.
pub fn extract_json_object(raw: &str) -> Option<&str> {
    let bytes = raw.as_bytes();
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (off, &b) in bytes[start..].iter().enumerate() {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..start + off + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts, parses and validates a raw backend reply.
pub fn parse_lenient(raw: &str, kind: TemplateKind, expected_num: usize) -> Result<LlmResponse, LlmError> {
    let reject = |reason: String| LlmError::Format {
        reason,
        raw: raw.to_string(),
    };
    let body = extract_json_object(raw).ok_or_else(|| reject("no JSON object found".into()))?;
    let value: Value = serde_json::from_str(body).map_err(|e| reject(format!("invalid JSON: {e}")))?;
    validate(kind, &value, expected_num).map_err(reject)
}

fn exact_keys(obj: &Map<String, Value>, required: &[&str], optional: &[&str]) -> Result<(), String> {
    for k in required {
        if !obj.contains_key(*k) {
            return Err(format!("missing key \"{k}\""));
        }
    }
    for k in obj.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return Err(format!("unexpected key \"{k}\""));
        }
    }
    Ok(())
}

fn text(obj: &Map<String, Value>, key: &str) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(format!("\"{key}\" is empty")),
        _ => Err(format!("\"{key}\" must be a string")),
    }
}

fn small_int(v: &Value, key: &str, max: u64) -> Result<u8, String> {
    match v.as_u64() {
        Some(n) if n <= max => Ok(n as u8),
        Some(n) => Err(format!("\"{key}\" value {n} outside 0..={max}")),
        None => Err(format!("\"{key}\" must hold integers in 0..={max}, got {v}")),
    }
}

fn int_array(obj: &Map<String, Value>, key: &str, len: usize, max: u64) -> Result<Vec<u8>, String> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("\"{key}\" must be an array"))?;
    if arr.len() != len {
        return Err(format!("\"{key}\" has {} elements, expected {len}", arr.len()));
    }
    arr.iter().map(|v| small_int(v, key, max)).collect()
}

fn statements(obj: &Map<String, Value>, key: &str) -> Result<Vec<String>, String> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("\"{key}\" must be an array"))?;
    arr.iter()
        .map(|v| match v {
            Value::String(s) if !s.trim().is_empty() => Ok(s.clone()),
            _ => Err(format!("\"{key}\" entries must be nonempty strings")),
        })
        .collect()
}

/// Strict schema check of an already-parsed object.
pub fn validate(kind: TemplateKind, value: &Value, expected_num: usize) -> Result<LlmResponse, String> {
    let obj = value.as_object().ok_or("top level must be a JSON object")?;
    match kind {
        TemplateKind::LongReason => {
            // the template's task list asks for statements although its JSON omits them
            exact_keys(obj, &["analysis", "economic_status", "reasoning"], &["statements"])?;
            let statements = match obj.get("statements") {
                Some(_) => Some(statements(obj, "statements")?),
                None => None,
            };
            Ok(LlmResponse::LongReason {
                analysis: text(obj, "analysis")?,
                economic_status: small_int(&obj["economic_status"], "economic_status", 2)?,
                reasoning: text(obj, "reasoning")?,
                statements,
            })
        }
        TemplateKind::ShortReason => {
            exact_keys(obj, &["economic_status", "reasoning"], &[])?;
            Ok(LlmResponse::ShortReason {
                economic_status: small_int(&obj["economic_status"], "economic_status", 2)?,
                reasoning: text(obj, "reasoning")?,
            })
        }
        TemplateKind::Reflect => {
            exact_keys(obj, &["wealth_guesses", "trust_levels", "reflection_text"], &[])?;
            Ok(LlmResponse::Reflect {
                wealth_guesses: int_array(obj, "wealth_guesses", expected_num, 2)?,
                trust_levels: int_array(obj, "trust_levels", expected_num, 10)?,
                reflection_text: text(obj, "reflection_text")?,
            })
        }
        TemplateKind::LongNews | TemplateKind::ShortNews => {
            exact_keys(obj, &["news"], &[])?;
            Ok(LlmResponse::News {
                text: text(obj, "news")?,
            })
        }
        TemplateKind::Candidates => {
            exact_keys(obj, &["statements"], &[])?;
            let s = statements(obj, "statements")?;
            if s.len() != 3 {
                return Err(format!("\"statements\" has {} elements, expected 3", s.len()));
            }
            if s[0] == s[1] || s[0] == s[2] || s[1] == s[2] {
                return Err("\"statements\" must be unique".into());
            }
            let [a, b, c]: [String; 3] = s.try_into().expect("length checked");
            Ok(LlmResponse::Candidates { statements: [a, b, c] })
        }
    }
}
