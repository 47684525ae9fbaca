use serde::{Deserialize, Serialize};

use super::NewsKind;
use crate::llm::{prompts, LlmClient, LlmError, LlmResponse, PromptRequest, ScriptContext, TemplateKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsEvent {
    pub kind: NewsKind,
    pub period: usize,
    pub text: String,
    /// Indicator snapshot `(G_w, W, Y)` the scheduler saw.
    pub indicators: Vec<f64>,
}

fn news_text(client: &LlmClient, req: PromptRequest) -> Result<String, LlmError> {
    match client.complete(&req)? {
        LlmResponse::News { text } => Ok(text),
        other => Err(LlmError::KindMismatch {
            expected: req.kind.as_str(),
            got: response_name(&other),
        }),
    }
}

pub(crate) fn response_name(r: &LlmResponse) -> &'static str {
    match r {
        LlmResponse::LongReason { .. } => "long_reason",
        LlmResponse::ShortReason { .. } => "short_reason",
        LlmResponse::Reflect { .. } => "reflect",
        LlmResponse::News { .. } => "news",
        LlmResponse::Candidates { .. } => "candidates",
    }
}

/// Bulletin over the two-step global observation window.
pub fn make_long_news(
    client: &LlmClient,
    period: usize,
    previous: &[f64],
    current: &[f64],
    indicators: &[f64],
) -> Result<NewsEvent, LlmError> {
    let req = PromptRequest {
        kind: TemplateKind::LongNews,
        prompt: prompts::long_news_prompt(previous, current)?,
        agent: None,
        period,
        expected_num: 0,
        context: ScriptContext::News {
            previous: previous.to_vec(),
            current: current.to_vec(),
        },
    };
    Ok(NewsEvent {
        kind: NewsKind::Long,
        period,
        text: news_text(client, req)?,
        indicators: indicators.to_vec(),
    })
}

/// Shock report from the current and previous observations and the latest
/// long bulletin, if any.
pub fn make_short_news(
    client: &LlmClient,
    period: usize,
    previous: &[f64],
    current: &[f64],
    last_long: Option<&NewsEvent>,
    indicators: &[f64],
) -> Result<NewsEvent, LlmError> {
    let req = PromptRequest {
        kind: TemplateKind::ShortNews,
        prompt: prompts::short_news_prompt(previous, current, last_long.map(|n| n.text.as_str()))?,
        agent: None,
        period,
        expected_num: 0,
        context: ScriptContext::News {
            previous: previous.to_vec(),
            current: current.to_vec(),
        },
    };
    Ok(NewsEvent {
        kind: NewsKind::Short,
        period,
        text: news_text(client, req)?,
        indicators: indicators.to_vec(),
    })
}
