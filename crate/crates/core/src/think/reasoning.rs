use serde::{Deserialize, Serialize};

use super::news::response_name;
use super::{ExperienceEntry, NewsEvent, NewsKind};
use crate::llm::{prompts, LlmClient, LlmError, LlmResponse, PromptRequest, ScriptContext, TemplateKind};

/// What an agent knows privately, plus the wealth list the scripted backend
/// ranks against.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateObs<'a> {
    pub agent: usize,
    pub productivity: f64,
    pub wealth: f64,
    pub all_wealth: &'a [f64],
}

impl PrivateObs<'_> {
    fn context(&self) -> ScriptContext {
        ScriptContext::Reason {
            productivity: self.productivity,
            wealth: self.wealth,
            all_wealth: self.all_wealth.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningRecord {
    pub agent: usize,
    pub period: usize,
    pub status: u8,
    pub reasoning: String,
    pub analysis: Option<String>,
    pub news_kind: NewsKind,
}

pub fn reason_short(
    client: &LlmClient,
    period: usize,
    news: &NewsEvent,
    last_long: Option<&NewsEvent>,
    obs: &PrivateObs<'_>,
) -> Result<ReasoningRecord, LlmError> {
    let req = PromptRequest {
        kind: TemplateKind::ShortReason,
        prompt: prompts::short_reason_prompt(
            &news.text,
            last_long.map(|n| n.text.as_str()),
            obs.productivity,
            obs.wealth,
        )?,
        agent: Some(obs.agent),
        period,
        expected_num: 0,
        context: obs.context(),
    };
    match client.complete(&req)? {
        LlmResponse::ShortReason {
            economic_status,
            reasoning,
        } => Ok(ReasoningRecord {
            agent: obs.agent,
            period,
            status: economic_status,
            reasoning,
            analysis: None,
            news_kind: news.kind,
        }),
        other => Err(LlmError::KindMismatch {
            expected: "short_reason",
            got: response_name(&other),
        }),
    }
}

/// Long-horizon reasoning with retrieved experiences rendered into the prompt.
pub fn reason_long(
    client: &LlmClient,
    period: usize,
    news: &NewsEvent,
    obs: &PrivateObs<'_>,
    context: &[ExperienceEntry],
) -> Result<ReasoningRecord, LlmError> {
    let rendered: Vec<String> = context.iter().map(ExperienceEntry::render).collect();
    let req = PromptRequest {
        kind: TemplateKind::LongReason,
        prompt: prompts::long_reason_prompt(&news.text, obs.productivity, obs.wealth, &rendered)?,
        agent: Some(obs.agent),
        period,
        expected_num: 0,
        context: obs.context(),
    };
    match client.complete(&req)? {
        LlmResponse::LongReason {
            analysis,
            economic_status,
            reasoning,
            ..
        } => Ok(ReasoningRecord {
            agent: obs.agent,
            period,
            status: economic_status,
            reasoning,
            analysis: Some(analysis),
            news_kind: news.kind,
        }),
        other => Err(LlmError::KindMismatch {
            expected: "long_reason",
            got: response_name(&other),
        }),
    }
}
