use serde::{Deserialize, Serialize};

use crate::llm::{prompts, LlmClient, LlmError, LlmResponse, PromptRequest, ScriptContext, TemplateKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionResult {
    pub wealth_guesses: Vec<u8>,
    pub trust_levels: Vec<u8>,
    pub reflection_text: String,
}

/// Beliefs and trust over all `statements` (own included, agent order).
pub fn reflect(
    client: &LlmClient,
    agent: usize,
    period: usize,
    productivity: f64,
    wealth: f64,
    reasoning: &str,
    statements: &[String],
) -> Result<ReflectionResult, LlmError> {
    let own = statements
        .get(agent)
        .ok_or_else(|| LlmError::Config(format!("no broadcast statement for agent {agent}")))?;
    let req = PromptRequest {
        kind: TemplateKind::Reflect,
        prompt: prompts::reflect_prompt(productivity, wealth, reasoning, own, statements)?,
        agent: Some(agent),
        period,
        expected_num: statements.len(),
        context: ScriptContext::Reflect {
            agent,
            statements: statements.to_vec(),
        },
    };
    match client.complete(&req)? {
        LlmResponse::Reflect {
            wealth_guesses,
            trust_levels,
            reflection_text,
        } => Ok(ReflectionResult {
            wealth_guesses,
            trust_levels,
            reflection_text,
        }),
        _ => Err(LlmError::KindMismatch {
            expected: "reflect",
            got: "other",
        }),
    }
}
