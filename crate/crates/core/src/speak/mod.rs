//! Candidate statements, attention-based selection, broadcast and reflection.

mod reflect;
mod selector;

pub use reflect::{reflect, ReflectionResult};
pub use selector::{SelectorParams, StatementSet};

use crate::llm::{prompts, LlmClient, LlmError, LlmResponse, PromptRequest, ScriptContext, TemplateKind};

/// Three distinct public statements for one agent.
pub fn generate_candidates(
    client: &LlmClient,
    agent: usize,
    period: usize,
    productivity: f64,
    wealth: f64,
    status: u8,
    reasoning: &str,
) -> Result<[String; 3], LlmError> {
    let req = PromptRequest {
        kind: TemplateKind::Candidates,
        prompt: prompts::candidates_prompt(productivity, wealth, status, reasoning)?,
        agent: Some(agent),
        period,
        expected_num: 0,
        context: ScriptContext::Candidates { status },
    };
    match client.complete(&req)? {
        LlmResponse::Candidates { statements } => Ok(statements),
        _ => Err(LlmError::KindMismatch {
            expected: "candidates",
            got: "other",
        }),
    }
}

/// The selected statement of every agent, in agent order.
pub fn broadcast(sets: &[StatementSet]) -> Vec<String> {
    let mut sorted: Vec<&StatementSet> = sets.iter().collect();
    sorted.sort_by_key(|s| s.agent);
    sorted.into_iter().map(|s| s.selected_text().to_string()).collect()
}
