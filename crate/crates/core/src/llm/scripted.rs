use std::time::Instant;

use serde_json::{json, Value};

use super::prompts::{composition_counts, obs_changes, OBS_LABELS};
use super::{parse_lenient, Attempt, Completion, LanguageBackend, LlmError, PromptRequest, ScriptContext, TemplateKind};
use crate::util::stable_hash;

const BANK: [[&str; 3]; 3] = [
    [
        "Our household is stretched thin and needs steady work more than anything.",
        "Savings are nearly gone here, so every paycheck goes to basic needs.",
        "We are struggling to keep up and would welcome fairer wages for families like ours.",
    ],
    [
        "We are getting by, balancing work hours against time at home.",
        "Our family keeps a modest cushion and spends with care.",
        "Things are stable for us, though we watch prices and taxes closely.",
    ],
    [
        "Our savings give us room to invest and plan ahead.",
        "We are doing well and can afford to work fewer hours this year.",
        "With a solid financial base, we support policies that keep growth going.",
    ],
];

const ADVICE: [&str; 3] = [
    "Resources are thin, so the family should keep consumption steady, avoid drawing down what little it holds, and work enough hours to cover needs. Status: Bad.",
    "The family sits in the middle and should pair moderate hours with a steady savings rate. Status: Neutral.",
    "The family holds a comfortable buffer and can save a larger share while trimming hours to protect well-being. Status: Good.",
];

/// The three scripted candidate statements for a status (clamped to 0..=2).
pub fn phrase_bank(status: u8) -> [&'static str; 3] {
    BANK[usize::from(status.min(2))]
}

/// Status whose phrase bank produced `statement`, if any.
pub fn provenance(statement: &str) -> Option<u8> {
    BANK.iter()
        .position(|row| row.contains(&statement))
        .map(|s| s as u8)
}

/// Rule-based backend: a pure function of the request and its seed.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    seed: u64,
}

impl ScriptedBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Bottom 30% of the wealth ranking reads 0, top 20% reads 2, else 1.
    pub fn status_from_wealth(wealth: f64, all_wealth: &[f64]) -> u8 {
        let n = all_wealth.len().max(1);
        let below = all_wealth.iter().filter(|&&w| w < wealth).count();
        let q = below as f64 / n as f64;
        if q < 0.3 {
            0
        } else if q >= 0.8 {
            2
        } else {
            1
        }
    }

    pub fn trust(&self, agent: usize, peer: usize) -> u8 {
        7 + (stable_hash(&[agent as u64, peer as u64, self.seed]) % 4) as u8
    }

    fn news(kind: TemplateKind, previous: &[f64], current: &[f64]) -> String {
        let c = obs_changes(previous, current);
        if kind == TemplateKind::LongNews {
            let trend = if c[2] > 0.0 {
                "Gains reached the poorer half, so modest saving looks affordable."
            } else if c[2] < 0.0 {
                "The poorer half lost ground, so buffers and steady hours matter."
            } else {
                "Wealth at the bottom held steady."
            };
            format!(
                "Long-term bulletin: over the last two periods the wage rate moved {:+.2}%. \
                 Wealth changed {:+.2}% for the top 10% and {:+.2}% for the bottom 50%; \
                 income changed {:+.2}% and {:+.2}%; productivity changed {:+.2}% and {:+.2}%. {trend}",
                c[0], c[1], c[2], c[3], c[4], c[5], c[6]
            )
        } else {
            let (j, big) = c
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bj, bv), (j, &v)| if v.abs() > bv.abs() { (j, v) } else { (bj, bv) });
            format!(
                "Short-term shock: {} moved {:+.2}%, the sharpest change this period. \
                 Wage rate {:+.2}%, bottom 50% wealth {:+.2}%, top 10% wealth {:+.2}%.",
                OBS_LABELS[j], big, c[0], c[2], c[1]
            )
        }
    }

    fn reasoning(productivity: f64, wealth: f64, all_wealth: &[f64], status: u8) -> (String, String) {
        let n = all_wealth.len();
        let rank = all_wealth.iter().filter(|&&w| w > wealth).count() + 1;
        let place = ["below", "near", "above"][usize::from(status)];
        let analysis = format!(
            "Wealth rank {rank} of {n}; the household sits {place} the middle of the distribution with productivity {productivity:.4}."
        );
        let reasoning = format!(
            "Productivity {productivity:.4} and wealth {wealth:.4} rank {rank} of {n} households by wealth. {}",
            ADVICE[usize::from(status)]
        );
        (analysis, reasoning)
    }

    fn reflect(&self, agent: usize, statements: &[String]) -> Value {
        let n = statements.len();
        let prov: Vec<u8> = statements.iter().map(|s| provenance(s).unwrap_or(1)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| (std::cmp::Reverse(prov[j]), stable_hash(&[agent as u64, j as u64, self.seed])));
        let (high, mid, _) = composition_counts(n);
        let mut guesses = vec![0u8; n];
        for (pos, &j) in order.iter().enumerate() {
            guesses[j] = if pos < high {
                2
            } else if pos < high + mid {
                1
            } else {
                0
            };
        }
        let trust: Vec<u8> = (0..n).map(|j| self.trust(agent, j)).collect();
        let own = prov.get(agent).copied().unwrap_or(1);
        let well_off = prov.iter().filter(|&&p| p == 2).count();
        let stretched = prov.iter().filter(|&&p| p == 0).count();
        let plan = [
            "work steady hours and keep spending lean",
            "hold a moderate savings rate",
            "save more and ease our working hours",
        ][usize::from(own)];
        json!({
            "wealth_guesses": guesses,
            "trust_levels": trust,
            "reflection_text": format!(
                "Our own statement signals status {own}. {well_off} households sound well off and {stretched} sound stretched, so we plan to {plan}."
            ),
        })
    }

    fn respond(&self, req: &PromptRequest) -> Result<Value, LlmError> {
        let missing = || LlmError::Config(format!("scripted {} request lacks its context", req.kind.as_str()));
        match (req.kind, &req.context) {
            (TemplateKind::LongNews | TemplateKind::ShortNews, ScriptContext::News { previous, current }) => {
                Ok(json!({ "news": Self::news(req.kind, previous, current) }))
            }
            (
                TemplateKind::LongReason | TemplateKind::ShortReason,
                ScriptContext::Reason {
                    productivity,
                    wealth,
                    all_wealth,
                },
            ) => {
                let status = Self::status_from_wealth(*wealth, all_wealth);
                let (analysis, reasoning) = Self::reasoning(*productivity, *wealth, all_wealth, status);
                Ok(if req.kind == TemplateKind::LongReason {
                    json!({ "analysis": analysis, "economic_status": status, "reasoning": reasoning })
                } else {
                    json!({ "economic_status": status, "reasoning": reasoning })
                })
            }
            (TemplateKind::Candidates, ScriptContext::Candidates { status }) => {
                Ok(json!({ "statements": phrase_bank(*status) }))
            }
            (TemplateKind::Reflect, ScriptContext::Reflect { agent, statements }) => {
                Ok(self.reflect(*agent, statements))
            }
            _ => Err(missing()),
        }
    }
}

impl LanguageBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, req: &PromptRequest) -> Completion {
        let started = Instant::now();
        let (result, raw) = match self.respond(req) {
            Ok(v) => {
                let raw = v.to_string();
                (parse_lenient(&raw, req.kind, req.expected_num), raw)
            }
            Err(e) => (Err(e), String::new()),
        };
        let attempt = Attempt {
            backend: self.name().to_string(),
            raw,
            error: result.as_ref().err().map(ToString::to_string),
            latency_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        Completion {
            result,
            attempts: vec![attempt],
            fell_back: false,
        }
    }
}
