//! Prompt templates and their rendering.

use super::LlmError;
use crate::util::pct_change;

pub const LONG_REASON: &str = include_str!("../../prompts/long_reason.txt");
pub const SHORT_REASON: &str = include_str!("../../prompts/short_reason.txt");
pub const REFLECT: &str = include_str!("../../prompts/reflect.txt");
pub const LONG_NEWS: &str = include_str!("../../prompts/long_news.txt");
pub const SHORT_NEWS: &str = include_str!("../../prompts/short_news.txt");
pub const CANDIDATES: &str = include_str!("../../prompts/candidates.txt");

pub const NO_EXPERIENCE: &str = "No similar experiences found.";
pub const NO_LONG_NEWS: &str = "None";

/// Labels of the seven global observation components, in vector order.
pub const OBS_LABELS: [&str; 7] = [
    "wage rate",
    "top 10% wealth",
    "bottom 50% wealth",
    "top 10% income",
    "bottom 50% income",
    "top 10% productivity",
    "bottom 50% productivity",
];

/// Replaces every `{key}`; fails if a placeholder is left over.
pub fn render(template: &str, vars: &[(&str, &str)]) -> Result<String, LlmError> {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    if let Some(p) = leftover_placeholder(&out) {
        return Err(LlmError::Config(format!("unfilled placeholder {{{p}}}")));
    }
    Ok(out)
}

fn leftover_placeholder(s: &str) -> Option<&str> {
    let mut rest = s;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        if len > 0 && after[len..].starts_with('}') {
            return Some(&after[..len]);
        }
        rest = after;
    }
    None
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 21] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
        "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// Status composition `(high, medium, low)` stated to the reflecting agent:
/// `ceil(N/10)` high, `floor(N/2)` low, the rest medium.
pub fn composition_counts(n: usize) -> (usize, usize, usize) {
    let high = n.div_ceil(10).min(n);
    let low = (n / 2).min(n - high);
    (high, n - high - low, low)
}

pub fn composition_note(n: usize) -> String {
    let (high, mid, low) = composition_counts(n);
    let part = |k: usize| format!("{} {}", number_word(k), if k == 1 { "has" } else { "have" });
    format!(
        "Notice {} status 2, {} status 1, and {} status 0.",
        part(high),
        part(mid),
        part(low)
    )
}

pub fn format_obs(v: &[f64]) -> String {
    OBS_LABELS
        .iter()
        .zip(v)
        .map(|(l, x)| format!("{l}: {x:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Percentage change of each component from `previous` to `current`.
pub fn obs_changes(previous: &[f64], current: &[f64]) -> Vec<f64> {
    previous.iter().zip(current).map(|(&a, &b)| pct_change(a, b)).collect()
}

pub fn format_changes(previous: &[f64], current: &[f64]) -> String {
    OBS_LABELS
        .iter()
        .zip(obs_changes(previous, current))
        .map(|(l, c)| format!("{l} {c:+.2}%"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn long_news_prompt(previous: &[f64], current: &[f64]) -> Result<String, LlmError> {
    let window = format!("- {}\n- {}", format_obs(previous), format_obs(current));
    render(
        LONG_NEWS,
        &[("window", &window), ("changes", &format_changes(previous, current))],
    )
}

pub fn short_news_prompt(previous: &[f64], current: &[f64], last_long: Option<&str>) -> Result<String, LlmError> {
    render(
        SHORT_NEWS,
        &[
            ("previous", &format_obs(previous)),
            ("current", &format_obs(current)),
            ("changes", &format_changes(previous, current)),
            ("recent_long_term_result", last_long.unwrap_or(NO_LONG_NEWS)),
        ],
    )
}

pub fn long_reason_prompt(news: &str, productivity: f64, wealth: f64, experiences: &[String]) -> Result<String, LlmError> {
    let similar = if experiences.is_empty() {
        NO_EXPERIENCE.to_string()
    } else {
        experiences.join("\n")
    };
    render(
        LONG_REASON,
        &[
            ("long_term_news", news),
            ("productivity", &productivity.to_string()),
            ("wealth", &wealth.to_string()),
            ("similar_experience", &similar),
        ],
    )
}

pub fn short_reason_prompt(
    news: &str,
    last_long: Option<&str>,
    productivity: f64,
    wealth: f64,
) -> Result<String, LlmError> {
    render(
        SHORT_REASON,
        &[
            ("short_term_news", news),
            ("recent_long_term_result", last_long.unwrap_or(NO_LONG_NEWS)),
            ("productivity", &productivity.to_string()),
            ("wealth", &wealth.to_string()),
        ],
    )
}

pub fn candidates_prompt(productivity: f64, wealth: f64, status: u8, reasoning: &str) -> Result<String, LlmError> {
    render(
        CANDIDATES,
        &[
            ("productivity", &productivity.to_string()),
            ("wealth", &wealth.to_string()),
            ("economic_status", &status.to_string()),
            ("personal_reasoning", reasoning),
        ],
    )
}

/// `statements` holds every broadcast statement in agent order, so the
/// returned arrays index households directly.
pub fn reflect_prompt(
    productivity: f64,
    wealth: f64,
    reasoning: &str,
    own_statement: &str,
    statements: &[String],
) -> Result<String, LlmError> {
    let listed = statements
        .iter()
        .map(|s| format!("- {s}"))
        .collect::<Vec<_>>()
        .join("\n");
    render(
        REFLECT,
        &[
            ("productivity", &productivity.to_string()),
            ("wealth", &wealth.to_string()),
            ("personal_reasoning", reasoning),
            ("personal_statement", own_statement),
            ("other_agents_statements", &listed),
            ("expected_num", &statements.len().to_string()),
            ("composition_note", &composition_note(statements.len())),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_household_composition() {
        assert_eq!(composition_counts(10), (1, 4, 5));
        assert_eq!(
            composition_note(10),
            "Notice one has status 2, four have status 1, and five have status 0."
        );
        assert_eq!(composition_counts(2), (1, 0, 1));
        assert_eq!(composition_counts(25), (3, 10, 12));
    }

    #[test]
    fn render_rejects_unfilled() {
        assert!(render("a {x} b", &[]).is_err());
        assert_eq!(render("a {x} b", &[("x", "1")]).unwrap(), "a 1 b");
        // the JSON skeletons in the templates are not placeholders
        assert!(render("{\n  \"a\": 1\n}", &[]).is_ok());
    }

    #[test]
    fn every_template_renders_completely() {
        let obs = [1.0; 7];
        long_news_prompt(&obs, &obs).unwrap();
        short_news_prompt(&obs, &obs, None).unwrap();
        let p = long_reason_prompt("n", 1.0, 2.0, &[]).unwrap();
        assert!(p.contains(NO_EXPERIENCE));
        let p = short_reason_prompt("n", None, 1.0, 2.0).unwrap();
        assert!(p.contains("Recent Long-Term News: None"));
        candidates_prompt(1.0, 2.0, 1, "r").unwrap();
        let s: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let p = reflect_prompt(1.0, 2.0, "r", "s0", &s).unwrap();
        assert!(p.contains("exactly 10 elements. Notice one has status 2"));
    }
}
