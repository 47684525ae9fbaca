use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Result;

pub const EPISODES_CSV: &str = "episodes.csv";
pub const STEPS_CSV: &str = "steps.csv";
pub const EVAL_CSV: &str = "eval.csv";
pub const EVENTS_LOG: &str = "events.log";
pub const CONFIG_JSON: &str = "config.json";
pub const CHECKPOINT_JSON: &str = "checkpoint.json";
pub const AUDIT_JSONL: &str = "audit.jsonl";

pub const EPISODE_HEADER: [&str; 14] = [
    "episode",
    "seed",
    "years",
    "avg_household_reward",
    "social_welfare",
    "total_consumption",
    "total_labor",
    "final_gini",
    "gdp",
    "done_reason",
    "critic_loss",
    "actor_loss",
    "backend_calls",
    "fallbacks",
];

pub const STEP_HEADER: [&str; 12] = [
    "episode",
    "t",
    "news_kind",
    "reward",
    "gov_reward",
    "utility_sum",
    "critic_loss",
    "actor_loss",
    "gini",
    "gdp",
    "backend_calls",
    "done",
];

/// One row of `episodes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    /// Periods survived.
    pub years: usize,
    /// Mean household reward over all steps and households.
    pub avg_household_reward: f64,
    /// Sum of every household utility in the episode.
    pub social_welfare: f64,
    pub total_consumption: f64,
    pub total_labor: f64,
    pub final_gini: f64,
    /// Output of the last period.
    pub gdp: f64,
    /// `running` when the episode hit the step limit without an env terminal.
    pub done_reason: String,
    /// Mean over the episode's training steps; empty when none ran.
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub backend_calls: u64,
    pub fallbacks: u64,
}

/// One row of `steps.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub episode: usize,
    pub t: usize,
    pub news_kind: String,
    /// Mean household reward of the step.
    pub reward: f64,
    pub gov_reward: f64,
    pub utility_sum: f64,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub gini: f64,
    pub gdp: f64,
    pub backend_calls: u64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub episodes: Vec<EpisodeRow>,
    pub steps: Vec<StepRow>,
}

/// One evaluation seed, or the aggregate over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Seed as text, or `mean` / `sd` for the aggregate rows.
    pub seed: String,
    pub years: f64,
    pub avg_household_reward: f64,
    pub social_welfare: f64,
    pub total_consumption: f64,
    pub total_labor: f64,
    pub final_gini: f64,
    pub gdp: f64,
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes `episodes.csv` and `steps.csv` into `dir`.
pub fn write_metrics(metrics: &RunMetrics, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(&dir.join(EPISODES_CSV), &EPISODE_HEADER, &metrics.episodes)?;
    write_rows(&dir.join(STEPS_CSV), &STEP_HEADER, &metrics.steps)?;
    Ok(())
}

pub fn read_metrics(dir: &Path) -> Result<RunMetrics> {
    Ok(RunMetrics {
        episodes: read_rows(&dir.join(EPISODES_CSV))?,
        steps: read_rows(&dir.join(STEPS_CSV))?,
    })
}

pub fn write_eval(rows: &[EvalRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let header = [
        "seed",
        "years",
        "avg_household_reward",
        "social_welfare",
        "total_consumption",
        "total_labor",
        "final_gini",
        "gdp",
    ];
    write_rows(&dir.join(EVAL_CSV), &header, rows)
}

pub fn read_eval(dir: &Path) -> Result<Vec<EvalRow>> {
    read_rows(&dir.join(EVAL_CSV))
}
