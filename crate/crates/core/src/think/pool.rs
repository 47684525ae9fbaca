use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POOL_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PoolError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("pool file line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("pool file version {found}, expected {POOL_FILE_VERSION}")]
    Version { found: u32 },
    #[error("pool file is empty")]
    Empty,
}

/// One harvested reasoning trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceEntry {
    pub id: u64,
    pub agent: usize,
    pub period: usize,
    pub reward: f64,
    pub productivity: f64,
    pub wealth: f64,
    /// Raw savings action in `[-1, 1]`.
    pub savings_action: f64,
    /// Raw labor action in `[-1, 1]`.
    pub labor_action: f64,
    pub reasoning: String,
    /// Unit-normalized encoding of [`query_text`] for this entry's state.
    pub key: Vec<f64>,
}

impl ExperienceEntry {
    /// Line used in the long-term reasoning prompt.
    pub fn render(&self) -> String {
        format!(
            "- Reward={:.4}, Personal productivity(e)={:.4}, Wealth={:.4}, Savings action={:.4}, Working-time action={:.4}. Reasoning: {}",
            self.reward, self.productivity, self.wealth, self.savings_action, self.labor_action, self.reasoning
        )
    }
}

/// Canonical text for a private state, shared by entry keys and queries.
pub fn query_text(productivity: f64, wealth: f64) -> String {
    format!("productivity {productivity:.4} wealth {wealth:.4}")
}

/// L2-normalizes in place; a zero vector is left unchanged.
pub fn normalize_key(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Reward descending, then newer (larger id) first.
fn by_reward_then_recency(a: &ExperienceEntry, b: &ExperienceEntry) -> Ordering {
    b.reward.total_cmp(&a.reward).then(b.id.cmp(&a.id))
}

/// The `k` best entries by reward, ties broken toward newer ids.
pub fn top_k_by_reward(entries: &[ExperienceEntry], k: usize) -> Vec<ExperienceEntry> {
    let mut v = entries.to_vec();
    v.sort_by(by_reward_then_recency);
    v.truncate(k);
    v
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Exact cosine top-k: similarity descending, then id ascending.
pub fn retrieve_top_k<'a>(store: &'a [ExperienceEntry], query: &[f64], k: usize) -> Vec<&'a ExperienceEntry> {
    let mut scored: Vec<(f64, &ExperienceEntry)> = store.iter().map(|e| (cosine(&e.key, query), e)).collect();
    let cmp = |a: &(f64, &ExperienceEntry), b: &(f64, &ExperienceEntry)| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    scored.into_iter().map(|(_, e)| e).collect()
}

/// Per-agent short-term buffers and the shared, append-only long-term store.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperiencePools {
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
    short: Vec<Vec<ExperienceEntry>>,
    long: Vec<ExperienceEntry>,
    pending: Vec<ExperienceEntry>,
    next_id: u64,
}

impl ExperiencePools {
    pub fn new(n_agents: usize, k1: usize, k2: usize, k3: usize) -> Self {
        Self {
            k1,
            k2,
            k3,
            short: vec![Vec::new(); n_agents],
            long: Vec::new(),
            pending: Vec::new(),
            next_id: 0,
        }
    }

    /// Fresh identity for a new entry.
    pub fn next_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    pub fn short(&self, agent: usize) -> &[ExperienceEntry] {
        &self.short[agent]
    }

    pub fn long(&self) -> &[ExperienceEntry] {
        &self.long
    }

    /// Records awaiting the next long harvest.
    pub fn pending(&self) -> &[ExperienceEntry] {
        &self.pending
    }

    /// Clears every short buffer and the pending window (episode reset).
    pub fn reset_short(&mut self) {
        self.short.iter_mut().for_each(Vec::clear);
        self.pending.clear();
    }

    /// Adds one agent's new records: the short buffer becomes the top `k1` of
    /// its old contents and the new records, and the records join the window
    /// for the next long harvest.
    pub fn harvest_short(&mut self, agent: usize, records: Vec<ExperienceEntry>) {
        let mut window = std::mem::take(&mut self.short[agent]);
        window.extend(records.iter().cloned());
        self.short[agent] = top_k_by_reward(&window, self.k1);
        self.pending.extend(records);
    }

    /// Appends the global top `k2` of the pending window; returns how many.
    pub fn harvest_long(&mut self) -> usize {
        let best = top_k_by_reward(&self.pending, self.k2);
        self.pending.clear();
        let n = best.len();
        self.long.extend(best);
        n
    }

    /// `k3` nearest long-term entries unioned with the agent's short buffer,
    /// without duplicate identities.
    pub fn retrieve(&self, agent: usize, query: &[f64]) -> Vec<ExperienceEntry> {
        let mut out: Vec<ExperienceEntry> = retrieve_top_k(&self.long, query, self.k3).into_iter().cloned().collect();
        for e in &self.short[agent] {
            if !out.iter().any(|o| o.id == e.id) {
                out.push(e.clone());
            }
        }
        out
    }

    /// Writes the long store as JSON lines after a version header.
    pub fn save_long(&self, path: impl AsRef<Path>) -> Result<(), PoolError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(
            w,
            "{}",
            serde_json::json!({ "version": POOL_FILE_VERSION, "entries": self.long.len() })
        )?;
        for e in &self.long {
            writeln!(w, "{}", serde_json::to_string(e).expect("entry serializes"))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Replaces the long store with a saved one; ids continue after the largest loaded id.
    pub fn load_long(&mut self, path: impl AsRef<Path>) -> Result<(), PoolError> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines.next().ok_or(PoolError::Empty)??;
        let header: serde_json::Value =
            serde_json::from_str(&header).map_err(|source| PoolError::Json { line: 1, source })?;
        let found = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != POOL_FILE_VERSION {
            return Err(PoolError::Version { found });
        }
        let mut long = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            long.push(serde_json::from_str(&line).map_err(|source| PoolError::Json { line: i + 2, source })?);
        }
        self.next_id = self.next_id.max(long.iter().map(|e: &ExperienceEntry| e.id).max().unwrap_or(0));
        self.long = long;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: u64, reward: f64) -> ExperienceEntry {
        ExperienceEntry {
            id,
            agent: 0,
            period: id as usize,
            reward,
            productivity: 1.0,
            wealth: 1.0,
            savings_action: 0.0,
            labor_action: 0.0,
            reasoning: String::new(),
            key: vec![1.0, 0.0],
        }
    }

    #[test]
    fn short_keeps_top_two() {
        let mut p = ExperiencePools::new(1, 2, 5, 3);
        p.harvest_short(0, vec![entry(1, 1.0), entry(2, 3.0), entry(3, 2.0)]);
        let r: Vec<f64> = p.short(0).iter().map(|e| e.reward).collect();
        assert_eq!(r, vec![3.0, 2.0]);
    }

    #[test]
    fn ties_prefer_newer() {
        let top = top_k_by_reward(&[entry(1, 1.0), entry(2, 1.0)], 1);
        assert_eq!(top[0].id, 2);
    }

    #[test]
    fn long_harvest_picks_global_best() {
        let mut p = ExperiencePools::new(2, 3, 1, 3);
        p.harvest_short(0, vec![entry(1, 5.0)]);
        let mut e = entry(2, 7.0);
        e.agent = 1;
        p.harvest_short(1, vec![e]);
        assert_eq!(p.harvest_long(), 1);
        assert_eq!(p.long()[0].reward, 7.0);
        assert_eq!(p.harvest_long(), 0);
    }
}
