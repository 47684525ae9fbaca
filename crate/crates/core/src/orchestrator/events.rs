use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Result;
use crate::think::NewsKind;

/// One line of `events.log`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum Event {
    EpisodeBegin {
        episode: usize,
        seed: u64,
    },
    News {
        episode: usize,
        t: usize,
        kind: NewsKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Retrieve {
        episode: usize,
        t: usize,
        agent: usize,
        ids: Vec<u64>,
    },
    Reason {
        episode: usize,
        t: usize,
        agent: usize,
        kind: NewsKind,
        status: u8,
    },
    Speak {
        episode: usize,
        t: usize,
        agent: usize,
        probs: [f64; 3],
        selected: usize,
        statement: String,
    },
    Broadcast {
        episode: usize,
        t: usize,
        n: usize,
    },
    Reflect {
        episode: usize,
        t: usize,
        agent: usize,
        wealth_guesses: Vec<u8>,
        trust_levels: Vec<u8>,
    },
    BackendError {
        episode: usize,
        t: usize,
        agent: Option<usize>,
        stage: String,
        error: String,
    },
    Act {
        episode: usize,
        t: usize,
    },
    EnvStep {
        episode: usize,
        t: usize,
        done: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    Train {
        episode: usize,
        t: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        critic_loss: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        actor_loss: Option<f64>,
    },
    HarvestShort {
        episode: usize,
        t: usize,
        added: usize,
    },
    HarvestLong {
        episode: usize,
        t: usize,
        added: usize,
        size: usize,
    },
    EpisodeEnd {
        episode: usize,
        years: usize,
    },
}

impl Event {
    /// Position inside a step; events of one step must not decrease in rank.
    fn rank(&self) -> Option<u8> {
        Some(match self {
            Event::News { .. } => 0,
            Event::Retrieve { .. } | Event::Reason { .. } => 1,
            Event::Speak { .. } => 2,
            Event::Broadcast { .. } => 3,
            Event::Reflect { .. } => 4,
            Event::Act { .. } => 5,
            Event::EnvStep { .. } => 6,
            Event::Train { .. } => 7,
            Event::HarvestShort { .. } => 8,
            Event::HarvestLong { .. } => 9,
            Event::BackendError { .. } | Event::EpisodeBegin { .. } | Event::EpisodeEnd { .. } => return None,
        })
    }
}

/// Event totals by type, plus news kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub episodes: u64,
    pub steps: u64,
    pub news_long: u64,
    pub news_short: u64,
    pub news_none: u64,
    pub retrieve: u64,
    pub reason: u64,
    pub speak: u64,
    pub broadcast: u64,
    pub reflect: u64,
    pub backend_error: u64,
    pub train: u64,
    pub harvest_short: u64,
    pub harvest_long: u64,
}

impl EventCounts {
    pub fn add(&mut self, e: &Event) {
        match e {
            Event::EpisodeBegin { .. } => self.episodes += 1,
            Event::News { kind, .. } => {
                self.steps += 1;
                match kind {
                    NewsKind::Long => self.news_long += 1,
                    NewsKind::Short => self.news_short += 1,
                    NewsKind::None => self.news_none += 1,
                }
            }
            Event::Retrieve { .. } => self.retrieve += 1,
            Event::Reason { .. } => self.reason += 1,
            Event::Speak { .. } => self.speak += 1,
            Event::Broadcast { .. } => self.broadcast += 1,
            Event::Reflect { .. } => self.reflect += 1,
            Event::BackendError { .. } => self.backend_error += 1,
            Event::Train { .. } => self.train += 1,
            Event::HarvestShort { .. } => self.harvest_short += 1,
            Event::HarvestLong { .. } => self.harvest_long += 1,
            Event::Act { .. } | Event::EnvStep { .. } | Event::EpisodeEnd { .. } => {}
        }
    }
}

/// Streaming writer that also keeps counts.
pub struct EventLog {
    out: Option<BufWriter<File>>,
    counts: EventCounts,
}

impl EventLog {
    pub fn new(path: Option<&Path>) -> Result<Self> {
        let out = match path {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        Ok(Self {
            out,
            counts: EventCounts::default(),
        })
    }

    pub fn emit(&mut self, e: Event) -> Result<()> {
        self.counts.add(&e);
        if let Some(w) = &mut self.out {
            writeln!(w, "{}", serde_json::to_string(&e)?)?;
        }
        Ok(())
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    pub fn flush(&mut self) -> Result<()> {
        if let Some(w) = &mut self.out {
            w.flush()?;
        }
        Ok(())
    }
}

pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<Event>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Checks the per-step order `news -> reason -> [speak] -> act -> step ->
/// train -> harvest` for every step of every episode and returns the counts.
pub fn validate_event_log(events: &[Event]) -> std::result::Result<EventCounts, String> {
    let mut counts = EventCounts::default();
    let mut in_episode: Option<usize> = None;
    let mut step: Option<(usize, u8, bool, bool)> = None; // (t, last rank, saw act, saw env_step)
    let mut steps_in_episode = 0usize;

    let close_step = |step: &Option<(usize, u8, bool, bool)>| -> std::result::Result<(), String> {
        if let Some((t, _, act, env)) = step {
            if !act || !env {
                return Err(format!("step {t} is missing its act or env_step event"));
            }
        }
        Ok(())
    };

    for (line, e) in events.iter().enumerate() {
        let line = line + 1;
        counts.add(e);
        match e {
            Event::EpisodeBegin { episode, .. } => {
                if in_episode.is_some() {
                    return Err(format!("line {line}: episode {episode} begins inside another episode"));
                }
                in_episode = Some(*episode);
                step = None;
                steps_in_episode = 0;
                continue;
            }
            Event::EpisodeEnd { episode, years } => {
                close_step(&step)?;
                if in_episode != Some(*episode) {
                    return Err(format!("line {line}: episode_end for an episode that is not open"));
                }
                if *years != steps_in_episode {
                    return Err(format!("line {line}: episode reports {years} years but ran {steps_in_episode} steps"));
                }
                in_episode = None;
                step = None;
                continue;
            }
            _ => {}
        }
        if in_episode.is_none() {
            return Err(format!("line {line}: event outside an episode"));
        }
        if let Event::News { t, .. } = e {
            close_step(&step)?;
            if *t != steps_in_episode {
                return Err(format!("line {line}: news for t={t}, expected t={steps_in_episode}"));
            }
            steps_in_episode += 1;
            step = Some((*t, 0, false, false));
            continue;
        }
        let Some((t, last, act, env)) = step.as_mut() else {
            return Err(format!("line {line}: event before the first news of the episode"));
        };
        match e.rank() {
            None => {
                // backend errors may occur between news and act
                if *last >= 5 {
                    return Err(format!("line {line}: backend_error after act in step {t}"));
                }
            }
            Some(r) => {
                if r < *last {
                    return Err(format!("line {line}: {e:?} out of order in step {t}"));
                }
                if (r == 5 && *act) || (r == 6 && *env) || (r >= 7 && r == *last) {
                    return Err(format!("line {line}: repeated event in step {t}"));
                }
                if r == 4 && *last < 3 {
                    return Err(format!("line {line}: reflect without broadcast in step {t}"));
                }
                if r == 6 && !*act {
                    return Err(format!("line {line}: env_step without act in step {t}"));
                }
                if r >= 7 && !*env {
                    return Err(format!("line {line}: train or harvest before env_step in step {t}"));
                }
                *act |= r == 5;
                *env |= r == 6;
                *last = r;
            }
        }
    }
    if in_episode.is_some() {
        return Err("log ends inside an episode".into());
    }
    Ok(counts)
}
