use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Ablation, BackendKind, EncoderKind, GovPolicy, PolicyKind, RunConfig};
use super::events::{Event, EventCounts, EventLog};
use super::metrics::{
    write_eval, write_metrics, EpisodeRow, EvalRow, RunMetrics, StepRow, AUDIT_JSONL, CHECKPOINT_JSON, CONFIG_JSON,
    EVENTS_LOG,
};
use super::policies::{random_gov_action, random_policy, rule_policy, RuleObs};
use super::{OrchestratorError, Result};
use crate::econ::{Economy, EconomyState, GlobalObs, GovAction, HouseholdAction, HouseholdObs, ScenarioConfig};
use crate::embed::{pool_texts, AgentTexts, HashingEncoder, RemoteEncoder, TextEncoder};
use crate::llm::{AuditLog, LanguageBackend, LlmClient, RemoteBackend, RemoteConfig, ScriptedBackend, TemplateKind};
use crate::marl::{Maddpg, MaddpgCheckpoint, MaddpgConfig, Transition};
use crate::speak::{broadcast, generate_candidates, reflect, SelectorParams, StatementSet};
use crate::think::{
    classify_news_type, make_long_news, make_short_news, max_change, normalize_key, query_text, reason_long,
    reason_short, ExperienceEntry, ExperiencePools, NewsEvent, NewsKind, PrivateObs, RandomTrigger, ReasoningRecord,
    SchedulerConfig,
};
use crate::util::{child_seed, mean, sample_sd, symlog};

/// Symlog-compressed global observation fed to the critic.
pub fn global_features(obs: &GlobalObs<f64>) -> Vec<f64> {
    obs.to_vec().into_iter().map(symlog).collect()
}

/// Symlog-compressed household observation fed to an actor.
pub fn local_features(state: &EconomyState<f64>, i: usize) -> Vec<f64> {
    state.household_obs(i).to_vec().into_iter().map(symlog).collect()
}

/// Saved policy state for later evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub label: String,
    pub episodes_trained: usize,
    pub maddpg: Option<MaddpgCheckpoint>,
    pub selector: Option<SelectorParams>,
}

impl RunCheckpoint {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub events: EventCounts,
    pub backend_calls: BTreeMap<TemplateKind, u64>,
    pub fallbacks: u64,
    pub checkpoint: RunCheckpoint,
    pub long_pool_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Train,
    Eval,
}

/// Language state one agent carries between steps.
#[derive(Debug, Clone, Default)]
struct AgentLang {
    texts: AgentTexts,
    pooled: Vec<f64>,
    dirty: bool,
    record: Option<ReasoningRecord>,
    /// Reasoning made this step, with the private state it saw.
    fresh: Option<(ReasoningRecord, f64, f64)>,
}

fn fan_out<T: Send>(n: usize, parallel: bool, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if !parallel {
        return (0..n).map(f).collect();
    }
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..n).map(|i| s.spawn(move || f(i))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("backend worker panicked"))
            .collect()
    })
}

fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, name, 0))
}

fn backend_error(
    events: &mut EventLog,
    episode: usize,
    t: usize,
    agent: Option<usize>,
    stage: &str,
    err: impl ToString,
) -> Result<()> {
    let error = err.to_string();
    log::warn!("episode {episode} t={t} agent {agent:?} {stage}: {error}");
    events.emit(Event::BackendError {
        episode,
        t,
        agent,
        stage: stage.into(),
        error,
    })
}

fn mean_opt(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| mean(xs))
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    scenario: ScenarioConfig,
    mode: Mode,
    client: Option<LlmClient>,
    encoder: Option<Box<dyn TextEncoder>>,
    learner: Option<Maddpg<f64>>,
    selector: Option<SelectorParams>,
    selector_baseline: Option<f64>,
    /// Encoded candidates and the drawn index, awaiting the episode-end update.
    selections: Vec<(Vec<Vec<f64>>, usize)>,
    pools: ExperiencePools,
    events: EventLog,
    trigger: Option<RandomTrigger>,
    act_rng: ChaCha8Rng,
    train_rng: ChaCha8Rng,
    select_rng: ChaCha8Rng,
    gov_rng: ChaCha8Rng,
    metrics: RunMetrics,
    episodes_done: usize,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig, mode: Mode, restore: Option<&RunCheckpoint>) -> Result<Self> {
        cfg.validate()?;
        let scenario = ScenarioConfig::load(&cfg.scenario)?;
        let n = scenario.n_households;
        let lang = cfg.policy.uses_language();
        let out = cfg.out_dir.as_deref();
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            let snapshot = serde_json::json!({
                "label": cfg.label(),
                "policy": cfg.policy.as_str(),
                "ablations": cfg.ablations.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
                "mode": if mode == Mode::Train { "train" } else { "eval" },
                "run": cfg,
                "scenario_config": scenario,
            });
            std::fs::write(dir.join(CONFIG_JSON), serde_json::to_string_pretty(&snapshot)?)?;
        }

        let (client, encoder) = if lang {
            let script_seed = child_seed(cfg.seed, "script", 0);
            let backend: Box<dyn LanguageBackend> = match cfg.backend {
                BackendKind::Scripted => Box::new(ScriptedBackend::new(script_seed)),
                BackendKind::Remote => {
                    let mut rc = RemoteConfig::from_env()?;
                    rc.fallback_to_scripted = cfg.fallback_to_scripted;
                    Box::new(RemoteBackend::new(rc, script_seed))
                }
            };
            let audit = match out {
                Some(dir) => Some(AuditLog::create(dir.join(AUDIT_JSONL))?),
                None => None,
            };
            let encoder: Box<dyn TextEncoder> = match cfg.encoder {
                EncoderKind::Hashing => Box::new(HashingEncoder::new(cfg.encoder_dim, 0)),
                EncoderKind::Remote => {
                    let e = RemoteEncoder::from_env()?;
                    if e.dim() != cfg.encoder_dim {
                        return Err(OrchestratorError::Config(format!(
                            "remote encoder returns {} dimensions, configured {}",
                            e.dim(),
                            cfg.encoder_dim
                        )));
                    }
                    Box::new(e)
                }
            };
            (Some(LlmClient::new(backend, audit)), Some(encoder))
        } else {
            (None, None)
        };

        let learner = if cfg.policy.is_learned() {
            let mut mc = MaddpgConfig::new(n, HouseholdObs::<f64>::DIM, GlobalObs::<f64>::DIM);
            if lang {
                mc = mc.with_language(cfg.embed_dim, cfg.encoder_dim);
            }
            mc.gamma = cfg.gamma;
            mc.tau = cfg.tau;
            mc.actor_lr = cfg.actor_lr;
            mc.critic_lr = cfg.critic_lr;
            mc.projection_lr = cfg.projection_lr;
            mc.batch_size = cfg.batch_size;
            mc.buffer_capacity = cfg.buffer_capacity;
            mc.explore_sigma = cfg.explore_sigma;
            mc.reward_scale = cfg.reward_scale;
            mc.warmup_factor = cfg.warmup_factor;
            mc.terminal_value = cfg.terminal_value(&scenario);
            let mut m = Maddpg::new(mc.clone(), &mut stream(cfg.seed, "init"))?;
            if let Some(saved) = restore.and_then(|r| r.maddpg.as_ref()) {
                let mut nets = saved.to_nets::<f64>()?;
                if nets.cfg.critic_input_dim() != mc.critic_input_dim()
                    || nets.cfg.actor_input_dim() != mc.actor_input_dim()
                    || nets.cfg.n_agents != mc.n_agents
                {
                    return Err(OrchestratorError::Config(
                        "checkpoint network shapes do not match this run".into(),
                    ));
                }
                nets.cfg = mc;
                m.nets = nets;
            }
            Some(m)
        } else {
            None
        };

        let selector = if lang && !cfg.ablated(Ablation::Speak) {
            Some(match restore.and_then(|r| r.selector.clone()) {
                Some(s) => s,
                None => SelectorParams::init(cfg.selector_key_dim, cfg.encoder_dim, &mut stream(cfg.seed, "selector")),
            })
        } else {
            None
        };

        let mut pools = ExperiencePools::new(n, cfg.k1, cfg.k2, cfg.k3);
        if let Some(p) = &cfg.pool_file {
            if lang && p.exists() {
                pools.load_long(p)?;
            }
        }
        let trigger = (lang && cfg.ablated(Ablation::TimingScheduler)).then(|| {
            RandomTrigger::new(
                1.0 / cfg.long_interval as f64,
                cfg.random_short_rate,
                child_seed(cfg.seed, "trigger", 0),
            )
        });
        let events_path = out.map(|d| d.join(EVENTS_LOG));
        let events = EventLog::new(events_path.as_deref())?;

        Ok(Self {
            scenario,
            mode,
            client,
            encoder,
            learner,
            selector,
            selector_baseline: None,
            selections: Vec::new(),
            pools,
            events,
            trigger,
            act_rng: stream(cfg.seed, "act"),
            train_rng: stream(cfg.seed, "train"),
            select_rng: stream(cfg.seed, "select"),
            gov_rng: stream(cfg.seed, "gov"),
            metrics: RunMetrics::default(),
            episodes_done: 0,
            cfg,
        })
    }

    fn lang(&self) -> bool {
        self.cfg.policy.uses_language()
    }

    fn training(&self) -> bool {
        self.mode == Mode::Train
    }

    fn pool_on(&self) -> bool {
        self.lang() && !self.cfg.ablated(Ablation::ExperiencePool)
    }

    fn harvest_long_on(&self) -> bool {
        self.pool_on() && (self.training() || self.cfg.eval_harvest)
    }

    fn calls(&self) -> (u64, u64) {
        self.client
            .as_ref()
            .map_or((0, 0), |c| (c.total_calls(), c.fallbacks()))
    }

    fn decide_kind(&mut self, t: usize, ind: &[f64], prev: Option<&[f64]>) -> NewsKind {
        if !self.lang() {
            return NewsKind::None;
        }
        let cfg = self.cfg;
        let sched = SchedulerConfig {
            long_interval: cfg.long_interval,
            sigma: cfg.sigma,
            mode: cfg.change_mode,
            eps_rel: 1e-8,
        };
        let random = self.trigger.is_some();
        let mut kind = match &mut self.trigger {
            Some(trig) => trig.next_kind(),
            None => classify_news_type(ind, prev, t, &sched),
        };
        if kind == NewsKind::Long && cfg.ablated(Ablation::LongTerm) {
            // no checkpoint, so the shock rule decides alone
            kind = match prev {
                Some(p) if !random && t >= 1 && max_change(ind, p, sched.mode, sched.eps_rel) > sched.sigma => {
                    NewsKind::Short
                }
                _ => NewsKind::None,
            };
        }
        if kind == NewsKind::Short && cfg.ablated(Ablation::ShortTerm) {
            kind = NewsKind::None;
        }
        kind
    }

    fn gov_action(&mut self) -> GovAction {
        match self.cfg.gov_policy {
            GovPolicy::Fixed => self.scenario.government,
            GovPolicy::Random => random_gov_action(&mut self.gov_rng),
        }
    }

    fn query_key(&self, productivity: f64, wealth: f64) -> Result<Vec<f64>> {
        let enc = self.encoder.as_deref().expect("language run has an encoder");
        let mut k = enc.encode(&query_text(productivity, wealth))?;
        normalize_key(&mut k);
        Ok(k)
    }

    /// News, reasoning and, at checkpoints, the speak round.
    #[allow(clippy::too_many_arguments)]
    fn language_phase(
        &mut self,
        episode: usize,
        t: usize,
        kind: NewsKind,
        prev_obs: &[f64],
        obs: &[f64],
        ind: &[f64],
        state: &EconomyState<f64>,
        agents: &mut [AgentLang],
        last_long: &mut Option<NewsEvent>,
    ) -> Result<()> {
        let n = agents.len();
        let news = {
            let client = self.client.as_ref().expect("language client");
            match kind {
                NewsKind::Long => Some(make_long_news(client, t, prev_obs, obs, ind)),
                NewsKind::Short => Some(make_short_news(client, t, prev_obs, obs, last_long.as_ref(), ind)),
                NewsKind::None => None,
            }
        };
        let news = match news {
            None => None,
            Some(Ok(ev)) => Some(ev),
            Some(Err(e)) => {
                self.events.emit(Event::News {
                    episode,
                    t,
                    kind,
                    text: None,
                })?;
                return backend_error(&mut self.events, episode, t, None, "news", e);
            }
        };
        self.events.emit(Event::News {
            episode,
            t,
            kind,
            text: news.as_ref().map(|e| e.text.clone()),
        })?;
        let Some(news) = news else {
            return Ok(());
        };
        for a in agents.iter_mut() {
            a.texts.news = Some(news.text.clone());
            a.dirty = true;
        }
        let prior_long = last_long.clone();
        if kind == NewsKind::Long {
            *last_long = Some(news.clone());
        }

        let wealth = state.assets.clone();
        let retrieved: Vec<Vec<ExperienceEntry>> = if kind == NewsKind::Long && self.pool_on() {
            let mut out = Vec::with_capacity(n);
            for (i, &w) in wealth.iter().enumerate() {
                let key = self.query_key(state.efficiency[i], w)?;
                let found = self.pools.retrieve(i, &key);
                self.events.emit(Event::Retrieve {
                    episode,
                    t,
                    agent: i,
                    ids: found.iter().map(|e| e.id).collect(),
                })?;
                out.push(found);
            }
            out
        } else {
            vec![Vec::new(); n]
        };

        let client = self.client.as_ref().expect("language client");
        let results = fan_out(n, client.is_remote(), |i| {
            let private = PrivateObs {
                agent: i,
                productivity: state.efficiency[i],
                wealth: wealth[i],
                all_wealth: &wealth,
            };
            match kind {
                NewsKind::Long => reason_long(client, t, &news, &private, &retrieved[i]),
                _ => reason_short(client, t, &news, prior_long.as_ref(), &private),
            }
        });
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(rec) => {
                    self.events.emit(Event::Reason {
                        episode,
                        t,
                        agent: i,
                        kind,
                        status: rec.status,
                    })?;
                    let a = &mut agents[i];
                    a.texts.reasoning = Some(rec.reasoning.clone());
                    a.dirty = true;
                    a.fresh = Some((rec.clone(), state.efficiency[i], wealth[i]));
                    a.record = Some(rec);
                }
                Err(e) => backend_error(&mut self.events, episode, t, Some(i), "reason", e)?,
            }
        }

        if kind == NewsKind::Long && !self.cfg.ablated(Ablation::Speak) {
            self.speak_phase(episode, t, state, agents)?;
        }
        Ok(())
    }

    fn speak_phase(&mut self, episode: usize, t: usize, state: &EconomyState<f64>, agents: &mut [AgentLang]) -> Result<()> {
        let n = agents.len();
        let client = self.client.as_ref().expect("language client");
        let cands = fan_out(n, client.is_remote(), |i| {
            let (status, reasoning) = agents[i]
                .record
                .as_ref()
                .map_or((1, ""), |r| (r.status, r.reasoning.as_str()));
            generate_candidates(client, i, t, state.efficiency[i], state.assets[i], status, reasoning)
        });
        let encoder = self.encoder.as_deref().expect("encoder");
        let selector = self.selector.as_ref().expect("selector");
        let mut sets: Vec<StatementSet> = Vec::with_capacity(n);
        let mut failed = Vec::new();
        for (i, c) in cands.into_iter().enumerate() {
            match c {
                Ok(c) => sets.push(selector.select(i, c, encoder, &mut self.select_rng)?),
                Err(e) => failed.push((i, e)),
            }
        }
        let record_selection = self.mode == Mode::Train && self.cfg.train_selector;
        if record_selection && failed.is_empty() {
            for s in &sets {
                let enc = s
                    .candidates
                    .iter()
                    .map(|c| encoder.encode(c))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                self.selections.push((enc, s.selected));
            }
        }
        if !failed.is_empty() {
            // reflection needs the full broadcast
            for (i, e) in failed {
                backend_error(&mut self.events, episode, t, Some(i), "candidates", e)?;
            }
            return Ok(());
        }
        for s in &sets {
            self.events.emit(Event::Speak {
                episode,
                t,
                agent: s.agent,
                probs: s.probs,
                selected: s.selected,
                statement: s.selected_text().to_string(),
            })?;
        }
        let v = broadcast(&sets);
        self.events.emit(Event::Broadcast { episode, t, n: v.len() })?;
        for (a, s) in agents.iter_mut().zip(&v) {
            a.texts.statement = Some(s.clone());
            a.dirty = true;
        }
        let client = self.client.as_ref().expect("language client");
        let refl = fan_out(n, client.is_remote(), |i| {
            let reasoning = agents[i].record.as_ref().map_or("", |r| r.reasoning.as_str());
            reflect(client, i, t, state.efficiency[i], state.assets[i], reasoning, &v)
        });
        for (i, r) in refl.into_iter().enumerate() {
            match r {
                Ok(r) => {
                    self.events.emit(Event::Reflect {
                        episode,
                        t,
                        agent: i,
                        wealth_guesses: r.wealth_guesses,
                        trust_levels: r.trust_levels,
                    })?;
                    agents[i].texts.reflection = Some(r.reflection_text);
                    agents[i].dirty = true;
                }
                Err(e) => backend_error(&mut self.events, episode, t, Some(i), "reflect", e)?,
            }
        }
        Ok(())
    }

    fn refresh_pooled(&self, agents: &mut [AgentLang]) -> Result<()> {
        let Some(encoder) = self.encoder.as_deref() else {
            return Ok(());
        };
        for a in agents.iter_mut().filter(|a| a.dirty) {
            a.pooled = pool_texts(encoder, &a.texts.selected(self.cfg.embed_sources))?;
            a.dirty = false;
        }
        Ok(())
    }

    fn choose_actions(&mut self, state: &EconomyState<f64>, gov: &GovAction, agents: &[AgentLang]) -> Vec<[f64; 2]> {
        let n = state.n_households();
        match self.cfg.policy {
            PolicyKind::Random => (0..n).map(|_| random_policy(&mut self.act_rng)).collect(),
            PolicyKind::Rule => (0..n)
                .map(|i| {
                    let obs = RuleObs {
                        wage: state.wage,
                        efficiency: state.efficiency[i],
                        assets: state.assets[i],
                    };
                    rule_policy(&obs, &self.scenario, gov)
                })
                .collect(),
            PolicyKind::Lamp | PolicyKind::Maddpg => {
                let explore = self.mode == Mode::Train;
                let nets = &self.learner.as_ref().expect("learned policy").nets;
                let rng = &mut self.act_rng;
                (0..n)
                    .map(|i| {
                        let m = nets.embed(&agents[i].pooled, false);
                        nets.act(i, &local_features(state, i), &m, explore, rng)
                    })
                    .collect()
            }
        }
    }

    fn harvest_short(
        &mut self,
        episode: usize,
        t: usize,
        agents: &mut [AgentLang],
        actions: &[[f64; 2]],
        rewards: &[f64],
    ) -> Result<()> {
        let mut added = 0;
        for i in 0..agents.len() {
            let Some((rec, productivity, wealth)) = agents[i].fresh.take() else {
                continue;
            };
            if !self.pool_on() {
                continue;
            }
            let key = self.query_key(productivity, wealth)?;
            let entry = ExperienceEntry {
                id: self.pools.next_id(),
                agent: i,
                period: t,
                reward: rewards[i],
                productivity,
                wealth,
                savings_action: actions[i][0],
                labor_action: actions[i][1],
                reasoning: rec.reasoning,
                key,
            };
            self.pools.harvest_short(i, vec![entry]);
            added += 1;
        }
        if added > 0 {
            self.events.emit(Event::HarvestShort { episode, t, added })?;
        }
        Ok(())
    }

    fn harvest_long(&mut self, episode: usize, t: usize) -> Result<()> {
        if self.pools.pending().is_empty() {
            return Ok(());
        }
        let added = self.pools.harvest_long();
        self.events.emit(Event::HarvestLong {
            episode,
            t,
            added,
            size: self.pools.long().len(),
        })
    }

    fn run_episode(&mut self, episode: usize) -> Result<()> {
        let cfg = self.cfg;
        let env_seed = child_seed(cfg.seed, "env", episode as u64);
        let mut env = Economy::<f64>::reset(&self.scenario, env_seed)?;
        let n = env.n_households();
        self.pools.reset_short();
        self.selections.clear();
        self.events.emit(Event::EpisodeBegin { episode, seed: env_seed })?;
        let pooled_dim = if self.lang() { cfg.encoder_dim } else { 0 };
        let mut agents: Vec<AgentLang> = (0..n)
            .map(|_| AgentLang {
                pooled: vec![0.0; pooled_dim],
                ..AgentLang::default()
            })
            .collect();
        let mut last_long: Option<NewsEvent> = None;
        let mut prev_obs: Option<Vec<f64>> = None;
        let mut prev_ind: Option<Vec<f64>> = None;
        let (calls0, fallbacks0) = self.calls();

        let mut step_rewards = Vec::new();
        let mut critic_losses = Vec::new();
        let mut actor_losses = Vec::new();
        let (mut consumption, mut labor) = (0.0, 0.0);
        let mut final_gini = env.state().indicators().wealth_gini;
        let mut gdp = env.state().gdp;
        let mut done_reason = None;
        let mut last_t = 0;
        let mut long_harvested_at = None;

        for t in 0..cfg.steps {
            last_t = t;
            let (calls_before, _) = self.calls();
            let state = env.state().clone();
            let obs = state.last_global_obs.to_vec();
            let ind = state.indicators().to_array().to_vec();
            let kind = self.decide_kind(t, &ind, prev_ind.as_deref());
            if self.lang() {
                let prev = prev_obs.clone().unwrap_or_else(|| obs.clone());
                self.language_phase(episode, t, kind, &prev, &obs, &ind, &state, &mut agents, &mut last_long)?;
                self.refresh_pooled(&mut agents)?;
            }

            let gov = self.gov_action();
            let raw = self.choose_actions(&state, &gov, &agents);
            self.events.emit(Event::Act { episode, t })?;
            let h_max = self.scenario.h_max;
            let actions: Vec<HouseholdAction<f64>> =
                raw.iter().map(|&r| HouseholdAction::from_raw(r, h_max)).collect();
            let outcome = env.step(&gov, &actions)?;
            self.events.emit(Event::EnvStep {
                episode,
                t,
                done: outcome.done,
                reason: outcome.done_reason.map(|r| r.as_str().to_string()),
            })?;

            let mut losses = (None, None);
            if self.mode == Mode::Train {
                if let Some(learner) = self.learner.as_mut() {
                    let next = env.state();
                    let pooled: Vec<Vec<f64>> = agents.iter().map(|a| a.pooled.clone()).collect();
                    learner.store(Transition {
                        global: global_features(&state.last_global_obs),
                        pooled: pooled.clone(),
                        local: (0..n).map(|i| local_features(&state, i)).collect(),
                        actions: raw.clone(),
                        rewards: outcome.rewards.clone(),
                        next_global: global_features(&next.last_global_obs),
                        next_pooled: pooled,
                        next_local: (0..n).map(|i| local_features(next, i)).collect(),
                        done: outcome.done_reason.is_some_and(|r| r.is_collapse()),
                    })?;
                    if let Some(m) = learner.train_step(&mut self.train_rng)? {
                        critic_losses.push(m.critic_loss);
                        actor_losses.push(m.actor_loss);
                        losses = (Some(m.critic_loss), Some(m.actor_loss));
                    }
                    self.events.emit(Event::Train {
                        episode,
                        t,
                        critic_loss: losses.0,
                        actor_loss: losses.1,
                    })?;
                }
            }

            self.harvest_short(episode, t, &mut agents, &raw, &outcome.rewards)?;
            if kind == NewsKind::Long && self.harvest_long_on() {
                self.harvest_long(episode, t)?;
                long_harvested_at = Some(t);
            }

            let step_reward = mean(&outcome.rewards);
            step_rewards.push(step_reward);
            consumption += outcome.ledger.iter().map(|l| l.consumption).sum::<f64>();
            labor += outcome.ledger.iter().map(|l| l.hours).sum::<f64>();
            final_gini = outcome.indicators.wealth_gini;
            gdp = outcome.output;
            done_reason = outcome.done_reason;
            let (calls_after, _) = self.calls();
            self.metrics.steps.push(StepRow {
                episode,
                t,
                news_kind: kind.as_str().to_string(),
                reward: step_reward,
                gov_reward: outcome.gov_reward,
                utility_sum: outcome.rewards.iter().sum(),
                critic_loss: losses.0,
                actor_loss: losses.1,
                gini: final_gini,
                gdp,
                backend_calls: calls_after - calls_before,
                done: outcome.done,
            });

            prev_obs = Some(obs);
            prev_ind = Some(ind);
            if outcome.done {
                break;
            }
        }

        if self.harvest_long_on() && long_harvested_at != Some(last_t) {
            self.harvest_long(episode, last_t)?;
        }
        let years = env.state().t;
        self.events.emit(Event::EpisodeEnd { episode, years })?;

        let avg = mean(&step_rewards);
        self.update_selector(avg);
        let (calls1, fallbacks1) = self.calls();
        self.metrics.episodes.push(EpisodeRow {
            episode,
            seed: env_seed,
            years,
            avg_household_reward: avg,
            social_welfare: env.state().welfare,
            total_consumption: consumption,
            total_labor: labor,
            final_gini,
            gdp,
            done_reason: done_reason.map_or("running", |r| r.as_str()).to_string(),
            critic_loss: mean_opt(&critic_losses),
            actor_loss: mean_opt(&actor_losses),
            backend_calls: calls1 - calls0,
            fallbacks: fallbacks1 - fallbacks0,
        });
        self.episodes_done += 1;
        log::info!(
            "{} episode {episode}: years {years}, avg reward {avg:.4}, gini {final_gini:.4}",
            cfg.label()
        );
        Ok(())
    }

    /// REINFORCE on the episode's selections against a running baseline.
    fn update_selector(&mut self, value: f64) {
        let selections = std::mem::take(&mut self.selections);
        let Some(sel) = self.selector.as_mut() else {
            return;
        };
        if selections.is_empty() {
            return;
        }
        let baseline = self.selector_baseline.unwrap_or(value);
        let advantage = value - baseline;
        for (enc, chosen) in &selections {
            sel.reinforce(enc, *chosen, advantage, self.cfg.selector_lr);
        }
        self.selector_baseline = Some(0.9 * baseline + 0.1 * value);
    }

    fn checkpoint(&self) -> RunCheckpoint {
        RunCheckpoint {
            label: self.cfg.label(),
            episodes_trained: self.episodes_done,
            maddpg: self.learner.as_ref().map(|m| MaddpgCheckpoint::from_nets(&m.nets)),
            selector: self.selector.clone(),
        }
    }

    fn finish(mut self) -> Result<RunOutput> {
        self.events.flush()?;
        let checkpoint = self.checkpoint();
        if let Some(dir) = self.cfg.out_dir.as_deref() {
            write_metrics(&self.metrics, dir)?;
            if self.training() && self.cfg.policy.is_learned() {
                checkpoint.save(dir.join(CHECKPOINT_JSON))?;
            }
        }
        if let Some(p) = &self.cfg.pool_file {
            if self.harvest_long_on() {
                self.pools.save_long(p)?;
            }
        }
        let (backend_calls, fallbacks) = match &self.client {
            Some(c) => (c.counts(), c.fallbacks()),
            None => (BTreeMap::new(), 0),
        };
        Ok(RunOutput {
            events: self.events.counts(),
            metrics: self.metrics,
            backend_calls,
            fallbacks,
            checkpoint,
            long_pool_size: self.pools.long().len(),
        })
    }
}

/// Trains for `cfg.episodes` episodes; writes outputs when `cfg.out_dir` is set.
pub fn run_training(cfg: &RunConfig) -> Result<RunOutput> {
    let mut runner = Runner::new(cfg, Mode::Train, None)?;
    for ep in 0..cfg.episodes {
        runner.run_episode(ep)?;
        if cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0 && cfg.policy.is_learned() {
            if let Some(dir) = cfg.out_dir.as_deref() {
                runner.checkpoint().save(dir.join(CHECKPOINT_JSON))?;
            }
        }
    }
    runner.finish()
}

/// Rolls out without exploration or learning, optionally from a checkpoint.
pub fn simulate(cfg: &RunConfig, checkpoint: Option<&RunCheckpoint>) -> Result<RunOutput> {
    if cfg.policy.is_learned() && checkpoint.and_then(|c| c.maddpg.as_ref()).is_none() {
        log::warn!("simulating {} with untrained networks", cfg.label());
    }
    let mut runner = Runner::new(cfg, Mode::Eval, checkpoint)?;
    for ep in 0..cfg.episodes {
        runner.run_episode(ep)?;
    }
    runner.finish()
}

/// Per-seed rows followed by `mean` and `sd` rows.
pub fn aggregate_eval(rows: &[EvalRow]) -> Vec<EvalRow> {
    let mut out = rows.to_vec();
    if rows.is_empty() {
        return out;
    }
    let col = |f: fn(&EvalRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let cols = [
        col(|r| r.years),
        col(|r| r.avg_household_reward),
        col(|r| r.social_welfare),
        col(|r| r.total_consumption),
        col(|r| r.total_labor),
        col(|r| r.final_gini),
        col(|r| r.gdp),
    ];
    let stats: [(&str, fn(&[f64]) -> f64); 2] = [("mean", mean), ("sd", sample_sd)];
    for (name, stat) in stats {
        let v: Vec<f64> = cols.iter().map(|c| stat(c)).collect();
        out.push(EvalRow {
            seed: name.into(),
            years: v[0],
            avg_household_reward: v[1],
            social_welfare: v[2],
            total_consumption: v[3],
            total_labor: v[4],
            final_gini: v[5],
            gdp: v[6],
        });
    }
    out
}

/// One evaluation episode per seed; writes `eval.csv` when `cfg.out_dir` is set.
pub fn run_eval(cfg: &RunConfig, checkpoint: Option<&RunCheckpoint>, seeds: &[u64]) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let run = RunConfig {
            seed,
            episodes: 1,
            out_dir: cfg.out_dir.as_ref().map(|d| d.join(format!("seed-{seed}"))),
            ..cfg.clone()
        };
        let out = simulate(&run, checkpoint)?;
        let ep = &out.metrics.episodes[0];
        rows.push(EvalRow {
            seed: seed.to_string(),
            years: ep.years as f64,
            avg_household_reward: ep.avg_household_reward,
            social_welfare: ep.social_welfare,
            total_consumption: ep.total_consumption,
            total_labor: ep.total_labor,
            final_gini: ep.final_gini,
            gdp: ep.gdp,
        });
    }
    let rows = aggregate_eval(&rows);
    if let Some(dir) = cfg.out_dir.as_deref() {
        std::fs::create_dir_all(dir)?;
        write_eval(&rows, dir)?;
    }
    Ok(rows)
}
