//! Helpers shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use std::path::Path;

use lamp_core::embed::{pool_texts, project_normalize, HashingEncoder, Projection, TextEncoder};
use lamp_core::llm::{parse_lenient, TemplateKind};
use lamp_core::marl::{AgentNets, MaddpgConfig, RewardScale, Transition};
use lamp_core::nn::{Activation, Mlp};
use lamp_core::think::{
    classify_news_type, normalize_key, retrieve_top_k, ExperienceEntry, ExperiencePools, NewsKind, SchedulerConfig,
};
use lamp_core::orchestrator::{read_events, validate_event_log, EventCounts, PolicyKind, RunConfig, EVENTS_LOG};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;

fn vec_in(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Small smooth nets (tanh everywhere) so central differences are clean.
pub fn tiny_nets(rng: &mut ChaCha8Rng, language: bool) -> AgentNets<f64> {
    let n = rng.random_range(1..4);
    let local = rng.random_range(1..4);
    let global = rng.random_range(1..5);
    let mut cfg = MaddpgConfig::new(n, local, global);
    cfg.reward_scale = RewardScale::Raw;
    cfg.batch_size = 4;
    cfg.buffer_capacity = 64;
    if language {
        cfg = cfg.with_language(3, 6);
    }
    let hidden = rng.random_range(2..6);
    let tanh3 = [Activation::Tanh, Activation::Tanh, Activation::Tanh];
    let actors = (0..n)
        .map(|_| Mlp::init_uniform(&[cfg.actor_input_dim(), hidden, hidden, 2], &tanh3, rng).unwrap())
        .collect();
    let critic = Mlp::init_uniform(
        &[cfg.critic_input_dim(), hidden + 1, hidden, 1],
        &[Activation::Tanh, Activation::Tanh, Activation::Identity],
        rng,
    )
    .unwrap();
    let projection = if language {
        Projection::init_uniform(cfg.embed_dim, cfg.pooled_dim, rng)
    } else {
        Projection::zeros(0, 0)
    };
    let mut nets = AgentNets::from_nets(cfg, actors, critic, projection);
    // targets differ from online nets so the TD target is not trivially tied
    for p in nets.target_critic.params_mut() {
        *p += rng.random_range(-0.1..0.1);
    }
    nets
}

pub fn random_transition(rng: &mut ChaCha8Rng, cfg: &MaddpgConfig) -> Transition<f64> {
    let n = cfg.n_agents;
    let mut per_agent = |dim: usize| -> Vec<Vec<f64>> { (0..n).map(|_| vec_in(rng, dim, -1.0, 1.0)).collect() };
    let pooled = per_agent(cfg.pooled_dim);
    let local = per_agent(cfg.local_dim);
    let next_pooled = per_agent(cfg.pooled_dim);
    let next_local = per_agent(cfg.local_dim);
    Transition {
        global: vec_in(rng, cfg.global_dim, -1.0, 1.0),
        pooled,
        local,
        actions: (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect(),
        rewards: vec_in(rng, n, -2.0, 0.5),
        next_global: vec_in(rng, cfg.global_dim, -1.0, 1.0),
        next_pooled,
        next_local,
        done: rng.random_bool(0.2),
    }
}

/// `||g - g_fd|| / max(||g||, ||g_fd||, 1e-8)`.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-8)
}

fn central_diff(params: &[f64], mut loss_at: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + FD_STEP;
            let up = loss_at(&p);
            p[k] = orig - FD_STEP;
            let down = loss_at(&p);
            p[k] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Worst relative error of critic and actor parameter gradients on one random
/// tiny net and batch.
pub fn gradient_case(rng: &mut ChaCha8Rng, language: bool) -> (f64, f64) {
    let nets = tiny_nets(rng, language);
    let bsz = rng.random_range(1..6);
    let batch: Vec<Transition<f64>> = (0..bsz).map(|_| random_transition(rng, &nets.cfg)).collect();
    let refs: Vec<&Transition<f64>> = batch.iter().collect();

    let (_, g_critic) = nets.critic_loss_and_grads(&refs).unwrap();
    let fd_critic = central_diff(nets.critic.params(), |p| {
        let mut probe = nets.clone();
        probe.critic.params_mut().copy_from_slice(p);
        probe.critic_loss_and_grads(&refs).unwrap().0
    });
    let critic_err = rel_err(&g_critic, &fd_critic);

    let mut actor_err: f64 = 0.0;
    for agent in 0..nets.cfg.n_agents {
        let (_, g_actor, _) = nets.actor_loss_and_grads(&refs, agent).unwrap();
        let fd_actor = central_diff(nets.actors[agent].params(), |p| {
            let mut probe = nets.clone();
            probe.actors[agent].params_mut().copy_from_slice(p);
            probe.actor_loss_and_grads(&refs, agent).unwrap().0
        });
        actor_err = actor_err.max(rel_err(&g_actor, &fd_actor));
    }
    (critic_err, actor_err)
}

/// Full-sort reference for reward-ranked selection: descending reward, newer id
/// first on ties.
pub fn sort_top_k(entries: &[ExperienceEntry], k: usize) -> Vec<u64> {
    let mut v: Vec<&ExperienceEntry> = entries.iter().collect();
    v.sort_by(|a, b| b.reward.total_cmp(&a.reward).then(b.id.cmp(&a.id)));
    v.into_iter().take(k).map(|e| e.id).collect()
}

/// Exhaustive cosine scan: descending similarity, ties by ascending id.
pub fn scan_top_k(store: &[ExperienceEntry], query: &[f64], k: usize) -> Vec<u64> {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let mut v: Vec<(f64, u64)> = store.iter().map(|e| (cos(&e.key, query), e.id)).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    v.into_iter().take(k).map(|(_, id)| id).collect()
}

// ---- scheduler ----

/// Direct statement of the timing rule, written independently of the crate.
pub fn schedule_oracle(cur: &[f64], prev: Option<&[f64]>, t: usize, interval: usize, sigma: f64) -> NewsKind {
    if t > 0 && t % interval == 0 {
        return NewsKind::Long;
    }
    let Some(prev) = prev else { return NewsKind::None };
    let shock = cur.iter().zip(prev).any(|(c, p)| (c - p).abs() / p.abs().max(1e-8) > sigma);
    if shock {
        NewsKind::Short
    } else {
        NewsKind::None
    }
}

/// Random indicator stream with calm drift, occasional jumps and zero crossings.
/// Returns `(steps, mismatches, counts[long, short, none])`.
pub fn scheduler_stream_check(rng: &mut ChaCha8Rng, steps: usize) -> (usize, usize, [usize; 3]) {
    let cfg = SchedulerConfig::default();
    let mut x = [0.3, -5.0, 2.0];
    let mut prev: Option<[f64; 3]> = None;
    let mut mismatches = 0;
    let mut counts = [0usize; 3];
    for t in 0..steps {
        for v in x.iter_mut() {
            let jump: f64 = if rng.random_bool(0.08) { rng.random_range(-1.0..1.5) } else { rng.random_range(-0.05..0.05) };
            *v *= 1.0 + jump;
            if rng.random_bool(0.01) {
                *v = 0.0;
            } else if *v == 0.0 {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let got = classify_news_type(&x, prev.as_ref().map(|p| p.as_slice()), t, &cfg);
        let want = schedule_oracle(&x, prev.as_ref().map(|p| p.as_slice()), t, cfg.long_interval, cfg.sigma);
        if got != want {
            mismatches += 1;
        }
        counts[match want {
            NewsKind::Long => 0,
            NewsKind::Short => 1,
            NewsKind::None => 2,
        }] += 1;
        prev = Some(x);
    }
    (steps, mismatches, counts)
}

// ---- pools ----

pub fn entry(id: u64, agent: usize, reward: f64, key: Vec<f64>) -> ExperienceEntry {
    ExperienceEntry {
        id,
        agent,
        period: id as usize,
        reward,
        productivity: 1.0,
        wealth: 1.0,
        savings_action: 0.0,
        labor_action: 0.0,
        reasoning: format!("r{id}"),
        key,
    }
}

fn coarse_reward(rng: &mut ChaCha8Rng) -> f64 {
    // coarse grid so ties are common
    f64::from(rng.random_range(-20i32..20)) / 4.0
}

/// Random harvest windows; returns the number of windows that disagree with the
/// full-sort oracle.
pub fn pool_windows_check(rng: &mut ChaCha8Rng, windows: usize) -> usize {
    let (n, k1, k2, k3) = (4, 3, 5, 3);
    let mut pools = ExperiencePools::new(n, k1, k2, k3);
    let mut history: Vec<Vec<ExperienceEntry>> = vec![Vec::new(); n];
    let mut long_oracle: Vec<u64> = Vec::new();
    let mut bad = 0;
    for w in 0..windows {
        if w % 50 == 0 {
            pools.reset_short();
            history.iter_mut().for_each(Vec::clear);
        }
        let mut window = Vec::new();
        for agent in 0..n {
            let count = rng.random_range(0..4);
            let recs: Vec<ExperienceEntry> = (0..count)
                .map(|_| {
                    let id = pools.next_id();
                    entry(id, agent, coarse_reward(rng), vec![1.0, 0.0])
                })
                .collect();
            history[agent].extend(recs.iter().cloned());
            window.extend(recs.iter().cloned());
            pools.harvest_short(agent, recs);
            let got: Vec<u64> = pools.short(agent).iter().map(|e| e.id).collect();
            if got != sort_top_k(&history[agent], k1) {
                bad += 1;
            }
        }
        let added = pools.harvest_long();
        let best = sort_top_k(&window, k2);
        long_oracle.extend(&best);
        let got: Vec<u64> = pools.long().iter().map(|e| e.id).collect();
        if added != best.len() || got != long_oracle || !pools.pending().is_empty() {
            bad += 1;
        }
    }
    bad
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize_key(&mut v);
    v
}

/// Exact top-k identities against an exhaustive scan; returns mismatching queries.
pub fn retrieval_check(rng: &mut ChaCha8Rng, sizes: &[usize], queries: usize) -> usize {
    let mut bad = 0;
    for &size in sizes {
        let dim = 16;
        let mut store: Vec<ExperienceEntry> = (0..size).map(|i| entry(i as u64, 0, 0.0, unit(rng, dim))).collect();
        // duplicated keys exercise the tie order
        for i in (0..size).step_by(7) {
            let dup = store[(i * 13) % size].key.clone();
            store[i].key = dup;
        }
        for q in 0..queries {
            let query = if q % 3 == 0 && size > 0 { store[q % size].key.clone() } else { unit(rng, dim) };
            for k in [1, 3, 10] {
                let got: Vec<u64> = retrieve_top_k(&store, &query, k).iter().map(|e| e.id).collect();
                if got != scan_top_k(&store, &query, k) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

// ---- embedding ----

/// Worst `| ||m|| - 1 |` and worst scale-invariance gap over random inputs.
pub fn embedding_contract(rng: &mut ChaCha8Rng, cases: usize) -> (f64, f64) {
    let enc = HashingEncoder::default();
    let mut norm_gap: f64 = 0.0;
    let mut scale_gap: f64 = 0.0;
    for c in 0..cases {
        let p = Projection::<f64>::init_uniform(EMBED_DIM, enc.dim(), rng);
        let pooled: Vec<f64> = if c % 2 == 0 {
            let texts = [format!("household {c} saves"), format!("wage moved {}%", rng.random_range(-9..9))];
            pool_texts(&enc, &texts).unwrap()
        } else {
            (0..enc.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let m = project_normalize(&p, &pooled).unwrap();
        assert_eq!(m.len(), EMBED_DIM);
        let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        norm_gap = norm_gap.max((norm - 1.0).abs());
        let scaled: Vec<f64> = pooled.iter().map(|v| v * 10.0).collect();
        let m2 = project_normalize(&p, &scaled).unwrap();
        for (a, b) in m.iter().zip(&m2) {
            scale_gap = scale_gap.max((a - b).abs());
        }
    }
    (norm_gap, scale_gap)
}

pub const EMBED_DIM: usize = 5;

// ---- schema corpus ----

pub struct SchemaCase {
    pub kind: TemplateKind,
    pub expected_num: usize,
    pub raw: String,
    pub accept: bool,
    pub note: &'static str,
}

fn case(kind: TemplateKind, n: usize, raw: &str, accept: bool, note: &'static str) -> SchemaCase {
    SchemaCase {
        kind,
        expected_num: n,
        raw: raw.to_string(),
        accept,
        note,
    }
}

/// Hand-written replies, each labeled with the verdict the schemas require.
pub fn schema_corpus() -> Vec<SchemaCase> {
    use TemplateKind::*;
    let ten_zero = "[0,0,0,0,0,1,1,1,1,2]";
    let ten_trust = "[7,8,9,10,7,8,9,10,7,8]";
    vec![
        // accepted
        case(ShortReason, 0, r#"{"economic_status": 2, "reasoning": "saving more"}"#, true, "valid short"),
        case(ShortReason, 0, "```json\n{\"economic_status\": 0, \"reasoning\": \"tight\"}\n```", true, "fenced short"),
        case(ShortReason, 0, "Here you go: {\"reasoning\": \"ok {fine}\", \"economic_status\": 1} thanks", true, "prose wrapper"),
        case(LongReason, 0, r#"{"analysis": "a", "economic_status": 1, "reasoning": "r"}"#, true, "valid long"),
        case(LongReason, 0, r#"{"analysis": "a", "economic_status": 0, "reasoning": "r", "statements": ["s1"]}"#, true, "long with optional statements"),
        case(Reflect, 10, &format!(r#"{{"wealth_guesses": {ten_zero}, "trust_levels": {ten_trust}, "reflection_text": "t"}}"#), true, "valid reflect"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 2], "trust_levels": [0, 10], "reflection_text": "t"}"#, true, "trust at bounds"),
        case(LongNews, 0, r#"{"news": "wages rose"}"#, true, "valid long news"),
        case(ShortNews, 0, "```\n{\"news\": \"shock\"}\n```", true, "fenced news"),
        case(Candidates, 0, r#"{"statements": ["a", "b", "c"]}"#, true, "valid candidates"),
        // rejected: arity
        case(Candidates, 0, r#"{"statements": ["a", "b"]}"#, false, "two statements"),
        case(Candidates, 0, r#"{"statements": ["a", "b", "c", "d"]}"#, false, "four statements"),
        case(Candidates, 0, r#"{"statements": []}"#, false, "no statements"),
        case(Candidates, 0, r#"{"statements": ["a", "a", "c"]}"#, false, "duplicate statements"),
        case(Candidates, 0, r#"{"statements": "a, b, c"}"#, false, "statements not an array"),
        case(Candidates, 0, r#"{"statements": ["a", 2, "c"]}"#, false, "non-string statement"),
        case(Candidates, 0, r#"{"statements": ["a", " ", "c"]}"#, false, "blank statement"),
        case(Reflect, 10, &format!(r#"{{"wealth_guesses": [0,1,2], "trust_levels": {ten_trust}, "reflection_text": "t"}}"#), false, "short guesses array"),
        case(Reflect, 10, &format!(r#"{{"wealth_guesses": {ten_zero}, "trust_levels": [7,7,7,7,7,7,7,7,7,7,7], "reflection_text": "t"}}"#), false, "long trust array"),
        case(Reflect, 3, r#"{"wealth_guesses": [0, 1], "trust_levels": [5, 5, 5], "reflection_text": "t"}"#, false, "guesses arity"),
        // rejected: ranges and types
        case(ShortReason, 0, r#"{"economic_status": 3, "reasoning": "x"}"#, false, "status 3"),
        case(ShortReason, 0, r#"{"economic_status": -1, "reasoning": "x"}"#, false, "negative status"),
        case(ShortReason, 0, r#"{"economic_status": 1.5, "reasoning": "x"}"#, false, "fractional status"),
        case(ShortReason, 0, r#"{"economic_status": "1", "reasoning": "x"}"#, false, "string status"),
        case(LongReason, 0, r#"{"analysis": "a", "economic_status": 7, "reasoning": "r"}"#, false, "long status 7"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 3], "trust_levels": [5, 5], "reflection_text": "t"}"#, false, "guess out of range"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 1], "trust_levels": [5, 11], "reflection_text": "t"}"#, false, "trust 11"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 1], "trust_levels": [-1, 5], "reflection_text": "t"}"#, false, "negative trust"),
        case(ShortReason, 0, r#"{"economic_status": 1, "reasoning": ""}"#, false, "empty reasoning"),
        case(ShortReason, 0, r#"{"economic_status": 1, "reasoning": 5}"#, false, "numeric reasoning"),
        case(LongNews, 0, r#"{"news": ""}"#, false, "empty news"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 1], "trust_levels": [5, 5], "reflection_text": null}"#, false, "null reflection"),
        // rejected: extra or missing keys
        case(ShortReason, 0, r#"{"economic_status": 1, "reasoning": "x", "mood": "calm"}"#, false, "extra key"),
        case(ShortReason, 0, r#"{"economic_status": 1, "reasoning": "x", "analysis": "a"}"#, false, "long-only key on short"),
        case(ShortReason, 0, r#"{"reasoning": "x"}"#, false, "missing status"),
        case(LongReason, 0, r#"{"economic_status": 1, "reasoning": "r"}"#, false, "missing analysis"),
        case(LongReason, 0, r#"{"analysis": "a", "economic_status": 1, "reasoning": "r", "statements": ["x"], "extra": 1}"#, false, "extra key on long"),
        case(Candidates, 0, r#"{"statements": ["a", "b", "c"], "selected": 0}"#, false, "extra key on candidates"),
        case(LongNews, 0, r#"{"news": "x", "source": "wire"}"#, false, "extra key on news"),
        case(ShortNews, 0, r#"{"headline": "x"}"#, false, "wrong news key"),
        case(Reflect, 2, r#"{"wealth_guesses": [0, 1], "trust_levels": [5, 5]}"#, false, "missing reflection text"),
        // rejected: malformed wrappers
        case(ShortReason, 0, "```json\n{\"economic_status\": 1, \"reasoning\": \"x\"\n```", false, "unterminated object in fence"),
        case(ShortReason, 0, "economic_status: 1, reasoning: x", false, "no object"),
        case(ShortReason, 0, "", false, "empty reply"),
        case(ShortReason, 0, "{'economic_status': 1, 'reasoning': 'x'}", false, "single quotes"),
        case(ShortReason, 0, r#"{"economic_status": 1, "reasoning": "x",}"#, false, "trailing comma"),
        case(Candidates, 0, "```json\n{\"statements\": [\"a\", \"b\"]}\n```", false, "fenced wrong arity"),
        case(LongReason, 0, "```json\n{\"analysis\": \"a\", \"economic_status\": 2, \"reasoning\": \"r\", \"tone\": \"x\"}\n```", false, "fenced extra key"),
    ]
}

/// `(cases, malformed, false_accepts, false_rejects)` with failing notes.
pub fn schema_gate() -> (usize, usize, Vec<&'static str>, Vec<&'static str>) {
    let corpus = schema_corpus();
    let mut false_accepts = Vec::new();
    let mut false_rejects = Vec::new();
    for c in &corpus {
        let ok = parse_lenient(&c.raw, c.kind, c.expected_num).is_ok();
        match (ok, c.accept) {
            (true, false) => false_accepts.push(c.note),
            (false, true) => false_rejects.push(c.note),
            _ => {}
        }
    }
    let malformed = corpus.iter().filter(|c| !c.accept).count();
    (corpus.len(), malformed, false_accepts, false_rejects)
}

// ---- runs ----

/// Small scripted run into `dir`.
pub fn run_cfg(dir: &Path, policy: PolicyKind, episodes: usize, steps: usize) -> RunConfig {
    RunConfig {
        policy,
        episodes,
        steps,
        out_dir: Some(dir.to_path_buf()),
        ..RunConfig::default()
    }
}

/// Reads `events.log`, checks step ordering, returns the counts.
pub fn logged_counts(dir: &Path) -> Result<EventCounts, String> {
    let events = read_events(dir.join(EVENTS_LOG)).map_err(|e| e.to_string())?;
    validate_event_log(&events)
}
