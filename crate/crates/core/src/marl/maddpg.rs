use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{MarlError, ReplayBuffer, Result};
use crate::embed::Projection;
use crate::nn::{polyak_update, Adam, Mlp};
use crate::Scalar;

/// Transform applied to each household reward before it enters the critic target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardScale {
    Raw,
    /// Clamp to `[-c, c]`.
    Clip(f64),
    /// `sign(r) ln(1 + |r|)`: monotone, keeps a gradient at any magnitude.
    Symlog,
}

impl RewardScale {
    pub fn apply<F: Scalar>(self, r: F) -> F {
        match self {
            RewardScale::Raw => r,
            RewardScale::Clip(c) => r.max(F::of(-c)).min(F::of(c)),
            RewardScale::Symlog => r.signum() * r.abs().ln_1p(),
        }
    }
}

/// Hyperparameters of the trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaddpgConfig {
    pub n_agents: usize,
    /// Per-household observation width.
    pub local_dim: usize,
    /// Global observation width.
    pub global_dim: usize,
    /// Language embedding width `d`; zero disables language inputs.
    pub embed_dim: usize,
    /// Pooled text vector width `D`; zero when language is disabled.
    pub pooled_dim: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub projection_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub explore_sigma: f64,
    pub reward_scale: RewardScale,
    /// Training starts once the buffer holds `warmup_factor * batch_size` items.
    pub warmup_factor: usize,
    pub train_projection: bool,
    /// Added to the target of terminal transitions; zero keeps `y = r`.
    #[serde(default)]
    pub terminal_value: f64,
}

impl MaddpgConfig {
    pub fn new(n_agents: usize, local_dim: usize, global_dim: usize) -> Self {
        Self {
            n_agents,
            local_dim,
            global_dim,
            embed_dim: 0,
            pooled_dim: 0,
            gamma: 0.975,
            tau: 5e-3,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            projection_lr: 3e-4,
            batch_size: 64,
            buffer_capacity: 1_000_000,
            explore_sigma: 0.1,
            reward_scale: RewardScale::Symlog,
            warmup_factor: 10,
            train_projection: true,
            terminal_value: 0.0,
        }
    }

    pub fn with_language(mut self, embed_dim: usize, pooled_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self.pooled_dim = pooled_dim;
        self
    }

    pub fn language_enabled(&self) -> bool {
        self.embed_dim > 0
    }

    pub fn actor_input_dim(&self) -> usize {
        self.local_dim + self.embed_dim
    }

    /// `|O^g| + N d + 2N`.
    pub fn critic_input_dim(&self) -> usize {
        self.global_dim + self.n_agents * (self.embed_dim + 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MarlError::Shape(m.to_string()));
        if self.n_agents == 0 || self.local_dim == 0 || self.batch_size == 0 {
            return bad("n_agents, local_dim and batch_size must be positive");
        }
        if (self.embed_dim == 0) != (self.pooled_dim == 0) {
            return bad("embed_dim and pooled_dim must both be zero or both positive");
        }
        let positive = [
            self.gamma,
            self.tau,
            self.actor_lr,
            self.critic_lr,
            self.projection_lr,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.gamma >= 1.0 || self.tau > 1.0 {
            return bad("gamma in (0,1), tau in (0,1], learning rates > 0");
        }
        if !self.terminal_value.is_finite() {
            return bad("terminal_value must be finite");
        }
        if self.explore_sigma < 0.0 || self.buffer_capacity < self.batch_size {
            return bad("explore_sigma >= 0 and buffer_capacity >= batch_size");
        }
        Ok(())
    }
}

/// One stored environment step for all households.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<F> {
    pub global: Vec<F>,
    /// Pre-projection pooled text vector per agent (empty without language).
    pub pooled: Vec<Vec<F>>,
    pub local: Vec<Vec<F>>,
    /// Raw actions in `[-1, 1]^2`.
    pub actions: Vec<[F; 2]>,
    pub rewards: Vec<F>,
    pub next_global: Vec<F>,
    pub next_pooled: Vec<Vec<F>>,
    pub next_local: Vec<Vec<F>>,
    pub done: bool,
}

impl<F: Scalar> Transition<F> {
    pub fn check(&self, cfg: &MaddpgConfig) -> Result<()> {
        let n = cfg.n_agents;
        let shape_ok = self.global.len() == cfg.global_dim
            && self.next_global.len() == cfg.global_dim
            && [&self.pooled, &self.next_pooled]
                .iter()
                .all(|p| p.len() == n && p.iter().all(|v| v.len() == cfg.pooled_dim))
            && [&self.local, &self.next_local]
                .iter()
                .all(|p| p.len() == n && p.iter().all(|v| v.len() == cfg.local_dim))
            && self.actions.len() == n
            && self.rewards.len() == n;
        if !shape_ok {
            return Err(MarlError::Shape("transition dimensions".into()));
        }
        let finite = |v: &[F]| v.iter().all(|x| x.is_finite());
        let all_finite = finite(&self.global)
            && finite(&self.next_global)
            && finite(&self.rewards)
            && self.actions.iter().all(|a| finite(a))
            && [&self.pooled, &self.next_pooled, &self.local, &self.next_local]
                .iter()
                .all(|p| p.iter().all(|v| finite(v)));
        if !all_finite {
            return Err(MarlError::Shape("transition contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Losses from one [`Maddpg::train_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub critic_loss: f64,
    /// Mean over agents.
    pub actor_loss: f64,
}

/// Online and target networks, the shared projection and optimizer state.
#[derive(Debug, Clone)]
pub struct AgentNets<F> {
    pub cfg: MaddpgConfig,
    pub actors: Vec<Mlp<F>>,
    pub target_actors: Vec<Mlp<F>>,
    pub critic: Mlp<F>,
    pub target_critic: Mlp<F>,
    pub projection: Projection<F>,
    pub target_projection: Projection<F>,
    pub actor_opts: Vec<Adam<F>>,
    pub critic_opt: Adam<F>,
    pub projection_opt: Adam<F>,
}

impl<F: Scalar> AgentNets<F> {
    pub fn new<R: Rng + ?Sized>(cfg: MaddpgConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let actors = (0..cfg.n_agents)
            .map(|_| Mlp::actor(cfg.actor_input_dim(), 2, rng))
            .collect::<Result<Vec<_>, _>>()?;
        let critic = Mlp::critic(cfg.critic_input_dim(), rng)?;
        let projection = if cfg.language_enabled() {
            Projection::init_uniform(cfg.embed_dim, cfg.pooled_dim, rng)
        } else {
            Projection::zeros(0, 0)
        };
        Ok(Self::from_nets(cfg, actors, critic, projection))
    }

    /// Targets start as exact copies; optimizer moments start at zero.
    pub fn from_nets(cfg: MaddpgConfig, actors: Vec<Mlp<F>>, critic: Mlp<F>, projection: Projection<F>) -> Self {
        let actor_opts = actors
            .iter()
            .map(|a| Adam::new(a.num_params(), F::of(cfg.actor_lr)))
            .collect();
        let critic_opt = Adam::new(critic.num_params(), F::of(cfg.critic_lr));
        let projection_opt = Adam::new(projection.params().len(), F::of(cfg.projection_lr));
        Self {
            target_actors: actors.clone(),
            target_critic: critic.clone(),
            target_projection: projection.clone(),
            cfg,
            actors,
            critic,
            projection,
            actor_opts,
            critic_opt,
            projection_opt,
        }
    }

    /// `m = P h / ||P h||`, or an empty vector without language.
    pub fn embed(&self, pooled: &[F], target: bool) -> Vec<F> {
        if !self.cfg.language_enabled() {
            return Vec::new();
        }
        let p = if target { &self.target_projection } else { &self.projection };
        p.embed(pooled)
    }

    fn actor_input(local: &[F], m: &[F]) -> Vec<F> {
        let mut x = Vec::with_capacity(local.len() + m.len());
        x.extend_from_slice(local);
        x.extend_from_slice(m);
        x
    }

    /// Deterministic action, optionally with clipped Gaussian exploration.
    pub fn act<R: Rng + ?Sized>(&self, agent: usize, local: &[F], m: &[F], explore: bool, rng: &mut R) -> [F; 2] {
        let out = self.actors[agent].forward(&Self::actor_input(local, m));
        let mut a = [out[0], out[1]];
        if explore && self.cfg.explore_sigma > 0.0 {
            let noise = Normal::new(0.0, self.cfg.explore_sigma).expect("sigma >= 0");
            for v in &mut a {
                *v = (*v + F::of(noise.sample(rng))).max(-F::one()).min(F::one());
            }
        }
        a
    }

    /// `x ⊕ a` rows for the critic, with embeddings from `P` (or `P'`).
    fn critic_rows(&self, globals: &[&[F]], embeds: &[Vec<Vec<F>>], actions: &[Vec<[F; 2]>]) -> Vec<F> {
        let dim = self.cfg.critic_input_dim();
        let mut rows = Vec::with_capacity(globals.len() * dim);
        for ((g, ms), acts) in globals.iter().zip(embeds).zip(actions) {
            rows.extend_from_slice(g);
            for m in ms {
                rows.extend_from_slice(m);
            }
            for a in acts {
                rows.extend_from_slice(a);
            }
        }
        rows
    }

    fn batch_embeds(&self, batch: &[&Transition<F>], next: bool) -> Vec<Vec<Vec<F>>> {
        batch
            .iter()
            .map(|t| {
                let pooled = if next { &t.next_pooled } else { &t.pooled };
                pooled.iter().map(|h| self.embed(h, next)).collect()
            })
            .collect()
    }

    fn scaled_mean_reward(&self, t: &Transition<F>) -> F {
        let n = F::of(t.rewards.len() as f64);
        let sum: F = t.rewards.iter().map(|&r| self.cfg.reward_scale.apply(r)).sum();
        sum / n
    }

    /// Bellman targets `y = r + gamma (1 - done) Q'(x', mu'(o', m'))`.
    pub fn td_targets(&self, batch: &[&Transition<F>]) -> Vec<F> {
        let gamma = F::of(self.cfg.gamma);
        let next_m = self.batch_embeds(batch, true);
        let next_actions: Vec<Vec<[F; 2]>> = batch
            .iter()
            .zip(&next_m)
            .map(|(t, ms)| {
                (0..self.cfg.n_agents)
                    .map(|i| {
                        let o = self.target_actors[i].forward(&Self::actor_input(&t.next_local[i], &ms[i]));
                        [o[0], o[1]]
                    })
                    .collect()
            })
            .collect();
        let globals: Vec<&[F]> = batch.iter().map(|t| t.next_global.as_slice()).collect();
        let rows = self.critic_rows(&globals, &next_m, &next_actions);
        let q_next = self.target_critic.forward_batch(&rows, batch.len());
        batch
            .iter()
            .zip(q_next.output())
            .map(|(t, &q)| {
                let r = self.scaled_mean_reward(t);
                if t.done {
                    r + F::of(self.cfg.terminal_value)
                } else {
                    r + gamma * q
                }
            })
            .collect()
    }

    /// Mean squared TD error and its gradient w.r.t. the critic parameters.
    pub fn critic_loss_and_grads(&self, batch: &[&Transition<F>]) -> Result<(F, Vec<F>)> {
        if batch.is_empty() {
            return Err(MarlError::EmptyBatch);
        }
        let b = F::of(batch.len() as f64);
        let y = self.td_targets(batch);
        let m = self.batch_embeds(batch, false);
        let globals: Vec<&[F]> = batch.iter().map(|t| t.global.as_slice()).collect();
        let actions: Vec<Vec<[F; 2]>> = batch.iter().map(|t| t.actions.clone()).collect();
        let rows = self.critic_rows(&globals, &m, &actions);
        let trace = self.critic.forward_batch(&rows, batch.len());
        let q = trace.output();
        let loss = q.iter().zip(&y).map(|(&q, &y)| (q - y) * (q - y)).sum::<F>() / b;
        let two = F::of(2.0);
        let upstream: Vec<F> = q.iter().zip(&y).map(|(&q, &y)| two * (q - y) / b).collect();
        let (g, _) = self.critic.backward_batch(&trace, &upstream, true);
        Ok((loss, g.expect("param grads").values))
    }

    /// One Adam step on the critic; returns the pre-update loss.
    pub fn critic_update(&mut self, batch: &[&Transition<F>]) -> Result<F> {
        let (loss, grads) = self.critic_loss_and_grads(batch)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(MarlError::NonFiniteLoss("critic"));
        }
        self.critic_opt.step(self.critic.params_mut(), &grads);
        Ok(loss)
    }

    /// `-mean Q(x, a_{-i}, mu_i(o_i, m_i))` with gradients for actor `i` and
    /// for the projection through the actor input.
    pub fn actor_loss_and_grads(&self, batch: &[&Transition<F>], agent: usize) -> Result<(F, Vec<F>, Vec<F>)> {
        if batch.is_empty() {
            return Err(MarlError::EmptyBatch);
        }
        let cfg = &self.cfg;
        let bsz = batch.len();
        let b = F::of(bsz as f64);
        let m = self.batch_embeds(batch, false);

        let mut actor_in = Vec::with_capacity(bsz * cfg.actor_input_dim());
        for (t, ms) in batch.iter().zip(&m) {
            actor_in.extend_from_slice(&t.local[agent]);
            actor_in.extend_from_slice(&ms[agent]);
        }
        let actor_trace = self.actors[agent].forward_batch(&actor_in, bsz);
        let own = actor_trace.output();

        let actions: Vec<Vec<[F; 2]>> = batch
            .iter()
            .enumerate()
            .map(|(s, t)| {
                let mut a = t.actions.clone();
                a[agent] = [own[2 * s], own[2 * s + 1]];
                a
            })
            .collect();
        let globals: Vec<&[F]> = batch.iter().map(|t| t.global.as_slice()).collect();
        let rows = self.critic_rows(&globals, &m, &actions);
        let critic_trace = self.critic.forward_batch(&rows, bsz);
        let loss = -critic_trace.output().iter().copied().sum::<F>() / b;

        let up = vec![-F::one() / b; bsz];
        let (_, dx) = self.critic.backward_batch(&critic_trace, &up, false);
        let in_dim = cfg.critic_input_dim();
        let a_off = cfg.global_dim + cfg.n_agents * cfg.embed_dim + 2 * agent;
        let da: Vec<F> = (0..bsz)
            .flat_map(|s| [dx[s * in_dim + a_off], dx[s * in_dim + a_off + 1]])
            .collect();
        let (g, d_in) = self.actors[agent].backward_batch(&actor_trace, &da, true);

        let mut proj_grad = vec![F::zero(); self.projection.params().len()];
        if cfg.language_enabled() {
            let ai = cfg.actor_input_dim();
            for (s, t) in batch.iter().enumerate() {
                let dm = &d_in[s * ai + cfg.local_dim..(s + 1) * ai];
                self.projection.backward_into(&t.pooled[agent], dm, &mut proj_grad);
            }
        }
        Ok((loss, g.expect("param grads").values, proj_grad))
    }

    /// One Adam step on actor `agent` and, when enabled, on the projection.
    pub fn actor_update(&mut self, batch: &[&Transition<F>], agent: usize) -> Result<F> {
        let (loss, g, pg) = self.actor_loss_and_grads(batch, agent)?;
        if !loss.is_finite() || g.iter().chain(&pg).any(|v| !v.is_finite()) {
            return Err(MarlError::NonFiniteLoss("actor"));
        }
        self.actor_opts[agent].step(self.actors[agent].params_mut(), &g);
        if self.cfg.language_enabled() && self.cfg.train_projection {
            self.projection_opt.step(self.projection.params_mut(), &pg);
        }
        Ok(loss)
    }

    /// Polyak-averages every target toward its online network.
    pub fn soft_update(&mut self) {
        let tau = F::of(self.cfg.tau);
        for (t, o) in self.target_actors.iter_mut().zip(&self.actors) {
            polyak_update(t.params_mut(), o.params(), tau);
        }
        polyak_update(self.target_critic.params_mut(), self.critic.params(), tau);
        polyak_update(self.target_projection.params_mut(), self.projection.params(), tau);
    }

    /// Critic update, one actor update per agent, then target averaging.
    pub fn update(&mut self, batch: &[&Transition<F>]) -> Result<StepMetrics> {
        let critic_loss = self.critic_update(batch)?.to_f64_lossy();
        let mut actor_sum = 0.0;
        for i in 0..self.cfg.n_agents {
            actor_sum += self.actor_update(batch, i)?.to_f64_lossy();
        }
        self.soft_update();
        Ok(StepMetrics {
            critic_loss,
            actor_loss: actor_sum / self.cfg.n_agents as f64,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.actors.iter().all(Mlp::is_finite)
            && self.critic.is_finite()
            && self.projection.params().iter().all(|v| v.is_finite())
    }
}

/// Networks plus replay buffer.
#[derive(Debug, Clone)]
pub struct Maddpg<F> {
    pub nets: AgentNets<F>,
    pub buffer: ReplayBuffer<Transition<F>>,
}

impl<F: Scalar> Maddpg<F> {
    pub fn new<R: Rng + ?Sized>(cfg: MaddpgConfig, rng: &mut R) -> Result<Self> {
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        Ok(Self {
            nets: AgentNets::new(cfg, rng)?,
            buffer,
        })
    }

    pub fn config(&self) -> &MaddpgConfig {
        &self.nets.cfg
    }

    pub fn store(&mut self, t: Transition<F>) -> Result<()> {
        t.check(&self.nets.cfg)?;
        self.buffer.push(t);
        Ok(())
    }

    pub fn ready(&self) -> bool {
        let cfg = &self.nets.cfg;
        self.buffer.len() >= (cfg.warmup_factor * cfg.batch_size).max(cfg.batch_size)
    }

    /// Samples a batch and updates; `None` before warm-up completes.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<StepMetrics>> {
        if !self.ready() {
            return Ok(None);
        }
        let idx = self
            .buffer
            .sample_indices(self.nets.cfg.batch_size, rng)
            .expect("buffer holds a full batch");
        let batch: Vec<&Transition<F>> = idx.iter().map(|&i| self.buffer.slot(i)).collect();
        self.nets.update(&batch).map(Some)
    }
}
