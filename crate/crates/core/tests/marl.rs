mod common;

use std::collections::VecDeque;

use lamp_core::embed::Projection;
use lamp_core::marl::{AgentNets, Maddpg, MaddpgCheckpoint, MaddpgConfig, ReplayBuffer, RewardScale, Transition};
use lamp_core::nn::{Activation, Adam, Mlp};
use lamp_core::util::symlog;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn critic_and_actor_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..10 {
        let (c, a) = common::gradient_case(&mut rng, case % 2 == 0);
        assert!(c < common::GRAD_REL_TOL && a < common::GRAD_REL_TOL, "case {case}: critic {c}, actor {a}");
    }
}

fn scalar_nets(scale: RewardScale) -> AgentNets<f64> {
    let mut cfg = MaddpgConfig::new(1, 1, 1);
    cfg.reward_scale = scale;
    cfg.batch_size = 1;
    cfg.buffer_capacity = 4;
    // o -> (0.5 o + 0.1, -0.2 o)
    let actor = Mlp::from_parts(vec![1, 2], vec![Activation::Identity], vec![0.5, -0.2, 0.1, 0.0]).unwrap();
    // Q(g, a0, a1) = g + 2 a0 - a1 + 0.3
    let critic = Mlp::from_parts(vec![3, 1], vec![Activation::Identity], vec![1.0, 2.0, -1.0, 0.3]).unwrap();
    AgentNets::from_nets(cfg, vec![actor], critic, Projection::zeros(0, 0))
}

fn scalar_transition(done: bool) -> Transition<f64> {
    Transition {
        global: vec![0.4],
        pooled: vec![vec![]],
        local: vec![vec![1.0]],
        actions: vec![[0.2, -0.6]],
        rewards: vec![-1.5],
        next_global: vec![-0.2],
        next_pooled: vec![vec![]],
        next_local: vec![vec![2.0]],
        done,
    }
}

#[test]
fn scalar_critic_loss_by_hand() {
    let nets = scalar_nets(RewardScale::Raw);
    let t = scalar_transition(false);
    // a' = (1.1, -0.4); Q' = -0.2 + 2.2 + 0.4 + 0.3 = 2.7; Q = 0.4 + 0.4 + 0.6 + 0.3 = 1.7
    let y = -1.5 + 0.975 * 2.7;
    assert!((nets.td_targets(&[&t])[0] - y).abs() < 1e-12);
    let (loss, _) = nets.critic_loss_and_grads(&[&t]).unwrap();
    assert!((loss - (1.7 - y) * (1.7 - y)).abs() < 1e-12);
}

#[test]
fn terminal_transitions_drop_bootstrap() {
    let t = scalar_transition(true);
    assert_eq!(scalar_nets(RewardScale::Raw).td_targets(&[&t]), vec![-1.5]);
    // default config: scaled reward, no terminal bonus
    let nets = scalar_nets(MaddpgConfig::new(1, 1, 1).reward_scale);
    assert_eq!(nets.cfg.terminal_value, 0.0);
    assert_eq!(nets.td_targets(&[&t]), vec![symlog(-1.5)]);
    let mut nets = scalar_nets(RewardScale::Raw);
    nets.cfg.terminal_value = -4.0;
    assert_eq!(nets.td_targets(&[&t]), vec![-5.5]);
}

#[test]
fn reward_scales() {
    assert_eq!(RewardScale::Raw.apply(-123.0), -123.0);
    assert_eq!(RewardScale::Clip(10.0).apply(-123.0), -10.0);
    assert_eq!(RewardScale::Clip(10.0).apply(3.0), 3.0);
    assert!((RewardScale::Symlog.apply(-(std::f64::consts::E - 1.0)) + 1.0).abs() < 1e-15);
}

#[test]
fn constant_critic_leaves_actor_unchanged() {
    let mut nets = scalar_nets(RewardScale::Raw);
    nets.critic = Mlp::from_parts(vec![3, 1], vec![Activation::Identity], vec![0.0, 0.0, 0.0, 5.0]).unwrap();
    let before = nets.actors[0].clone();
    let t = scalar_transition(false);
    let (_, g, _) = nets.actor_loss_and_grads(&[&t], 0).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
    nets.actor_update(&[&t], 0).unwrap();
    assert_eq!(nets.actors[0], before);
}

/// Q(a) = -(a - 3)^2 pulls an unbounded linear actor toward 3.
#[test]
fn actor_climbs_quadratic_critic() {
    let mut actor = Mlp::<f64>::from_parts(vec![1, 1], vec![Activation::Identity], vec![0.2, -0.1]).unwrap();
    let mut opt = Adam::new(actor.num_params(), 0.05);
    let x = [1.0];
    let start = (actor.forward(&x)[0] - 3.0).abs();
    for _ in 0..400 {
        let a = actor.forward(&x)[0];
        // loss = -Q, dloss/da = 2 (a - 3)
        let (g, _) = actor.backward(&x, &[2.0 * (a - 3.0)]);
        opt.step(actor.params_mut(), &g.values);
    }
    let end = (actor.forward(&x)[0] - 3.0).abs();
    assert!(end < 0.05 && end < start, "{start} -> {end}");
}

#[test]
fn polyak_soft_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut nets = common::tiny_nets(&mut rng, true);
    for p in nets.critic.params_mut() {
        *p += 0.5;
    }
    let online = nets.critic.params().to_vec();
    let target = nets.target_critic.params().to_vec();
    nets.soft_update();
    for ((t1, o), t0) in nets.target_critic.params().iter().zip(&online).zip(&target) {
        assert!((t1 - (5e-3 * o + 0.995 * t0)).abs() < 1e-12);
    }
    nets.cfg.tau = 1.0;
    nets.soft_update();
    assert_eq!(nets.target_critic.params(), nets.critic.params());
    assert_eq!(nets.target_projection.params(), nets.projection.params());
    assert_eq!(nets.target_actors, nets.actors);
}

#[test]
fn act_determinism_bias_and_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nets = common::tiny_nets(&mut rng, false);
    let local = vec![0.3; nets.cfg.local_dim];
    let a = nets.act(0, &local, &[], false, &mut rng);
    assert_eq!(a, nets.act(0, &local, &[], false, &mut rng));

    let mut cfg = MaddpgConfig::new(1, 2, 1);
    cfg.buffer_capacity = 64;
    let mut zero = Mlp::zeros(&[2, 4, 2], &[Activation::Tanh, Activation::Tanh]).unwrap();
    zero.set_bias(1, 0, 0.3);
    zero.set_bias(1, 1, -0.2);
    let critic = Mlp::critic(cfg.critic_input_dim(), &mut rng).unwrap();
    let nets = AgentNets::from_nets(cfg, vec![zero], critic, Projection::zeros(0, 0));
    assert_eq!(nets.act(0, &[4.0, -1.0], &[], false, &mut rng), [0.3f64.tanh(), (-0.2f64).tanh()]);

    let n = 10_000;
    let base = nets.act(0, &[0.0, 0.0], &[], false, &mut rng);
    let devs: Vec<f64> = (0..n).map(|_| nets.act(0, &[0.0, 0.0], &[], true, &mut rng)[0] - base[0]).collect();
    let mean = devs.iter().sum::<f64>() / n as f64;
    let sd = (devs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((sd - 0.1).abs() < 0.005, "noise sd {sd}");
}

#[test]
fn buffer_basics_and_uniform_sampling() {
    let mut b = ReplayBuffer::new(3);
    b.push(1);
    assert_eq!(b.len(), 1);
    for i in 2..=4 {
        b.push(i);
    }
    assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);

    let mut b = ReplayBuffer::new(50);
    (0..50).for_each(|i| b.push(i));
    let mut r1 = ChaCha8Rng::seed_from_u64(1);
    let mut r2 = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(b.sample_indices(10, &mut r1), b.sample_indices(10, &mut r2));
    let mut all = b.sample_indices(50, &mut r1).unwrap();
    all.sort_unstable();
    assert_eq!(all, (0..50).collect::<Vec<_>>());

    let draws = 100_000;
    let mut counts = [0usize; 50];
    for _ in 0..draws {
        counts[b.sample_indices(1, &mut r1).unwrap()[0]] += 1;
    }
    let expected = draws as f64 / 50.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // chi-square, 49 dof, upper 0.1% point
    assert!(chi2 < 85.35, "chi2 = {chi2}");
}

#[test]
fn trainer_warmup_and_checkpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cfg = MaddpgConfig::new(2, 3, 4).with_language(5, 8);
    cfg.batch_size = 8;
    cfg.warmup_factor = 2;
    cfg.buffer_capacity = 100;
    let mut m = Maddpg::<f64>::new(cfg.clone(), &mut rng).unwrap();
    for _ in 0..15 {
        let t = common::random_transition(&mut rng, &cfg);
        m.store(t).unwrap();
    }
    assert!(m.train_step(&mut rng).unwrap().is_none());
    m.store(common::random_transition(&mut rng, &cfg)).unwrap();
    let s = m.train_step(&mut rng).unwrap().unwrap();
    assert!(s.critic_loss.is_finite() && s.actor_loss.is_finite());

    let mut bad = common::random_transition(&mut rng, &cfg);
    bad.rewards[0] = f64::NAN;
    assert!(m.store(bad).is_err());

    let ck = MaddpgCheckpoint::from_nets(&m.nets);
    let back: AgentNets<f64> = MaddpgCheckpoint::from_json(&ck.to_json().unwrap()).unwrap().to_nets().unwrap();
    assert_eq!(back.actors, m.nets.actors);
    assert_eq!(back.critic, m.nets.critic);
    assert_eq!(back.projection, m.nets.projection);
}

proptest! {
    #[test]
    fn buffer_matches_deque(cap in 1usize..20, pushes in prop::collection::vec(0u32..1000, 0..100)) {
        let mut b = ReplayBuffer::new(cap);
        let mut d = VecDeque::new();
        for p in pushes {
            b.push(p);
            d.push_back(p);
            if d.len() > cap {
                d.pop_front();
            }
            prop_assert_eq!(b.iter().copied().collect::<Vec<_>>(), d.iter().copied().collect::<Vec<_>>());
        }
    }
}
