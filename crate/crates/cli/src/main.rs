use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lamp_core::embed::EmbedSources;
use lamp_core::marl::RewardScale;
use lamp_core::orchestrator::{
    run_eval, run_training, simulate, Ablation, BackendKind, EncoderKind, GovPolicy, PolicyKind, RunCheckpoint,
    RunConfig, RunOutput, CHECKPOINT_JSON,
};

#[derive(Parser)]
#[command(name = "lamp", version, about = "Language-augmented multi-agent economy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train household policies and write run artifacts.
    Train(RunArgs),
    /// Evaluate a checkpoint (or a fixed baseline) over several seeds.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint written by `train`; defaults to OUT/checkpoint.json when present.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated evaluation seeds.
        #[arg(long, default_value = "1,2,3,4,5", value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Roll out without learning.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// s1, s2, s3 or a path to a scenario JSON file.
    #[arg(long, default_value = "s1")]
    scenario: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// scripted or remote.
    #[arg(long, default_value = "scripted")]
    backend: String,
    /// lamp, maddpg, random or rule.
    #[arg(long, default_value = "lamp")]
    policy: String,
    /// Comma-separated: speak, experience_pool, long_term, short_term, timing_scheduler.
    #[arg(long, value_delimiter = ',')]
    ablate: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    buffer_capacity: Option<usize>,
    #[arg(long)]
    long_interval: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Embedding dimension d.
    #[arg(long)]
    embed_dim: Option<usize>,
    /// union, none, reasoning-reflection, statement-news, or a comma list of sources.
    #[arg(long)]
    embed_sources: Option<String>,
    /// hashing or remote.
    #[arg(long, default_value = "hashing")]
    encoder: String,
    /// Short-news probability of the random trigger (timing_scheduler ablation).
    #[arg(long)]
    random_short_rate: Option<f64>,
    #[arg(long)]
    train_selector: bool,
    /// Keep harvesting into the long-term pool during eval.
    #[arg(long)]
    eval_harvest: bool,
    /// Long-term pool file loaded at start and saved after training.
    #[arg(long)]
    pool_file: Option<PathBuf>,
    /// fixed or random.
    #[arg(long, default_value = "fixed")]
    gov_policy: String,
    /// Fall back to the scripted backend when the remote one fails.
    #[arg(long)]
    fallback_scripted: bool,
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    /// Critic reward transform: symlog, raw, or clip:C.
    #[arg(long, default_value = "symlog")]
    reward_scale: String,
    /// Critic target on collapse (default: scaled utility floor held forever).
    #[arg(long, allow_hyphen_values = true)]
    collapse_value: Option<f64>,
    #[arg(long)]
    explore_sigma: Option<f64>,
    #[arg(long)]
    actor_lr: Option<f64>,
    #[arg(long)]
    critic_lr: Option<f64>,
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            scenario: self.scenario.clone(),
            seed: self.seed,
            episodes: self.episodes,
            steps: self.steps,
            backend: BackendKind::parse(&self.backend).ok_or_else(|| anyhow!("unknown backend {:?}", self.backend))?,
            policy: PolicyKind::parse(&self.policy).ok_or_else(|| anyhow!("unknown policy {:?}", self.policy))?,
            out_dir: self.out.clone(),
            train_selector: self.train_selector,
            eval_harvest: self.eval_harvest,
            pool_file: self.pool_file.clone(),
            fallback_to_scripted: self.fallback_scripted,
            checkpoint_every: self.checkpoint_every,
            ..RunConfig::default()
        };
        let mut ablations = BTreeSet::new();
        for a in self.ablate.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
            ablations.insert(Ablation::parse(a).ok_or_else(|| anyhow!("unknown ablation {a:?}"))?);
        }
        cfg.ablations = ablations;
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.buffer_capacity {
            cfg.buffer_capacity = v;
        }
        if let Some(v) = self.long_interval {
            cfg.long_interval = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.embed_dim {
            cfg.embed_dim = v;
        }
        if let Some(v) = self.explore_sigma {
            cfg.explore_sigma = v;
        }
        if let Some(v) = self.actor_lr {
            cfg.actor_lr = v;
        }
        if let Some(v) = self.critic_lr {
            cfg.critic_lr = v;
        }
        cfg.collapse_value = self.collapse_value;
        cfg.reward_scale = match self.reward_scale.as_str() {
            "symlog" => RewardScale::Symlog,
            "raw" => RewardScale::Raw,
            other => match other.strip_prefix("clip:").map(str::parse::<f64>) {
                Some(Ok(c)) => RewardScale::Clip(c),
                _ => bail!("unknown reward scale {other:?}"),
            },
        };
        if let Some(v) = self.random_short_rate {
            cfg.random_short_rate = v;
        }
        if let Some(s) = &self.embed_sources {
            cfg.embed_sources = EmbedSources::parse(s).ok_or_else(|| anyhow!("bad --embed-sources {s:?}"))?;
        }
        cfg.encoder = match self.encoder.as_str() {
            "hashing" => EncoderKind::Hashing,
            "remote" => EncoderKind::Remote,
            other => bail!("unknown encoder {other:?}"),
        };
        cfg.gov_policy = match self.gov_policy.as_str() {
            "fixed" => GovPolicy::Fixed,
            "random" => GovPolicy::Random,
            other => bail!("unknown gov policy {other:?}"),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_checkpoint(explicit: Option<&PathBuf>, cfg: &RunConfig) -> Result<Option<RunCheckpoint>> {
    let path = match explicit {
        Some(p) => Some(p.clone()),
        None => cfg
            .out_dir
            .as_ref()
            .map(|d| d.join(CHECKPOINT_JSON))
            .filter(|p| p.exists()),
    };
    path.map(|p| RunCheckpoint::load(&p).with_context(|| format!("reading checkpoint {}", p.display())))
        .transpose()
}

fn summarize(out: &RunOutput) {
    for ep in &out.metrics.episodes {
        println!(
            "episode {:>3}  years {:>3}  avg_reward {:>10.4}  welfare {:>12.4}  gini {:.4}  {}",
            ep.episode, ep.years, ep.avg_household_reward, ep.social_welfare, ep.final_gini, ep.done_reason
        );
    }
    let calls: u64 = out.backend_calls.values().sum();
    if calls > 0 {
        println!("backend calls {calls} (fallbacks {})", out.fallbacks);
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Train(args) => {
            let cfg = args.to_config()?;
            summarize(&run_training(&cfg)?);
        }
        Command::Simulate { run, checkpoint } => {
            let cfg = run.to_config()?;
            let ckpt = load_checkpoint(checkpoint.as_ref(), &cfg)?;
            summarize(&simulate(&cfg, ckpt.as_ref())?);
        }
        Command::Eval { run, checkpoint, seeds } => {
            let cfg = run.to_config()?;
            let ckpt = load_checkpoint(checkpoint.as_ref(), &cfg)?;
            let rows = run_eval(&cfg, ckpt.as_ref(), &seeds)?;
            for r in rows {
                println!(
                    "{:>6}  years {:>7.2}  avg_reward {:>10.4}  welfare {:>12.4}  gini {:.4}  gdp {:.4}",
                    r.seed, r.years, r.avg_household_reward, r.social_welfare, r.final_gini, r.gdp
                );
            }
        }
    }
    Ok(())
}
