use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{warmup_action, Agent, AgentConfig, ReplayBuffer, Transition};
use crate::env::{EnvConfig, IrsEnv};
use crate::nn::checkpoint::encode;
use crate::rng::{substream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub seed: u64,
    pub episodes: usize,
    /// Test hook: poison a critic weight with NaN before the first update
    /// of this episode.
    pub inject_nan_at_episode: Option<usize>,
}

impl TrainOptions {
    pub fn new(seed: u64, episodes: usize) -> Self {
        Self {
            seed,
            episodes,
            inject_nan_at_episode: None,
        }
    }
}

/// Per-episode summary. Averages over an empty set are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Mean raw environment reward (before `reward_scale`).
    pub mean_reward: f64,
    pub mean_snr_db: f64,
    pub mean_oracle_snr_db: f64,
    pub critic_loss: f64,
    pub actor_objective: f64,
    pub sigma: f64,
    pub steps: usize,
    pub updates: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainStats {
    pub episodes: Vec<EpisodeStats>,
    /// Both critic losses for every learner update, in order.
    pub critic_losses: Vec<[f64; 2]>,
    pub diverged: bool,
    pub divergence: Option<String>,
}

impl TrainStats {
    /// Mean of `mean_snr_db` over the last `n` episodes.
    pub fn final_mean_snr_db(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().map(|e| e.mean_snr_db).sum::<f64>() / tail.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub stats: TrainStats,
    /// Encoded checkpoint after the last fully completed episode (the
    /// initial networks if none completed).
    pub checkpoint: Vec<u8>,
    pub agent: Agent,
    pub buffer_len: usize,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Runs the full training loop. Everything is derived from `opts.seed`.
///
/// Non-finite values abort training but not the call: the outcome carries
/// the divergence flag, a partial row for the failing episode and the
/// last good checkpoint. Other errors propagate.
pub fn train(
    env_config: &EnvConfig,
    agent_config: &AgentConfig,
    opts: &TrainOptions,
    observer: &mut dyn FnMut(&EpisodeStats),
) -> Result<TrainOutcome> {
    env_config.validate()?;
    agent_config.validate()?;
    let seed = opts.seed;
    let mut env = IrsEnv::new(
        env_config.clone(),
        substream(seed, Stream::Channel),
        substream(seed, Stream::Motion),
    )?;
    let mut agent = Agent::new(
        agent_config.clone(),
        env.state_dim(),
        env.action_dim(),
        &mut substream(seed, Stream::Init),
        &mut substream(seed, Stream::Fourier),
    )?;
    let mut explore_rng = substream(seed, Stream::Exploration);
    let mut replay_rng = substream(seed, Stream::Replay);
    let mut buffer = ReplayBuffer::new(agent_config.buffer_capacity)?;
    let mut stats = TrainStats::default();
    let mut checkpoint = encode(&agent.to_tensors())?;
    let scale = agent_config.reward_scale;
    let mut global_step = 0usize;

    'episodes: for episode in 0..opts.episodes {
        let sigma = agent_config.sigma_at(episode);
        let mut rewards = Vec::with_capacity(env_config.episode_len);
        let mut snrs = Vec::with_capacity(env_config.episode_len);
        let mut oracles = Vec::with_capacity(env_config.episode_len);
        let mut losses = Vec::new();
        let mut objectives = Vec::new();
        let mut inject = opts.inject_nan_at_episode == Some(episode);
        let mut state = env.reset()?;
        let mut failure: Option<Error> = None;

        while !env.is_done() {
            let action = if global_step < agent_config.warmup_steps {
                Ok(warmup_action(env.action_dim(), &mut explore_rng))
            } else {
                agent.select_action(&state, sigma, &mut explore_rng)
            };
            let out = match action.and_then(|a| env.step(&a).map(|o| (a, o))) {
                Ok(x) => x,
                Err(e @ Error::NonFinite(_)) => {
                    failure = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            };
            let (action, out) = out;
            rewards.push(out.reward);
            snrs.push(out.snr_db);
            oracles.push(out.oracle_snr_db);
            buffer.push(Transition {
                state: state.iter().map(|&x| x as f32).collect(),
                action: action.iter().map(|&x| x as f32).collect(),
                reward: (out.reward * scale) as f32,
                next_state: out.next_state.iter().map(|&x| x as f32).collect(),
            });
            state = out.next_state;
            global_step += 1;

            if global_step >= agent_config.warmup_steps && buffer.len() >= agent_config.batch_size {
                if inject {
                    agent.critics[0].params.layers[0].weight[0] = f32::NAN;
                    inject = false;
                }
                for _ in 0..agent_config.updates_per_step {
                    let batch = buffer.sample(agent_config.batch_size, &mut replay_rng)?;
                    match agent.update(&batch) {
                        Ok(u) => {
                            stats.critic_losses.push(u.critic_losses);
                            losses.push(0.5 * (u.critic_losses[0] + u.critic_losses[1]));
                            objectives.push(u.actor_objective / scale);
                        }
                        Err(e @ Error::NonFinite(_)) => {
                            failure = Some(e);
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if failure.is_some() {
                    break;
                }
            }
        }

        let row = EpisodeStats {
            episode,
            mean_reward: mean(&rewards),
            mean_snr_db: mean(&snrs),
            mean_oracle_snr_db: mean(&oracles),
            critic_loss: mean(&losses),
            actor_objective: mean(&objectives),
            sigma,
            steps: rewards.len(),
            updates: losses.len(),
            diverged: failure.is_some(),
        };
        observer(&row);
        stats.episodes.push(row);
        if let Some(e) = failure {
            stats.diverged = true;
            stats.divergence = Some(e.to_string());
            break 'episodes;
        }
        checkpoint = encode(&agent.to_tensors())?;
    }

    Ok(TrainOutcome {
        stats,
        checkpoint,
        agent,
        buffer_len: buffer.len(),
    })
}
