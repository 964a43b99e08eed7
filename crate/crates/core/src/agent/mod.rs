//! Twin-critic deterministic actor-critic learner.

mod critic;
mod replay;
mod train;

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::checkpoint::{
    matrix_from_tensors, matrix_to_tensor, params_from_tensors, params_to_tensors, NamedTensor,
};
use crate::nn::{polyak_update, Adam, AdamConfig, FourierKernel, Head, Matrix, Mlp, NetworkSpec};
use crate::rng::{normal, uniform};
use crate::{Error, Result};

pub use critic::{
    actor_grads_penalized, actor_grads_with, actor_objective_grads, argmin_critic, critic_action_grad, critic_forward,
    critic_loss_grads, critic_predict, CriticCache,
};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{train, EpisodeStats, TrainOptions, TrainOutcome, TrainStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticInput {
    Raw,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub lr: f64,
    /// Initial exploration noise std (radians).
    pub explore_sigma: f64,
    /// Per-episode multiplicative decay of the exploration std.
    pub explore_decay: f64,
    pub warmup_steps: usize,
    pub updates_per_step: usize,
    pub critic_input: CriticInput,
    /// Variance σ_B² of the Fourier kernel entries.
    pub fourier_var: f64,
    /// Number of frequencies k; critic input width is 2k.
    pub fourier_dim: usize,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    /// Bootstrap both critics from `min` of the two target critics; when
    /// off each critic bootstraps from its own target.
    pub shared_min_target: bool,
    /// Multiplier applied to rewards before they enter the replay buffer.
    pub reward_scale: f64,
    /// Weight of the penalty on the actor's squared pre-tanh outputs.
    pub actor_preact_penalty: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            lr: 2e-4,
            explore_sigma: 0.1 * PI,
            explore_decay: 0.999,
            warmup_steps: 1000,
            updates_per_step: 1,
            critic_input: CriticInput::Raw,
            fourier_var: 0.01,
            fourier_dim: 256,
            hidden: alloc::vec![400, 400, 400],
            buffer_capacity: 1_000_000,
            shared_min_target: true,
            reward_scale: 1.0,
            actor_preact_penalty: 0.0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = Error::invalid;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(bad("gamma", "must lie in (0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(bad("tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(bad("batch_size", "must be >= 1"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(bad("lr", "must be finite and >= 0"));
        }
        if !(self.explore_sigma >= 0.0 && self.explore_sigma.is_finite()) {
            return Err(bad("explore_sigma", "must be finite and >= 0"));
        }
        if !(self.explore_decay > 0.0 && self.explore_decay <= 1.0) {
            return Err(bad("explore_decay", "must lie in (0, 1]"));
        }
        if self.updates_per_step == 0 {
            return Err(bad("updates_per_step", "must be >= 1"));
        }
        if !(self.fourier_var >= 0.0 && self.fourier_var.is_finite()) {
            return Err(bad("fourier_var", "must be finite and >= 0"));
        }
        if self.fourier_dim == 0 {
            return Err(bad("fourier_dim", "must be >= 1"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(bad("hidden", "layer widths must be >= 1"));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(bad("buffer_capacity", "must be at least batch_size"));
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(bad("reward_scale", "must be finite and > 0"));
        }
        if !(self.actor_preact_penalty >= 0.0 && self.actor_preact_penalty.is_finite()) {
            return Err(bad("actor_preact_penalty", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Exploration std used during episode `episode` (0-based).
    pub fn sigma_at(&self, episode: usize) -> f64 {
        self.explore_sigma * libm::pow(self.explore_decay, episode as f64)
    }
}

/// Uniform warmup action in `[−π, π]^m`.
pub fn warmup_action<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| uniform(rng, -PI, PI)).collect()
}

/// `clamp(π(s) + N(0, σ²I), −π, π)`. Noise is drawn even when `σ = 0`
/// so the exploration stream advances identically.
pub fn select_action<R: Rng + ?Sized>(
    actor: &Mlp<f32>,
    state: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let s = Matrix::row_vector(state.iter().map(|&x| x as f32).collect());
    let a = actor.predict(&s)?;
    Ok(a.as_slice()
        .iter()
        .map(|&x| (x as f64 + sigma * normal(rng)).clamp(-PI, PI))
        .collect())
}

/// Losses and objective from one learner update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_losses: [f64; 2],
    pub actor_objective: f64,
}

/// Main and target networks with their optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    config: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    pub actor: Mlp<f32>,
    pub critics: [Mlp<f32>; 2],
    pub target_actor: Mlp<f32>,
    pub target_critics: [Mlp<f32>; 2],
    pub kernel: Option<FourierKernel<f32>>,
    pub actor_opt: Adam<f32>,
    pub critic_opts: [Adam<f32>; 2],
    updates: u64,
}

impl Agent {
    pub fn new<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        config: AgentConfig,
        state_dim: usize,
        action_dim: usize,
        init_rng: &mut R1,
        fourier_rng: &mut R2,
    ) -> Result<Self> {
        config.validate()?;
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::invalid("state_dim", "state and action dims must be >= 1"));
        }
        let kernel = match config.critic_input {
            CriticInput::Raw => None,
            CriticInput::Fourier => Some(FourierKernel::new(
                config.fourier_dim,
                state_dim + action_dim,
                libm::sqrt(config.fourier_var),
                fourier_rng,
            )?),
        };
        let critic_in = kernel.as_ref().map_or(state_dim + action_dim, |k| k.output_dim());
        let actor_spec = NetworkSpec::new(state_dim, &config.hidden, action_dim, Head::TanhPi);
        let critic_spec = NetworkSpec::new(critic_in, &config.hidden, 1, Head::Linear);
        let actor = Mlp::new(actor_spec, init_rng)?;
        let c1 = Mlp::new(critic_spec.clone(), init_rng)?;
        let c2 = Mlp::new(critic_spec, init_rng)?;
        let adam = AdamConfig::with_lr(config.lr);
        Ok(Self {
            actor_opt: Adam::new(adam, &actor.params),
            critic_opts: [Adam::new(adam, &c1.params), Adam::new(adam, &c2.params)],
            target_actor: actor.clone(),
            target_critics: [c1.clone(), c2.clone()],
            actor,
            critics: [c1, c2],
            kernel,
            config,
            state_dim,
            action_dim,
            updates: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Number of completed learner updates.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Deterministic policy output `π(s)`.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        let s = Matrix::row_vector(state.iter().map(|&x| x as f32).collect());
        Ok(self.actor.predict(&s)?.as_slice().iter().map(|&x| x as f64).collect())
    }

    pub fn select_action<R: Rng + ?Sized>(&self, state: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        select_action(&self.actor, state, sigma, rng)
    }

    /// Bellman targets for both critics. With the shared target the two
    /// vectors are identical.
    pub fn critic_targets(&self, batch: &Batch) -> Result<[Vec<f32>; 2]> {
        let next_a = self.target_actor.predict(&batch.next_states)?;
        let k = self.kernel.as_ref();
        let q1 = critic_predict(&self.target_critics[0], k, &batch.next_states, &next_a)?;
        let q2 = critic_predict(&self.target_critics[1], k, &batch.next_states, &next_a)?;
        let g = self.config.gamma as f32;
        let mut y = [Vec::with_capacity(batch.len()), Vec::with_capacity(batch.len())];
        for (i, &r) in batch.rewards.iter().enumerate() {
            let (a, b) = (q1.as_slice()[i], q2.as_slice()[i]);
            if self.config.shared_min_target {
                // `f32::min` would silently drop a NaN.
                let m = if a.is_nan() || b.is_nan() { f32::NAN } else { a.min(b) };
                let t = r + g * m;
                y[0].push(t);
                y[1].push(t);
            } else {
                y[0].push(r + g * a);
                y[1].push(r + g * b);
            }
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("critic target"));
        }
        Ok(y)
    }

    pub fn update_critics(&mut self, batch: &Batch) -> Result<[f64; 2]> {
        let y = self.critic_targets(batch)?;
        let mut losses = [0.0; 2];
        for j in 0..2 {
            let (loss, grads) = critic_loss_grads(
                &self.critics[j],
                self.kernel.as_ref(),
                &batch.states,
                &batch.actions,
                &y[j],
            )?;
            self.critic_opts[j].step(&mut self.critics[j].params, &grads)?;
            losses[j] = loss;
        }
        Ok(losses)
    }

    /// One ascent step on `mean min(Q₁, Q₂)(s, π(s))`; returns the
    /// objective before the step.
    pub fn update_actor(&mut self, batch: &Batch) -> Result<f64> {
        let (j, grads) = actor_objective_grads(
            &self.actor,
            [&self.critics[0], &self.critics[1]],
            self.kernel.as_ref(),
            &batch.states,
            self.config.actor_preact_penalty,
        )?;
        self.actor_opt.step(&mut self.actor.params, &grads)?;
        Ok(j)
    }

    pub fn update_targets(&mut self) -> Result<()> {
        let tau = self.config.tau;
        polyak_update(&mut self.target_actor.params, &self.actor.params, tau)?;
        for j in 0..2 {
            polyak_update(&mut self.target_critics[j].params, &self.critics[j].params, tau)?;
        }
        Ok(())
    }

    /// Critic step, actor step, then target tracking.
    pub fn update(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let critic_losses = self.update_critics(batch)?;
        let actor_objective = self.update_actor(batch)?;
        self.update_targets()?;
        self.updates += 1;
        Ok(UpdateStats {
            critic_losses,
            actor_objective,
        })
    }

    /// Exchanges the two critics together with their targets and
    /// optimizer states.
    pub fn swap_critics(&mut self) {
        self.critics.swap(0, 1);
        self.target_critics.swap(0, 1);
        self.critic_opts.swap(0, 1);
    }

    /// All network tensors, plus `fourier.B` when the kernel is in use.
    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        let mut out = params_to_tensors("actor", &self.actor.params);
        for j in 0..2 {
            out.extend(params_to_tensors(&format!("critic{}", j + 1), &self.critics[j].params));
        }
        out.extend(params_to_tensors("target_actor", &self.target_actor.params));
        for j in 0..2 {
            out.extend(params_to_tensors(
                &format!("target_critic{}", j + 1),
                &self.target_critics[j].params,
            ));
        }
        if let Some(k) = &self.kernel {
            out.push(matrix_to_tensor("fourier.B", k.matrix()));
        }
        out
    }

    /// Restores network weights saved by [`to_tensors`](Self::to_tensors).
    /// Optimizer moments are not part of a checkpoint and restart at zero.
    pub fn load_tensors(&mut self, tensors: &[NamedTensor]) -> Result<()> {
        let mut next = self.clone();
        next.actor = Mlp::from_params(next.actor.spec.clone(), params_from_tensors("actor", tensors)?)?;
        next.target_actor = Mlp::from_params(
            next.target_actor.spec.clone(),
            params_from_tensors("target_actor", tensors)?,
        )?;
        for j in 0..2 {
            let spec = next.critics[j].spec.clone();
            next.critics[j] =
                Mlp::from_params(spec.clone(), params_from_tensors(&format!("critic{}", j + 1), tensors)?)?;
            next.target_critics[j] = Mlp::from_params(
                spec,
                params_from_tensors(&format!("target_critic{}", j + 1), tensors)?,
            )?;
        }
        if let Some(k) = &next.kernel {
            let b = matrix_from_tensors::<f32>("fourier.B", tensors)?;
            if b.rows() != k.matrix().rows() || b.cols() != k.matrix().cols() {
                return Err(Error::Checkpoint("fourier.B has the wrong shape".into()));
            }
            next.kernel = Some(FourierKernel::from_matrix(b, k.sigma()));
        }
        let adam = AdamConfig::with_lr(next.config.lr);
        next.actor_opt = Adam::new(adam, &next.actor.params);
        next.critic_opts = [
            Adam::new(adam, &next.critics[0].params),
            Adam::new(adam, &next.critics[1].params),
        ];
        *self = next;
        Ok(())
    }
}
