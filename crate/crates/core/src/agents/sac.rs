//! Soft actor-critic with twin critics and a fixed entropy temperature.

use rand::Rng;
use rand_distr::StandardNormal;

use super::batch::TargetBatch;
use super::losses::{bc_loss_grad, l2_penalty, msbe_loss_grad, sac_actor_loss_grad, Critic, QFunction};
use super::{demo_batch, ActMode};
use crate::error::Result;
use crate::net::{
    adam_step, gaussian_sample, squashed_mean, ActionBounds, AdamConfig, AdamState, GaussianHeadOutput,
    Mlp, MlpShape, OutputActivation,
};
use crate::scalar::Real;
use crate::transitions::Transition;

#[derive(Debug, Clone, PartialEq)]
pub struct SacLearner<T> {
    /// Outputs `[mean, log_std]` of the pre-squash Gaussian.
    pub actor: Mlp<T>,
    pub critics: [Critic<T>; 2],
    pub target_critics: [Critic<T>; 2],
    pub actor_opt: AdamState<T>,
    pub critic_opts: [AdamState<T>; 2],
    pub actor_adam: AdamConfig<T>,
    pub critic_adam: AdamConfig<T>,
    pub bounds: ActionBounds<T>,
}

pub(crate) fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

pub(crate) fn standard_normal<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    (0..n).map(|_| T::of(rng.sample::<f64, _>(StandardNormal))).collect()
}

pub(crate) fn soft_update<T: Real>(target: &mut [T], online: &[T], tau: T) {
    let keep = T::one() - tau;
    for (t, &o) in target.iter_mut().zip(online) {
        *t = tau * o + keep * *t;
    }
}

impl<T: Real> SacLearner<T> {
    pub fn new(
        obs_dim: usize,
        bounds: ActionBounds<T>,
        hidden: &[usize],
        lr_actor: T,
        lr_critic: T,
        seed: u64,
    ) -> Result<Self> {
        let act_dim = bounds.dim();
        let actor_shape = MlpShape::new(layer_sizes(obs_dim, hidden, 2 * act_dim), OutputActivation::Identity)?;
        let critic_shape = MlpShape::new(layer_sizes(obs_dim + act_dim, hidden, 1), OutputActivation::Identity)?;
        let actor = Mlp::new(actor_shape, seed);
        let critic = |k: u64| Critic { net: Mlp::new(critic_shape.clone(), seed.wrapping_add(k)), obs_dim, act_dim };
        let critics = [critic(1), critic(2)];
        Ok(Self {
            actor_opt: AdamState::new(actor.num_params()),
            critic_opts: [AdamState::new(critics[0].net.num_params()), AdamState::new(critics[1].net.num_params())],
            target_critics: critics.clone(),
            critics,
            actor,
            actor_adam: AdamConfig::with_lr(lr_actor),
            critic_adam: AdamConfig::with_lr(lr_critic),
            bounds,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.shape.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<T> {
        standard_normal(batch * self.act_dim(), rng)
    }

    /// Actions and log-probabilities of the current policy at `states` for given noise.
    pub fn sample_actions(&self, states: &[T], noise: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let d = self.act_dim();
        let batch = noise.len() / d;
        let trace = self.actor.forward_batch(states, batch)?;
        let mut actions = Vec::with_capacity(batch * d);
        let mut log_probs = Vec::with_capacity(batch);
        for (raw, eps) in trace.output().chunks_exact(2 * d).zip(noise.chunks_exact(d)) {
            let (head, _) = GaussianHeadOutput::from_raw(raw);
            let s = gaussian_sample(&head, eps, &self.bounds);
            actions.extend_from_slice(&s.action);
            log_probs.push(s.log_prob);
        }
        Ok((actions, log_probs))
    }

    /// Soft Bellman targets with the next actions drawn from the given noise.
    pub fn targets_with_noise(&self, batch: &TargetBatch<T>, alpha: T, noise: &[T]) -> Result<Vec<T>> {
        let (next_actions, log_probs) = self.sample_actions(&batch.next_states, noise)?;
        let q1 = self.target_critics[0].values(&batch.next_states, &next_actions)?;
        let q2 = self.target_critics[1].values(&batch.next_states, &next_actions)?;
        Ok((0..batch.len())
            .map(|i| batch.target(i, q1[i].min(q2[i]) - alpha * log_probs[i]))
            .collect())
    }

    /// `y = r + discount * (1 - done) * (min_j Q'_j(s', a') - alpha * log pi(a'|s'))`, `a' ~ pi(.|s')`.
    pub fn sac_targets<R: Rng + ?Sized>(&self, batch: &TargetBatch<T>, alpha: T, rng: &mut R) -> Result<Vec<T>> {
        let noise = self.sample_noise(batch.len(), rng);
        self.targets_with_noise(batch, alpha, &noise)
    }

    /// Accumulates the weighted squared Bellman error of both critics into
    /// `grads`. Returns the loss and the TD errors of the first critic.
    pub fn critic_loss_grad(
        &self,
        batch: &TargetBatch<T>,
        targets: &[T],
        weights: &[T],
        scale: T,
        grads: &mut [Vec<T>; 2],
    ) -> Result<(T, Vec<T>)> {
        let (l1, q1) = msbe_loss_grad(&self.critics[0], &batch.states, &batch.actions, targets, weights, scale, &mut grads[0])?;
        let (l2, _) = msbe_loss_grad(&self.critics[1], &batch.states, &batch.actions, targets, weights, scale, &mut grads[1])?;
        let td = q1.iter().zip(targets).map(|(&q, &y)| q - y).collect();
        Ok((l1 + l2, td))
    }

    pub fn zero_critic_grads(&self) -> [Vec<T>; 2] {
        [vec![T::zero(); self.critics[0].net.num_params()], vec![T::zero(); self.critics[1].net.num_params()]]
    }

    /// Adds the L2 term and takes one Adam step per critic. Returns the L2 loss.
    pub fn apply_critic_grads(&mut self, mut grads: [Vec<T>; 2], l2: T) -> Result<T> {
        let mut penalty = T::zero();
        for (j, g) in grads.iter_mut().enumerate() {
            penalty += l2_penalty(&self.critics[j].net.params.flat, l2, g);
            adam_step(&mut self.critics[j].net.params.flat, g, &mut self.critic_opts[j], &self.critic_adam)?;
        }
        Ok(penalty)
    }

    /// One Adam step on both critics against fixed targets.
    pub fn critic_update(&mut self, batch: &TargetBatch<T>, targets: &[T], weights: &[T], l2: T) -> Result<(Vec<T>, T)> {
        self.scaled_critic_update(batch, targets, weights, l2, T::one())
    }

    fn scaled_critic_update(
        &mut self,
        batch: &TargetBatch<T>,
        targets: &[T],
        weights: &[T],
        l2: T,
        scale: T,
    ) -> Result<(Vec<T>, T)> {
        let mut grads = self.zero_critic_grads();
        let (loss, td) = self.critic_loss_grad(batch, targets, weights, scale, &mut grads)?;
        let penalty = self.apply_critic_grads(grads, l2)?;
        Ok((td, loss + penalty))
    }

    /// Critic step on n-step slices (see [`TargetBatch::from_slices`]) with the
    /// loss scaled by `lambda_n`.
    pub fn nstep_critic_update<R: Rng + ?Sized>(
        &mut self,
        slices: &TargetBatch<T>,
        weights: &[T],
        l2: T,
        lambda_n: T,
        alpha: T,
        rng: &mut R,
    ) -> Result<(Vec<T>, T)> {
        let targets = self.sac_targets(slices, alpha, rng)?;
        self.scaled_critic_update(slices, &targets, weights, l2, lambda_n)
    }

    /// Reparameterized policy loss gradient against the current critics.
    pub fn actor_loss_grad(&self, states: &[T], noise: &[T], alpha: T, grad: &mut [T]) -> Result<T> {
        let critics: [&dyn QFunction<T>; 2] = [&self.critics[0], &self.critics[1]];
        sac_actor_loss_grad(&self.actor, &self.bounds, &critics, states, noise, alpha, grad)
    }

    pub fn apply_actor_grad(&mut self, mut grad: Vec<T>, l2: T) -> Result<T> {
        let penalty = l2_penalty(&self.actor.params.flat, l2, &mut grad);
        adam_step(&mut self.actor.params.flat, &grad, &mut self.actor_opt, &self.actor_adam)?;
        Ok(penalty)
    }

    /// One Adam step on the actor; the critics are not modified.
    pub fn sac_actor_update<R: Rng + ?Sized>(&mut self, states: &[T], alpha: T, l2: T, rng: &mut R) -> Result<T> {
        let batch = states.len() / self.obs_dim();
        let noise = self.sample_noise(batch, rng);
        let mut grad = vec![T::zero(); self.actor.num_params()];
        let loss = self.actor_loss_grad(states, &noise, alpha, &mut grad)?;
        Ok(loss + self.apply_actor_grad(grad, l2)?)
    }

    /// Behaviour cloning step of the squashed policy mean onto demo actions.
    pub fn bc_update(&mut self, demos: &[&Transition<T>], lambda_bc: T) -> Result<T> {
        let (states, actions) = demo_batch(demos)?;
        let mut grad = vec![T::zero(); self.actor.num_params()];
        let loss = bc_loss_grad(&self.actor, &self.bounds, &states, &actions, lambda_bc, &mut grad)?;
        adam_step(&mut self.actor.params.flat, &grad, &mut self.actor_opt, &self.actor_adam)?;
        Ok(loss)
    }

    pub fn soft_update_targets(&mut self, tau: T) {
        for j in 0..2 {
            soft_update(&mut self.target_critics[j].net.params.flat, &self.critics[j].net.params.flat, tau);
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[T], mode: ActMode, rng: &mut R) -> Result<Vec<T>> {
        let raw = self.actor.forward(state)?;
        let (head, _) = GaussianHeadOutput::from_raw(&raw);
        Ok(match mode {
            ActMode::Exploit => squashed_mean(&head, &self.bounds),
            ActMode::Explore => {
                let noise = self.sample_noise(1, rng);
                gaussian_sample(&head, &noise, &self.bounds).action
            }
        })
    }
}
