//! Deterministic policy gradient with target actor and critic.

use rand::Rng;

use super::batch::TargetBatch;
use super::losses::{bc_loss_grad, ddpg_actor_loss_grad, l2_penalty, msbe_loss_grad, policy_actions, Critic};
use super::sac::{layer_sizes, soft_update, standard_normal};
use super::{demo_batch, ActMode};
use crate::error::Result;
use crate::net::{adam_step, ActionBounds, AdamConfig, AdamState, Mlp, MlpShape, OutputActivation};
use crate::scalar::Real;
use crate::transitions::Transition;

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgLearner<T> {
    /// Tanh output, scaled onto the action bounds.
    pub actor: Mlp<T>,
    pub critic: Critic<T>,
    pub target_actor: Mlp<T>,
    pub target_critic: Critic<T>,
    pub actor_opt: AdamState<T>,
    pub critic_opt: AdamState<T>,
    pub actor_adam: AdamConfig<T>,
    pub critic_adam: AdamConfig<T>,
    pub bounds: ActionBounds<T>,
    /// Exploration noise standard deviation as a fraction of the action half-range.
    pub sigma_explore: T,
}

impl<T: Real> DdpgLearner<T> {
    pub fn new(
        obs_dim: usize,
        bounds: ActionBounds<T>,
        hidden: &[usize],
        lr_actor: T,
        lr_critic: T,
        sigma_explore: T,
        seed: u64,
    ) -> Result<Self> {
        let act_dim = bounds.dim();
        let actor_shape = MlpShape::new(layer_sizes(obs_dim, hidden, act_dim), OutputActivation::Tanh)?;
        let critic_shape = MlpShape::new(layer_sizes(obs_dim + act_dim, hidden, 1), OutputActivation::Identity)?;
        let actor = Mlp::new(actor_shape, seed);
        let critic = Critic { net: Mlp::new(critic_shape, seed.wrapping_add(1)), obs_dim, act_dim };
        Ok(Self {
            actor_opt: AdamState::new(actor.num_params()),
            critic_opt: AdamState::new(critic.net.num_params()),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_adam: AdamConfig::with_lr(lr_actor),
            critic_adam: AdamConfig::with_lr(lr_critic),
            bounds,
            sigma_explore,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.shape.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.bounds.dim()
    }

    /// `y = r + discount * (1 - done) * Q'(s', mu'(s'))`.
    pub fn ddpg_targets(&self, batch: &TargetBatch<T>) -> Result<Vec<T>> {
        let next_actions = policy_actions(&self.target_actor, &self.bounds, &batch.next_states)?;
        let q = self.target_critic.values(&batch.next_states, &next_actions)?;
        Ok((0..batch.len()).map(|i| batch.target(i, q[i])).collect())
    }

    pub fn critic_loss_grad(
        &self,
        batch: &TargetBatch<T>,
        targets: &[T],
        weights: &[T],
        scale: T,
        grad: &mut [T],
    ) -> Result<(T, Vec<T>)> {
        let (loss, q) = msbe_loss_grad(&self.critic, &batch.states, &batch.actions, targets, weights, scale, grad)?;
        Ok((loss, q.iter().zip(targets).map(|(&q, &y)| q - y).collect()))
    }

    pub fn apply_critic_grad(&mut self, mut grad: Vec<T>, l2: T) -> Result<T> {
        let penalty = l2_penalty(&self.critic.net.params.flat, l2, &mut grad);
        adam_step(&mut self.critic.net.params.flat, &grad, &mut self.critic_opt, &self.critic_adam)?;
        Ok(penalty)
    }

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
        let mut grad = vec![T::zero(); self.critic.net.num_params()];
        let (loss, td) = self.critic_loss_grad(batch, targets, weights, scale, &mut grad)?;
        let penalty = self.apply_critic_grad(grad, l2)?;
        Ok((td, loss + penalty))
    }

    pub fn nstep_critic_update(
        &mut self,
        slices: &TargetBatch<T>,
        weights: &[T],
        l2: T,
        lambda_n: T,
    ) -> Result<(Vec<T>, T)> {
        let targets = self.ddpg_targets(slices)?;
        self.scaled_critic_update(slices, &targets, weights, l2, lambda_n)
    }

    pub fn actor_loss_grad(&self, states: &[T], grad: &mut [T]) -> Result<T> {
        ddpg_actor_loss_grad(&self.actor, &self.bounds, &self.critic, states, grad)
    }

    pub fn apply_actor_grad(&mut self, mut grad: Vec<T>, l2: T) -> Result<T> {
        let penalty = l2_penalty(&self.actor.params.flat, l2, &mut grad);
        adam_step(&mut self.actor.params.flat, &grad, &mut self.actor_opt, &self.actor_adam)?;
        Ok(penalty)
    }

    /// One Adam step on `-mean Q(s, mu(s))`; the critic is not modified.
    pub fn ddpg_actor_update(&mut self, states: &[T], l2: T) -> Result<T> {
        let mut grad = vec![T::zero(); self.actor.num_params()];
        let loss = self.actor_loss_grad(states, &mut grad)?;
        Ok(loss + self.apply_actor_grad(grad, l2)?)
    }

    pub fn bc_update(&mut self, demos: &[&Transition<T>], lambda_bc: T) -> Result<T> {
        let (states, actions) = demo_batch(demos)?;
        let mut grad = vec![T::zero(); self.actor.num_params()];
        let loss = bc_loss_grad(&self.actor, &self.bounds, &states, &actions, lambda_bc, &mut grad)?;
        adam_step(&mut self.actor.params.flat, &grad, &mut self.actor_opt, &self.actor_adam)?;
        Ok(loss)
    }

    pub fn soft_update_targets(&mut self, tau: T) {
        soft_update(&mut self.target_critic.net.params.flat, &self.critic.net.params.flat, tau);
        soft_update(&mut self.target_actor.params.flat, &self.actor.params.flat, tau);
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[T], mode: ActMode, rng: &mut R) -> Result<Vec<T>> {
        let mut action = policy_actions(&self.actor, &self.bounds, state)?;
        if mode == ActMode::Explore && self.sigma_explore > T::zero() {
            let noise: Vec<T> = standard_normal(action.len(), rng);
            for (k, (a, n)) in action.iter_mut().zip(noise).enumerate() {
                *a += self.sigma_explore * self.bounds.half_range(k) * n;
            }
            self.bounds.clip(&mut action);
        }
        Ok(action)
    }
}
