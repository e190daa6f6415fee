//! SAC and DDPG learners and the combined per-step update used by the trainer.

pub mod batch;
pub mod config;
pub mod ddpg;
pub mod losses;
pub mod sac;

use rand::Rng;

pub use batch::{critic_inputs, TargetBatch};
pub use config::{AgentConfig, Algo};
pub use ddpg::DdpgLearner;
pub use losses::{
    bc_loss_grad, ddpg_actor_loss_grad, l2_penalty, msbe_loss_grad, policy_actions, sac_actor_loss_grad, Critic,
    QFunction,
};
pub use sac::SacLearner;

use crate::error::{Error, Result};
use crate::net::{ActionBounds, Mlp};
use crate::scalar::Real;
use crate::transitions::{Origin, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Explore,
    Exploit,
}

/// Flattens demonstration transitions into state and action rows.
pub fn demo_batch<T: Real>(demos: &[&Transition<T>]) -> Result<(Vec<T>, Vec<T>)> {
    let mut states = Vec::new();
    let mut actions = Vec::new();
    for (i, t) in demos.iter().enumerate() {
        if t.origin != Origin::Demo {
            return Err(Error::Input(format!("behaviour cloning sample {i} has origin {:?}", t.origin)));
        }
        states.extend_from_slice(&t.state);
        actions.extend_from_slice(&t.action);
    }
    Ok((states, actions))
}

/// Everything consumed by one training step.
pub struct UpdateInputs<'a, T> {
    pub one_step: &'a TargetBatch<T>,
    /// Slices for the same sampled indices, when the n-step loss is on.
    pub n_step: Option<&'a TargetBatch<T>>,
    pub weights: &'a [T],
    /// Separate demonstration batch for the behaviour cloning loss.
    pub demos: Option<&'a [&'a Transition<T>]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats<T> {
    /// One-step TD errors of the sampled batch, used for priorities.
    pub td_errors: Vec<T>,
    pub critic_loss: T,
    pub actor_loss: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner<T> {
    Sac(SacLearner<T>),
    Ddpg(DdpgLearner<T>),
}

impl<T: Real> Learner<T> {
    pub fn new(cfg: &AgentConfig, obs_dim: usize, bounds: ActionBounds<T>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (la, lc) = (T::of(cfg.lr_actor), T::of(cfg.lr_critic));
        Ok(match cfg.algo {
            Algo::Sac => Learner::Sac(SacLearner::new(obs_dim, bounds, &cfg.hidden, la, lc, seed)?),
            Algo::Ddpg => Learner::Ddpg(DdpgLearner::new(
                obs_dim,
                bounds,
                &cfg.hidden,
                la,
                lc,
                T::of(cfg.sigma_explore),
                seed,
            )?),
        })
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Learner::Sac(l) => l.obs_dim(),
            Learner::Ddpg(l) => l.obs_dim(),
        }
    }

    pub fn act_dim(&self) -> usize {
        match self {
            Learner::Sac(l) => l.act_dim(),
            Learner::Ddpg(l) => l.act_dim(),
        }
    }

    pub fn bounds(&self) -> &ActionBounds<T> {
        match self {
            Learner::Sac(l) => &l.bounds,
            Learner::Ddpg(l) => &l.bounds,
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, state: &[T], mode: ActMode, rng: &mut R) -> Result<Vec<T>> {
        match self {
            Learner::Sac(l) => l.act(state, mode, rng),
            Learner::Ddpg(l) => l.act(state, mode, rng),
        }
    }

    /// Networks in a fixed order: actor, critics, then target networks.
    pub fn networks(&self) -> Vec<&Mlp<T>> {
        match self {
            Learner::Sac(l) => vec![
                &l.actor,
                &l.critics[0].net,
                &l.critics[1].net,
                &l.target_critics[0].net,
                &l.target_critics[1].net,
            ],
            Learner::Ddpg(l) => vec![&l.actor, &l.critic.net, &l.target_actor, &l.target_critic.net],
        }
    }

    pub fn networks_mut(&mut self) -> Vec<&mut Mlp<T>> {
        match self {
            Learner::Sac(l) => {
                let [c0, c1] = &mut l.critics;
                let [t0, t1] = &mut l.target_critics;
                vec![&mut l.actor, &mut c0.net, &mut c1.net, &mut t0.net, &mut t1.net]
            }
            Learner::Ddpg(l) => vec![&mut l.actor, &mut l.critic.net, &mut l.target_actor, &mut l.target_critic.net],
        }
    }

    /// One critic step (1-step plus optional scaled n-step loss), one actor
    /// step (policy loss plus optional behaviour cloning), then a soft target
    /// update. Each network receives a single Adam step on the summed loss.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        cfg: &AgentConfig,
        inputs: &UpdateInputs<'_, T>,
        rng: &mut R,
    ) -> Result<UpdateStats<T>> {
        let (alpha, tau) = (T::of(cfg.alpha), T::of(cfg.tau));
        let (l2_actor, l2_critic) = (T::of(cfg.l2_actor), T::of(cfg.l2_critic));
        let (lambda_n, lambda_bc) = (T::of(cfg.lambda_n), T::of(cfg.lambda_bc));
        let demos = inputs.demos.map(demo_batch).transpose()?;
        let states = &inputs.one_step.states;
        match self {
            Learner::Sac(l) => {
                let mut grads = l.zero_critic_grads();
                let y = l.sac_targets(inputs.one_step, alpha, rng)?;
                let (mut critic_loss, td) = l.critic_loss_grad(inputs.one_step, &y, inputs.weights, T::one(), &mut grads)?;
                if let Some(nb) = inputs.n_step {
                    let yn = l.sac_targets(nb, alpha, rng)?;
                    critic_loss += l.critic_loss_grad(nb, &yn, inputs.weights, lambda_n, &mut grads)?.0;
                }
                critic_loss += l.apply_critic_grads(grads, l2_critic)?;

                let noise = l.sample_noise(inputs.one_step.len(), rng);
                let mut grad = vec![T::zero(); l.actor.num_params()];
                let mut actor_loss = l.actor_loss_grad(states, &noise, alpha, &mut grad)?;
                if let Some((ds, da)) = &demos {
                    actor_loss += bc_loss_grad(&l.actor, &l.bounds, ds, da, lambda_bc, &mut grad)?;
                }
                actor_loss += l.apply_actor_grad(grad, l2_actor)?;
                l.soft_update_targets(tau);
                Ok(UpdateStats { td_errors: td, critic_loss, actor_loss })
            }
            Learner::Ddpg(l) => {
                let mut grad = vec![T::zero(); l.critic.net.num_params()];
                let y = l.ddpg_targets(inputs.one_step)?;
                let (mut critic_loss, td) = l.critic_loss_grad(inputs.one_step, &y, inputs.weights, T::one(), &mut grad)?;
                if let Some(nb) = inputs.n_step {
                    let yn = l.ddpg_targets(nb)?;
                    critic_loss += l.critic_loss_grad(nb, &yn, inputs.weights, lambda_n, &mut grad)?.0;
                }
                critic_loss += l.apply_critic_grad(grad, l2_critic)?;

                let mut grad = vec![T::zero(); l.actor.num_params()];
                let mut actor_loss = l.actor_loss_grad(states, &mut grad)?;
                if let Some((ds, da)) = &demos {
                    actor_loss += bc_loss_grad(&l.actor, &l.bounds, ds, da, lambda_bc, &mut grad)?;
                }
                actor_loss += l.apply_actor_grad(grad, l2_actor)?;
                l.soft_update_targets(tau);
                Ok(UpdateStats { td_errors: td, critic_loss, actor_loss })
            }
        }
    }
}
