//! Loss functions and their exact gradients with respect to network parameters.
//!
//! Every function here is pure: it reads networks and batch data and
//! accumulates `d loss / d params` into a caller-provided buffer. The learners
//! combine them and apply Adam steps.

use crate::error::{dim_mismatch, Result};
use crate::net::{gaussian_sample, ActionBounds, GaussianHeadOutput, Mlp, OutputActivation};
use crate::scalar::Real;

use super::batch::critic_inputs;

/// State-action value network taking `[state, action]` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic<T> {
    pub net: Mlp<T>,
    pub obs_dim: usize,
    pub act_dim: usize,
}

/// Anything that scores actions and can differentiate the score with respect to them.
pub trait QFunction<T> {
    /// Values and `dQ/da` (row-major, `act_dim` per row) for a batch.
    fn value_and_action_grad(&self, states: &[T], actions: &[T]) -> Result<(Vec<T>, Vec<T>)>;
}

impl<T: Real> Critic<T> {
    pub fn values(&self, states: &[T], actions: &[T]) -> Result<Vec<T>> {
        let x = critic_inputs(states, actions, self.obs_dim, self.act_dim);
        let batch = x.len() / (self.obs_dim + self.act_dim);
        Ok(self.net.forward_batch(&x, batch)?.output().to_vec())
    }
}

impl<T: Real> QFunction<T> for Critic<T> {
    fn value_and_action_grad(&self, states: &[T], actions: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let x = critic_inputs(states, actions, self.obs_dim, self.act_dim);
        let batch = x.len() / (self.obs_dim + self.act_dim);
        let trace = self.net.forward_batch(&x, batch)?;
        let ones = vec![T::one(); batch];
        let gx = self.net.backward_batch(&trace, &ones, None, true)?.expect("input gradient");
        let width = self.obs_dim + self.act_dim;
        let da = gx.chunks_exact(width).flat_map(|row| row[self.obs_dim..].iter().copied()).collect();
        Ok((trace.output().to_vec(), da))
    }
}

/// `scale / B * sum_i w_i (Q(s_i, a_i) - y_i)^2`. Returns the loss and the Q values.
pub fn msbe_loss_grad<T: Real>(
    critic: &Critic<T>,
    states: &[T],
    actions: &[T],
    targets: &[T],
    weights: &[T],
    scale: T,
    grad: &mut [T],
) -> Result<(T, Vec<T>)> {
    let x = critic_inputs(states, actions, critic.obs_dim, critic.act_dim);
    let batch = targets.len();
    if weights.len() != batch {
        return Err(dim_mismatch("importance weights", batch, weights.len()));
    }
    let trace = critic.net.forward_batch(&x, batch)?;
    let q = trace.output().to_vec();
    let inv_b = T::one() / T::of(batch as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut dq = Vec::with_capacity(batch);
    for i in 0..batch {
        let err = q[i] - targets[i];
        loss += weights[i] * err * err;
        dq.push(two * scale * weights[i] * err * inv_b);
    }
    critic.net.backward_batch(&trace, &dq, Some(grad), false)?;
    Ok((scale * loss * inv_b, q))
}

/// `coef * ||params||^2`; a zero coefficient contributes nothing.
pub fn l2_penalty<T: Real>(params: &[T], coef: T, grad: &mut [T]) -> T {
    if coef == T::zero() {
        return T::zero();
    }
    let two = T::of(2.0);
    let mut sq = T::zero();
    for (g, &p) in grad.iter_mut().zip(params) {
        sq += p * p;
        *g += two * coef * p;
    }
    coef * sq
}

/// Per-row minimum over critics with the matching action gradient.
fn min_q_and_grad<T: Real>(
    critics: &[&dyn QFunction<T>],
    states: &[T],
    actions: &[T],
    act_dim: usize,
) -> Result<(Vec<T>, Vec<T>)> {
    let mut best: Option<(Vec<T>, Vec<T>)> = None;
    for c in critics {
        let (q, da) = c.value_and_action_grad(states, actions)?;
        best = Some(match best {
            None => (q, da),
            Some((mut bq, mut bda)) => {
                for i in 0..q.len() {
                    if q[i] < bq[i] {
                        bq[i] = q[i];
                        bda[i * act_dim..(i + 1) * act_dim].copy_from_slice(&da[i * act_dim..(i + 1) * act_dim]);
                    }
                }
                (bq, bda)
            }
        });
    }
    Ok(best.expect("at least one critic"))
}

/// `1/B * sum_s [alpha * log pi(a~|s) - min_j Q_j(s, a~)]` with
/// `a~ = squash(mean + std * noise)` and the noise held fixed.
pub fn sac_actor_loss_grad<T: Real>(
    actor: &Mlp<T>,
    bounds: &ActionBounds<T>,
    critics: &[&dyn QFunction<T>],
    states: &[T],
    noise: &[T],
    alpha: T,
    grad: &mut [T],
) -> Result<T> {
    let d = bounds.dim();
    let batch = noise.len() / d;
    let trace = actor.forward_batch(states, batch)?;
    let mut samples = Vec::with_capacity(batch);
    let mut masks = Vec::with_capacity(batch);
    let mut actions = Vec::with_capacity(batch * d);
    for (raw, eps) in trace.output().chunks_exact(2 * d).zip(noise.chunks_exact(d)) {
        let (head, mask) = GaussianHeadOutput::from_raw(raw);
        let s = gaussian_sample(&head, eps, bounds);
        actions.extend_from_slice(&s.action);
        samples.push(s);
        masks.push(mask);
    }
    let (q_min, dq_da) = min_q_and_grad(critics, states, &actions, d)?;
    let inv_b = T::one() / T::of(batch as f64);
    let mut loss = T::zero();
    let mut d_raw = Vec::with_capacity(batch * 2 * d);
    for i in 0..batch {
        loss += alpha * samples[i].log_prob - q_min[i];
        let d_action: Vec<T> = dq_da[i * d..(i + 1) * d].iter().map(|&g| -g * inv_b).collect();
        let (d_mean, d_log_std) = samples[i].backprop(&d_action, alpha * inv_b);
        d_raw.extend_from_slice(&d_mean);
        d_raw.extend(d_log_std.iter().zip(&masks[i]).map(|(&g, &clamped)| if clamped { T::zero() } else { g }));
    }
    actor.backward_batch(&trace, &d_raw, Some(grad), false)?;
    Ok(loss * inv_b)
}

/// Deterministic policy actions: the scaled tanh output (deterministic actor)
/// or the squashed mean (Gaussian actor).
pub fn policy_actions<T: Real>(actor: &Mlp<T>, bounds: &ActionBounds<T>, states: &[T]) -> Result<Vec<T>> {
    let batch = states.len() / actor.shape.input_dim();
    let trace = actor.forward_batch(states, batch)?;
    let out_dim = actor.shape.output_dim();
    let d = bounds.dim();
    let mut actions = Vec::with_capacity(batch * d);
    for row in trace.output().chunks_exact(out_dim) {
        for k in 0..d {
            let y = match actor.shape.output() {
                OutputActivation::Tanh => row[k],
                OutputActivation::Identity => row[k].tanh(),
            };
            actions.push(bounds.scale(k, y));
        }
    }
    Ok(actions)
}

/// `-1/B * sum_s Q(s, mu(s))` for a tanh-output actor.
pub fn ddpg_actor_loss_grad<T: Real>(
    actor: &Mlp<T>,
    bounds: &ActionBounds<T>,
    critic: &dyn QFunction<T>,
    states: &[T],
    grad: &mut [T],
) -> Result<T> {
    let d = bounds.dim();
    let batch = states.len() / actor.shape.input_dim();
    let trace = actor.forward_batch(states, batch)?;
    let actions: Vec<T> = trace
        .output()
        .chunks_exact(d)
        .flat_map(|row| row.iter().enumerate().map(|(k, &y)| bounds.scale(k, y)))
        .collect();
    let (q, dq_da) = critic.value_and_action_grad(states, &actions)?;
    let inv_b = T::one() / T::of(batch as f64);
    let d_out: Vec<T> = dq_da
        .iter()
        .enumerate()
        .map(|(j, &g)| -g * bounds.half_range(j % d) * inv_b)
        .collect();
    actor.backward_batch(&trace, &d_out, Some(grad), false)?;
    Ok(-q.iter().copied().sum::<T>() * inv_b)
}

/// `lambda / B * sum_i ||pi_det(s_i) - a_i||^2` for either actor type.
pub fn bc_loss_grad<T: Real>(
    actor: &Mlp<T>,
    bounds: &ActionBounds<T>,
    states: &[T],
    demo_actions: &[T],
    lambda: T,
    grad: &mut [T],
) -> Result<T> {
    let d = bounds.dim();
    let batch = demo_actions.len() / d;
    let trace = actor.forward_batch(states, batch)?;
    let out_dim = actor.shape.output_dim();
    let inv_b = T::one() / T::of(batch as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut d_out = vec![T::zero(); batch * out_dim];
    for i in 0..batch {
        let row = &trace.output()[i * out_dim..(i + 1) * out_dim];
        for k in 0..d {
            let (y, dy_dout) = match actor.shape.output() {
                OutputActivation::Tanh => (row[k], T::one()),
                OutputActivation::Identity => {
                    let y = row[k].tanh();
                    (y, T::one() - y * y)
                }
            };
            let err = bounds.scale(k, y) - demo_actions[i * d + k];
            loss += err * err;
            d_out[i * out_dim + k] = two * lambda * err * bounds.half_range(k) * dy_dout * inv_b;
        }
    }
    actor.backward_batch(&trace, &d_out, Some(grad), false)?;
    Ok(lambda * loss * inv_b)
}
