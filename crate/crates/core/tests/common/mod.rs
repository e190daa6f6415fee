//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use relabel::agents::{bc_loss_grad, msbe_loss_grad, DdpgLearner, SacLearner, TargetBatch};
use relabel::net::{finite_diff_check, ActionBounds, Mlp};
use relabel::transitions::{Episode, Origin, Transition};

/// Plain nested-loop MLP: weights stored input-major, then biases, per layer.
pub fn naive_forward(sizes: &[usize], tanh_out: bool, flat: &[f64], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let mut off = 0;
    let layers = sizes.len() - 1;
    for l in 0..layers {
        let (rows, cols) = (sizes[l], sizes[l + 1]);
        let mut out = vec![0.0; cols];
        for j in 0..cols {
            let mut s = flat[off + rows * cols + j];
            for i in 0..rows {
                s += h[i] * flat[off + i * cols + j];
            }
            out[j] = if l + 1 < layers {
                s.max(0.0)
            } else if tanh_out {
                s.tanh()
            } else {
                s
            };
        }
        off += (rows + 1) * cols;
        h = out;
    }
    h
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Squashed-Gaussian action and log-density for one state, computed from scratch.
pub fn sac_sample(learner: &SacLearner<f64>, s: &[f64], eps: &[f64]) -> (Vec<f64>, f64) {
    let sizes = learner.actor.shape.layer_sizes().to_vec();
    let raw = naive_forward(&sizes, false, &learner.actor.params.flat, s);
    let d = eps.len();
    let mut a = vec![0.0; d];
    let mut lp = 0.0;
    for k in 0..d {
        let mu = raw[k];
        let ls = raw[d + k].clamp(-20.0, 2.0);
        let u = mu + ls.exp() * eps[k];
        let lo = learner.bounds.low[k];
        let hi = learner.bounds.high[k];
        let half = 0.5 * (hi - lo);
        a[k] = 0.5 * (hi + lo) + half * u.tanh();
        let log_jac = half.ln() + 2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u));
        lp += -0.5 * eps[k] * eps[k] - ls - 0.5 * (2.0 * std::f64::consts::PI).ln() - log_jac;
    }
    (a, lp)
}

pub fn critic_value(sizes: &[usize], flat: &[f64], s: &[f64], a: &[f64]) -> f64 {
    let mut x = s.to_vec();
    x.extend_from_slice(a);
    naive_forward(sizes, false, flat, &x)[0]
}

/// Soft Bellman target of row `i`, given that row's noise.
pub fn sac_target_oracle(l: &SacLearner<f64>, b: &TargetBatch<f64>, i: usize, alpha: f64, eps: &[f64]) -> f64 {
    if b.dones[i] {
        return b.rewards[i];
    }
    let s2 = b.next_state(i);
    let (a2, lp) = sac_sample(l, s2, eps);
    let sizes = l.target_critics[0].net.shape.layer_sizes().to_vec();
    let q1 = critic_value(&sizes, &l.target_critics[0].net.params.flat, s2, &a2);
    let q2 = critic_value(&sizes, &l.target_critics[1].net.params.flat, s2, &a2);
    b.rewards[i] + b.discounts[i] * (q1.min(q2) - alpha * lp)
}

pub fn ddpg_target_oracle(l: &DdpgLearner<f64>, b: &TargetBatch<f64>, i: usize) -> f64 {
    if b.dones[i] {
        return b.rewards[i];
    }
    let s2 = b.next_state(i);
    let mu = naive_forward(l.target_actor.shape.layer_sizes(), true, &l.target_actor.params.flat, s2);
    let a2: Vec<f64> = mu
        .iter()
        .enumerate()
        .map(|(k, &y)| 0.5 * (l.bounds.high[k] + l.bounds.low[k]) + 0.5 * (l.bounds.high[k] - l.bounds.low[k]) * y)
        .collect();
    let sizes = l.target_critic.net.shape.layer_sizes().to_vec();
    b.rewards[i] + b.discounts[i] * critic_value(&sizes, &l.target_critic.net.params.flat, s2, &a2)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_transitions(seed: u64, n: usize, obs_dim: usize, act_dim: usize, done_prob: f64) -> Vec<Transition<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| Transition {
            state: random_vec(&mut rng, obs_dim, 1.0),
            action: (0..act_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            reward: rng.random_range(-5.0..10.0),
            next_state: random_vec(&mut rng, obs_dim, 1.0),
            done: rng.random::<f64>() < done_prob,
            origin: Origin::Demo,
            episode_id: k as u64,
            step_index: 0,
        })
        .collect()
}

/// Perturbs every parameter so that targets and online nets differ.
pub fn jitter(flat: &mut [f64], seed: u64, scale: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in flat {
        *p += scale * rng.sample::<f64, _>(StandardNormal);
    }
}

pub fn unit_bounds(d: usize) -> ActionBounds<f64> {
    ActionBounds::symmetric(d, 1.0)
}

/// Reference relabeling: copy the rewards and, for a success, overwrite the
/// last `min(n - 1, len - 1)` non-final entries with `b`.
pub fn relabel_oracle(rewards: &[f64], success: bool, b: f64, n: usize) -> Vec<f64> {
    let mut out = rewards.to_vec();
    if !success {
        return out;
    }
    let len = rewards.len();
    let mut count = 0;
    let mut k = len as isize - 2;
    while k >= 0 && count + 1 < n {
        out[k as usize] = b;
        count += 1;
        k -= 1;
    }
    out
}

/// Worst finite-difference error of the first critic's MSBE gradient.
pub fn fd_critic(l: &SacLearner<f64>, b: &TargetBatch<f64>, y: &[f64], w: &[f64], scale: f64, h: f64) -> f64 {
    let mut c = l.critics[0].clone();
    finite_diff_check(
        &l.critics[0].net.params.flat,
        |p| {
            c.net.params.flat.copy_from_slice(p);
            let mut g = vec![0.0; p.len()];
            let (loss, _) = msbe_loss_grad(&c, &b.states, &b.actions, y, w, scale, &mut g).unwrap();
            (loss, g)
        },
        h,
    )
}

pub fn fd_sac_actor(l: &SacLearner<f64>, states: &[f64], noise: &[f64], alpha: f64, h: f64) -> f64 {
    let mut m = l.clone();
    finite_diff_check(
        &l.actor.params.flat,
        |p| {
            m.actor.params.flat.copy_from_slice(p);
            let mut g = vec![0.0; p.len()];
            (m.actor_loss_grad(states, noise, alpha, &mut g).unwrap(), g)
        },
        h,
    )
}

pub fn fd_ddpg_actor(l: &DdpgLearner<f64>, states: &[f64], h: f64) -> f64 {
    let mut m = l.clone();
    finite_diff_check(
        &l.actor.params.flat,
        |p| {
            m.actor.params.flat.copy_from_slice(p);
            let mut g = vec![0.0; p.len()];
            (m.actor_loss_grad(states, &mut g).unwrap(), g)
        },
        h,
    )
}

pub fn fd_bc(actor: &Mlp<f64>, bounds: &ActionBounds<f64>, states: &[f64], actions: &[f64], lambda: f64, h: f64) -> f64 {
    let mut a = actor.clone();
    finite_diff_check(
        &actor.params.flat,
        |p| {
            a.params.flat.copy_from_slice(p);
            let mut g = vec![0.0; p.len()];
            (bc_loss_grad(&a, bounds, states, actions, lambda, &mut g).unwrap(), g)
        },
        h,
    )
}

/// Smallest |pre-activation| over every hidden ReLU unit for one input.
pub fn kink_margin(sizes: &[usize], flat: &[f64], x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    let mut off = 0;
    let mut margin = f64::INFINITY;
    for l in 0..sizes.len() - 2 {
        let (rows, cols) = (sizes[l], sizes[l + 1]);
        let mut out = vec![0.0; cols];
        for j in 0..cols {
            let mut s = flat[off + rows * cols + j];
            for i in 0..rows {
                s += h[i] * flat[off + i * cols + j];
            }
            margin = margin.min(s.abs());
            out[j] = s.max(0.0);
        }
        off += (rows + 1) * cols;
        h = out;
    }
    margin
}

/// Shifts hidden-layer biases so that every ReLU pre-activation at `x` lies at
/// least `margin` away from zero.
pub fn clear_kinks(sizes: &[usize], flat: &mut [f64], x: &[f64], margin: f64) {
    let mut h = x.to_vec();
    let mut off = 0;
    for l in 0..sizes.len() - 2 {
        let (rows, cols) = (sizes[l], sizes[l + 1]);
        let mut out = vec![0.0; cols];
        for j in 0..cols {
            let bias = off + rows * cols + j;
            let mut s = flat[bias];
            for i in 0..rows {
                s += h[i] * flat[off + i * cols + j];
            }
            if s.abs() < margin {
                let target = if s >= 0.0 { margin } else { -margin };
                flat[bias] += target - s;
                s = target;
            }
            out[j] = s.max(0.0);
        }
        off += (rows + 1) * cols;
        h = out;
    }
}

/// Index of the scalar output bias of a single-output network.
pub fn output_bias(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum::<usize>() - 1
}

/// An episode with random states whose final step carries `r` when it succeeds.
pub fn sparse_episode(rng: &mut ChaCha8Rng, id: u64, len: usize, success: bool, r: f64) -> Episode<f64> {
    let transitions = (0..len)
        .map(|k| {
            let last = k + 1 == len;
            Transition {
                state: random_vec(rng, 4, 1.0),
                action: random_vec(rng, 2, 0.5),
                reward: if last && success { r } else { 0.0 },
                next_state: random_vec(rng, 4, 1.0),
                done: last && success,
                origin: Origin::Agent,
                episode_id: id,
                step_index: k,
            }
        })
        .collect();
    Episode::new(transitions, !success).unwrap()
}
