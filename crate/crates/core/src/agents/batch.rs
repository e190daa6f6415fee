//! Row-major mini-batches fed to the learners.

use crate::scalar::Real;
use crate::replay::NStepSlice;
use crate::transitions::Transition;

/// Bootstrapped-regression data: `y = reward + discount * (1 - done) * V(next_state)`.
///
/// One-step transitions use `discount = gamma`; n-step slices carry their own
/// `gamma^n` and cumulative reward.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetBatch<T> {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub states: Vec<T>,
    pub actions: Vec<T>,
    pub rewards: Vec<T>,
    pub next_states: Vec<T>,
    pub discounts: Vec<T>,
    pub dones: Vec<bool>,
}

impl<T: Real> TargetBatch<T> {
    fn with_capacity(obs_dim: usize, act_dim: usize, n: usize) -> Self {
        Self {
            obs_dim,
            act_dim,
            states: Vec::with_capacity(n * obs_dim),
            actions: Vec::with_capacity(n * act_dim),
            rewards: Vec::with_capacity(n),
            next_states: Vec::with_capacity(n * obs_dim),
            discounts: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
        }
    }

    pub fn from_transitions<'a, I>(transitions: I, gamma: T) -> Self
    where
        I: IntoIterator<Item = &'a Transition<T>>,
    {
        let mut iter = transitions.into_iter().peekable();
        let (obs_dim, act_dim) = iter.peek().map_or((0, 0), |t| (t.state.len(), t.action.len()));
        let mut b = Self::with_capacity(obs_dim, act_dim, 64);
        for t in iter {
            b.states.extend_from_slice(&t.state);
            b.actions.extend_from_slice(&t.action);
            b.rewards.push(t.reward);
            b.next_states.extend_from_slice(&t.next_state);
            b.discounts.push(gamma);
            b.dones.push(t.done);
        }
        b
    }

    pub fn from_slices<'a, I>(slices: I) -> Self
    where
        I: IntoIterator<Item = &'a NStepSlice<T>>,
    {
        let mut iter = slices.into_iter().peekable();
        let (obs_dim, act_dim) = iter.peek().map_or((0, 0), |s| (s.state.len(), s.action.len()));
        let mut b = Self::with_capacity(obs_dim, act_dim, 64);
        for s in iter {
            b.states.extend_from_slice(&s.state);
            b.actions.extend_from_slice(&s.action);
            b.rewards.push(s.cum_reward);
            b.next_states.extend_from_slice(&s.boot_state);
            b.discounts.push(s.discount);
            b.dones.push(s.boot_done);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.states[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn next_state(&self, i: usize) -> &[T] {
        &self.next_states[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[T] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }

    /// `reward + discount * bootstrap`, with the bootstrap masked on termination.
    pub fn target(&self, i: usize, bootstrap: T) -> T {
        if self.dones[i] {
            self.rewards[i]
        } else {
            self.rewards[i] + self.discounts[i] * bootstrap
        }
    }
}

/// Concatenates state and action rows into critic inputs.
pub fn critic_inputs<T: Real>(states: &[T], actions: &[T], obs_dim: usize, act_dim: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(states.len() + actions.len());
    for (s, a) in states.chunks_exact(obs_dim).zip(actions.chunks_exact(act_dim)) {
        out.extend_from_slice(s);
        out.extend_from_slice(a);
    }
    out
}
