use crate::scalar::Real;
use crate::transitions::Episode;

/// Discounted reward over up to `n` steps of an episode, starting at one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NStepSlice<T> {
    pub state: Vec<T>,
    pub action: Vec<T>,
    pub cum_reward: T,
    /// State reached after `n_used` steps.
    pub boot_state: Vec<T>,
    pub boot_done: bool,
    pub n_used: usize,
    /// `gamma^n_used`
    pub discount: T,
}

/// One slice per transition, using the episode's current rewards. Windows are
/// cut short at the end of the episode.
pub fn assemble_n_step<T: Real>(episode: &Episode<T>, n: usize, gamma: T) -> Vec<NStepSlice<T>> {
    assert!(n >= 1, "n-step window must be at least 1");
    assert!(gamma > T::zero() && gamma <= T::one(), "discount must lie in (0, 1]");
    let ts = episode.transitions();
    (0..ts.len())
        .map(|k| {
            let end = (k + n).min(ts.len());
            let mut cum = T::zero();
            let mut discount = T::one();
            for t in &ts[k..end] {
                cum += discount * t.reward;
                discount *= gamma;
            }
            let last = &ts[end - 1];
            NStepSlice {
                state: ts[k].state.clone(),
                action: ts[k].action.clone(),
                cum_reward: cum,
                boot_state: last.next_state.clone(),
                boot_done: last.done,
                n_used: end - k,
                discount,
            }
        })
        .collect()
}
