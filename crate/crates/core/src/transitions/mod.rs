//! Transitions, episodes and the reward bonus applied to demonstrations and
//! successful episodes.

pub mod codec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Demo,
    Agent,
    Relabeled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state: Vec<T>,
    pub action: Vec<T>,
    pub reward: T,
    pub next_state: Vec<T>,
    /// Set only when the task is solved; a timeout is not a termination.
    pub done: bool,
    pub origin: Origin,
    pub episode_id: u64,
    pub step_index: usize,
}

/// A completed episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode<T> {
    transitions: Vec<Transition<T>>,
    success: bool,
    timed_out: bool,
}

impl<T: Real> Episode<T> {
    /// Builds an episode, checking step numbering and that the outcome flags
    /// agree with the final transition.
    pub fn new(transitions: Vec<Transition<T>>, timed_out: bool) -> Result<Self> {
        let Some(last) = transitions.last() else {
            return Err(Error::Input("an episode needs at least one transition".into()));
        };
        let success = last.done;
        if success && timed_out {
            return Err(Error::Input("an episode cannot both succeed and time out".into()));
        }
        for (k, t) in transitions.iter().enumerate() {
            if t.step_index != k {
                return Err(Error::Input(format!("step_index {} at position {k}", t.step_index)));
            }
            if t.done && k + 1 != transitions.len() {
                return Err(Error::Input(format!("done flag on non-final step {k}")));
            }
        }
        Ok(Self { transitions, success, timed_out })
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        &self.transitions
    }

    pub fn into_transitions(self) -> Vec<Transition<T>> {
        self.transitions
    }

    pub fn success(&self) -> bool {
        self.success
    }

    pub fn timed_out(&self) -> bool {
        self.timed_out
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn id(&self) -> u64 {
        self.transitions[0].episode_id
    }

    /// Undiscounted sum of the stored rewards.
    pub fn total_reward(&self) -> T {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

/// A set of successful expert episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet<T> {
    episodes: Vec<Episode<T>>,
    avg_length: usize,
    source_seed: u64,
}

impl<T: Real> DemoSet<T> {
    pub fn new(episodes: Vec<Episode<T>>, source_seed: u64) -> Result<Self> {
        if episodes.is_empty() {
            return Err(Error::Input("a demo set needs at least one episode".into()));
        }
        if let Some(bad) = episodes.iter().find(|e| !e.success()) {
            return Err(Error::Rejected(format!("demo episode {} is not successful", bad.id())));
        }
        let avg_length = average_length(&episodes);
        Ok(Self { episodes, avg_length, source_seed })
    }

    pub fn episodes(&self) -> &[Episode<T>] {
        &self.episodes
    }

    /// Rounded mean episode length, the relabeling window size.
    pub fn avg_length(&self) -> usize {
        self.avg_length
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }
}

/// Rounded arithmetic mean of episode lengths (at least 1).
pub fn average_length<T: Real>(episodes: &[Episode<T>]) -> usize {
    if episodes.is_empty() {
        return 1;
    }
    let total: usize = episodes.iter().map(Episode::len).sum();
    ((total as f64 / episodes.len() as f64).round() as usize).max(1)
}

/// Demonstration transitions as they enter the buffer: the final step carries
/// `sparse_reward` and terminates, every other step gets the bonus.
pub fn ingest_demonstration<T: Real>(
    demo: &Episode<T>,
    sparse_reward: T,
    bonus: T,
) -> Result<Vec<Transition<T>>> {
    if demo.is_empty() || !demo.success() {
        return Err(Error::Rejected(format!(
            "demonstration {} is not a successful episode",
            demo.transitions.first().map_or(0, |t| t.episode_id)
        )));
    }
    if !(sparse_reward > T::zero()) {
        return Err(Error::Config(format!("sparse reward must be positive, got {sparse_reward}")));
    }
    let last = demo.len() - 1;
    Ok(demo
        .transitions
        .iter()
        .enumerate()
        .map(|(k, t)| Transition {
            reward: if k == last { sparse_reward } else { bonus },
            done: k == last,
            origin: Origin::Demo,
            ..t.clone()
        })
        .collect())
}

/// Number of non-final transitions a success of `len` steps has relabeled
/// with window size `avg_length`.
pub fn relabel_window(len: usize, avg_length: usize) -> usize {
    avg_length.saturating_sub(1).min(len.saturating_sub(1))
}

/// Gives the bonus to the last `avg_length - 1` non-final transitions of a
/// successful episode. Failed episodes come back untouched.
pub fn relabel_successful_episode<T: Real>(episode: &Episode<T>, bonus: T, avg_length: usize) -> Episode<T> {
    let mut out = episode.clone();
    if !episode.success() {
        return out;
    }
    let len = out.len();
    let window = relabel_window(len, avg_length);
    for t in &mut out.transitions[len - 1 - window..len - 1] {
        t.reward = bonus;
        t.origin = Origin::Relabeled;
    }
    out
}
