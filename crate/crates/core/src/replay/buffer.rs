//! Prioritized ring buffer with demonstration accounting.

use rand::Rng;

use super::nstep::{assemble_n_step, NStepSlice};
use super::sum_tree::{MaxTree, SumTree};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::transitions::{ingest_demonstration, Episode, Origin, Transition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerConfig<T> {
    /// Prioritization exponent; 0 is uniform sampling.
    pub alpha: T,
    /// Importance-sampling exponent at the start of training (annealed to 1 by the caller).
    pub beta: T,
    pub epsilon: T,
    /// Priority bonus for demonstration transitions.
    pub demo_boost: T,
}

impl<T: Real> Default for PerConfig<T> {
    fn default() -> Self {
        Self { alpha: T::of(0.6), beta: T::of(0.4), epsilon: T::of(1e-3), demo_boost: T::zero() }
    }
}

/// A stored transition, with its n-step slice when n-step targets are in use.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredItem<T> {
    pub transition: Transition<T>,
    pub n_step: Option<NStepSlice<T>>,
}

impl<T> From<Transition<T>> for StoredItem<T> {
    fn from(transition: Transition<T>) -> Self {
        Self { transition, n_step: None }
    }
}

/// Pairs each transition of a finished episode with its n-step slice.
pub fn episode_items<T: Real>(episode: &Episode<T>, n_step: Option<(usize, T)>) -> Vec<StoredItem<T>> {
    let slices = n_step.map(|(n, gamma)| assemble_n_step(episode, n, gamma));
    let mut slices = slices.map(Vec::into_iter);
    episode
        .transitions()
        .iter()
        .map(|t| StoredItem { transition: t.clone(), n_step: slices.as_mut().and_then(Iterator::next) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizedBatch<T> {
    pub indices: Vec<usize>,
    /// Importance weights normalized so the largest is 1.
    pub weights: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    items: Vec<StoredItem<T>>,
    next: usize,
    /// Raw priorities; the sum tree holds `priority^alpha`.
    priorities: Vec<T>,
    tree: SumTree<T>,
    max_tree: MaxTree<T>,
    per: PerConfig<T>,
    demo_count: usize,
}

impl<T: Real> ReplayBuffer<T> {
    pub fn new(capacity: usize, per: PerConfig<T>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        let valid = per.alpha >= T::zero()
            && per.alpha <= T::one()
            && per.beta >= T::zero()
            && per.beta <= T::one()
            && per.epsilon > T::zero()
            && per.demo_boost >= T::zero();
        if !valid {
            return Err(Error::Config(format!("invalid prioritized replay settings {per:?}")));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            priorities: Vec::with_capacity(capacity.min(1 << 16)),
            tree: SumTree::new(capacity),
            max_tree: MaxTree::new(capacity),
            per,
            demo_count: 0,
        })
    }

    pub fn per(&self) -> &PerConfig<T> {
        &self.per
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of stored transitions.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn demo_count(&self) -> usize {
        self.demo_count
    }

    pub fn demo_ratio(&self) -> f64 {
        if self.items.is_empty() {
            0.0
        } else {
            self.demo_count as f64 / self.items.len() as f64
        }
    }

    pub fn get(&self, index: usize) -> &StoredItem<T> {
        &self.items[index]
    }

    pub fn items(&self) -> &[StoredItem<T>] {
        &self.items
    }

    pub fn priority(&self, index: usize) -> T {
        self.priorities[index]
    }

    pub fn tree(&self) -> &SumTree<T> {
        &self.tree
    }

    /// Probability that one draw selects `index`.
    pub fn probability(&self, index: usize) -> T {
        self.tree.get(index) / self.tree.total()
    }

    fn set_priority(&mut self, index: usize, priority: T) {
        self.priorities[index] = priority;
        self.tree.set(index, priority.powf(self.per.alpha));
        self.max_tree.set(index, priority);
    }

    /// Stores an item with the current maximum priority (1 in an empty buffer),
    /// overwriting the oldest item once full. Returns the slot used.
    pub fn push(&mut self, item: impl Into<StoredItem<T>>) -> usize {
        let item = item.into();
        let priority = if self.items.is_empty() { T::one() } else { self.max_tree.max() };
        let is_demo = item.transition.origin == Origin::Demo;
        let slot = self.next;
        if slot < self.items.len() {
            if self.items[slot].transition.origin == Origin::Demo {
                self.demo_count -= 1;
            }
            self.items[slot] = item;
        } else {
            self.items.push(item);
            self.priorities.push(T::zero());
        }
        if is_demo {
            self.demo_count += 1;
        }
        self.set_priority(slot, priority);
        self.next = (self.next + 1) % self.capacity;
        slot
    }

    /// Stratified proportional sampling with importance weights
    /// `(M * P(i))^-beta`, normalized by the batch maximum.
    pub fn sample_prioritized<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        beta: T,
        rng: &mut R,
    ) -> Result<PrioritizedBatch<T>> {
        if batch_size == 0 || self.items.len() < batch_size {
            return Err(Error::NotReady(format!(
                "buffer holds {} transitions, batch needs {batch_size}",
                self.items.len()
            )));
        }
        let total = self.tree.total();
        let segment = total / T::of(batch_size as f64);
        let m = T::of(self.items.len() as f64);
        let mut indices = Vec::with_capacity(batch_size);
        let mut weights = Vec::with_capacity(batch_size);
        for k in 0..batch_size {
            let u = T::of(rng.random::<f64>());
            let mass = (T::of(k as f64) + u) * segment;
            let index = self.tree.find(mass).min(self.items.len() - 1);
            let p = self.tree.get(index) / total;
            indices.push(index);
            weights.push((m * p).powf(-beta));
        }
        let max_w = weights.iter().cloned().fold(T::zero(), T::max);
        for w in &mut weights {
            *w /= max_w;
        }
        Ok(PrioritizedBatch { indices, weights })
    }

    /// `priority = |td| + epsilon (+ demo_boost for demonstrations)`.
    pub fn update_priorities(&mut self, indices: &[usize], td_errors: &[T]) -> Result<()> {
        if indices.len() != td_errors.len() {
            return Err(Error::Input(format!(
                "{} indices but {} TD errors",
                indices.len(),
                td_errors.len()
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.items.len()) {
            return Err(Error::Input(format!("index {bad} out of range ({} stored)", self.items.len())));
        }
        for (&i, &td) in indices.iter().zip(td_errors) {
            let mut p = td.abs() + self.per.epsilon;
            if self.items[i].transition.origin == Origin::Demo {
                p += self.per.demo_boost;
            }
            self.set_priority(i, p);
        }
        Ok(())
    }
}

/// How demonstration episodes are turned into buffer items.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoIngest<T> {
    pub sparse_reward: T,
    pub bonus: T,
    /// `(n, gamma)` when n-step slices are stored.
    pub n_step: Option<(usize, T)>,
}

impl<T: Real> DemoIngest<T> {
    /// Bonus-labelled demo items ready to push.
    pub fn items(&self, demo: &Episode<T>) -> Result<Vec<StoredItem<T>>> {
        let ingested = Episode::new(ingest_demonstration(demo, self.sparse_reward, self.bonus)?, false)?;
        Ok(episode_items(&ingested, self.n_step))
    }
}

/// Supplier of additional expert episodes.
pub trait DemoSource<T> {
    fn next_demo(&mut self) -> Option<Episode<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopUp {
    pub added: usize,
    /// False when the source ran dry before the target ratio was met.
    pub satisfied: bool,
}

/// Pushes whole demonstration episodes until the demo share reaches `target_ratio`.
pub fn demo_ratio_top_up<T: Real, S: DemoSource<T> + ?Sized>(
    buffer: &mut ReplayBuffer<T>,
    source: &mut S,
    target_ratio: f64,
    ingest: &DemoIngest<T>,
) -> Result<TopUp> {
    let mut added = 0;
    while buffer.is_empty() || buffer.demo_ratio() < target_ratio {
        let Some(demo) = source.next_demo() else {
            return Ok(TopUp { added, satisfied: false });
        };
        let before = buffer.demo_count();
        for item in ingest.items(&demo)? {
            buffer.push(item);
            added += 1;
        }
        if buffer.demo_count() <= before && buffer.len() == buffer.capacity() {
            // Demos are only displacing other demos; the ratio cannot rise further.
            return Ok(TopUp { added, satisfied: buffer.demo_ratio() >= target_ratio });
        }
    }
    Ok(TopUp { added, satisfied: true })
}
