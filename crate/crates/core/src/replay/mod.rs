//! Prioritized experience replay and n-step slices.

pub mod buffer;
pub mod nstep;
pub mod sum_tree;

pub use buffer::{
    demo_ratio_top_up, episode_items, DemoIngest, DemoSource, PerConfig, PrioritizedBatch, ReplayBuffer,
    StoredItem, TopUp,
};
pub use nstep::{assemble_n_step, NStepSlice};
pub use sum_tree::{MaxTree, SumTree};
