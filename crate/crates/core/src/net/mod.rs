//! Feed-forward network kernel: MLP passes, Adam, the squashed Gaussian head,
//! gradient checking and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod gaussian;
pub mod gradcheck;
pub mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gaussian::{
    gaussian_sample, squashed_mean, ActionBounds, GaussianHeadOutput, SquashedSample, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use checkpoint::{read_params, read_params_for, write_params};
pub use gradcheck::finite_diff_check;
pub use mlp::{
    backward, backward_batch, forward, forward_batch, init_mlp, LayerView, Mlp, MlpShape,
    OutputActivation, ParamSet, Trace,
};
