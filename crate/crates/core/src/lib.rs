pub mod error;
pub mod net;
pub mod scalar;
pub mod transitions;
pub mod replay;
pub mod agents;
pub mod envs;
pub mod harness;

pub use scalar::Real;

// Double-precision instantiations used by the CLI and the experiment harness.
pub type Transition = transitions::Transition<f64>;
pub type Episode = transitions::Episode<f64>;
pub type DemoSet = transitions::DemoSet<f64>;
pub type ParamSet = net::ParamSet<f64>;
pub type Mlp = net::Mlp<f64>;
pub type ReplayBuffer = replay::ReplayBuffer<f64>;
pub type SacLearner = agents::SacLearner<f64>;
pub type DdpgLearner = agents::DdpgLearner<f64>;
pub type Learner = agents::Learner<f64>;
pub type Trainer = harness::Trainer<f64>;
