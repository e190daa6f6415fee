use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Sac,
    Ddpg,
}

impl std::str::FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sac" => Ok(Algo::Sac),
            "ddpg" => Ok(Algo::Ddpg),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Sac => "sac",
            Algo::Ddpg => "ddpg",
        })
    }
}

/// Every learner hyperparameter in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algo: Algo,
    pub gamma: f64,
    /// Entropy temperature (SAC only); fixed for the whole run.
    pub alpha: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    /// Replayed samples per collected environment step.
    pub replay_ratio: usize,
    /// Reward given to non-final demonstration and relabeled transitions.
    pub b: f64,
    /// Relabeling window; 0 takes the rounded mean length of expert episodes.
    pub relabel_n: usize,
    /// Sparse task reward.
    pub r: f64,
    pub lambda_bc: f64,
    pub lambda_n: f64,
    pub n_step: usize,
    pub l2_actor: f64,
    pub l2_critic: f64,
    pub per_alpha: f64,
    pub per_beta0: f64,
    pub per_epsilon: f64,
    pub demo_boost: f64,
    pub bc_reset_fraction: f64,
    pub bc_batch_size: usize,
    /// DDPG exploration noise, as a fraction of the action half-range.
    pub sigma_explore: f64,
    pub hidden: Vec<usize>,
    pub buffer_capacity: usize,
    pub use_r2: bool,
    pub use_nstep: bool,
    pub use_bc: bool,
    pub use_demo_boost: bool,
    pub use_demo_resets: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Sac,
            gamma: 0.95,
            alpha: 0.2,
            tau: 0.005,
            lr_actor: 3e-4,
            lr_critic: 3e-4,
            batch_size: 64,
            replay_ratio: 32,
            b: 7.0,
            relabel_n: 0,
            r: 100.0,
            lambda_bc: 1.0,
            lambda_n: 1.0,
            n_step: 5,
            l2_actor: 1e-4,
            l2_critic: 1e-4,
            per_alpha: 0.6,
            per_beta0: 0.4,
            per_epsilon: 1e-3,
            demo_boost: 0.1,
            bc_reset_fraction: 0.25,
            bc_batch_size: 32,
            sigma_explore: 0.1,
            hidden: vec![64, 64],
            buffer_capacity: 200_000,
            use_r2: true,
            use_nstep: false,
            use_bc: false,
            use_demo_boost: false,
            use_demo_resets: false,
        }
    }
}

impl AgentConfig {
    /// Default bonus for each base algorithm.
    pub fn default_bonus(algo: Algo) -> f64 {
        match algo {
            Algo::Sac => 7.0,
            Algo::Ddpg => 3.0,
        }
    }

    /// Environment steps collected per training step.
    pub fn env_steps_per_train_step(&self) -> usize {
        self.batch_size / self.replay_ratio
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = vec![];
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            problems.push("gamma must lie in (0, 1]");
        }
        if !(self.alpha >= 0.0) {
            problems.push("alpha must be non-negative");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            problems.push("tau must lie in (0, 1]");
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            problems.push("learning rates must be positive");
        }
        if self.batch_size == 0 || self.bc_batch_size == 0 {
            problems.push("batch sizes must be positive");
        }
        if self.replay_ratio == 0 || self.batch_size % self.replay_ratio != 0 {
            problems.push("replay_ratio must divide batch_size");
        }
        if !(self.r > 0.0) {
            problems.push("sparse reward must be positive");
        }
        if self.n_step == 0 {
            problems.push("n_step must be at least 1");
        }
        if self.lambda_bc < 0.0 || self.lambda_n < 0.0 || self.l2_actor < 0.0 || self.l2_critic < 0.0 {
            problems.push("loss weights must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.bc_reset_fraction) {
            problems.push("bc_reset_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.per_alpha) || !(0.0..=1.0).contains(&self.per_beta0) {
            problems.push("PER exponents must lie in [0, 1]");
        }
        if !(self.per_epsilon > 0.0) || self.demo_boost < 0.0 {
            problems.push("PER epsilon must be positive and the demo boost non-negative");
        }
        if self.hidden.contains(&0) {
            problems.push("hidden layer sizes must be positive");
        }
        if self.buffer_capacity == 0 {
            problems.push("buffer_capacity must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_give_two_env_steps_per_update() {
        let c = AgentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.env_steps_per_train_step(), 2);
        assert_eq!(AgentConfig::default_bonus(Algo::Ddpg), 3.0);
    }

    #[test]
    fn invalid_values_are_reported() {
        let c = AgentConfig { gamma: 0.0, batch_size: 0, ..AgentConfig::default() };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("gamma") && msg.contains("batch"));
    }
}
