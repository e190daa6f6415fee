//! Run configuration, the flat `key = value` file format and experiment variants.

use std::fmt::Display;
use std::str::FromStr;

use crate::agents::{AgentConfig, Algo};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub env: String,
    pub demo_count: usize,
    /// Keep the demonstration share at `demo_ratio_target` by adding fresh expert episodes.
    pub demo_top_up: bool,
    pub demo_ratio_target: f64,
    /// Online environment steps; warmup and pretraining are not counted.
    pub total_env_steps: usize,
    pub seeds: Vec<u64>,
    pub pretrain_iters: usize,
    pub random_warmup: usize,
    pub rolling_window: usize,
    pub hold_window: usize,
    pub thresholds: Vec<f64>,
    /// Deterministic evaluation episodes run after training (0 disables).
    pub eval_episodes: usize,
    /// Extra clearance for the switch expert around the wall.
    pub expert_detour: f64,
    /// Write elapsed seconds into metrics; off keeps files reproducible byte for byte.
    pub record_wall_time: bool,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            agent: AgentConfig::default(),
            env: "reach2d".into(),
            demo_count: 200,
            demo_top_up: true,
            demo_ratio_target: 0.1,
            total_env_steps: 100_000,
            seeds: vec![0, 1, 2],
            pretrain_iters: 3000,
            random_warmup: 1000,
            rolling_window: 100,
            hold_window: 100,
            thresholds: vec![0.5, 0.9],
            eval_episodes: 0,
            expert_detour: 0.0,
            record_wall_time: false,
            out_dir: "runs".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key} = {value:?}: expected true or false"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.agent;
        let v = value.trim();
        match key.trim() {
            "algo" => a.algo = parse(key, v)?,
            "gamma" => a.gamma = parse(key, v)?,
            "alpha" => a.alpha = parse(key, v)?,
            "tau" => a.tau = parse(key, v)?,
            "lr_actor" => a.lr_actor = parse(key, v)?,
            "lr_critic" => a.lr_critic = parse(key, v)?,
            "batch_size" => a.batch_size = parse(key, v)?,
            "replay_ratio" => a.replay_ratio = parse(key, v)?,
            "b" => a.b = parse(key, v)?,
            "relabel_n" => a.relabel_n = parse(key, v)?,
            "r" => a.r = parse(key, v)?,
            "lambda_bc" => a.lambda_bc = parse(key, v)?,
            "lambda_n" => a.lambda_n = parse(key, v)?,
            "n_step" => a.n_step = parse(key, v)?,
            "l2_actor" => a.l2_actor = parse(key, v)?,
            "l2_critic" => a.l2_critic = parse(key, v)?,
            "per_alpha" => a.per_alpha = parse(key, v)?,
            "per_beta0" => a.per_beta0 = parse(key, v)?,
            "per_epsilon" => a.per_epsilon = parse(key, v)?,
            "demo_boost" => a.demo_boost = parse(key, v)?,
            "bc_reset_fraction" => a.bc_reset_fraction = parse(key, v)?,
            "bc_batch_size" => a.bc_batch_size = parse(key, v)?,
            "sigma_explore" => a.sigma_explore = parse(key, v)?,
            "hidden" => a.hidden = parse_list(key, v)?,
            "buffer_capacity" => a.buffer_capacity = parse(key, v)?,
            "use_r2" => a.use_r2 = parse_bool(key, v)?,
            "use_nstep" => a.use_nstep = parse_bool(key, v)?,
            "use_bc" => a.use_bc = parse_bool(key, v)?,
            "use_demo_boost" => a.use_demo_boost = parse_bool(key, v)?,
            "use_demo_resets" => a.use_demo_resets = parse_bool(key, v)?,
            "env" => self.env = v.to_string(),
            "demo_count" => self.demo_count = parse(key, v)?,
            "demo_top_up" => self.demo_top_up = parse_bool(key, v)?,
            "demo_ratio_target" => self.demo_ratio_target = parse(key, v)?,
            "total_env_steps" => self.total_env_steps = parse(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "pretrain_iters" => self.pretrain_iters = parse(key, v)?,
            "random_warmup" => self.random_warmup = parse(key, v)?,
            "rolling_window" => self.rolling_window = parse(key, v)?,
            "hold_window" => self.hold_window = parse(key, v)?,
            "thresholds" => self.thresholds = parse_list(key, v)?,
            "eval_episodes" => self.eval_episodes = parse(key, v)?,
            "expert_detour" => self.expert_detour = parse(key, v)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, v)?,
            "out_dir" => self.out_dir = v.to_string(),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Every field as `(key, value)` in a fixed order; feeding these back
    /// through [`RunConfig::set`] reproduces the config.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let a = &self.agent;
        vec![
            ("algo", a.algo.to_string()),
            ("gamma", a.gamma.to_string()),
            ("alpha", a.alpha.to_string()),
            ("tau", a.tau.to_string()),
            ("lr_actor", a.lr_actor.to_string()),
            ("lr_critic", a.lr_critic.to_string()),
            ("batch_size", a.batch_size.to_string()),
            ("replay_ratio", a.replay_ratio.to_string()),
            ("b", a.b.to_string()),
            ("relabel_n", a.relabel_n.to_string()),
            ("r", a.r.to_string()),
            ("lambda_bc", a.lambda_bc.to_string()),
            ("lambda_n", a.lambda_n.to_string()),
            ("n_step", a.n_step.to_string()),
            ("l2_actor", a.l2_actor.to_string()),
            ("l2_critic", a.l2_critic.to_string()),
            ("per_alpha", a.per_alpha.to_string()),
            ("per_beta0", a.per_beta0.to_string()),
            ("per_epsilon", a.per_epsilon.to_string()),
            ("demo_boost", a.demo_boost.to_string()),
            ("bc_reset_fraction", a.bc_reset_fraction.to_string()),
            ("bc_batch_size", a.bc_batch_size.to_string()),
            ("sigma_explore", a.sigma_explore.to_string()),
            ("hidden", join(&a.hidden)),
            ("buffer_capacity", a.buffer_capacity.to_string()),
            ("use_r2", a.use_r2.to_string()),
            ("use_nstep", a.use_nstep.to_string()),
            ("use_bc", a.use_bc.to_string()),
            ("use_demo_boost", a.use_demo_boost.to_string()),
            ("use_demo_resets", a.use_demo_resets.to_string()),
            ("env", self.env.clone()),
            ("demo_count", self.demo_count.to_string()),
            ("demo_top_up", self.demo_top_up.to_string()),
            ("demo_ratio_target", self.demo_ratio_target.to_string()),
            ("total_env_steps", self.total_env_steps.to_string()),
            ("seeds", join(&self.seeds)),
            ("pretrain_iters", self.pretrain_iters.to_string()),
            ("random_warmup", self.random_warmup.to_string()),
            ("rolling_window", self.rolling_window.to_string()),
            ("hold_window", self.hold_window.to_string()),
            ("thresholds", join(&self.thresholds)),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("expert_detour", self.expert_detour.to_string()),
            ("record_wall_time", self.record_wall_time.to_string()),
            ("out_dir", self.out_dir.clone()),
        ]
    }

    /// Parses `key = value` lines over the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_lines(text)?;
        Ok(cfg)
    }

    pub fn apply_lines(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key = value, got {assignment:?}")))?;
        self.set(k, v)
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        crate::envs::EnvSpec::by_name(&self.env)?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.total_env_steps == 0 {
            return Err(Error::Config("total_env_steps must be positive".into()));
        }
        if self.rolling_window == 0 || self.hold_window == 0 {
            return Err(Error::Config("rolling_window and hold_window must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.demo_ratio_target) {
            return Err(Error::Config("demo_ratio_target must lie in [0, 1)".into()));
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config("thresholds must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// The learner variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Base algorithm with demonstrations in the buffer and no bonus.
    Demo,
    /// Bonus on demonstrations and relabeled successes.
    R2,
    /// n-step loss and demonstration priority boost.
    FD,
    /// Behaviour cloning loss and resets to demonstration states.
    BC,
    /// R2 plus the n-step and behaviour cloning losses.
    R2Star,
    /// Demonstration bonus without relabeling.
    NoRelabel,
    /// R2 with 100 demonstrations and no top-up.
    LowData,
    /// R2 without any demonstrations.
    NoDemo,
}

pub const ALL_VARIANTS: [Variant; 8] = [
    Variant::Demo,
    Variant::R2,
    Variant::FD,
    Variant::BC,
    Variant::R2Star,
    Variant::NoRelabel,
    Variant::LowData,
    Variant::NoDemo,
];

impl Variant {
    pub fn key(self) -> &'static str {
        match self {
            Variant::Demo => "demo",
            Variant::R2 => "r2",
            Variant::FD => "fd",
            Variant::BC => "bc",
            Variant::R2Star => "r2star",
            Variant::NoRelabel => "no-relabel",
            Variant::LowData => "low-data",
            Variant::NoDemo => "no-demo",
        }
    }

    /// Display name such as `SACR2` or `DDPG+Demo`.
    pub fn label(self, algo: Algo) -> String {
        let base = algo.to_string().to_uppercase();
        match self {
            Variant::Demo => format!("{base}+Demo"),
            Variant::R2 => format!("{base}R2"),
            Variant::FD => format!("{base}fD"),
            Variant::BC => format!("{base}BC"),
            Variant::R2Star => format!("{base}R2*"),
            Variant::NoRelabel => format!("{base}R2 (no relabel)"),
            Variant::LowData => format!("{base}R2 (100 demos)"),
            Variant::NoDemo => format!("{base}R2 (no demos)"),
        }
    }

    /// Rewrites the variant flags of `base`, keeping every other setting.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        let a = &mut c.agent;
        let bonus = if a.b > 0.0 { a.b } else { AgentConfig::default_bonus(a.algo) };
        a.use_r2 = false;
        a.use_nstep = false;
        a.use_bc = false;
        a.use_demo_boost = false;
        a.use_demo_resets = false;
        a.b = 0.0;
        match self {
            Variant::Demo => {}
            Variant::R2 => {
                a.use_r2 = true;
                a.b = bonus;
            }
            Variant::FD => {
                a.use_nstep = true;
                a.use_demo_boost = true;
            }
            Variant::BC => {
                a.use_bc = true;
                a.use_demo_resets = true;
            }
            Variant::R2Star => {
                a.use_r2 = true;
                a.use_nstep = true;
                a.use_bc = true;
                a.b = bonus;
            }
            Variant::NoRelabel => a.b = bonus,
            Variant::LowData => {
                a.use_r2 = true;
                a.b = bonus;
                c.demo_count = 100;
                c.demo_top_up = false;
            }
            Variant::NoDemo => {
                a.use_r2 = true;
                a.b = bonus;
                c.demo_count = 0;
            }
        }
        c
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_VARIANTS
            .into_iter()
            .find(|v| v.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trips() {
        let mut c = RunConfig::default();
        c.set("hidden", "32, 16").unwrap();
        c.set("algo", "ddpg").unwrap();
        c.set("thresholds", "0.25,0.75").unwrap();
        let back = RunConfig::parse_str(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse_str("# header\n b = 5 # inline\n\nuse_r2 = false\n").unwrap();
        assert_eq!((c.agent.b, c.agent.use_r2), (5.0, false));
        let err = RunConfig::parse_str("b = 1\nwat = 3\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("wat"), "{err}");
        assert!(RunConfig::parse_str("gamma = high").is_err());
    }

    #[test]
    fn r2_star_turns_on_its_three_components() {
        let c = Variant::R2Star.apply(&RunConfig::default());
        assert!(c.agent.use_r2 && c.agent.use_nstep && c.agent.use_bc);
        assert!(!c.agent.use_demo_resets);
        assert_eq!(c.agent.b, 7.0);
    }

    #[test]
    fn baseline_has_no_bonus_and_ddpg_uses_its_own_default() {
        let mut base = RunConfig::default();
        assert_eq!(Variant::Demo.apply(&base).agent.b, 0.0);
        base.agent.algo = Algo::Ddpg;
        base.agent.b = 0.0;
        assert_eq!(Variant::R2.apply(&base).agent.b, 3.0);
        assert_eq!(Variant::R2.label(Algo::Ddpg), "DDPGR2");
    }

    #[test]
    fn ablation_presets() {
        let base = RunConfig::default();
        let low = Variant::LowData.apply(&base);
        assert_eq!((low.demo_count, low.demo_top_up), (100, false));
        let none = Variant::NoDemo.apply(&base);
        assert_eq!(none.demo_count, 0);
        let nr = Variant::NoRelabel.apply(&base);
        assert!(!nr.agent.use_r2 && nr.agent.b == 7.0);
        for v in ALL_VARIANTS {
            assert_eq!(v.key().parse::<Variant>().unwrap(), v);
        }
    }
}
