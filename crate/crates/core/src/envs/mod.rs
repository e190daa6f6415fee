//! Sparse-reward point-mass tasks on the unit square, with scripted experts.
//!
//! Three tasks share one kinematic model: the agent moves by `STEP_SIZE *
//! action` per step with each action component in `[-1, 1]`.
//!
//! * `reach2d`: get within the success radius of the target.
//! * `button2d`: stay within the radius for [`BUTTON_HOLD`] consecutive steps.
//! * `switch2d`: touch a switch guarded by a wall that blocks the straight path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::transitions::{DemoSet, Episode, Origin, Transition};

/// World units moved per unit of action.
pub const STEP_SIZE: f64 = 0.05;
pub const START: [f64; 2] = [0.5, 0.1];
pub const BUTTON_HOLD: u32 = 2;
pub const SPARSE_REWARD: f64 = 100.0;
/// Half width of the switch wall.
pub const WALL_HALF: f64 = 0.15;
/// Vertical gap between the wall and the switch.
pub const WALL_GAP: f64 = 0.1;
/// Clearance the expert keeps from a wall end.
pub const WALL_CLEARANCE: f64 = 0.07;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Reach,
    Button,
    Switch,
}

pub const ENV_NAMES: [&str; 3] = ["reach2d", "button2d", "switch2d"];

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: String,
    pub task: Task,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub time_limit: usize,
    pub success_radius: f64,
    pub sparse_reward: f64,
    /// Target spawn box `[x_min, y_min, x_max, y_max]`.
    pub spawn: [f64; 4],
}

impl EnvSpec {
    pub fn by_name(name: &str) -> Result<Self> {
        let (task, obs_dim, time_limit, spawn) = match name {
            "reach2d" => (Task::Reach, 4, 100, [0.2, 0.65, 0.8, 0.85]),
            "button2d" => (Task::Button, 5, 150, [0.2, 0.65, 0.8, 0.85]),
            "switch2d" => (Task::Switch, 8, 150, [0.3, 0.7, 0.7, 0.85]),
            other => {
                return Err(Error::Config(format!(
                    "unknown environment {other:?}; expected one of {ENV_NAMES:?}"
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            task,
            obs_dim,
            act_dim: 2,
            action_low: vec![-1.0; 2],
            action_high: vec![1.0; 2],
            time_limit,
            success_radius: 0.05,
            sparse_reward: SPARSE_REWARD,
            spawn,
        })
    }
}

/// Horizontal wall segment at height `y` spanning `[x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub x0: f64,
    pub x1: f64,
    pub y: f64,
}

impl Wall {
    /// Whether moving from `a` to `b` passes through the segment.
    pub fn blocks(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let (da, db) = (a[1] - self.y, b[1] - self.y);
        if da * db > 0.0 || (da == 0.0 && db == 0.0) {
            return false;
        }
        let t = da / (da - db);
        let x = a[0] + t * (b[0] - a[0]);
        (self.x0..=self.x1).contains(&x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extra {
    None,
    /// Consecutive steps spent on the button.
    Press(u32),
    Wall(Wall),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub agent_pos: [f64; 2],
    pub target_pos: [f64; 2],
    pub step_count: usize,
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    state: EnvState,
    finished: bool,
    /// Extra clearance (world units) the switch expert adds around the wall end.
    detour: f64,
}

fn in_arena(p: [f64; 2]) -> bool {
    p.iter().all(|c| (0.0..=1.0).contains(c))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Proportional controller: the action that lands on `goal`, clipped per axis.
fn toward(from: [f64; 2], goal: [f64; 2]) -> Vec<f64> {
    (0..2).map(|k| ((goal[k] - from[k]) / STEP_SIZE).clamp(-1.0, 1.0)).collect()
}

impl Env {
    pub fn new(name: &str) -> Result<Self> {
        let spec = EnvSpec::by_name(name)?;
        let extra = match spec.task {
            Task::Reach => Extra::None,
            Task::Button => Extra::Press(0),
            Task::Switch => Extra::Wall(Wall { x0: 0.35, x1: 0.65, y: 0.6 }),
        };
        let state = EnvState { agent_pos: START, target_pos: [0.5, 0.7], step_count: 0, extra };
        Ok(Self { spec, state, finished: false, detour: 0.0 })
    }

    pub fn with_detour(mut self, detour: f64) -> Self {
        self.detour = detour.max(0.0);
        self
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [x0, y0, x1, y1] = self.spec.spawn;
        let target = [rng.random_range(x0..=x1), rng.random_range(y0..=y1)];
        let extra = match self.spec.task {
            Task::Reach => Extra::None,
            Task::Button => Extra::Press(0),
            Task::Switch => {
                let center = target[0] + rng.random_range(-0.1..=0.1);
                Extra::Wall(Wall { x0: center - WALL_HALF, x1: center + WALL_HALF, y: target[1] - WALL_GAP })
            }
        };
        self.state = EnvState { agent_pos: START, target_pos: target, step_count: 0, extra };
        self.finished = false;
        self.observe()
    }

    pub fn observe(&self) -> Vec<f64> {
        let s = &self.state;
        let mut obs = vec![s.agent_pos[0], s.agent_pos[1], s.target_pos[0], s.target_pos[1]];
        match s.extra {
            Extra::None => {}
            Extra::Press(k) => obs.push(k as f64),
            Extra::Wall(w) => obs.extend([w.x0, w.y, w.x1, w.y]),
        }
        obs
    }

    /// Rebuilds a full state from an observation of this task.
    pub fn state_from_observation(&self, obs: &[f64], step_count: usize) -> Result<EnvState> {
        if obs.len() != self.spec.obs_dim {
            return Err(crate::error::dim_mismatch("observation", self.spec.obs_dim, obs.len()));
        }
        let extra = match self.spec.task {
            Task::Reach => Extra::None,
            Task::Button => Extra::Press(obs[4].round().max(0.0) as u32),
            Task::Switch => Extra::Wall(Wall { x0: obs[4], x1: obs[6], y: obs[5] }),
        };
        Ok(EnvState { agent_pos: [obs[0], obs[1]], target_pos: [obs[2], obs[3]], step_count, extra })
    }

    pub fn set_state(&mut self, state: EnvState) -> Result<Vec<f64>> {
        let wall_ok = match state.extra {
            Extra::Wall(w) => in_arena([w.x0, w.y]) && in_arena([w.x1, w.y]) && w.x0 <= w.x1,
            Extra::Press(k) => k < BUTTON_HOLD,
            Extra::None => true,
        };
        let kind_ok = matches!(
            (self.spec.task, state.extra),
            (Task::Reach, Extra::None) | (Task::Button, Extra::Press(_)) | (Task::Switch, Extra::Wall(_))
        );
        if !in_arena(state.agent_pos) || !in_arena(state.target_pos) || !wall_ok || !kind_ok {
            return Err(Error::Input(format!("state outside the arena or not a {} state: {state:?}", self.spec.name)));
        }
        if state.step_count >= self.spec.time_limit {
            return Err(Error::Input(format!(
                "step_count {} leaves no steps before the limit {}",
                state.step_count, self.spec.time_limit
            )));
        }
        self.state = state;
        self.finished = false;
        Ok(self.observe())
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.finished {
            return Err(Error::Usage("step called on a finished episode; call reset first".into()));
        }
        if action.len() != self.spec.act_dim {
            return Err(crate::error::dim_mismatch("action", self.spec.act_dim, action.len()));
        }
        let s = &mut self.state;
        let mut next = s.agent_pos;
        for k in 0..2 {
            let a = action[k].clamp(self.spec.action_low[k], self.spec.action_high[k]);
            next[k] = (next[k] + STEP_SIZE * a).clamp(0.0, 1.0);
        }
        if let Extra::Wall(w) = s.extra {
            if w.blocks(s.agent_pos, next) {
                next = s.agent_pos;
            }
        }
        s.agent_pos = next;
        s.step_count += 1;
        let near = dist(s.agent_pos, s.target_pos) <= self.spec.success_radius;
        let success = match &mut s.extra {
            Extra::None => near,
            Extra::Press(k) => {
                *k = if near { *k + 1 } else { 0 };
                *k >= BUTTON_HOLD
            }
            Extra::Wall(w) => near && s.agent_pos[1] > w.y,
        };
        if let Extra::Press(k) = &mut s.extra {
            if success {
                *k = 0;
            }
        }
        let timed_out = !success && s.step_count >= self.spec.time_limit;
        self.finished = success || timed_out;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if success { self.spec.sparse_reward } else { 0.0 },
            done: success,
            success,
            timed_out,
        })
    }

    /// Analytic controller that solves every instance: straight to the target,
    /// or around the nearer wall end for the switch task.
    pub fn scripted_expert(&self, state: &EnvState) -> Vec<f64> {
        let p = state.agent_pos;
        let Extra::Wall(w) = state.extra else {
            return toward(p, state.target_pos);
        };
        let m = WALL_CLEARANCE + self.detour;
        if p[1] > w.y + 0.5 * m || !w.blocks(p, state.target_pos) && p[1] > w.y {
            return toward(p, state.target_pos);
        }
        let cost = |x: f64| (p[0] - x).abs() + (state.target_pos[0] - x).abs();
        let left = (w.x0 - m).max(0.0);
        let right = (w.x1 + m).min(1.0);
        let column = if cost(left) <= cost(right) { left } else { right };
        if (p[0] - column).abs() < 1e-9 {
            toward(p, [column, (w.y + m).min(1.0)])
        } else {
            toward(p, [column, (w.y - m).max(0.0)])
        }
    }

    /// Runs the scripted expert from the current state to the end of the episode.
    pub fn expert_rollout<T: Real>(&mut self, episode_id: u64) -> Result<Episode<T>> {
        let mut obs = self.observe();
        let mut steps = Vec::new();
        let first = self.state.step_count;
        loop {
            let action = self.scripted_expert(&self.state);
            let out = self.step(&action)?;
            steps.push(Transition {
                state: obs.iter().map(|&x| T::of(x)).collect(),
                action: action.iter().map(|&x| T::of(x)).collect(),
                reward: T::of(out.reward),
                next_state: out.observation.iter().map(|&x| T::of(x)).collect(),
                done: out.done,
                origin: Origin::Demo,
                episode_id,
                step_index: self.state.step_count - 1 - first,
            });
            obs = out.observation;
            if out.done || out.timed_out {
                return Episode::new(steps, out.timed_out);
            }
        }
    }
}

/// Per-episode reset seeds derived from one demo-set seed.
pub fn episode_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

/// Scripted-expert demonstrations from seeded resets. Any failed rollout is an error.
pub fn generate_demos<T: Real>(env: &mut Env, count: usize, seed: u64) -> Result<DemoSet<T>> {
    if count == 0 {
        return Err(Error::Config("demo count must be at least 1".into()));
    }
    let mut episodes = Vec::with_capacity(count);
    for (i, s) in episode_seeds(seed, count).into_iter().enumerate() {
        env.reset(s);
        let ep = env.expert_rollout(i as u64)?;
        if !ep.success() {
            return Err(Error::Rejected(format!(
                "scripted expert failed on {} episode {i} (reset seed {s})",
                env.spec().name
            )));
        }
        episodes.push(ep);
    }
    DemoSet::new(episodes, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_deterministic_and_starts_at_the_fixed_point() {
        for name in ENV_NAMES {
            let mut env = Env::new(name).unwrap();
            let a = env.reset(11);
            let b = env.reset(11);
            assert_eq!(a, b);
            assert_eq!(env.state().agent_pos, START);
            assert_eq!(a.len(), env.spec().obs_dim);
        }
    }

    #[test]
    fn kinematics_follow_the_actions() {
        let mut env = Env::new("reach2d").unwrap();
        env.reset(3);
        let mut expect = START;
        for a in [[1.0, 0.0], [-0.5, 0.4], [0.2, 0.2]] {
            env.step(&a).unwrap();
            expect[0] += STEP_SIZE * a[0];
            expect[1] += STEP_SIZE * a[1];
        }
        let p = env.state().agent_pos;
        assert!((p[0] - expect[0]).abs() < 1e-15 && (p[1] - expect[1]).abs() < 1e-15);
        assert_eq!(env.state().step_count, 3);
    }

    #[test]
    fn stepping_inside_the_radius_succeeds() {
        let mut env = Env::new("reach2d").unwrap();
        env.reset(0);
        let mut s = env.state().clone();
        s.agent_pos = [s.target_pos[0] - 0.02, s.target_pos[1]];
        env.set_state(s).unwrap();
        let out = env.step(&[0.2, 0.0]).unwrap();
        assert_eq!((out.reward, out.done, out.success, out.timed_out), (100.0, true, true, false));
        assert!(matches!(env.step(&[0.0, 0.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn idle_agent_times_out_with_zero_reward() {
        for name in ENV_NAMES {
            let mut env = Env::new(name).unwrap();
            env.reset(5);
            let limit = env.spec().time_limit;
            for k in 0..limit {
                let out = env.step(&[0.0, 0.0]).unwrap();
                assert_eq!(out.reward, 0.0);
                assert!(!out.done);
                assert_eq!(out.timed_out, k + 1 == limit);
            }
        }
    }

    #[test]
    fn button_needs_to_be_held() {
        let mut env = Env::new("button2d").unwrap();
        env.reset(1);
        let mut s = env.state().clone();
        s.agent_pos = s.target_pos;
        env.set_state(s).unwrap();
        let first = env.step(&[0.0, 0.0]).unwrap();
        assert!(!first.done && first.observation[4] == 1.0);
        assert!(env.step(&[0.0, 0.0]).unwrap().success);
    }

    #[test]
    fn wall_blocks_the_direct_path() {
        let mut env = Env::new("switch2d").unwrap();
        env.reset(2);
        let Extra::Wall(w) = env.state().extra else { panic!() };
        let mut s = env.state().clone();
        s.agent_pos = [0.5 * (w.x0 + w.x1), w.y - 0.01];
        env.set_state(s).unwrap();
        env.step(&[0.0, 1.0]).unwrap();
        assert_eq!(env.state().agent_pos[1], w.y - 0.01);
    }

    #[test]
    fn set_state_round_trips_and_rejects_outside_points() {
        let mut env = Env::new("switch2d").unwrap();
        let obs = env.reset(8);
        let s = env.state().clone();
        assert_eq!(env.set_state(s.clone()).unwrap(), obs);
        assert_eq!(env.state_from_observation(&obs, 0).unwrap(), s);
        let bad = EnvState { agent_pos: [1.2, 0.5], ..s };
        assert!(matches!(env.set_state(bad), Err(Error::Input(_))));
    }

    #[test]
    fn expert_solves_every_reset() {
        for name in ENV_NAMES {
            let mut env = Env::new(name).unwrap();
            for seed in 0..1000 {
                env.reset(seed);
                let ep = env.expert_rollout::<f64>(seed).unwrap();
                assert!(ep.success(), "{name} seed {seed}");
                for t in ep.transitions() {
                    assert!(t.action.iter().all(|a| a.abs() <= 1.0));
                }
            }
        }
    }

    #[test]
    fn expert_with_detour_still_solves_the_switch() {
        let mut env = Env::new("switch2d").unwrap().with_detour(0.05);
        let mut plain = Env::new("switch2d").unwrap();
        let (mut long, mut short) = (0, 0);
        for seed in 0..200 {
            env.reset(seed);
            plain.reset(seed);
            long += env.expert_rollout::<f64>(seed).unwrap().len();
            short += plain.expert_rollout::<f64>(seed).unwrap().len();
        }
        assert!(long > short);
    }

    #[test]
    fn expert_resumes_from_mid_demo_states() {
        let mut env = Env::new("switch2d").unwrap();
        let demos = generate_demos::<f64>(&mut env, 20, 4).unwrap();
        for ep in demos.episodes() {
            let mid = &ep.transitions()[ep.len() / 2];
            let s = env.state_from_observation(&mid.state, 0).unwrap();
            env.set_state(s).unwrap();
            assert!(env.expert_rollout::<f64>(0).unwrap().success());
        }
    }

    #[test]
    fn expert_at_target_barely_moves() {
        let env = Env::new("reach2d").unwrap();
        let s = EnvState { agent_pos: [0.4, 0.6], target_pos: [0.4, 0.6], step_count: 0, extra: Extra::None };
        assert_eq!(env.scripted_expert(&s), vec![0.0, 0.0]);
    }

    #[test]
    fn demos_are_deterministic() {
        let mut env = Env::new("button2d").unwrap();
        let a = generate_demos::<f64>(&mut env, 30, 9).unwrap();
        let b = generate_demos::<f64>(&mut env, 30, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
    }
}
