//! The training loop: demonstrations and warmup, pretraining, then
//! interleaved updates and transition insertion.

use std::collections::VecDeque;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::metrics::{MetricsHeader, MetricsRecord, MetricsWriter};
use crate::agents::{ActMode, Learner, TargetBatch, UpdateInputs};
use crate::envs::{episode_seeds, generate_demos, Env};
use crate::error::{Error, Result};
use crate::net::ActionBounds;
use crate::replay::{
    demo_ratio_top_up, episode_items, DemoIngest, DemoSource, PerConfig, ReplayBuffer, StoredItem,
};
use crate::scalar::Real;
use crate::transitions::{relabel_successful_episode, DemoSet, Episode, Origin, Transition};

/// Agent episode ids start here so they never collide with demonstration ids.
pub const AGENT_EPISODE_BASE: u64 = 1 << 40;
/// Expert episodes used to estimate the relabeling window when no demos are loaded.
const WINDOW_ESTIMATE_EPISODES: usize = 200;

fn to_t<T: Real>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::of(x)).collect()
}

/// Fresh scripted-expert episodes for the demo top-up.
pub struct ExpertSource {
    env: Env,
    rng: ChaCha8Rng,
    next_id: u64,
}

impl ExpertSource {
    pub fn new(env: Env, seed: u64, first_id: u64) -> Self {
        Self { env, rng: ChaCha8Rng::seed_from_u64(seed), next_id: first_id }
    }
}

impl<T: Real> DemoSource<T> for ExpertSource {
    fn next_demo(&mut self) -> Option<Episode<T>> {
        self.env.reset(self.rng.random());
        let id = self.next_id;
        self.next_id += 1;
        self.env.expert_rollout(id).ok().filter(Episode::success)
    }
}

/// Demo share seen at an episode boundary, before any top-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCheck {
    pub ratio: f64,
    /// One episode's worth of transitions relative to the buffer size.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Counters {
    pub env_steps: usize,
    pub warmup_steps: usize,
    pub pretrain_updates: usize,
    pub train_steps: usize,
    pub replayed_samples: usize,
    pub episodes: usize,
    pub demos_added: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub counters: Counters,
    pub relabel_n: usize,
    pub boundary_checks: Vec<BoundaryCheck>,
    pub records: Vec<MetricsRecord>,
    /// Success rate of deterministic evaluation episodes, when requested.
    pub eval_success: Option<f64>,
}

/// One run's learner, buffer and environment.
pub struct Trainer<T: Real> {
    pub cfg: RunConfig,
    pub learner: Learner<T>,
    pub buffer: ReplayBuffer<T>,
    pub env: Env,
    pub counters: Counters,
    pub relabel_n: usize,
    pub boundary_checks: Vec<BoundaryCheck>,
    rng: ChaCha8Rng,
    source: ExpertSource,
    ingest: DemoIngest<T>,
    bc_store: Vec<Transition<T>>,
    reset_states: Vec<Vec<f64>>,
    pending: VecDeque<StoredItem<T>>,
    planned_updates: usize,
    next_episode_id: u64,
}

impl<T: Real> Trainer<T> {
    /// Builds the learner, loads demonstrations and runs the random warmup.
    pub fn new(cfg: &RunConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let a = &cfg.agent;
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let demo_seed: u64 = master.random();
        let top_up_seed: u64 = master.random();
        let learner_seed: u64 = master.random();

        let mut env = Env::new(&cfg.env)?.with_detour(cfg.expert_detour);
        let spec = env.spec().clone();
        let bounds = ActionBounds::new(to_t(&spec.action_low), to_t(&spec.action_high));
        let learner = Learner::new(a, spec.obs_dim, bounds, learner_seed)?;

        let demos: Option<DemoSet<T>> =
            if cfg.demo_count > 0 { Some(generate_demos(&mut env, cfg.demo_count, demo_seed)?) } else { None };
        let relabel_n = match (a.relabel_n, &demos) {
            (0, Some(d)) => d.avg_length(),
            (0, None) => generate_demos::<T>(&mut env, WINDOW_ESTIMATE_EPISODES, demo_seed)?.avg_length(),
            (n, _) => n,
        };

        let per = PerConfig {
            alpha: T::of(a.per_alpha),
            beta: T::of(a.per_beta0),
            epsilon: T::of(a.per_epsilon),
            demo_boost: if a.use_demo_boost { T::of(a.demo_boost) } else { T::zero() },
        };
        let mut buffer = ReplayBuffer::new(a.buffer_capacity, per)?;
        let n_step = a.use_nstep.then(|| (a.n_step, T::of(a.gamma)));
        let ingest = DemoIngest { sparse_reward: T::of(a.r), bonus: T::of(a.b), n_step };
        let mut bc_store = Vec::new();
        let mut reset_states = Vec::new();
        if let Some(d) = &demos {
            for ep in d.episodes() {
                for item in ingest.items(ep)? {
                    if a.use_bc {
                        bc_store.push(item.transition.clone());
                    }
                    if a.use_demo_resets {
                        reset_states.push(item.transition.state.iter().map(|x| x.as_f64()).collect());
                    }
                    buffer.push(item);
                }
            }
        }

        let planned_updates = cfg.pretrain_iters + cfg.total_env_steps.div_ceil(a.env_steps_per_train_step());
        let source = ExpertSource::new(Env::new(&cfg.env)?.with_detour(cfg.expert_detour), top_up_seed, cfg.demo_count as u64);
        let mut trainer = Self {
            cfg: cfg.clone(),
            learner,
            buffer,
            env,
            counters: Counters::default(),
            relabel_n,
            boundary_checks: Vec::new(),
            rng: master,
            source,
            ingest,
            bc_store,
            reset_states,
            pending: VecDeque::new(),
            planned_updates,
            next_episode_id: AGENT_EPISODE_BASE,
        };
        trainer.random_warmup()?;
        Ok(trainer)
    }

    fn top_up_enabled(&self) -> bool {
        self.cfg.demo_count > 0 && self.cfg.demo_top_up
    }

    fn top_up(&mut self) -> Result<()> {
        if self.top_up_enabled() {
            let r = demo_ratio_top_up(&mut self.buffer, &mut self.source, self.cfg.demo_ratio_target, &self.ingest)?;
            self.counters.demos_added += r.added;
        }
        Ok(())
    }

    /// Relabels a success when enabled and pairs each transition with its slice.
    fn episode_to_items(&self, episode: &Episode<T>) -> Vec<StoredItem<T>> {
        let a = &self.cfg.agent;
        let n_step = a.use_nstep.then(|| (a.n_step, T::of(a.gamma)));
        if a.use_r2 && episode.success() {
            episode_items(&relabel_successful_episode(episode, T::of(a.b), self.relabel_n), n_step)
        } else {
            episode_items(episode, n_step)
        }
    }

    fn random_warmup(&mut self) -> Result<()> {
        let limit = self.cfg.random_warmup;
        let spec = self.env.spec().clone();
        while self.counters.warmup_steps < limit {
            let id = self.next_id();
            let mut obs = self.env.reset(self.rng.random());
            let mut steps = Vec::new();
            let mut timed_out = true;
            while self.counters.warmup_steps < limit {
                let action: Vec<f64> = (0..spec.act_dim)
                    .map(|k| self.rng.random_range(spec.action_low[k]..=spec.action_high[k]))
                    .collect();
                let out = self.env.step(&action)?;
                self.counters.warmup_steps += 1;
                steps.push(Transition {
                    state: to_t(&obs),
                    action: to_t(&action),
                    reward: T::of(out.reward),
                    next_state: to_t(&out.observation),
                    done: out.done,
                    origin: Origin::Agent,
                    episode_id: id,
                    step_index: steps.len(),
                });
                obs = out.observation;
                if out.done || out.timed_out {
                    timed_out = out.timed_out;
                    break;
                }
            }
            let episode = Episode::new(steps, timed_out)?;
            for item in self.episode_to_items(&episode) {
                self.buffer.push(item);
            }
        }
        self.top_up()
    }

    fn next_id(&mut self) -> u64 {
        let id = self.next_episode_id;
        self.next_episode_id += 1;
        id
    }

    fn beta(&self) -> T {
        let b0 = self.cfg.agent.per_beta0;
        let done = (self.counters.pretrain_updates + self.counters.train_steps) as f64;
        let frac = if self.planned_updates == 0 { 1.0 } else { (done / self.planned_updates as f64).min(1.0) };
        T::of(b0 + (1.0 - b0) * frac)
    }

    /// One full update: prioritized sample, learner step, priority refresh.
    fn update(&mut self) -> Result<()> {
        let a = &self.cfg.agent;
        let batch = self.buffer.sample_prioritized(a.batch_size, self.beta(), &mut self.rng)?;
        let items: Vec<&StoredItem<T>> = batch.indices.iter().map(|&i| self.buffer.get(i)).collect();
        let one_step = TargetBatch::from_transitions(items.iter().map(|i| &i.transition), T::of(a.gamma));
        let n_step = if a.use_nstep {
            let slices: Option<Vec<_>> = items.iter().map(|i| i.n_step.as_ref()).collect();
            let slices = slices.ok_or_else(|| Error::NotReady("stored item without an n-step slice".into()))?;
            Some(TargetBatch::from_slices(slices))
        } else {
            None
        };
        let demos: Vec<&Transition<T>> = if a.use_bc && !self.bc_store.is_empty() {
            (0..a.bc_batch_size).map(|_| &self.bc_store[self.rng.random_range(0..self.bc_store.len())]).collect()
        } else {
            Vec::new()
        };
        let inputs = UpdateInputs {
            one_step: &one_step,
            n_step: n_step.as_ref(),
            weights: &batch.weights,
            demos: (!demos.is_empty()).then_some(demos.as_slice()),
        };
        let stats = self.learner.update(a, &inputs, &mut self.rng)?;
        self.buffer.update_priorities(&batch.indices, &stats.td_errors)?;
        self.counters.replayed_samples += a.batch_size;
        Ok(())
    }

    pub fn pretrain(&mut self, iters: usize) -> Result<()> {
        for _ in 0..iters {
            self.update()?;
            self.counters.pretrain_updates += 1;
        }
        Ok(())
    }

    /// Rolls out one exploration episode with the current policy.
    pub fn collect_episode(&mut self) -> Result<Episode<T>> {
        let id = self.next_id();
        let mut obs = self.env.reset(self.rng.random());
        if !self.reset_states.is_empty() && self.rng.random::<f64>() < self.cfg.agent.bc_reset_fraction {
            let k = self.rng.random_range(0..self.reset_states.len());
            let state = self.env.state_from_observation(&self.reset_states[k], 0)?;
            obs = self.env.set_state(state)?;
        }
        let mut steps = Vec::new();
        loop {
            let s: Vec<T> = to_t(&obs);
            let action = self.learner.act(&s, ActMode::Explore, &mut self.rng)?;
            let out = self.env.step(&action.iter().map(|x| x.as_f64()).collect::<Vec<_>>())?;
            steps.push(Transition {
                state: s,
                action,
                reward: T::of(out.reward),
                next_state: to_t(&out.observation),
                done: out.done,
                origin: Origin::Agent,
                episode_id: id,
                step_index: steps.len(),
            });
            obs = out.observation;
            if out.done || out.timed_out {
                return Episode::new(steps, out.timed_out);
            }
        }
    }

    /// Online phase: each training step performs one update and moves
    /// `env_steps_per_train_step` transitions from the pending episode into
    /// the buffer, collecting a new episode whenever the pending one is used up.
    pub fn run<W: Write>(&mut self, metrics: &mut MetricsWriter<W>) -> Result<Vec<MetricsRecord>> {
        let start = Instant::now();
        let per_step = self.cfg.agent.env_steps_per_train_step();
        let total = self.cfg.total_env_steps;
        let mut successes: Vec<u8> = Vec::new();
        let mut window_sum = 0usize;
        let window = self.cfg.rolling_window;
        let mut records = Vec::new();
        while !(self.counters.env_steps >= total && self.pending.is_empty()) {
            self.update()?;
            self.counters.train_steps += 1;
            for _ in 0..per_step {
                if self.pending.is_empty() {
                    if self.counters.env_steps >= total {
                        break;
                    }
                    let len = self.buffer.len().max(1) as f64;
                    if self.top_up_enabled() {
                        let last = records.last().map_or(0, |r: &MetricsRecord| r.episode_length);
                        self.boundary_checks.push(BoundaryCheck { ratio: self.buffer.demo_ratio(), slack: last as f64 / len });
                    }
                    self.top_up()?;
                    let episode = self.collect_episode()?;
                    self.counters.env_steps += episode.len();
                    let success = episode.success() as u8;
                    successes.push(success);
                    window_sum += success as usize;
                    let i = successes.len() - 1;
                    if i >= window {
                        window_sum -= successes[i - window] as usize;
                    }
                    let record = MetricsRecord {
                        env_step: self.counters.env_steps,
                        train_step: self.counters.train_steps,
                        episode_index: self.counters.episodes,
                        episode_return: episode.total_reward().as_f64(),
                        episode_success: success,
                        episode_length: episode.len(),
                        rolling_success: window_sum as f64 / (i + 1).min(window) as f64,
                        wall_time: if self.cfg.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 },
                    };
                    metrics.write(&record)?;
                    records.push(record);
                    self.counters.episodes += 1;
                    self.pending.extend(self.episode_to_items(&episode));
                }
                if let Some(item) = self.pending.pop_front() {
                    self.buffer.push(item);
                }
            }
        }
        Ok(records)
    }

    /// Success rate of `episodes` deterministic rollouts on fresh resets.
    pub fn evaluate(&mut self, episodes: usize, seed: u64) -> Result<f64> {
        evaluate(&self.learner, &mut self.env, episodes, seed)
    }
}

/// Deterministic-policy success rate on `episodes` seeded resets.
pub fn evaluate<T: Real>(learner: &Learner<T>, env: &mut Env, episodes: usize, seed: u64) -> Result<f64> {
    if episodes == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0;
    for s in episode_seeds(seed, episodes) {
        let mut obs = env.reset(s);
        loop {
            let a = learner.act(&to_t::<T>(&obs), ActMode::Exploit, &mut rng)?;
            let out = env.step(&a.iter().map(|x| x.as_f64()).collect::<Vec<_>>())?;
            obs = out.observation;
            if out.success {
                wins += 1;
            }
            if out.done || out.timed_out {
                break;
            }
        }
    }
    Ok(wins as f64 / episodes as f64)
}

/// Runs warmup, pretraining and the online phase, streaming metrics to `out`.
pub fn run_training<T: Real, W: Write>(cfg: &RunConfig, variant: &str, seed: u64, out: W) -> Result<(RunSummary, Trainer<T>)> {
    let mut trainer = Trainer::<T>::new(cfg, seed)?;
    let mut writer = MetricsWriter::new(out, &MetricsHeader::new(variant, seed, cfg))?;
    trainer.pretrain(cfg.pretrain_iters)?;
    let records = trainer.run(&mut writer)?;
    writer.finish()?;
    let eval_success = if cfg.eval_episodes > 0 {
        Some(trainer.evaluate(cfg.eval_episodes, seed ^ 0x5eed)?)
    } else {
        None
    };
    let summary = RunSummary {
        counters: trainer.counters.clone(),
        relabel_n: trainer.relabel_n,
        boundary_checks: trainer.boundary_checks.clone(),
        records,
        eval_success,
    };
    Ok((summary, trainer))
}
