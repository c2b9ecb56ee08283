use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ablation::oracle_phases;
use crate::ddpg::agent::diverged;
use crate::ddpg::replay::ReplayMemory;
use crate::ddpg::train::{check_dims, EpisodeRecord, Schedule, TargetUpdate, TrainReport};
use crate::env::{encode_control, AmecEnv, ControlTuple};
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp, OptimizerKind, Trace};
use crate::rl::Environment;
use crate::toy::TargetSeeking;

/// An environment whose continuous action space has a finite menu.
pub trait DiscreteActions: Environment {
    fn num_actions(&self) -> usize;

    /// Continuous action realizing menu entry `index` in the current state.
    fn action_for(&self, index: usize) -> Result<Vec<f64>>;
}

/// Phase configuration of a table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseCodebook {
    /// Aligned for the selected UE at the post-move position.
    Aligned,
    Zero,
}

/// One entry of [`DiscreteActionTable`]. `heading == None` means stay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub speed: f64,
    pub heading: Option<f64>,
    pub alpha: f64,
    pub selected_ue: usize,
    pub phases: PhaseCodebook,
}

/// Speeds {0, v/2, v} x 8 compass headings plus stay x alpha {0, 1/2, 1}
/// x UE x {aligned, zero} phases.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteActionTable {
    entries: Vec<TableEntry>,
}

impl DiscreteActionTable {
    pub fn new(num_ues: usize, max_speed: f64) -> Self {
        let mut entries = Vec::with_capacity(3 * 9 * 3 * num_ues * 2);
        for speed in [0.0, max_speed / 2.0, max_speed] {
            for h in 0..9 {
                let heading = (h < 8).then(|| h as f64 * PI / 4.0);
                for alpha in [0.0, 0.5, 1.0] {
                    for selected_ue in 0..num_ues {
                        for phases in [PhaseCodebook::Aligned, PhaseCodebook::Zero] {
                            entries.push(TableEntry { speed, heading, alpha, selected_ue, phases });
                        }
                    }
                }
            }
        }
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, index: usize) -> Option<&TableEntry> {
        self.entries.get(index)
    }

    /// Raw environment action for `index` in the current state of `env`.
    pub fn action(&self, env: &AmecEnv, index: usize) -> Result<Vec<f64>> {
        let e = self
            .entries
            .get(index)
            .ok_or(Error::Shape { expected: self.entries.len(), got: index })?;
        let cfg = env.config();
        let o = cfg.ris.num_elements;
        let ctl = ControlTuple {
            speed: if e.heading.is_some() { e.speed } else { 0.0 },
            heading: e.heading.unwrap_or(0.0),
            phases: vec![0.0; o],
            alpha: e.alpha,
            selected_ue: e.selected_ue,
        };
        let mut raw = encode_control(&ctl, cfg);
        if e.phases == PhaseCodebook::Aligned {
            let phases = oracle_phases(env, &raw)?;
            super::ablation::write_phases(&mut raw, &phases);
        }
        Ok(raw)
    }
}

/// [`AmecEnv`] driven through a [`DiscreteActionTable`].
#[derive(Debug, Clone)]
pub struct TableEnv {
    pub env: AmecEnv,
    pub table: DiscreteActionTable,
}

impl TableEnv {
    pub fn new(env: AmecEnv) -> Self {
        let table = DiscreteActionTable::new(env.config().num_ues, env.config().power.max_speed);
        Self { env, table }
    }
}

impl Environment for TableEnv {
    fn state_dim(&self) -> usize {
        self.env.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.env.action_dim()
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.env.reset(seed)
    }

    fn step(&mut self, action: &mut [f64]) -> Result<crate::rl::Step> {
        Environment::step(&mut self.env, action)
    }

    fn episode_metrics(&self) -> Option<crate::rl::EpisodeMetrics> {
        self.env.episode_metrics()
    }

    fn episode_log(&self) -> Option<&crate::env::EpisodeLog> {
        self.env.episode_log()
    }
}

impl DiscreteActions for TableEnv {
    fn num_actions(&self) -> usize {
        self.table.len()
    }

    fn action_for(&self, index: usize) -> Result<Vec<f64>> {
        self.table.action(&self.env, index)
    }
}

/// Five velocities evenly spread over `[-1, 1]`.
impl DiscreteActions for TargetSeeking {
    fn num_actions(&self) -> usize {
        5
    }

    fn action_for(&self, index: usize) -> Result<Vec<f64>> {
        if index >= 5 {
            return Err(Error::Shape { expected: 5, got: index });
        }
        Ok(vec![index as f64 / 2.0 - 1.0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqlParams {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub tau: f64,
    pub discount: f64,
    pub optimizer: OptimizerKind,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the episodes over which epsilon decays linearly.
    pub epsilon_fraction: f64,
}

impl Default for DqlParams {
    fn default() -> Self {
        Self {
            hidden: vec![80, 40],
            lr: 1e-3,
            tau: 1e-3,
            discount: 0.99,
            optimizer: OptimizerKind::Adam,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_fraction: 0.3,
        }
    }
}

impl DqlParams {
    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        if self.hidden.iter().any(|&h| h == 0) {
            problems.push(format!("{prefix}.hidden sizes must be positive"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            problems.push(format!("{prefix}.lr must be >= 0"));
        }
        for (name, v) in [
            ("tau", self.tau),
            ("discount", self.discount),
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
            ("epsilon_fraction", self.epsilon_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("{prefix}.{name} must lie in [0, 1] (got {v})"));
            }
        }
    }

    /// Exploration rate during `episode` of `total`.
    pub fn epsilon(&self, episode: usize, total: usize) -> f64 {
        let span = self.epsilon_fraction * total as f64;
        if span <= 0.0 || episode as f64 >= span {
            return self.epsilon_end;
        }
        let t = episode as f64 / span;
        self.epsilon_start + t * (self.epsilon_end - self.epsilon_start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTransition {
    pub state: Vec<f64>,
    pub index: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Q-network learner with replay and a softly tracking target network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqlTrainer {
    pub q: Mlp,
    pub q_target: Mlp,
    pub opt: Adam,
    pub params: DqlParams,
    pub memory: ReplayMemory<DiscreteTransition>,
    pub rng: ChaCha8Rng,
    pub episode: usize,
    pub steps: u64,
    pub updates: u64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl DqlTrainer {
    pub fn new(state_dim: usize, num_actions: usize, params: DqlParams, replay_capacity: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(&params.hidden);
        sizes.push(num_actions);
        let q = Mlp::new(&sizes, Activation::Relu, Activation::Identity, &mut rng);
        Self::from_network(q, params, replay_capacity, rng)
    }

    pub fn from_network(q: Mlp, params: DqlParams, replay_capacity: usize, rng: ChaCha8Rng) -> Self {
        let opt = Adam::new(params.optimizer, params.lr, q.num_params());
        Self {
            q_target: q.clone(),
            q,
            opt,
            params,
            memory: ReplayMemory::new(replay_capacity),
            rng,
            episode: 0,
            steps: 0,
            updates: 0,
        }
    }

    pub fn greedy(&self, state: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q.forward(state)?))
    }

    /// Epsilon-greedy index; the coin is always flipped so the random
    /// stream does not depend on epsilon.
    pub fn select(&mut self, state: &[f64], epsilon: f64) -> Result<usize> {
        let n = self.q.output_dim();
        if self.rng.random::<f64>() < epsilon {
            return Ok(self.rng.random_range(0..n));
        }
        self.greedy(state)
    }

    /// Mean squared TD error on `batch` against the target network's
    /// greedy value, and its gradient w.r.t. the online network.
    pub fn loss(&self, batch: &[&DiscreteTransition]) -> Result<(f64, Vec<f64>)> {
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.q.num_params()];
        let mut trace = Trace::default();
        let mut d_out = vec![0.0; self.q.output_dim()];
        let mut loss = 0.0;
        for t in batch {
            let target = if t.done {
                t.reward
            } else {
                let next = self.q_target.forward(&t.next_state)?;
                t.reward + self.params.discount * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            self.q.forward_trace(&t.state, &mut trace)?;
            let err = trace.output()[t.index] - target;
            loss += err * err / n;
            d_out.iter_mut().for_each(|d| *d = 0.0);
            d_out[t.index] = 2.0 * err / n;
            self.q.backward(&trace, &d_out, Some(&mut grads), None);
        }
        Ok((loss, grads))
    }

    fn learn(&mut self, schedule: &Schedule) -> Result<()> {
        let Some(batch) = self.memory.sample(schedule.batch_size, &mut self.rng) else {
            return Ok(());
        };
        let (loss, grads) = self.loss(&batch)?;
        if !loss.is_finite() {
            return Err(diverged(format!("q loss {loss}")));
        }
        self.opt
            .step(self.q.params_mut(), &grads)
            .map_err(|e| diverged(format!("q network: {e}")))?;
        self.updates += 1;
        match schedule.target_update {
            TargetUpdate::Soft => self.q_target.blend_from(&self.q, self.params.tau),
            TargetUpdate::Hard { period } => {
                if self.updates % period == 0 {
                    self.q_target.copy_from(&self.q);
                }
            }
        }
        Ok(())
    }

    pub fn without_memory(&self) -> Self {
        Self {
            q: self.q.clone(),
            q_target: self.q_target.clone(),
            opt: self.opt.clone(),
            params: self.params.clone(),
            memory: ReplayMemory::new(self.memory.capacity()),
            rng: self.rng.clone(),
            episode: self.episode,
            steps: self.steps,
            updates: self.updates,
        }
    }
}

fn dql_episode<E: DiscreteActions + ?Sized>(env: &mut E, tr: &mut DqlTrainer, schedule: &Schedule) -> Result<EpisodeRecord> {
    let episode = tr.episode;
    let epsilon = tr.params.epsilon(episode, schedule.episodes);
    let mut state = env.reset(schedule.episode_seed(episode))?;
    let mut total = 0.0;
    let mut steps = 0;
    let learn_from = schedule.warmup.max(schedule.batch_size);
    loop {
        let index = tr.select(&state, epsilon)?;
        let mut action = env.action_for(index)?;
        let step = env.step(&mut action)?;
        total += step.reward;
        steps += 1;
        tr.memory.push(DiscreteTransition {
            state,
            index,
            reward: step.reward,
            next_state: step.state.clone(),
            done: step.done,
        });
        tr.steps += 1;
        if tr.memory.len() >= learn_from && tr.steps % schedule.update_every as u64 == 0 {
            tr.learn(schedule)?;
        }
        state = step.state;
        if step.done {
            break;
        }
    }
    Ok(EpisodeRecord {
        episode,
        total_reward: total,
        mean_reward: total / steps as f64,
        steps,
        metrics: env.episode_metrics(),
    })
}

/// Epsilon-greedy deep Q-learning with the same loop cadence and report
/// format as [`crate::ddpg::train`].
pub fn dql_train<E, F>(env: &mut E, trainer: &mut DqlTrainer, schedule: &Schedule, mut on_episode: F) -> Result<TrainReport>
where
    E: DiscreteActions + ?Sized,
    F: FnMut(&DqlTrainer, &EpisodeRecord) -> Result<()>,
{
    check_dims(env, trainer.q.input_dim(), env.action_dim())?;
    if env.num_actions() != trainer.q.output_dim() {
        return Err(Error::Shape { expected: env.num_actions(), got: trainer.q.output_dim() });
    }
    let mut report = TrainReport { agent_kind: "dql".into(), history: Vec::new(), diverged: None };
    while trainer.episode < schedule.episodes {
        let rec = match dql_episode(env, trainer, schedule) {
            Ok(r) => r,
            Err(Error::Divergence { detail, .. }) => {
                report.diverged = Some(format!("episode {}: {detail}", trainer.episode));
                break;
            }
            Err(e) => return Err(e),
        };
        trainer.episode += 1;
        on_episode(trainer, &rec)?;
        report.history.push(rec);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{decode_action, ScenarioConfig};

    #[test]
    fn table_size_and_entries_decode() {
        let cfg = ScenarioConfig::desk();
        let mut env = TableEnv::new(AmecEnv::new(cfg.clone()).unwrap());
        assert_eq!(env.num_actions(), 3 * 9 * 3 * 2 * 2);
        env.reset(1).unwrap();
        for i in 0..env.num_actions() {
            let raw = env.action_for(i).unwrap();
            assert_eq!(raw.len(), cfg.action_dim());
            assert!(raw.iter().all(|a| (-1.0..=1.0).contains(a)));
            let ctl = decode_action(&raw, &cfg).unwrap();
            let e = env.table.entry(i).unwrap();
            assert_eq!(ctl.selected_ue, e.selected_ue);
            assert!((ctl.alpha - e.alpha).abs() < 1e-12);
            let expect_speed = if e.heading.is_some() { e.speed } else { 0.0 };
            assert!((ctl.speed - expect_speed).abs() < 1e-9);
            if e.phases == PhaseCodebook::Zero {
                assert!(ctl.phases.iter().all(|&p| p == 0.0));
            }
        }
        assert!(env.action_for(env.num_actions()).is_err());
    }

    #[test]
    fn epsilon_schedule() {
        let p = DqlParams::default();
        assert_eq!(p.epsilon(0, 100), 1.0);
        assert!((p.epsilon(15, 100) - 0.525).abs() < 1e-12);
        assert_eq!(p.epsilon(30, 100), 0.05);
        assert_eq!(p.epsilon(99, 100), 0.05);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut tr = DqlTrainer::new(1, 5, DqlParams::default(), 10, 3);
        let n = 50_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[tr.select(&[0.2], 1.0).unwrap()] += 1;
        }
        let sd = (n as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.2).abs() < 5.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn greedy_picks_the_favoured_index() {
        let mut q = Mlp::zeros(&[1, 4, 6], Activation::Relu, Activation::Identity);
        let n = q.num_params();
        // output bias of index 4 is the last-but-one parameter
        q.params_mut()[n - 6 + 4] = 1.0;
        let mut tr = DqlTrainer::from_network(q, DqlParams::default(), 10, ChaCha8Rng::seed_from_u64(0));
        for s in [-1.0, 0.0, 3.0] {
            assert_eq!(tr.select(&[s], 0.0).unwrap(), 4);
        }
    }

    #[test]
    fn loss_examples() {
        let q = Mlp::zeros(&[1, 2], Activation::Relu, Activation::Identity);
        let tr = DqlTrainer::from_network(q, DqlParams::default(), 10, ChaCha8Rng::seed_from_u64(0));
        let t = DiscreteTransition { state: vec![0.0], index: 1, reward: 1.0, next_state: vec![0.0], done: true };
        let (loss, _) = tr.loss(&[&t]).unwrap();
        assert_eq!(loss, 1.0);
    }

    #[test]
    fn same_seed_same_history() {
        let run = || {
            let mut env = TargetSeeking::default();
            let mut tr = DqlTrainer::new(1, 5, DqlParams { hidden: vec![16], ..DqlParams::default() }, 1000, 7);
            let s = Schedule { episodes: 6, warmup: 64, vary_layout: true, ..Schedule::default() };
            dql_train(&mut env, &mut tr, &s, |_, _| Ok(())).unwrap().history
        };
        assert_eq!(run(), run());
    }
}
