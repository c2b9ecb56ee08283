use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::agent::{DdpgParams, NetQuartet};
use super::noise::ExplorationNoise;
use super::replay::{ReplayMemory, Transition};
use crate::error::{Error, Result};
use crate::rl::{EpisodeMetrics, Environment};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetUpdate {
    /// Blend every learning step with the configured rates.
    Soft,
    /// Copy train into target every `period` learning steps.
    Hard { period: u64 },
}

/// Loop cadence shared by every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub episodes: usize,
    /// Transitions stored before the first learning step.
    pub warmup: usize,
    pub batch_size: usize,
    /// Environment steps between learning steps.
    pub update_every: usize,
    pub replay_capacity: usize,
    pub target_update: TargetUpdate,
    /// Reset seed of the environment.
    pub env_seed: u64,
    /// Draw a fresh reset seed every episode instead of reusing `env_seed`.
    pub vary_layout: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            episodes: 120_000,
            warmup: 1000,
            batch_size: 64,
            update_every: 1,
            replay_capacity: 1_000_000,
            target_update: TargetUpdate::Soft,
            env_seed: 0,
            vary_layout: false,
        }
    }
}

impl Schedule {
    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("update_every", self.update_every),
            ("replay_capacity", self.replay_capacity),
        ] {
            if v == 0 {
                problems.push(format!("{prefix}.{name} must be positive"));
            }
        }
        if self.batch_size > self.replay_capacity {
            problems.push(format!("{prefix}.batch_size exceeds replay_capacity"));
        }
        if let TargetUpdate::Hard { period: 0 } = self.target_update {
            problems.push(format!("{prefix}.target_update.period must be positive"));
        }
    }

    /// Reset seed used for `episode`.
    pub fn episode_seed(&self, episode: usize) -> u64 {
        if self.vary_layout {
            splitmix64(self.env_seed ^ splitmix64(episode as u64))
        } else {
            self.env_seed
        }
    }
}

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub steps: usize,
    pub metrics: Option<EpisodeMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub agent_kind: String,
    pub history: Vec<EpisodeRecord>,
    /// Set when training stopped on a non-finite loss or parameter.
    pub diverged: Option<String>,
}

/// Everything needed to continue a DDPG run bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgTrainer {
    pub quartet: NetQuartet,
    pub memory: ReplayMemory<Transition>,
    pub noise: ExplorationNoise,
    pub rng: ChaCha8Rng,
    /// Episodes completed.
    pub episode: usize,
    pub steps: u64,
    pub updates: u64,
}

impl DdpgTrainer {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        params: DdpgParams,
        noise: ExplorationNoise,
        replay_capacity: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let quartet = NetQuartet::new(state_dim, action_dim, params, &mut rng);
        Self {
            quartet,
            memory: ReplayMemory::new(replay_capacity),
            noise,
            rng,
            episode: 0,
            steps: 0,
            updates: 0,
        }
    }

    /// Deterministic action of the current actor.
    pub fn greedy(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.quartet.actor.forward(state)
    }

    fn learn(&mut self, schedule: &Schedule) -> Result<()> {
        let Some(batch) = self.memory.sample(schedule.batch_size, &mut self.rng) else {
            return Ok(());
        };
        self.quartet.update_critic(&batch)?;
        self.quartet.update_actor(&batch)?;
        self.updates += 1;
        match schedule.target_update {
            TargetUpdate::Soft => self.quartet.soft_update(),
            TargetUpdate::Hard { period } => {
                if self.updates % period == 0 {
                    self.quartet.hard_update();
                }
            }
        }
        if !self.quartet.is_finite() {
            return Err(super::agent::diverged("non-finite parameters after update"));
        }
        Ok(())
    }

    /// Copy of the trainer with an empty replay memory of the same capacity.
    pub fn without_memory(&self) -> Self {
        Self {
            quartet: self.quartet.clone(),
            memory: ReplayMemory::new(self.memory.capacity()),
            noise: self.noise,
            rng: self.rng.clone(),
            episode: self.episode,
            steps: self.steps,
            updates: self.updates,
        }
    }
}

/// Runs one exploring episode, storing transitions and learning as scheduled.
fn ddpg_episode<E: Environment + ?Sized>(
    env: &mut E,
    tr: &mut DdpgTrainer,
    schedule: &Schedule,
) -> Result<EpisodeRecord> {
    let episode = tr.episode;
    let mut state = env.reset(schedule.episode_seed(episode))?;
    let mut total = 0.0;
    let mut steps = 0;
    let learn_from = schedule.warmup.max(schedule.batch_size);
    loop {
        let mut action = tr.quartet.act(&state, &tr.noise, &mut tr.rng)?;
        let step = env.step(&mut action)?;
        total += step.reward;
        steps += 1;
        tr.memory.push(Transition {
            state,
            action,
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

/// Trains from `trainer.episode` up to `schedule.episodes`. `on_episode`
/// runs after every episode and may persist checkpoints. A divergence
/// stops the loop and is reported, not returned as an error.
pub fn train<E, F>(env: &mut E, trainer: &mut DdpgTrainer, schedule: &Schedule, mut on_episode: F) -> Result<TrainReport>
where
    E: Environment + ?Sized,
    F: FnMut(&DdpgTrainer, &EpisodeRecord) -> Result<()>,
{
    check_dims(env, trainer.quartet.state_dim(), trainer.quartet.action_dim())?;
    let mut report = TrainReport { agent_kind: "ddpg".into(), history: Vec::new(), diverged: None };
    while trainer.episode < schedule.episodes {
        let rec = match ddpg_episode(env, trainer, schedule) {
            Ok(r) => r,
            Err(Error::Divergence { detail, .. }) => {
                report.diverged = Some(format!("episode {}: {detail}", trainer.episode));
                break;
            }
            Err(e) => return Err(e),
        };
        trainer.episode += 1;
        trainer.noise.end_episode();
        on_episode(trainer, &rec)?;
        report.history.push(rec);
    }
    Ok(report)
}

pub(crate) fn check_dims<E: Environment + ?Sized>(env: &E, state_dim: usize, action_dim: usize) -> Result<()> {
    if env.state_dim() != state_dim {
        return Err(Error::Shape { expected: env.state_dim(), got: state_dim });
    }
    if env.action_dim() != action_dim {
        return Err(Error::Shape { expected: env.action_dim(), got: action_dim });
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckpointOut<'a, T> {
    version: u32,
    agent_kind: &'a str,
    body: &'a T,
}

#[derive(Deserialize)]
struct CheckpointIn<T> {
    version: u32,
    agent_kind: String,
    body: T,
}

/// Writes a versioned JSON checkpoint, via a temporary file so a crash
/// never leaves a truncated one behind.
pub fn save_checkpoint<T: Serialize>(path: &Path, agent_kind: &str, body: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
    serde_json::to_writer(file, &CheckpointOut { version: CHECKPOINT_VERSION, agent_kind, body })?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: DeserializeOwned>(path: &Path, agent_kind: &str) -> Result<T> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let ck: CheckpointIn<T> = serde_json::from_reader(file)?;
    if ck.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
    }
    if ck.agent_kind != agent_kind {
        return Err(Error::Checkpoint(format!("holds a {} agent, expected {agent_kind}", ck.agent_kind)));
    }
    Ok(ck.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::TargetSeeking;

    fn small_trainer(seed: u64) -> DdpgTrainer {
        let params = DdpgParams { hidden: vec![16, 8], ..DdpgParams::default() };
        DdpgTrainer::new(1, 1, params, ExplorationNoise::default(), 10_000, seed)
    }

    fn short_schedule(episodes: usize) -> Schedule {
        Schedule { episodes, warmup: 64, vary_layout: true, ..Schedule::default() }
    }

    #[test]
    fn zero_episodes_is_a_no_op() {
        let mut env = TargetSeeking::default();
        let mut tr = small_trainer(1);
        let before = tr.clone();
        let rep = train(&mut env, &mut tr, &short_schedule(0), |_, _| Ok(())).unwrap();
        assert!(rep.history.is_empty());
        assert_eq!(tr, before);
    }

    #[test]
    fn same_seed_same_history() {
        let run = || {
            let mut env = TargetSeeking::default();
            let mut tr = small_trainer(2);
            train(&mut env, &mut tr, &short_schedule(8), |_, _| Ok(())).unwrap().history
        };
        let (a, b) = (run(), run());
        let bits = |h: &[EpisodeRecord]| h.iter().map(|r| r.total_reward.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn resume_from_checkpoint_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let schedule = short_schedule(10);

        let mut env = TargetSeeking::default();
        let mut full = small_trainer(3);
        let straight = train(&mut env, &mut full, &schedule, |_, _| Ok(())).unwrap();

        let mut env = TargetSeeking::default();
        let mut first = small_trainer(3);
        train(&mut env, &mut first, &Schedule { episodes: 6, ..schedule.clone() }, |_, _| Ok(())).unwrap();
        save_checkpoint(&path, "ddpg", &first).unwrap();
        let mut resumed: DdpgTrainer = load_checkpoint(&path, "ddpg").unwrap();
        assert_eq!(resumed, first);
        let rest = train(&mut env, &mut resumed, &schedule, |_, _| Ok(())).unwrap();

        assert_eq!(rest.history[..], straight.history[6..]);
        assert_eq!(resumed, full);
        assert!(load_checkpoint::<DdpgTrainer>(&path, "dql").is_err());
    }

    #[test]
    fn checkpoint_without_memory_keeps_networks() {
        let mut env = TargetSeeking::default();
        let mut tr = small_trainer(4);
        train(&mut env, &mut tr, &short_schedule(3), |_, _| Ok(())).unwrap();
        let lean = tr.without_memory();
        assert!(lean.memory.is_empty());
        assert_eq!(lean.quartet, tr.quartet);
        assert_eq!(lean.memory.capacity(), tr.memory.capacity());
    }

    #[test]
    fn hard_target_updates_follow_period() {
        let mut env = TargetSeeking::default();
        let mut tr = small_trainer(5);
        let schedule = Schedule { target_update: TargetUpdate::Hard { period: 1 }, ..short_schedule(4) };
        train(&mut env, &mut tr, &schedule, |_, _| Ok(())).unwrap();
        assert!(tr.updates > 0);
        assert_eq!(tr.quartet.actor, tr.quartet.actor_target);
        assert_eq!(tr.quartet.critic, tr.quartet.critic_target);
    }

    #[test]
    fn unit_rate_soft_update_tracks_train_networks() {
        let mut env = TargetSeeking::default();
        let mut tr = small_trainer(6);
        tr.quartet.params.actor_tau = 1.0;
        tr.quartet.params.critic_tau = 1.0;
        train(&mut env, &mut tr, &short_schedule(4), |_, _| Ok(())).unwrap();
        assert_eq!(tr.quartet.actor, tr.quartet.actor_target);
        assert_eq!(tr.quartet.critic, tr.quartet.critic_target);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut env = TargetSeeking::default();
        let mut tr = DdpgTrainer::new(3, 1, DdpgParams::default(), ExplorationNoise::default(), 100, 0);
        assert!(matches!(
            train(&mut env, &mut tr, &short_schedule(1), |_, _| Ok(())),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn episode_seeds() {
        let s = Schedule { env_seed: 9, ..Schedule::default() };
        assert_eq!(s.episode_seed(0), 9);
        assert_eq!(s.episode_seed(7), 9);
        let v = Schedule { vary_layout: true, ..s };
        assert_ne!(v.episode_seed(0), v.episode_seed(1));
    }
}
