use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::spec::{AgentKind, ExperimentSpec};
use crate::baselines::{
    dql_train, ActionOverride, DiscreteActions, DqlTrainer, NoRis, NoTrajectory, OraclePhase, TableEnv, Wrapped,
};
use crate::ddpg::train::splitmix64;
use crate::ddpg::{load_checkpoint, save_checkpoint, train, DdpgTrainer, EpisodeRecord, Schedule};
use crate::env::{write_slot_csv, AmecEnv, ConstraintReport, EpisodeLog};
use crate::error::{Error, Result};
use crate::rl::Environment;

pub const EPISODES_CSV_HEADER: [&str; 16] = [
    "config_hash",
    "seed",
    "agent_kind",
    "episode",
    "total_reward",
    "mean_reward",
    "steps",
    "see",
    "final_energy_fraction",
    "viol_phase",
    "viol_velocity",
    "viol_latency",
    "viol_offload_fraction",
    "viol_budget",
    "viol_selection",
    "energy_closure_error",
];

pub const EVALS_CSV_HEADER: [&str; 8] = [
    "config_hash",
    "seed",
    "agent_kind",
    "after_episode",
    "eval_episodes",
    "total_reward",
    "see",
    "final_energy_fraction",
];

pub const AGGREGATE_CSV_HEADER: [&str; 13] = [
    "config_hash",
    "agent_kind",
    "block",
    "first_episode",
    "last_episode",
    "seeds",
    "reward_mean",
    "reward_sd",
    "see_mean",
    "see_sd",
    "energy_fraction_mean",
    "energy_fraction_sd",
    "violations_by_construction",
];

/// Means over a set of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episodes: usize,
    pub total_reward: f64,
    pub see: f64,
    pub final_energy_fraction: f64,
}

impl EpisodeStats {
    fn of(records: &[EpisodeRecord]) -> Self {
        let n = records.len();
        if n == 0 {
            return Self::default();
        }
        let mean = |f: &dyn Fn(&EpisodeRecord) -> f64| records.iter().map(f).sum::<f64>() / n as f64;
        Self {
            episodes: n,
            total_reward: mean(&|r| r.total_reward),
            see: mean(&|r| r.metrics.map_or(0.0, |m| m.see)),
            final_energy_fraction: mean(&|r| r.metrics.map_or(0.0, |m| m.final_energy_fraction)),
        }
    }
}

/// `summary.json` of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub config_hash: String,
    pub scenario_hash: String,
    /// Config hash of the DDPG policy inside an ablation wrapper.
    pub wrapped_config_hash: Option<String>,
    pub seed: u64,
    pub agent_kind: AgentKind,
    pub episodes_run: usize,
    pub diverged: Option<String>,
    pub final_block: EpisodeStats,
    pub final_eval: EpisodeStats,
    /// Violation counts over training and evaluation episodes.
    pub violations: ConstraintReport,
    pub max_energy_closure_error: f64,
    pub wall_time_s: f64,
}

impl SeedSummary {
    pub fn failed(&self) -> bool {
        self.diverged.is_some()
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summaries: Vec<SeedSummary>,
    /// Seeds that ended in an error other than divergence.
    pub errors: Vec<(u64, String)>,
}

impl RunOutcome {
    pub fn all_failed(&self) -> bool {
        self.summaries.iter().all(SeedSummary::failed)
    }
}

pub fn seed_dir(output_dir: &Path, seed: u64) -> PathBuf {
    output_dir.join(format!("seed_{seed}"))
}

fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var("RIS_AMEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

/// Trains and evaluates every seed of `spec` into `spec.output_dir`, then
/// writes `config.json` and `aggregate.csv` next to the per-seed folders.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let out = PathBuf::from(&spec.output_dir);
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.json"), spec.to_json_pretty())?;

    let queue = Mutex::new(spec.seeds.iter().copied().collect::<Vec<_>>());
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..worker_count(spec.seeds.len()) {
            s.spawn(|| loop {
                let Some(seed) = queue.lock().unwrap().pop() else { break };
                let r = run_seed(spec, seed, &seed_dir(&out, seed));
                results.lock().unwrap().push((seed, r));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(seed, _)| spec.seeds.iter().position(|s| s == seed));
    let mut outcome = RunOutcome { output_dir: out.clone(), summaries: Vec::new(), errors: Vec::new() };
    let mut histories = Vec::new();
    for (seed, r) in results {
        match r {
            Ok((summary, history)) => {
                outcome.summaries.push(summary);
                histories.push(history);
            }
            Err(e) => outcome.errors.push((seed, e.to_string())),
        }
    }
    write_aggregate(&out.join("aggregate.csv"), spec, &histories)?;
    Ok(outcome)
}

/// Borrowed view of either learner, for evaluation and checkpoints.
#[derive(Clone, Copy)]
enum LearnerRef<'a> {
    Ddpg(&'a DdpgTrainer),
    Dql(&'a DqlTrainer),
}

enum Learner {
    Ddpg(Box<DdpgTrainer>),
    Dql(Box<DqlTrainer>),
}

impl Learner {
    fn view(&self) -> LearnerRef<'_> {
        match self {
            Learner::Ddpg(t) => LearnerRef::Ddpg(t),
            Learner::Dql(t) => LearnerRef::Dql(t),
        }
    }
}

/// Builds the environment for `$spec.agent` and evaluates `$body` with it
/// bound to `$env`.
macro_rules! with_env {
    ($spec:expr, $env:ident => $body:expr) => {{
        let spec: &ExperimentSpec = $spec;
        let cfg = spec.scenario.clone();
        match spec.agent {
            AgentKind::Ddpg => {
                let $env = AmecEnv::new(cfg)?;
                $body
            }
            AgentKind::Dql => {
                let $env = TableEnv::new(AmecEnv::new(cfg)?);
                $body
            }
            AgentKind::AblationNoRis => {
                let over = if spec.ablation.random_phases { NoRis::random() } else { NoRis::zeros() };
                let $env = Wrapped::new(cfg, over)?;
                $body
            }
            AgentKind::AblationNoTraj => {
                let $env = Wrapped::new(cfg, NoTrajectory { hover_xy: spec.ablation.hover_xy })?;
                $body
            }
            AgentKind::OraclePhase => {
                let $env = Wrapped::new(cfg, OraclePhase)?;
                $body
            }
        }
    }};
}

/// Trains one seed into `dir`; returns its summary and training history.
pub fn run_seed(spec: &ExperimentSpec, seed: u64, dir: &Path) -> Result<(SeedSummary, Vec<EpisodeRecord>)> {
    fs::create_dir_all(dir)?;
    with_env!(spec, env => drive(spec, seed, dir, env))
}

/// Environments the harness can drive with either learner.
pub trait HarnessEnv: Environment + Clone + Send {
    fn discrete(&mut self) -> Option<&mut dyn DiscreteActions> {
        None
    }
}

impl HarnessEnv for AmecEnv {}

impl<O: ActionOverride + Clone + Send> HarnessEnv for Wrapped<O> {}

impl HarnessEnv for TableEnv {
    fn discrete(&mut self) -> Option<&mut dyn DiscreteActions> {
        Some(self)
    }
}

fn not_discrete() -> Error {
    Error::InvalidConfig(vec!["the dql agent needs the discrete action table".into()])
}

struct SeedContext<'a> {
    spec: &'a ExperimentSpec,
    seed: u64,
    dir: &'a Path,
    config_hash: String,
    schedule: Schedule,
}

impl<'a> SeedContext<'a> {
    fn new(spec: &'a ExperimentSpec, seed: u64, dir: &'a Path) -> Self {
        let mut schedule = spec.training.schedule.clone();
        schedule.env_seed = spec.training.layout_seed.unwrap_or(seed);
        Self { spec, seed, dir, config_hash: spec.config_hash(), schedule }
    }

    fn eval_seeds(&self) -> Vec<u64> {
        let s = &self.schedule;
        if s.vary_layout {
            (0..self.spec.training.eval_episodes as u64)
                .map(|i| splitmix64(s.env_seed ^ 0x4556_414c ^ splitmix64(i)))
                .collect()
        } else {
            vec![s.env_seed; self.spec.training.eval_episodes]
        }
    }

    fn checkpoint(&self, learner: LearnerRef) -> Result<()> {
        let path = self.dir.join("checkpoint.json");
        let keep = self.spec.training.checkpoint_memory;
        match learner {
            LearnerRef::Ddpg(t) if keep => save_checkpoint(&path, "ddpg", t),
            LearnerRef::Ddpg(t) => save_checkpoint(&path, "ddpg", &t.without_memory()),
            LearnerRef::Dql(t) if keep => save_checkpoint(&path, "dql", t),
            LearnerRef::Dql(t) => save_checkpoint(&path, "dql", &t.without_memory()),
        }
    }

    fn extra_cols(&self) -> [(&'static str, String); 3] {
        [
            ("config_hash", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("agent_kind", self.spec.agent.as_str().to_string()),
        ]
    }
}

/// Noise-free rollouts; returns per-episode records and slot logs.
fn evaluate<E: HarnessEnv>(env: &mut E, learner: LearnerRef, seeds: &[u64]) -> Result<(Vec<EpisodeRecord>, Vec<EpisodeLog>)> {
    let mut records = Vec::new();
    let mut logs = Vec::new();
    for (i, &s) in seeds.iter().enumerate() {
        let mut state = env.reset(s)?;
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let mut action = match learner {
                LearnerRef::Ddpg(t) => t.greedy(&state)?,
                LearnerRef::Dql(t) => {
                    let idx = t.greedy(&state)?;
                    env.discrete().ok_or_else(not_discrete)?.action_for(idx)?
                }
            };
            let step = env.step(&mut action)?;
            total += step.reward;
            steps += 1;
            state = step.state;
            if step.done {
                break;
            }
        }
        records.push(EpisodeRecord {
            episode: i,
            total_reward: total,
            mean_reward: total / steps as f64,
            steps,
            metrics: env.episode_metrics(),
        });
        if let Some(log) = env.episode_log() {
            let mut log = log.clone();
            log.episode = i;
            logs.push(log);
        }
    }
    Ok((records, logs))
}

/// Per-episode bookkeeping during training.
struct Recorder<'a, E> {
    ctx: &'a SeedContext<'a>,
    episodes: csv::Writer<BufWriter<File>>,
    evals: csv::Writer<BufWriter<File>>,
    eval_env: E,
    eval_seeds: Vec<u64>,
    violations: ConstraintReport,
    max_closure: f64,
}

impl<'a, E: HarnessEnv> Recorder<'a, E> {
    fn new(ctx: &'a SeedContext<'a>, eval_env: E) -> Result<Self> {
        let mut episodes = csv::Writer::from_writer(BufWriter::new(File::create(ctx.dir.join("episodes.csv"))?));
        episodes.write_record(EPISODES_CSV_HEADER)?;
        let mut evals = csv::Writer::from_writer(BufWriter::new(File::create(ctx.dir.join("evals.csv"))?));
        evals.write_record(EVALS_CSV_HEADER)?;
        Ok(Self {
            eval_seeds: ctx.eval_seeds(),
            ctx,
            episodes,
            evals,
            eval_env,
            violations: ConstraintReport::default(),
            max_closure: 0.0,
        })
    }

    fn note(&mut self, r: &EpisodeRecord) {
        if let Some(m) = r.metrics {
            self.violations.add(&m.violations);
            self.max_closure = self.max_closure.max(m.energy_closure_error);
        }
    }

    fn episode(&mut self, r: &EpisodeRecord, learner: LearnerRef) -> Result<()> {
        self.note(r);
        self.episodes.write_record(episode_row(self.ctx, r))?;
        let done = r.episode + 1;
        let t = &self.ctx.spec.training;
        if t.eval_every > 0 && done % t.eval_every == 0 {
            let (recs, _) = evaluate(&mut self.eval_env, learner, &self.eval_seeds)?;
            let st = EpisodeStats::of(&recs);
            self.evals.write_record([
                self.ctx.config_hash.clone(),
                self.ctx.seed.to_string(),
                self.ctx.spec.agent.as_str().to_string(),
                done.to_string(),
                st.episodes.to_string(),
                st.total_reward.to_string(),
                st.see.to_string(),
                st.final_energy_fraction.to_string(),
            ])?;
        }
        if t.checkpoint_every > 0 && done % t.checkpoint_every == 0 {
            self.ctx.checkpoint(learner)?;
        }
        Ok(())
    }
}

fn episode_row(ctx: &SeedContext, r: &EpisodeRecord) -> Vec<String> {
    let m = r.metrics.unwrap_or(crate::rl::EpisodeMetrics {
        see: 0.0,
        final_energy_fraction: 0.0,
        violations: ConstraintReport::default(),
        energy_closure_error: 0.0,
    });
    let v = m.violations;
    vec![
        ctx.config_hash.clone(),
        ctx.seed.to_string(),
        ctx.spec.agent.as_str().to_string(),
        r.episode.to_string(),
        r.total_reward.to_string(),
        r.mean_reward.to_string(),
        r.steps.to_string(),
        m.see.to_string(),
        m.final_energy_fraction.to_string(),
        v.phase.to_string(),
        v.velocity.to_string(),
        v.latency.to_string(),
        v.offload_fraction.to_string(),
        v.budget.to_string(),
        v.selection.to_string(),
        m.energy_closure_error.to_string(),
    ]
}

fn drive<E: HarnessEnv>(spec: &ExperimentSpec, seed: u64, dir: &Path, mut env: E) -> Result<(SeedSummary, Vec<EpisodeRecord>)> {
    let started = Instant::now();
    let ctx = SeedContext::new(spec, seed, dir);
    let mut rec = Recorder::new(&ctx, env.clone())?;
    let mut learner = initial_learner(spec, seed, &mut env)?;

    let eval_only = spec.agent.wraps_ddpg() && spec.ablation.base_checkpoint.is_some();
    let (history, diverged) = if eval_only {
        (Vec::new(), None)
    } else {
        let rep = match &mut learner {
            Learner::Ddpg(t) => train(&mut env, t, &ctx.schedule, |t, r| rec.episode(r, LearnerRef::Ddpg(t)))?,
            Learner::Dql(t) => {
                let d = env.discrete().ok_or_else(not_discrete)?;
                dql_train(d, t, &ctx.schedule, |t, r| rec.episode(r, LearnerRef::Dql(t)))?
            }
        };
        (rep.history, rep.diverged)
    };
    rec.episodes.flush()?;
    rec.evals.flush()?;

    // a diverged run keeps its last periodic checkpoint
    let (eval_records, eval_logs) = if diverged.is_none() {
        ctx.checkpoint(learner.view())?;
        evaluate(&mut rec.eval_env, learner.view(), &rec.eval_seeds)?
    } else {
        (Vec::new(), Vec::new())
    };
    for r in &eval_records {
        rec.note(r);
    }
    write_slot_csv(BufWriter::new(File::create(dir.join("eval_slots.csv"))?), &eval_logs, &ctx.extra_cols())?;

    let block = spec.training.block_size;
    let tail = &history[history.len().saturating_sub(block)..];
    let summary = SeedSummary {
        config_hash: ctx.config_hash.clone(),
        scenario_hash: spec.scenario_hash(),
        wrapped_config_hash: spec.agent.wraps_ddpg().then(|| {
            let mut inner = spec.clone();
            inner.agent = AgentKind::Ddpg;
            inner.ablation = Default::default();
            inner.config_hash()
        }),
        seed,
        agent_kind: spec.agent,
        episodes_run: history.len(),
        diverged,
        final_block: EpisodeStats::of(tail),
        final_eval: EpisodeStats::of(&eval_records),
        violations: rec.violations,
        max_energy_closure_error: rec.max_closure,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok((summary, history))
}

fn initial_learner<E: HarnessEnv>(spec: &ExperimentSpec, seed: u64, env: &mut E) -> Result<Learner> {
    let cap = spec.training.schedule.replay_capacity;
    if spec.agent == AgentKind::Dql {
        let n = env.discrete().ok_or_else(not_discrete)?.num_actions();
        return Ok(Learner::Dql(Box::new(DqlTrainer::new(env.state_dim(), n, spec.dql.clone(), cap, seed))));
    }
    if let (true, Some(path)) = (spec.agent.wraps_ddpg(), &spec.ablation.base_checkpoint) {
        let t: DdpgTrainer = load_checkpoint(Path::new(path), "ddpg")?;
        if t.quartet.state_dim() != env.state_dim() || t.quartet.action_dim() != env.action_dim() {
            return Err(Error::Checkpoint(format!("{path} does not match the scenario dimensions")));
        }
        return Ok(Learner::Ddpg(Box::new(t)));
    }
    Ok(Learner::Ddpg(Box::new(DdpgTrainer::new(
        env.state_dim(),
        env.action_dim(),
        spec.ddpg.clone(),
        spec.noise,
        cap,
        seed,
    ))))
}

/// Re-evaluates the final checkpoint of every seed of a finished run,
/// writing `eval_slots.csv` and `eval_summary.json` per seed.
pub fn evaluate_run(spec: &ExperimentSpec) -> Result<Vec<SeedSummary>> {
    spec.validate()?;
    let out = PathBuf::from(&spec.output_dir);
    let mut summaries = Vec::new();
    for &seed in &spec.seeds {
        let dir = seed_dir(&out, seed);
        let s = with_env!(spec, env => eval_with(spec, seed, &dir, env))?;
        summaries.push(s);
    }
    Ok(summaries)
}

fn eval_with<E: HarnessEnv>(spec: &ExperimentSpec, seed: u64, dir: &Path, mut env: E) -> Result<SeedSummary> {
    let started = Instant::now();
    let path = dir.join("checkpoint.json");
    let learner = if spec.agent == AgentKind::Dql {
        Learner::Dql(Box::new(load_checkpoint(&path, "dql")?))
    } else {
        Learner::Ddpg(Box::new(load_checkpoint(&path, "ddpg")?))
    };
    let ctx = SeedContext::new(spec, seed, dir);
    let (records, logs) = evaluate(&mut env, learner.view(), &ctx.eval_seeds())?;
    write_slot_csv(BufWriter::new(File::create(dir.join("eval_slots.csv"))?), &logs, &ctx.extra_cols())?;
    let mut violations = ConstraintReport::default();
    let mut max_closure: f64 = 0.0;
    for m in records.iter().filter_map(|r| r.metrics) {
        violations.add(&m.violations);
        max_closure = max_closure.max(m.energy_closure_error);
    }
    let summary = SeedSummary {
        config_hash: ctx.config_hash.clone(),
        scenario_hash: spec.scenario_hash(),
        wrapped_config_hash: None,
        seed,
        agent_kind: spec.agent,
        episodes_run: 0,
        diverged: None,
        final_block: EpisodeStats::default(),
        final_eval: EpisodeStats::of(&records),
        violations,
        max_energy_closure_error: max_closure,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    fs::write(dir.join("eval_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let m = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Per-block means across seeds of the block means within each seed.
fn write_aggregate(path: &Path, spec: &ExperimentSpec, histories: &[Vec<EpisodeRecord>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_CSV_HEADER)?;
    let block = spec.training.block_size;
    let longest = histories.iter().map(Vec::len).max().unwrap_or(0);
    let hash = spec.config_hash();
    for (b, start) in (0..longest).step_by(block).enumerate() {
        let mut reward = Vec::new();
        let mut see = Vec::new();
        let mut energy = Vec::new();
        let mut clean = true;
        let mut last = start;
        for h in histories {
            let end = (start + block).min(h.len());
            if start >= end {
                continue;
            }
            last = last.max(end - 1);
            let st = EpisodeStats::of(&h[start..end]);
            reward.push(st.total_reward);
            see.push(st.see);
            energy.push(st.final_energy_fraction);
            clean &= h[start..end]
                .iter()
                .all(|r| r.metrics.is_none_or(|m| m.violations.by_construction_clean()));
        }
        let (rm, rs) = mean_sd(&reward);
        let (sm, ss) = mean_sd(&see);
        let (em, es) = mean_sd(&energy);
        w.write_record([
            hash.clone(),
            spec.agent.as_str().to_string(),
            b.to_string(),
            start.to_string(),
            last.to_string(),
            reward.len().to_string(),
            rm.to_string(),
            rs.to_string(),
            sm.to_string(),
            ss.to_string(),
            em.to_string(),
            es.to_string(),
            if clean { "0" } else { "1" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
