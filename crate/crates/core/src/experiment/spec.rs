use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::baselines::DqlParams;
use crate::ddpg::{ActorCritic, DdpgParams, ExplorationNoise, Schedule};
use crate::env::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Ddpg,
    Dql,
    AblationNoRis,
    AblationNoTraj,
    OraclePhase,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Ddpg,
        AgentKind::Dql,
        AgentKind::AblationNoRis,
        AgentKind::AblationNoTraj,
        AgentKind::OraclePhase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Ddpg => "ddpg",
            AgentKind::Dql => "dql",
            AgentKind::AblationNoRis => "ablation-no-ris",
            AgentKind::AblationNoTraj => "ablation-no-traj",
            AgentKind::OraclePhase => "oracle-phase",
        }
    }

    /// Continuous-action agents that put a DDPG learner behind a wrapper.
    pub fn wraps_ddpg(self) -> bool {
        matches!(self, AgentKind::AblationNoRis | AgentKind::AblationNoTraj | AgentKind::OraclePhase)
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown agent `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1,
    #[serde(rename = "table1-750")]
    Table1Long,
    Desk,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table1Long => "table1-750",
            Preset::Desk => "desk",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Preset::Table1, Preset::Table1Long, Preset::Desk]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown preset `{s}`"))
    }
}

/// Episode loop plus evaluation and checkpoint cadence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub schedule: Schedule,
    /// Reset seed shared by every run; `None` uses each run's own seed.
    pub layout_seed: Option<u64>,
    /// Noise-free evaluation every this many episodes; 0 disables.
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Checkpoint every this many episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    /// Store the replay memory in checkpoints, for bit-exact resumption.
    pub checkpoint_memory: bool,
    /// Width of the episode blocks in `aggregate.csv`.
    pub block_size: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            layout_seed: None,
            eval_every: 0,
            eval_episodes: 1,
            checkpoint_every: 0,
            checkpoint_memory: false,
            block_size: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    /// Fixed RIS phases are drawn uniformly once per episode instead of zero.
    pub random_phases: bool,
    /// Hover point of the no-trajectory ablation; `None` is the area centroid.
    pub hover_xy: Option<[f64; 2]>,
    /// Evaluate a trained DDPG checkpoint behind the wrapper instead of
    /// training a learner with the wrapper in its action path.
    pub base_checkpoint: Option<String>,
}

/// Fully resolved description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub agent: AgentKind,
    pub seeds: Vec<u64>,
    pub output_dir: String,
    pub scenario: ScenarioConfig,
    pub training: TrainingSection,
    pub ddpg: DdpgParams,
    pub dql: DqlParams,
    pub noise: ExplorationNoise,
    pub ablation: AblationSection,
}

impl ExperimentSpec {
    pub fn preset(p: Preset) -> Self {
        let base = Self {
            preset: p,
            agent: AgentKind::Ddpg,
            seeds: vec![0],
            output_dir: "runs".into(),
            scenario: ScenarioConfig::table1(),
            training: TrainingSection::default(),
            ddpg: DdpgParams::default(),
            dql: DqlParams::default(),
            noise: ExplorationNoise::default(),
            ablation: AblationSection::default(),
        };
        match p {
            Preset::Table1 => base,
            Preset::Table1Long => Self { scenario: ScenarioConfig::table1_long(), ..base },
            Preset::Desk => desk(base),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.seeds.is_empty() {
            p.push("seeds must not be empty".to_string());
        }
        if let Err(Error::InvalidConfig(list)) = self.scenario.validate() {
            p.extend(list.into_iter().map(|m| format!("scenario.{m}")));
        }
        self.training.schedule.validate("training.schedule", &mut p);
        if self.training.block_size == 0 {
            p.push("training.block_size must be positive".into());
        }
        if self.training.eval_episodes == 0 {
            p.push("training.eval_episodes must be positive".into());
        }
        self.ddpg.validate("ddpg", &mut p);
        self.dql.validate("dql", &mut p);
        let n = &self.noise;
        if !(n.sigma >= n.floor && n.floor >= 0.0 && n.decay > 0.0 && n.decay <= 1.0) {
            p.push("noise requires sigma >= floor >= 0 and decay in (0, 1]".into());
        }
        if let Some([x, y]) = self.ablation.hover_xy {
            if !self.scenario.area.contains(x, y) {
                p.push(format!("ablation.hover_xy ({x}, {y}) lies outside the area"));
            }
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(p))
        }
    }

    /// Hash of everything that shapes results; seeds and the output
    /// location are excluded.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("spec serializes");
        if let Value::Object(m) = &mut v {
            m.remove("seeds");
            m.remove("output_dir");
        }
        sha256_hex(&v)
    }

    pub fn scenario_hash(&self) -> String {
        sha256_hex(&serde_json::to_value(&self.scenario).expect("scenario serializes"))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

fn sha256_hex(v: &Value) -> String {
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

/// Desk preset: O = 8, K = 2, E = 1, N = 100, 500 episodes, three seeds.
fn desk(mut s: ExperimentSpec) -> ExperimentSpec {
    s.scenario = ScenarioConfig::desk();
    s.seeds = vec![0, 1, 2];
    s.training.schedule.episodes = 500;
    s.training.schedule.replay_capacity = 100_000;
    s.training.eval_every = 50;
    // Sparse reward (zero outside the secrecy regions) needs a short horizon,
    // faster target tracking and wide early exploration at this budget.
    s.training.schedule.warmup = 5000;
    s.ddpg.actor_gradient_critic = ActorCritic::Train;
    s.ddpg.actor_tau = 1e-2;
    s.ddpg.critic_tau = 1e-2;
    s.ddpg.discount = 0.9;
    s.dql.tau = 1e-2;
    s.dql.discount = 0.9;
    s.noise = ExplorationNoise { sigma: 0.6, decay: 0.995, floor: 0.05 };
    s
}

/// Reads a JSON config and merges it over its preset (the file's `preset`
/// key, else `preset_override`, else `table1`). `preset_override` wins over
/// the file when both are given.
pub fn load_config(path: &Path, preset_override: Option<Preset>) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, preset_override)
}

pub fn parse_config(text: &str, preset_override: Option<Preset>) -> Result<ExperimentSpec> {
    let user: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?
    };
    let Value::Object(mut user) = user else {
        return Err(Error::ConfigParse { line: 1, column: 1, msg: "top level must be an object".into() });
    };
    let file_preset = match user.get("preset") {
        Some(v) => Some(
            serde_json::from_value::<Preset>(v.clone())
                .map_err(|_| Error::InvalidConfig(vec![format!("preset: unknown value {v}")]))?,
        ),
        None => None,
    };
    let preset = preset_override.or(file_preset).unwrap_or(Preset::Table1);
    user.insert("preset".into(), serde_json::to_value(preset)?);

    let mut merged = serde_json::to_value(ExperimentSpec::preset(preset))?;
    merge(&mut merged, Value::Object(user), "")?;
    let spec: ExperimentSpec =
        serde_json::from_value(merged).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))?;
    spec.validate()?;
    Ok(spec)
}

/// Deep merge: objects merge key by key, anything else replaces the base
/// value. Keys absent from an object base are rejected.
fn merge(base: &mut Value, over: Value, path: &str) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &sub)?,
                    None => return Err(Error::UnknownKey(sub)),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}
