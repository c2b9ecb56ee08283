use serde::{Deserialize, Serialize};

use crate::channel::{LosConstants, Position3D, RfParams, RisConfig};
use crate::energy::{ComputeParams, UavPowerParams};
use crate::error::{Error, Result};

/// Horizontal service area `[0, width] x [0, height]`, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(0.0, self.width), y.clamp(0.0, self.height))
    }

    pub fn centroid(&self) -> [f64; 2] {
        [self.width / 2.0, self.height / 2.0]
    }
}

/// Ground node placement. `None` lists are drawn uniformly in the area from
/// the reset seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub ues: Option<Vec<[f64; 2]>>,
    pub eves: Option<Vec<[f64; 2]>>,
    /// Per-slot random-walk standard deviation for UEs and eavesdroppers,
    /// meters. `None` keeps nodes static for the episode.
    pub random_walk_std: Option<f64>,
}

/// RIS geometry; the phases are part of the episode state, not the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisGeometry {
    pub position: Position3D,
    pub num_elements: usize,
    /// Element spacing, meters. `None` means half a wavelength.
    pub element_spacing: Option<f64>,
}

/// How per-UE tasks are instantiated at reset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSampling {
    pub cycles_per_bit: f64,
    pub data_bits_min: f64,
    pub data_bits_max: f64,
    pub deadline: f64,
}

impl Default for TaskSampling {
    fn default() -> Self {
        Self {
            cycles_per_bit: 1e3,
            data_bits_min: 512e3,
            data_bits_max: 1024e3,
            deadline: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFlags {
    /// Draw LoS/NLoS per slot instead of mixing by probability.
    pub stochastic_los: bool,
    /// Round the offloading fraction to {0, 1}.
    pub binary_offload: bool,
}

/// Penalty weights, as multiples of the running mean |reward| per violating slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyWeights {
    pub latency: f64,
    pub budget: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { latency: 0.1, budget: 0.1 }
    }
}

/// Static description of one experiment's world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area: Area,
    pub num_ues: usize,
    pub num_eves: usize,
    pub episode_slots: usize,
    /// J.
    pub initial_energy: f64,
    /// Flight altitude after the scripted take-off climb, m.
    pub operating_altitude: f64,
    /// Take-off climb rate, m/s.
    pub climb_rate: f64,
    /// Take-off point; `None` is the origin.
    pub start_xy: Option<[f64; 2]>,
    pub placement: Placement,
    pub ris: RisGeometry,
    pub rf: RfParams,
    pub los: LosConstants,
    pub power: UavPowerParams,
    pub compute: ComputeParams,
    pub tasks: TaskSampling,
    pub flags: ScenarioFlags,
    pub penalty: PenaltyWeights,
    /// Multiplier applied to per-slot SEE (bit/J) before it becomes the reward.
    pub reward_scale: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::table1()
    }
}

impl ScenarioConfig {
    /// Reference scenario: 6 UEs, 3 eavesdroppers, 600 x 400 m, 64-element
    /// RIS at (200, 200, 20), 140 kJ, 200 slots.
    pub fn table1() -> Self {
        Self {
            area: Area { width: 600.0, height: 400.0 },
            num_ues: 6,
            num_eves: 3,
            episode_slots: 200,
            initial_energy: 140e3,
            operating_altitude: 60.0,
            climb_rate: 5.0,
            start_xy: None,
            placement: Placement::default(),
            ris: RisGeometry {
                position: Position3D::new(200.0, 200.0, 20.0),
                num_elements: 64,
                element_spacing: None,
            },
            rf: RfParams::default(),
            los: LosConstants::default(),
            power: UavPowerParams::default(),
            compute: ComputeParams::default(),
            tasks: TaskSampling::default(),
            flags: ScenarioFlags::default(),
            penalty: PenaltyWeights::default(),
            reward_scale: 1e-3,
        }
    }

    /// Reference scenario with the 750-slot episode length.
    pub fn table1_long() -> Self {
        Self { episode_slots: 750, ..Self::table1() }
    }

    /// Small scenario for laptop-scale runs: O = 8, K = 2, E = 1, N = 100,
    /// with a larger reward scale.
    pub fn desk() -> Self {
        let mut cfg = Self::table1();
        cfg.ris.num_elements = 8;
        cfg.num_ues = 2;
        cfg.num_eves = 1;
        cfg.episode_slots = 100;
        cfg.reward_scale = 0.1;
        cfg
    }

    pub fn state_dim(&self) -> usize {
        2 * self.ris.num_elements + 8
    }

    pub fn action_dim(&self) -> usize {
        2 * self.ris.num_elements + 4
    }

    pub fn element_spacing(&self) -> f64 {
        self.ris.element_spacing.unwrap_or_else(|| self.rf.wavelength() / 2.0)
    }

    pub fn ris_config(&self) -> RisConfig {
        RisConfig::new(self.ris.position, self.ris.num_elements, self.element_spacing())
    }

    pub fn start_xy(&self) -> [f64; 2] {
        self.start_xy.unwrap_or([0.0, 0.0])
    }

    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let pos = |name: &str, v: f64, p: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                p.push(format!("{name} must be finite and > 0 (got {v})"));
            }
        };
        pos("area.width", self.area.width, &mut p);
        pos("area.height", self.area.height, &mut p);
        pos("initial_energy", self.initial_energy, &mut p);
        pos("operating_altitude", self.operating_altitude, &mut p);
        pos("climb_rate", self.climb_rate, &mut p);
        pos("reward_scale", self.reward_scale, &mut p);
        if self.num_ues == 0 {
            p.push("num_ues must be >= 1".into());
        }
        if self.episode_slots == 0 {
            p.push("episode_slots must be >= 1".into());
        }
        if self.ris.num_elements == 0 {
            p.push("ris.num_elements must be >= 1".into());
        }
        if !self.ris.position.is_valid() {
            p.push("ris.position must be finite with z >= 0".into());
        }
        if let Some(s) = self.ris.element_spacing {
            pos("ris.element_spacing", s, &mut p);
        }
        if let Some([x, y]) = self.start_xy {
            if !self.area.contains(x, y) {
                p.push(format!("start_xy ({x}, {y}) lies outside the area"));
            }
        }
        let check_nodes = |name: &str, nodes: &Option<Vec<[f64; 2]>>, n: usize, p: &mut Vec<String>| {
            if let Some(list) = nodes {
                if list.len() != n {
                    p.push(format!("placement.{name} has {} entries, expected {n}", list.len()));
                }
                for [x, y] in list {
                    if !self.area.contains(*x, *y) {
                        p.push(format!("placement.{name} entry ({x}, {y}) lies outside the area"));
                    }
                }
            }
        };
        check_nodes("ues", &self.placement.ues, self.num_ues, &mut p);
        check_nodes("eves", &self.placement.eves, self.num_eves, &mut p);
        if let Some(s) = self.placement.random_walk_std {
            if !(s.is_finite() && s >= 0.0) {
                p.push(format!("placement.random_walk_std must be >= 0 (got {s})"));
            }
        }
        self.rf.validate("rf", &mut p);
        if !(self.los.env_c > 0.0 && self.los.env_b > 0.0) {
            p.push("los.env_c and los.env_b must be > 0".into());
        }
        self.power.validate("power", &mut p);
        self.compute.validate("compute", &mut p);
        let t = &self.tasks;
        pos("tasks.cycles_per_bit", t.cycles_per_bit, &mut p);
        pos("tasks.data_bits_min", t.data_bits_min, &mut p);
        pos("tasks.deadline", t.deadline, &mut p);
        if !(t.data_bits_max >= t.data_bits_min && t.data_bits_max.is_finite()) {
            p.push("tasks.data_bits_max must be >= tasks.data_bits_min".into());
        }
        for (name, w) in [("penalty.latency", self.penalty.latency), ("penalty.budget", self.penalty.budget)] {
            if !(w.is_finite() && w >= 0.0) {
                p.push(format!("{name} must be >= 0 (got {w})"));
            }
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(p))
        }
    }
}
