//! Episodic MDP around the channel and energy models.
//!
//! One UAV serves `K` ground UEs by TDMA (one UE per slot) while `E`
//! eavesdroppers listen to the UE uplinks. The agent steers the UAV in the
//! horizontal plane at a fixed altitude, sets the RIS phases, picks the UE
//! and its offloading fraction. The per-slot reward is the served UE's
//! secrecy rate over the slot's energy, minus latency/budget penalties.

mod codec;
mod config;
mod log;

pub use codec::{
    clamp_action, decode_action, decode_state, encode_control, encode_state, ControlTuple,
    StateScales, WorldSnapshot,
};
pub use config::{
    Area, PenaltyWeights, Placement, RisGeometry, ScenarioConfig, ScenarioFlags, TaskSampling,
};
pub use log::{
    constraint_report, write_slot_csv, ConstraintReport, EpisodeLog, SlotRecord, SLOT_CSV_HEADER,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{self, Position3D, RisConfig};
use crate::energy::{self, Task};
use crate::error::{Error, Result};
use crate::rl::{EpisodeMetrics, Environment, Step};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct TaskProgress {
    alpha: f64,
    delivered_bits: f64,
    served_slots: usize,
    secrecy_sum: f64,
}

/// Extra per-slot quantities not carried by the reward.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub secrecy_rate: f64,
    pub selected_ue: usize,
    pub alpha: f64,
    pub propulsion_j: f64,
    pub compute_j: f64,
    pub viol_latency: bool,
    pub viol_budget: bool,
    pub ue_energy_j: f64,
}

/// Result of [`AmecEnv::step_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// The simulator. Create with [`AmecEnv::new`], then [`AmecEnv::reset`].
#[derive(Debug, Clone)]
pub struct AmecEnv {
    cfg: ScenarioConfig,
    rng: ChaCha8Rng,
    ues: Vec<Position3D>,
    eves: Vec<Position3D>,
    tasks: Vec<Task>,
    progress: Vec<TaskProgress>,
    uav: Position3D,
    speed: f64,
    ris: RisConfig,
    energy: f64,
    amec_budget: f64,
    amec_cycles: f64,
    slot: usize,
    done: bool,
    started: bool,
    active_ue: usize,
    abs_reward_sum: f64,
    secrecy_total: f64,
    propulsion_total: f64,
    compute_total: f64,
    log: EpisodeLog,
    episodes_started: usize,
}

impl AmecEnv {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let ris = cfg.ris_config();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(0),
            ues: Vec::new(),
            eves: Vec::new(),
            tasks: Vec::new(),
            progress: Vec::new(),
            uav: Position3D::new(0.0, 0.0, cfg.operating_altitude),
            speed: 0.0,
            ris,
            energy: cfg.initial_energy,
            amec_budget: 1.0,
            amec_cycles: 1.0,
            slot: 0,
            done: true,
            started: false,
            active_ue: 0,
            abs_reward_sum: 0.0,
            secrecy_total: 0.0,
            propulsion_total: 0.0,
            compute_total: 0.0,
            log: EpisodeLog::default(),
            episodes_started: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn ues(&self) -> &[Position3D] {
        &self.ues
    }

    pub fn eves(&self) -> &[Position3D] {
        &self.eves
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn uav(&self) -> Position3D {
        self.uav
    }

    pub fn ris(&self) -> &RisConfig {
        &self.ris
    }

    pub fn energy_remaining(&self) -> f64 {
        self.energy
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    /// Energy of the scripted take-off climb to the operating altitude.
    pub fn climb_energy(&self) -> f64 {
        let p = &self.cfg.power;
        self.cfg.operating_altitude / self.cfg.climb_rate
            * energy::propulsion_power(0.0, self.cfg.climb_rate, p)
    }

    /// Starts an episode. Node layout and tasks are a pure function of `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let cfg = &self.cfg;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (cfg.area.width, cfg.area.height);
        let rng = &mut self.rng;
        let mut draw = |fixed: &Option<Vec<[f64; 2]>>, n: usize| -> Vec<Position3D> {
            match fixed {
                Some(list) => list.iter().map(|[x, y]| Position3D::ground(*x, *y)).collect(),
                None => (0..n)
                    .map(|_| Position3D::ground(rng.random_range(0.0..=w), rng.random_range(0.0..=h)))
                    .collect(),
            }
        };
        self.ues = draw(&cfg.placement.ues, cfg.num_ues);
        self.eves = draw(&cfg.placement.eves, cfg.num_eves);
        let t = &cfg.tasks;
        self.tasks = (0..cfg.num_ues)
            .map(|_| Task {
                cycles_per_bit: t.cycles_per_bit,
                data_bits: if t.data_bits_max > t.data_bits_min {
                    self.rng.random_range(t.data_bits_min..=t.data_bits_max)
                } else {
                    t.data_bits_min
                },
                deadline: t.deadline,
            })
            .collect();
        self.progress = vec![TaskProgress::default(); cfg.num_ues];

        let [sx, sy] = cfg.start_xy();
        self.uav = Position3D::new(sx, sy, cfg.operating_altitude);
        self.speed = 0.0;
        self.ris = cfg.ris_config();
        let climb = self.climb_energy();
        self.energy = self.cfg.initial_energy - climb;
        let total_bits: f64 = self.tasks.iter().map(|t| t.data_bits).sum();
        self.amec_budget = self
            .cfg
            .compute
            .amec_cycle_budget
            .unwrap_or(self.cfg.tasks.cycles_per_bit * total_bits);
        self.amec_cycles = self.amec_budget;
        self.slot = 0;
        self.done = false;
        self.started = true;
        self.active_ue = 0;
        self.abs_reward_sum = 0.0;
        self.secrecy_total = 0.0;
        self.propulsion_total = 0.0;
        self.compute_total = 0.0;
        self.log = EpisodeLog {
            episode: self.episodes_started,
            initial_energy: self.cfg.initial_energy,
            climb_energy: climb,
            records: Vec::with_capacity(self.cfg.episode_slots),
        };
        self.episodes_started += 1;
        if self.energy <= 0.0 {
            self.done = true;
        }
        self.encode()
    }

    /// Observation for the current world state.
    pub fn encode(&self) -> Result<Vec<f64>> {
        let k = self.active_ue;
        let task = self.tasks[k];
        let elapsed = self.slot as f64 * self.cfg.power.slot_duration;
        let time_left = (task.deadline - elapsed).max(0.0);
        let snap = WorldSnapshot {
            phases: self.ris.phases.clone(),
            x: self.uav.x,
            y: self.uav.y,
            speed: self.speed,
            energy_remaining: self.energy.max(0.0),
            amec_cycles_remaining: self.amec_cycles.max(0.0),
            task_bits_remaining: (task.data_bits - self.progress[k].delivered_bits).max(0.0),
            task_time_remaining: time_left,
            ue_cycles_available: (self.cfg.compute.ue_cpu_rate * time_left).min(task.total_cycles()),
        };
        encode_state(&snap, &self.scales())
    }

    pub fn scales(&self) -> StateScales {
        let task = self.tasks[self.active_ue];
        StateScales::new(&self.cfg, self.amec_budget, task.data_bits, task.total_cycles())
    }

    fn move_uav(&self, ctl: &ControlTuple) -> Position3D {
        let dt = self.cfg.power.slot_duration;
        let (x, y) = self.cfg.area.clamp(
            self.uav.x + ctl.speed * dt * ctl.heading.cos(),
            self.uav.y + ctl.speed * dt * ctl.heading.sin(),
        );
        Position3D::new(x, y, self.uav.z)
    }

    /// UAV position after executing `raw` from the current state.
    pub fn preview_position(&self, raw: &[f64]) -> Result<Position3D> {
        Ok(self.move_uav(&decode_action(raw, &self.cfg)?))
    }

    /// Advances one slot and returns the full per-slot breakdown.
    pub fn step_detailed(&mut self, raw: &mut [f64]) -> Result<StepResult> {
        if !self.started || self.done {
            return Err(Error::EpisodeDone);
        }
        if raw.len() != self.cfg.action_dim() {
            return Err(Error::Shape { expected: self.cfg.action_dim(), got: raw.len() });
        }
        clamp_action(raw);
        let ctl = decode_action(raw, &self.cfg)?;
        let dt = self.cfg.power.slot_duration;

        let next = self.move_uav(&ctl);
        let displacement = self.uav.horizontal_distance(&next);
        self.uav = next;
        self.speed = displacement / dt;

        if let Some(std) = self.cfg.placement.random_walk_std.filter(|s| *s > 0.0) {
            let area = self.cfg.area;
            for node in self.ues.iter_mut().chain(self.eves.iter_mut()) {
                let dx: f64 = self.rng.sample(StandardNormal);
                let dy: f64 = self.rng.sample(StandardNormal);
                let (x, y) = area.clamp(node.x + std * dx, node.y + std * dy);
                node.x = x;
                node.y = y;
            }
        }

        self.ris.set_phases(&ctl.phases)?;
        let phases_in_range = self
            .ris
            .phases
            .iter()
            .all(|p| (0.0..2.0 * std::f64::consts::PI).contains(p));

        let k = ctl.selected_ue;
        let los_override = if self.cfg.flags.stochastic_los {
            let p = channel::los_probability(channel::elevation_angle(&self.uav, &self.ues[k]), &self.cfg.los);
            Some(if self.rng.random::<f64>() < p { 1.0 } else { 0.0 })
        } else {
            None
        };
        let link = channel::evaluate_link(
            &self.ues[k],
            &self.eves,
            &self.ris,
            &self.uav,
            &self.cfg.rf,
            &self.cfg.los,
            los_override,
        )?;
        let secrecy = link.secrecy_rate;

        // task bookkeeping for the served UE
        let task = self.tasks[k];
        let prog = &mut self.progress[k];
        prog.alpha = ctl.alpha;
        prog.served_slots += 1;
        prog.secrecy_sum += secrecy;
        let avg_secrecy = prog.secrecy_sum / prog.served_slots as f64;
        let offload_left = (ctl.alpha * task.data_bits - prog.delivered_bits).max(0.0);
        let mut bits = (secrecy * dt).min(offload_left);
        let mut viol_budget = false;
        let cycles = bits * task.cycles_per_bit;
        if cycles > self.amec_cycles {
            viol_budget = true;
            bits = self.amec_cycles.max(0.0) / task.cycles_per_bit;
        }
        prog.delivered_bits += bits;
        self.amec_cycles -= bits * task.cycles_per_bit;
        let committed: f64 = self
            .progress
            .iter()
            .zip(&self.tasks)
            .map(|(p, t)| p.alpha * t.total_cycles())
            .sum();
        if committed > self.amec_budget * (1.0 + 1e-12) {
            viol_budget = true;
        }

        let compute_j = self.cfg.compute.amec_energy_per_cycle() * task.cycles_per_bit * bits;
        let propulsion_j = energy::propulsion_energy(self.speed, 0.0, &self.cfg.power);
        self.energy -= propulsion_j + compute_j;
        self.secrecy_total += secrecy;
        self.propulsion_total += propulsion_j;
        self.compute_total += compute_j;

        let latency = energy::offload_latency(ctl.alpha, &task, &self.cfg.compute, avg_secrecy);
        let viol_latency = latency > task.deadline;
        let ue_energy_j = energy::compute_energy_ue(
            ctl.alpha,
            &task,
            &self.cfg.compute,
            &self.cfg.rf,
            avg_secrecy,
        );

        let base = self.cfg.reward_scale * energy::see_objective(secrecy, propulsion_j, compute_j)?;
        self.abs_reward_sum += base.abs();
        let running_mean = self.abs_reward_sum / (self.slot + 1) as f64;
        let penalty = running_mean
            * (self.cfg.penalty.latency * f64::from(u8::from(viol_latency))
                + self.cfg.penalty.budget * f64::from(u8::from(viol_budget)));
        let reward = base - penalty;

        self.slot += 1;
        self.active_ue = k;
        self.done = self.slot >= self.cfg.episode_slots || self.energy <= 0.0;

        self.log.records.push(SlotRecord {
            slot: self.slot,
            x: self.uav.x,
            y: self.uav.y,
            z: self.uav.z,
            speed: self.speed,
            heading: ctl.heading,
            selected_ue: k,
            alpha: ctl.alpha,
            secrecy_bps: secrecy,
            propulsion_j,
            compute_j,
            energy_remaining_j: self.energy,
            reward,
            viol_latency,
            viol_budget,
            displacement,
            max_displacement: dt * self.cfg.power.max_speed,
            phases_in_range,
            num_ues: self.cfg.num_ues,
            ue_energy_j,
        });

        Ok(StepResult {
            next_state: self.encode()?,
            reward,
            done: self.done,
            info: StepInfo {
                secrecy_rate: secrecy,
                selected_ue: k,
                alpha: ctl.alpha,
                propulsion_j,
                compute_j,
                viol_latency,
                viol_budget,
                ue_energy_j,
            },
        })
    }

    /// Objective of the episode so far: per-UE average secrecy rates summed,
    /// over total propulsion plus edge computation energy.
    pub fn episode_see(&self) -> f64 {
        if self.slot == 0 {
            return 0.0;
        }
        let avg_sum = self.secrecy_total / self.slot as f64;
        energy::see_objective(avg_sum, self.propulsion_total, self.compute_total).unwrap_or(0.0)
    }

    pub fn final_energy_fraction(&self) -> f64 {
        (self.energy / self.cfg.initial_energy).clamp(0.0, 1.0)
    }
}

impl Environment for AmecEnv {
    fn state_dim(&self) -> usize {
        self.cfg.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.cfg.action_dim()
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        AmecEnv::reset(self, seed)
    }

    fn step(&mut self, action: &mut [f64]) -> Result<Step> {
        let r = self.step_detailed(action)?;
        Ok(Step { state: r.next_state, reward: r.reward, done: r.done })
    }

    fn episode_metrics(&self) -> Option<EpisodeMetrics> {
        Some(EpisodeMetrics {
            see: self.episode_see(),
            final_energy_fraction: self.final_energy_fraction(),
            violations: constraint_report(&self.log),
            energy_closure_error: self.log.energy_closure_error(),
        })
    }

    fn episode_log(&self) -> Option<&EpisodeLog> {
        Some(&self.log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::f64::consts::PI;

    fn desk_env() -> AmecEnv {
        AmecEnv::new(ScenarioConfig::desk()).unwrap()
    }

    fn hover_action(cfg: &ScenarioConfig) -> Vec<f64> {
        let mut a = vec![0.0; cfg.action_dim()];
        let o = cfg.ris.num_elements;
        a[2 * o] = -1.0; // speed 0
        a[2 * o + 2] = -1.0; // alpha 0
        a
    }

    #[test]
    fn reset_is_deterministic_and_sized() {
        let mut a = desk_env();
        let mut b = desk_env();
        let sa = a.reset(42).unwrap();
        let sb = b.reset(42).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(sa.len(), 24);
        assert_eq!(a.ues(), b.ues());
        let mut t = AmecEnv::new(ScenarioConfig::table1()).unwrap();
        assert_eq!(t.reset(0).unwrap().len(), 136);
        assert_eq!(t.config().action_dim(), 132);
    }

    #[test]
    fn climb_energy_is_deducted() {
        let mut env = desk_env();
        env.reset(1).unwrap();
        let expected = 12.0 * (168.8 + 11.46 * 5.0);
        assert!((env.climb_energy() - 2713.2).abs() < 1e-9);
        assert!((env.energy_remaining() - (140e3 - expected)).abs() < 1e-9);
    }

    #[test]
    fn hover_slot_energy_and_reward() {
        let mut env = desk_env();
        env.reset(3).unwrap();
        let mut a = hover_action(env.config());
        let r = env.step_detailed(&mut a).unwrap();
        assert!((r.info.propulsion_j - 84.4).abs() < 1e-12);
        assert_eq!(r.info.compute_j, 0.0);
        assert!(!r.info.viol_latency);
        let expected = env.config().reward_scale * r.info.secrecy_rate / 84.4;
        assert!((r.reward - expected).abs() <= 1e-12 * expected.abs().max(1e-300));
    }

    #[test]
    fn kinematics_due_east() {
        let mut env = desk_env();
        env.reset(3).unwrap();
        let o = env.config().ris.num_elements;
        let mut a = hover_action(env.config());
        a[2 * o] = 1.0;
        a[2 * o + 1] = -1.0; // heading 0 rad
        env.step_detailed(&mut a).unwrap();
        assert!((env.uav().x - 5.0).abs() < 1e-12);
        assert!(env.uav().y.abs() < 1e-12);
    }

    #[test]
    fn zero_secrecy_gives_only_penalties() {
        let mut cfg = ScenarioConfig::desk();
        cfg.placement.ues = Some(vec![[100.0, 100.0], [300.0, 300.0]]);
        // eavesdropper on top of UE 0: its wiretap rate dwarfs the uplink
        cfg.placement.eves = Some(vec![[100.0, 101.0]]);
        let mut env = AmecEnv::new(cfg).unwrap();
        env.reset(0).unwrap();
        let o = env.config().ris.num_elements;
        let mut a = hover_action(env.config());
        a[2 * o + 3] = -1.0;
        a[2 * o + 2] = 1.0; // offload everything over a dead link
        let r = env.step_detailed(&mut a).unwrap();
        assert_eq!(r.info.secrecy_rate, 0.0);
        assert!(r.info.viol_latency);
        assert_eq!(r.reward, 0.0); // running mean |r| is zero
    }

    #[test]
    fn step_after_done_is_error() {
        let mut cfg = ScenarioConfig::desk();
        cfg.episode_slots = 2;
        let mut env = AmecEnv::new(cfg).unwrap();
        let mut a = hover_action(env.config());
        assert!(matches!(env.step_detailed(&mut a), Err(Error::EpisodeDone)));
        env.reset(0).unwrap();
        assert!(!env.step_detailed(&mut a).unwrap().done);
        assert!(env.step_detailed(&mut a).unwrap().done);
        assert!(matches!(env.step_detailed(&mut a), Err(Error::EpisodeDone)));
    }

    #[test]
    fn episode_invariants_under_random_actions() {
        let mut cfg = ScenarioConfig::desk();
        cfg.placement.random_walk_std = Some(1.0);
        cfg.flags.stochastic_los = true;
        let mut env = AmecEnv::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for ep in 0..5 {
            env.reset(ep).unwrap();
            let mut last_energy = env.energy_remaining();
            let mut actions = Vec::new();
            let mut rewards = Vec::new();
            while !env.is_done() {
                let mut a: Vec<f64> = (0..20).map(|_| rng.random_range(-1.5..1.5)).collect();
                let r = env.step_detailed(&mut a).unwrap();
                assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
                assert!(env.energy_remaining() <= last_energy);
                last_energy = env.energy_remaining();
                assert!(r.next_state.iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)));
                actions.push(a);
                rewards.push(r.reward);
            }
            let rep = constraint_report(env.log());
            assert!(rep.by_construction_clean());
            assert!(env.log().energy_closure_error() < 1e-9);

            // replay bit-for-bit
            let log = env.log().clone();
            env.reset(ep).unwrap();
            for (mut a, r) in actions.into_iter().zip(rewards) {
                assert_eq!(env.step_detailed(&mut a).unwrap().reward.to_bits(), r.to_bits());
            }
            assert_eq!(env.log().records, log.records);
        }
    }

    #[test]
    fn missed_deadline_is_reported() {
        let mut cfg = ScenarioConfig::desk();
        cfg.tasks.deadline = 1.0; // local compute alone takes > 5 s
        let mut env = AmecEnv::new(cfg).unwrap();
        env.reset(0).unwrap();
        let mut a = hover_action(env.config());
        env.step_detailed(&mut a).unwrap();
        assert!(constraint_report(env.log()).latency >= 1);
    }

    #[test]
    fn heading_and_phase_layout() {
        let env = desk_env();
        let cfg = env.config();
        let mut a = hover_action(cfg);
        a[0] = -1.0;
        a[1] = 0.0;
        let ctl = decode_action(&a, cfg).unwrap();
        assert!((ctl.phases[0] - PI).abs() < 1e-15);
    }
}
