//! Flat vector layouts of the observation and the action.
//!
//! State (length `2O + 8`):
//!
//! | index        | entry                         | scale                       |
//! |--------------|-------------------------------|-----------------------------|
//! | `2o`, `2o+1` | cos, sin of RIS phase `o`     | `[-1, 1]`                   |
//! | `2O`         | UAV x                         | `/ area.width`              |
//! | `2O+1`       | UAV y                         | `/ area.height`             |
//! | `2O+2`       | horizontal speed              | `/ max_speed`               |
//! | `2O+3`       | remaining energy              | `/ initial_energy`          |
//! | `2O+4`       | edge cycles remaining         | `/ edge cycle budget`       |
//! | `2O+5`       | active task bits remaining    | `/ task data bits`          |
//! | `2O+6`       | active task time remaining    | `/ task deadline`           |
//! | `2O+7`       | UE cycles available           | `/ task total cycles`       |
//!
//! Action (length `2O + 4`, entries in `[-1, 1]`):
//! `[c_1, s_1, ..., c_O, s_O, speed, heading, offload, ue_select]`.

use std::f64::consts::PI;

use super::config::ScenarioConfig;
use crate::channel::wrap_phase;
use crate::error::{Error, Result};

/// Physical quantities observed by the agent before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSnapshot {
    pub phases: Vec<f64>,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub energy_remaining: f64,
    pub amec_cycles_remaining: f64,
    pub task_bits_remaining: f64,
    pub task_time_remaining: f64,
    pub ue_cycles_available: f64,
}

/// Denominators used by the state normalization, resolved for one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateScales {
    pub width: f64,
    pub height: f64,
    pub max_speed: f64,
    pub initial_energy: f64,
    pub amec_budget: f64,
    pub task_bits: f64,
    pub task_deadline: f64,
    pub task_cycles: f64,
}

impl StateScales {
    pub fn new(cfg: &ScenarioConfig, amec_budget: f64, task_bits: f64, task_cycles: f64) -> Self {
        Self {
            width: cfg.area.width,
            height: cfg.area.height,
            max_speed: cfg.power.max_speed,
            initial_energy: cfg.initial_energy,
            amec_budget,
            task_bits,
            task_deadline: cfg.tasks.deadline,
            task_cycles,
        }
    }
}

const TOL: f64 = 1e-9;

fn unit(name: &str, v: f64, scale: f64) -> Result<f64> {
    let n = v / scale;
    if !n.is_finite() || n < -TOL || n > 1.0 + TOL {
        return Err(Error::Encoding(format!("{name} = {v} outside [0, {scale}]")));
    }
    Ok(n.clamp(0.0, 1.0))
}

/// Normalizes a snapshot into the flat state layout.
pub fn encode_state(snap: &WorldSnapshot, scales: &StateScales) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * snap.phases.len() + 8);
    for &theta in &snap.phases {
        if !theta.is_finite() {
            return Err(Error::Encoding(format!("non-finite phase {theta}")));
        }
        out.push(theta.cos());
        out.push(theta.sin());
    }
    out.push(unit("x", snap.x, scales.width)?);
    out.push(unit("y", snap.y, scales.height)?);
    out.push(unit("speed", snap.speed, scales.max_speed)?);
    out.push(unit("energy_remaining", snap.energy_remaining, scales.initial_energy)?);
    out.push(unit("amec_cycles_remaining", snap.amec_cycles_remaining, scales.amec_budget)?);
    out.push(unit("task_bits_remaining", snap.task_bits_remaining, scales.task_bits)?);
    out.push(unit("task_time_remaining", snap.task_time_remaining, scales.task_deadline)?);
    out.push(unit("ue_cycles_available", snap.ue_cycles_available, scales.task_cycles)?);
    Ok(out)
}

/// Inverse of [`encode_state`] (phases come back wrapped into `[0, 2pi)`).
pub fn decode_state(state: &[f64], scales: &StateScales) -> Result<WorldSnapshot> {
    if state.len() < 8 || state.len() % 2 != 0 {
        return Err(Error::Shape { expected: state.len() + state.len() % 2, got: state.len() });
    }
    let o = (state.len() - 8) / 2;
    let phases = (0..o)
        .map(|i| wrap_phase(state[2 * i + 1].atan2(state[2 * i])))
        .collect();
    let t = &state[2 * o..];
    Ok(WorldSnapshot {
        phases,
        x: t[0] * scales.width,
        y: t[1] * scales.height,
        speed: t[2] * scales.max_speed,
        energy_remaining: t[3] * scales.initial_energy,
        amec_cycles_remaining: t[4] * scales.amec_budget,
        task_bits_remaining: t[5] * scales.task_bits,
        task_time_remaining: t[6] * scales.task_deadline,
        ue_cycles_available: t[7] * scales.task_cycles,
    })
}

/// Physical controls for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTuple {
    /// m/s, in `[0, max_speed]`.
    pub speed: f64,
    /// radians, in `[0, 2pi]`.
    pub heading: f64,
    pub phases: Vec<f64>,
    pub alpha: f64,
    pub selected_ue: usize,
}

/// Clamps every entry into `[-1, 1]`; NaN becomes 0.
pub fn clamp_action(action: &mut [f64]) {
    for a in action.iter_mut() {
        *a = if a.is_nan() { 0.0 } else { a.clamp(-1.0, 1.0) };
    }
}

/// Maps a raw action onto physical controls.
pub fn decode_action(raw: &[f64], cfg: &ScenarioConfig) -> Result<ControlTuple> {
    let o = cfg.ris.num_elements;
    if raw.len() != cfg.action_dim() {
        return Err(Error::Shape { expected: cfg.action_dim(), got: raw.len() });
    }
    let a = |i: usize| {
        let v = raw[i];
        if v.is_nan() {
            0.0
        } else {
            v.clamp(-1.0, 1.0)
        }
    };
    let phases = (0..o)
        .map(|i| {
            let (c, s) = (a(2 * i), a(2 * i + 1));
            if c == 0.0 && s == 0.0 {
                0.0
            } else {
                wrap_phase(s.atan2(c))
            }
        })
        .collect();
    let half = |v: f64| (v + 1.0) / 2.0;
    let k = cfg.num_ues;
    let selected_ue = ((half(a(2 * o + 3)) * k as f64).floor() as usize).min(k - 1);
    let mut alpha = half(a(2 * o + 2));
    if cfg.flags.binary_offload {
        alpha = if alpha >= 0.5 { 1.0 } else { 0.0 };
    }
    Ok(ControlTuple {
        speed: half(a(2 * o)) * cfg.power.max_speed,
        heading: (a(2 * o + 1) + 1.0) * PI,
        phases,
        alpha,
        selected_ue,
    })
}

/// Raw action that decodes to `ctrl` (UE index maps to the middle of its bin).
pub fn encode_control(ctrl: &ControlTuple, cfg: &ScenarioConfig) -> Vec<f64> {
    let mut raw = Vec::with_capacity(cfg.action_dim());
    for &theta in &ctrl.phases {
        raw.push(theta.cos());
        raw.push(theta.sin());
    }
    let k = cfg.num_ues as f64;
    raw.push(2.0 * ctrl.speed / cfg.power.max_speed - 1.0);
    raw.push(wrap_phase(ctrl.heading) / PI - 1.0);
    raw.push(2.0 * ctrl.alpha - 1.0);
    raw.push(2.0 * (ctrl.selected_ue as f64 + 0.5) / k - 1.0);
    clamp_action(&mut raw);
    raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig { num_ues: 6, ..ScenarioConfig::desk() }
    }

    fn raw_with(cfg: &ScenarioConfig, tail: [f64; 4]) -> Vec<f64> {
        let mut r = vec![0.0; 2 * cfg.ris.num_elements];
        r.extend_from_slice(&tail);
        r
    }

    #[test]
    fn decode_examples() {
        let c = cfg();
        let ctl = decode_action(&raw_with(&c, [1.0, 0.0, 0.0, -1.0]), &c).unwrap();
        assert_eq!(ctl.speed, 10.0);
        assert_eq!(ctl.selected_ue, 0);
        assert!(ctl.phases.iter().all(|&p| p == 0.0));
        let ctl = decode_action(&raw_with(&c, [0.0, 0.0, 0.0, 1.0]), &c).unwrap();
        assert_eq!(ctl.selected_ue, 5);
        assert_eq!(ctl.heading, PI);
        let mut r = raw_with(&c, [0.0; 4]);
        r[0] = 0.0;
        r[1] = 1.0;
        let ctl = decode_action(&r, &c).unwrap();
        assert!((ctl.phases[0] - PI / 2.0).abs() < 1e-15);
        assert!(matches!(decode_action(&[0.0; 3], &c), Err(Error::Shape { .. })));
    }

    #[test]
    fn binary_offload_rounds() {
        let mut c = cfg();
        c.flags.binary_offload = true;
        let hi = decode_action(&raw_with(&c, [0.0, 0.0, 0.0, 0.0]), &c).unwrap();
        let lo = decode_action(&raw_with(&c, [0.0, 0.0, -0.01, 0.0]), &c).unwrap();
        assert_eq!((hi.alpha, lo.alpha), (1.0, 0.0));
    }

    #[test]
    fn encode_examples() {
        let c = ScenarioConfig::table1();
        let scales = StateScales::new(&c, 1e9, 1e6, 1e9);
        let snap = WorldSnapshot {
            phases: vec![0.0; 64],
            x: 600.0,
            y: 400.0,
            speed: 0.0,
            energy_remaining: c.initial_energy,
            amec_cycles_remaining: 1e9,
            task_bits_remaining: 1e6,
            task_time_remaining: 30.0,
            ue_cycles_available: 5e8,
        };
        let s = encode_state(&snap, &scales).unwrap();
        assert_eq!(s.len(), 136);
        assert_eq!((s[0], s[1]), (1.0, 0.0));
        assert_eq!((s[128], s[129]), (1.0, 1.0));
        assert_eq!(s[131], 1.0);
        let bad = WorldSnapshot { x: 601.0, ..snap };
        assert!(matches!(encode_state(&bad, &scales), Err(Error::Encoding(_))));
    }

    proptest! {
        #[test]
        fn action_roundtrip(speed in 0.0f64..10.0, heading in 0.0f64..6.28, alpha in 0.0f64..1.0,
                            ue in 0usize..6, phases in proptest::collection::vec(0.0f64..6.283, 8)) {
            let c = cfg();
            let ctl = ControlTuple { speed, heading, phases, alpha, selected_ue: ue };
            let back = decode_action(&encode_control(&ctl, &c), &c).unwrap();
            prop_assert!((back.speed - speed).abs() < 1e-9);
            prop_assert!((back.heading - heading).abs() < 1e-9);
            prop_assert!((back.alpha - alpha).abs() < 1e-12);
            prop_assert_eq!(back.selected_ue, ue);
            for (a, b) in back.phases.iter().zip(&ctl.phases) {
                let d = (a - b).abs();
                prop_assert!(d < 1e-9 || (d - 2.0 * PI).abs() < 1e-9);
            }
        }

        #[test]
        fn decoded_controls_respect_bounds(raw in proptest::collection::vec(-3.0f64..3.0, 20)) {
            let c = ScenarioConfig::desk();
            let ctl = decode_action(&raw, &c).unwrap();
            prop_assert!(ctl.speed >= 0.0 && ctl.speed <= c.power.max_speed);
            prop_assert!(ctl.alpha >= 0.0 && ctl.alpha <= 1.0);
            prop_assert!(ctl.selected_ue < c.num_ues);
            prop_assert!(ctl.phases.iter().all(|p| (0.0..2.0 * PI).contains(p)));
        }

        #[test]
        fn state_roundtrip(x in 0.0f64..600.0, y in 0.0f64..400.0, e in 0.0f64..140e3,
                           th in proptest::collection::vec(0.0f64..6.283, 8)) {
            let c = ScenarioConfig::desk();
            let scales = StateScales::new(&c, 2e9, 8e5, 8e8);
            let snap = WorldSnapshot {
                phases: th, x, y, speed: 3.0, energy_remaining: e,
                amec_cycles_remaining: 1e9, task_bits_remaining: 4e5,
                task_time_remaining: 12.0, ue_cycles_available: 8e8,
            };
            let s = encode_state(&snap, &scales).unwrap();
            prop_assert_eq!(s.len(), 24);
            let back = decode_state(&s, &scales).unwrap();
            prop_assert!((back.x - x).abs() < 1e-9 && (back.y - y).abs() < 1e-9);
            prop_assert!((back.energy_remaining - e).abs() < 1e-6);
            for (a, b) in back.phases.iter().zip(&snap.phases) {
                let d = (a - b).abs();
                prop_assert!(d < 1e-9 || (d - 2.0 * PI).abs() < 1e-9);
            }
        }
    }
}
