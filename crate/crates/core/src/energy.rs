//! Rotary-wing propulsion energy, partial-offloading latency, computation
//! energy and the secrecy-energy-efficiency ratio.

use serde::{Deserialize, Serialize};

use crate::channel::RfParams;
use crate::error::{Error, Result};

/// Rotary-wing power model constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavPowerParams {
    /// Blade profile power in hover, W.
    pub blade_power: f64,
    /// Induced power in hover, W.
    pub induced_power: f64,
    /// Climb power per m/s of vertical speed, W.
    pub vertical_power: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub rotor_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    /// kg/m^3.
    pub air_density: f64,
    pub rotor_solidity: f64,
    /// m^2.
    pub rotor_disc_area: f64,
    /// m/s.
    pub max_speed: f64,
    /// s.
    pub slot_duration: f64,
    /// When false, descending costs nothing extra (`iota_v * max(v_v, 0)`);
    /// when true the signed vertical speed is used.
    #[serde(default)]
    pub signed_vertical: bool,
}

impl Default for UavPowerParams {
    /// Constants exactly as tabulated for the reference scenario.
    fn default() -> Self {
        Self {
            blade_power: 79.4,
            induced_power: 89.4,
            vertical_power: 11.46,
            tip_speed: 120.0,
            rotor_induced_velocity: 4.0,
            fuselage_drag_ratio: 0.6,
            air_density: 0.051,
            rotor_solidity: 23.0,
            rotor_disc_area: 0.5,
            max_speed: 10.0,
            slot_duration: 0.5,
            signed_vertical: false,
        }
    }
}

impl UavPowerParams {
    /// Canonical rotary-wing airframe constants (sea-level air density,
    /// solidity 0.05, disc area 0.503 m^2).
    pub fn physical() -> Self {
        Self {
            blade_power: 79.86,
            induced_power: 88.63,
            rotor_induced_velocity: 4.03,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_disc_area: 0.503,
            ..Self::default()
        }
    }

    pub fn hover_power(&self) -> f64 {
        self.blade_power + self.induced_power
    }

    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        let fields = [
            ("blade_power", self.blade_power),
            ("induced_power", self.induced_power),
            ("vertical_power", self.vertical_power),
            ("tip_speed", self.tip_speed),
            ("rotor_induced_velocity", self.rotor_induced_velocity),
            ("fuselage_drag_ratio", self.fuselage_drag_ratio),
            ("air_density", self.air_density),
            ("rotor_solidity", self.rotor_solidity),
            ("rotor_disc_area", self.rotor_disc_area),
            ("max_speed", self.max_speed),
            ("slot_duration", self.slot_duration),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{prefix}.{name} must be finite and > 0 (got {v})"));
            }
        }
    }
}

/// One UE's computing task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub cycles_per_bit: f64,
    pub data_bits: f64,
    /// Completion deadline, s.
    pub deadline: f64,
}

impl Task {
    pub fn total_cycles(&self) -> f64 {
        self.cycles_per_bit * self.data_bits
    }
}

/// CPU and energy constants of the UE and the edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeParams {
    /// cycles/s available locally at a UE.
    pub ue_cpu_rate: f64,
    /// cycles/s the edge server reserves per task.
    pub amec_cpu_rate: f64,
    /// Edge cycle budget per episode; `None` means cycles_per_bit times the
    /// total data of all tasks.
    pub amec_cycle_budget: Option<f64>,
    pub switched_capacitance: f64,
    pub exponent: f64,
}

impl Default for ComputeParams {
    fn default() -> Self {
        Self {
            ue_cpu_rate: 1e8,
            amec_cpu_rate: 1e9,
            amec_cycle_budget: None,
            switched_capacitance: 1e-28,
            exponent: 3.0,
        }
    }
}

impl ComputeParams {
    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        for (name, v) in [
            ("ue_cpu_rate", self.ue_cpu_rate),
            ("amec_cpu_rate", self.amec_cpu_rate),
            ("switched_capacitance", self.switched_capacitance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{prefix}.{name} must be finite and > 0 (got {v})"));
            }
        }
        if !(self.exponent >= 1.0 && self.exponent.is_finite()) {
            problems.push(format!("{prefix}.exponent must be >= 1 (got {})", self.exponent));
        }
        if let Some(b) = self.amec_cycle_budget {
            if !(b.is_finite() && b > 0.0) {
                problems.push(format!("{prefix}.amec_cycle_budget must be > 0 (got {b})"));
            }
        }
    }

    /// Edge energy per offloaded cycle, `G (c_A)^(chi - 1)`.
    pub fn amec_energy_per_cycle(&self) -> f64 {
        self.switched_capacitance * self.amec_cpu_rate.powf(self.exponent - 1.0)
    }
}

/// Propulsion power at horizontal speed `v_h` and vertical speed `v_v`.
pub fn propulsion_power(v_h: f64, v_v: f64, p: &UavPowerParams) -> f64 {
    let v2 = v_h * v_h;
    let v0_2 = p.rotor_induced_velocity * p.rotor_induced_velocity;
    let blade = p.blade_power * (1.0 + 3.0 * v2 / (p.tip_speed * p.tip_speed));
    let parasite = 0.5
        * p.fuselage_drag_ratio
        * p.air_density
        * p.rotor_solidity
        * p.rotor_disc_area
        * v2
        * v_h;
    let induced =
        p.induced_power * ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2)).sqrt();
    let climb = if p.signed_vertical { v_v } else { v_v.max(0.0) };
    blade + parasite + induced + p.vertical_power * climb
}

/// Energy spent over one slot, J.
pub fn propulsion_energy(v_h: f64, v_v: f64, p: &UavPowerParams) -> f64 {
    p.slot_duration * propulsion_power(v_h, v_v, p)
}

/// Completion latency of a task split with offload share `alpha`. Returns
/// `f64::INFINITY` when anything is offloaded over a zero secrecy rate.
pub fn offload_latency(alpha: f64, task: &Task, cp: &ComputeParams, avg_secrecy_rate: f64) -> f64 {
    let cycles = task.total_cycles();
    let local = (1.0 - alpha) * cycles / cp.ue_cpu_rate;
    if alpha == 0.0 {
        return local;
    }
    if !(avg_secrecy_rate > 0.0) {
        return f64::INFINITY;
    }
    local + alpha * (cycles / cp.amec_cpu_rate + task.data_bits / avg_secrecy_rate)
}

/// Edge computation energy of the offloaded share.
pub fn compute_energy_amec(alpha: f64, task: &Task, cp: &ComputeParams) -> f64 {
    alpha * cp.amec_energy_per_cycle() * task.total_cycles()
}

/// UE-side energy: uplink transmission of the offloaded share plus local
/// computation of the rest.
pub fn compute_energy_ue(
    alpha: f64,
    task: &Task,
    cp: &ComputeParams,
    rf: &RfParams,
    avg_secrecy_rate: f64,
) -> f64 {
    let local = (1.0 - alpha)
        * cp.switched_capacitance
        * cp.ue_cpu_rate.powf(cp.exponent - 1.0)
        * task.total_cycles();
    if alpha == 0.0 {
        return local;
    }
    if !(avg_secrecy_rate > 0.0) {
        return f64::INFINITY;
    }
    alpha * task.data_bits / avg_secrecy_rate * rf.tx_power_ue + local
}

/// Secrecy energy efficiency, bit/J.
pub fn see_objective(sum_secrecy: f64, total_propulsion: f64, total_amec_compute: f64) -> Result<f64> {
    let denom = total_propulsion + total_amec_compute;
    if !(denom > 0.0) {
        return Err(Error::UndefinedObjective);
    }
    Ok(sum_secrecy / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    // Term-by-term evaluation, written independently of `propulsion_power`.
    fn power_terms(v: f64, p: &UavPowerParams) -> [f64; 3] {
        let blade = p.blade_power * (1.0 + 3.0 * v.powi(2) / p.tip_speed.powi(2));
        let parasite = 0.5
            * p.fuselage_drag_ratio
            * p.air_density
            * p.rotor_solidity
            * p.rotor_disc_area
            * v.powi(3);
        let vi = p.rotor_induced_velocity;
        let inner = (1.0 + v.powi(4) / (4.0 * vi.powi(4))).sqrt() - v.powi(2) / (2.0 * vi.powi(2));
        [blade, parasite, p.induced_power * inner.sqrt()]
    }

    #[test]
    fn hover_and_climb_power() {
        let p = UavPowerParams::default();
        assert_eq!(propulsion_power(0.0, 0.0, &p), 79.4 + 89.4);
        assert!(close(propulsion_power(0.0, 1.0, &p), 180.26, 1e-12));
        let sum: f64 = power_terms(4.0, &p).iter().sum();
        assert!(close(propulsion_power(4.0, 0.0, &p), sum, 1e-12));
        assert!((sum - 161.2).abs() < 0.05, "{sum}");
    }

    #[test]
    fn descent_is_free_unless_signed() {
        let mut p = UavPowerParams::default();
        assert_eq!(propulsion_power(0.0, -2.0, &p), p.hover_power());
        p.signed_vertical = true;
        assert!(close(propulsion_power(0.0, -2.0, &p), p.hover_power() - 22.92, 1e-12));
    }

    #[test]
    fn energy_examples() {
        let mut p = UavPowerParams::default();
        assert!(close(propulsion_energy(0.0, 0.0, &p), 84.4, 1e-12));
        p.slot_duration = 1.0;
        assert!(close(propulsion_energy(0.0, 0.0, &p), 168.8, 1e-12));
        p.slot_duration = 0.0;
        assert_eq!(propulsion_energy(3.0, 0.0, &p), 0.0);
    }

    #[test]
    fn power_terms_shape() {
        let p = UavPowerParams::default();
        let mut prev = power_terms(0.0, &p);
        for i in 1..100 {
            let t = power_terms(i as f64 * 0.1, &p);
            assert!(t[2] < prev[2]);
            assert!(t[1] > prev[1]);
            prev = t;
        }
    }

    fn task() -> Task {
        Task { cycles_per_bit: 1e3, data_bits: 1e6, deadline: 30.0 }
    }

    #[test]
    fn latency_examples() {
        let cp = ComputeParams::default();
        let t = task();
        assert!(close(offload_latency(0.0, &t, &cp, 0.0), 1e9 / 1e8, 1e-12));
        assert!(close(offload_latency(1.0, &t, &cp, 1e6), 2.0, 1e-12));
        assert!(close(offload_latency(0.5, &t, &cp, 1e6), 6.0, 1e-12));
        assert_eq!(offload_latency(0.2, &t, &cp, 0.0), f64::INFINITY);
        assert!(offload_latency(0.5, &t, &cp, 2e6) < offload_latency(0.5, &t, &cp, 1e6));
    }

    #[test]
    fn latency_is_affine_in_alpha() {
        let cp = ComputeParams::default();
        let t = task();
        let (l0, l1) = (offload_latency(0.0, &t, &cp, 3e5), offload_latency(1.0, &t, &cp, 3e5));
        for i in 0..=10 {
            let a = i as f64 / 10.0;
            let l = offload_latency(a, &t, &cp, 3e5);
            assert!(close(l, (1.0 - a) * l0 + a * l1, 1e-12));
            assert!(l >= l0.min(l1) - 1e-12 && l <= l0.max(l1) + 1e-12);
        }
    }

    #[test]
    fn compute_energy_examples() {
        let cp = ComputeParams::default();
        let t = Task { cycles_per_bit: 1e3, data_bits: 1e6, deadline: 30.0 };
        assert_eq!(compute_energy_amec(0.0, &t, &cp), 0.0);
        assert!(close(compute_energy_amec(1.0, &t, &cp), 0.1, 1e-12));
        let linear = ComputeParams { exponent: 1.0, ..cp.clone() };
        let a = compute_energy_amec(0.3, &t, &linear);
        let b = compute_energy_amec(
            0.3,
            &t,
            &ComputeParams { amec_cpu_rate: 7e9, ..linear.clone() },
        );
        assert!(close(a, 0.3 * 1e-28 * 1e9, 1e-12) && a == b);

        let rf = RfParams::default();
        assert!(close(compute_energy_ue(0.0, &t, &cp, &rf, 0.0), 1e-28 * 1e16 * 1e9, 1e-12));
        assert!(close(compute_energy_ue(1.0, &t, &cp, &rf, 1e6), 1e-3, 1e-12));
        assert!(compute_energy_ue(1.0, &t, &cp, &rf, 1e300) < 1e-290);
        assert_eq!(compute_energy_ue(0.5, &t, &cp, &rf, 0.0), f64::INFINITY);
    }

    #[test]
    fn see_examples() {
        assert_eq!(see_objective(0.0, 100.0, 1.0).unwrap(), 0.0);
        assert!(close(see_objective(1e6, 999.0, 1.0).unwrap(), 1e3, 1e-12));
        let a = see_objective(3e5, 80.0, 4.0).unwrap();
        let b = see_objective(6e5, 160.0, 8.0).unwrap();
        assert!(close(a, b, 1e-12));
        assert!(matches!(see_objective(1.0, 0.0, 0.0), Err(Error::UndefinedObjective)));
    }
}
