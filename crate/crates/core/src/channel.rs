//! Radio-link model: probabilistic air-to-ground LoS, the RIS-cascaded
//! UE -> RIS -> UAV channel, and the legitimate / wiretap / secrecy rates.
//!
//! All gains are linear. The RIS is a uniform linear array whose axis is the
//! global x-axis; angles of departure are derived from geometry every call.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A point in the simulation frame, meters. Ground nodes sit at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }
}

/// Radio constants of the legitimate and wiretap links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfParams {
    /// UE uplink bandwidth, Hz.
    pub bandwidth_ue: f64,
    /// Eavesdropper bandwidth, Hz.
    pub bandwidth_eve: f64,
    /// UE transmit power, W.
    pub tx_power_ue: f64,
    /// Eavesdropping power term of the wiretap SNR, W.
    pub eve_power: f64,
    /// Receiver noise variance at the UAV, W.
    pub noise_var: f64,
    /// Receiver noise variance at the eavesdropper, W.
    pub noise_var_eve: f64,
    /// NLoS reference path loss at 1 m (linear).
    pub ref_pathloss: f64,
    /// RIS segment reference path loss at 1 m (linear).
    pub ris_ref_pathloss: f64,
    /// Wiretap reference path loss at 1 m (linear).
    pub eve_ref_pathloss: f64,
    /// Carrier frequency, Hz.
    pub carrier_freq: f64,
}

impl RfParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        let fields = [
            ("bandwidth_ue", self.bandwidth_ue),
            ("bandwidth_eve", self.bandwidth_eve),
            ("tx_power_ue", self.tx_power_ue),
            ("eve_power", self.eve_power),
            ("noise_var", self.noise_var),
            ("noise_var_eve", self.noise_var_eve),
            ("ref_pathloss", self.ref_pathloss),
            ("ris_ref_pathloss", self.ris_ref_pathloss),
            ("eve_ref_pathloss", self.eve_ref_pathloss),
            ("carrier_freq", self.carrier_freq),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{prefix}.{name} must be finite and > 0 (got {v})"));
            }
        }
    }
}

impl Default for RfParams {
    fn default() -> Self {
        // -70 dB reference gain, 1 MHz, 1 mW, 1e-12 W noise, 3.2 GHz.
        let ref_gain = db_to_linear(-70.0);
        Self {
            bandwidth_ue: 1e6,
            bandwidth_eve: 1e6,
            tx_power_ue: 1e-3,
            eve_power: 1e-3,
            noise_var: 1e-12,
            noise_var_eve: 1e-12,
            ref_pathloss: ref_gain,
            ris_ref_pathloss: ref_gain,
            eve_ref_pathloss: ref_gain,
            carrier_freq: 3.2e9,
        }
    }
}

/// Environment constants of the sigmoid LoS model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LosConstants {
    pub env_c: f64,
    pub env_b: f64,
}

impl Default for LosConstants {
    fn default() -> Self {
        Self { env_c: 9.61, env_b: 0.16 }
    }
}

/// RIS geometry plus the current phase vector (radians in `[0, 2pi)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub position: Position3D,
    pub num_elements: usize,
    pub element_spacing: f64,
    pub phases: Vec<f64>,
}

impl RisConfig {
    /// Surface with all phases at zero.
    pub fn new(position: Position3D, num_elements: usize, element_spacing: f64) -> Self {
        Self {
            position,
            num_elements,
            element_spacing,
            phases: vec![0.0; num_elements],
        }
    }

    /// Replaces the phase vector, wrapping every entry into `[0, 2pi)`.
    pub fn set_phases(&mut self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.num_elements {
            return Err(Error::Shape {
                expected: self.num_elements,
                got: phases.len(),
            });
        }
        for (dst, &p) in self.phases.iter_mut().zip(phases) {
            *dst = wrap_phase(p);
        }
        Ok(())
    }
}

/// Per-slot channel products for one served UE.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub los_prob: f64,
    pub cascade_gain: Complex64,
    pub effective_gain: f64,
    pub legit_rate: f64,
    pub eve_rates: Vec<f64>,
    pub secrecy_rate: f64,
}

/// Channel gain pieces produced by [`effective_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBreakdown {
    pub los_prob: f64,
    pub cascade_gain: Complex64,
    /// Direct NLoS power gain `gamma_0 / d_UA^2`.
    pub nlos_gain: f64,
    pub effective_gain: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Elevation of `uav` seen from `ground`, degrees in `(0, 90]`.
pub fn elevation_angle(uav: &Position3D, ground: &Position3D) -> f64 {
    let r = uav.horizontal_distance(ground);
    if r == 0.0 {
        return 90.0;
    }
    (uav.z - ground.z).atan2(r).to_degrees()
}

/// Sigmoid LoS probability for an elevation angle in degrees.
pub fn los_probability(theta_deg: f64, consts: &LosConstants) -> f64 {
    1.0 / (1.0 + consts.env_c * (-consts.env_b * (theta_deg - consts.env_c)).exp())
}

/// Angle of departure along the ULA (x) axis for the segment `a -> b`.
pub fn departure_angle(a: &Position3D, b: &Position3D) -> Result<f64> {
    let d = a.distance(b);
    if d == 0.0 {
        return Err(Error::SingularGeometry("coincident segment endpoints".into()));
    }
    Ok((b.x - a.x).atan2(d))
}

/// ULA response of one path segment: `sqrt(lambda_0)/d^2` times unit phasors
/// `exp(-j 2pi/lambda * m * spacing * sin(aod))`, `m = 0..num_elements`.
pub fn steering_vector(
    distance: f64,
    aod: f64,
    num_elements: usize,
    spacing: f64,
    rf: &RfParams,
) -> Result<Vec<Complex64>> {
    if !(distance > 0.0) {
        return Err(Error::SingularGeometry(format!(
            "segment length must be > 0 (got {distance})"
        )));
    }
    let amplitude = rf.ris_ref_pathloss.sqrt() / (distance * distance);
    let step = -2.0 * PI / rf.wavelength() * spacing * aod.sin();
    Ok((0..num_elements)
        .map(|m| {
            if m == 0 {
                Complex64::new(amplitude, 0.0)
            } else {
                Complex64::from_polar(amplitude, step * m as f64)
            }
        })
        .collect())
}

/// UE -> RIS and RIS -> UAV steering vectors.
pub fn segment_responses(
    ue: &Position3D,
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let d_ur = ue.distance(&ris.position);
    let d_ra = ris.position.distance(uav);
    if d_ur == 0.0 || d_ra == 0.0 {
        return Err(Error::SingularGeometry("RIS coincides with UE or UAV".into()));
    }
    let incoming = steering_vector(
        d_ur,
        departure_angle(ue, &ris.position)?,
        ris.num_elements,
        ris.element_spacing,
        rf,
    )?;
    let outgoing = steering_vector(
        d_ra,
        departure_angle(&ris.position, uav)?,
        ris.num_elements,
        ris.element_spacing,
        rf,
    )?;
    Ok((incoming, outgoing))
}

/// `sum_o u_o exp(j theta_o) v_o` for given segment responses and phases.
pub fn combine_cascade(incoming: &[Complex64], phases: &[f64], outgoing: &[Complex64]) -> Complex64 {
    incoming
        .iter()
        .zip(outgoing)
        .zip(phases)
        .map(|((u, v), &theta)| u * Complex64::from_polar(1.0, theta) * v)
        .sum()
}

/// Reflected UE -> RIS -> UAV amplitude under the surface's current phases.
pub fn cascade_gain(
    ue: &Position3D,
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
) -> Result<Complex64> {
    if ris.phases.len() != ris.num_elements {
        return Err(Error::Shape {
            expected: ris.num_elements,
            got: ris.phases.len(),
        });
    }
    let (u, v) = segment_responses(ue, ris, uav, rf)?;
    Ok(combine_cascade(&u, &ris.phases, &v))
}

/// Phases that turn every cascade summand into a nonnegative real number.
/// The stored phases of `ris` are ignored.
pub fn phase_alignment_oracle(
    ue: &Position3D,
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
) -> Result<Vec<f64>> {
    let (u, v) = segment_responses(ue, ris, uav, rf)?;
    Ok(u.iter().zip(&v).map(|(a, b)| wrap_phase(-(a * b).arg())).collect())
}

/// Channel power gain `zeta |g_cascade|^2 + (1 - zeta) gamma_0 / d_UA^2`
/// with the LoS weight taken from the elevation angle.
pub fn effective_gain(
    ue: &Position3D,
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
    consts: &LosConstants,
) -> Result<GainBreakdown> {
    let los = los_probability(elevation_angle(uav, ue), consts);
    effective_gain_with_los(ue, ris, uav, rf, los)
}

/// [`effective_gain`] with an explicit LoS weight (used for Bernoulli LoS
/// sampling and for tests of the two branches).
pub fn effective_gain_with_los(
    ue: &Position3D,
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
    los_prob: f64,
) -> Result<GainBreakdown> {
    let d_ua = ue.distance(uav);
    if d_ua == 0.0 {
        return Err(Error::SingularGeometry("UE coincides with UAV".into()));
    }
    let cascade = cascade_gain(ue, ris, uav, rf)?;
    let nlos_gain = rf.ref_pathloss / (d_ua * d_ua);
    Ok(GainBreakdown {
        los_prob,
        cascade_gain: cascade,
        nlos_gain,
        effective_gain: los_prob * cascade.norm_sqr() + (1.0 - los_prob) * nlos_gain,
    })
}

/// Shannon rate of the UE -> UAV link for power gain `h`.
pub fn legit_rate(rf: &RfParams, h: f64) -> f64 {
    rf.bandwidth_ue * (1.0 + rf.tx_power_ue / rf.noise_var * h).log2()
}

/// Wiretap rate of one eavesdropper listening to the direct UE emission.
pub fn eve_rate(rf: &RfParams, ue: &Position3D, eve: &Position3D) -> Result<f64> {
    let d = ue.distance(eve);
    if d == 0.0 {
        return Err(Error::SingularGeometry("UE coincides with eavesdropper".into()));
    }
    let snr = rf.eve_power * rf.eve_ref_pathloss / (rf.noise_var_eve * d * d);
    Ok(rf.bandwidth_eve * (1.0 + snr).log2())
}

/// `max(legit - max(eves), 0)`; `legit` when there is no eavesdropper.
pub fn secrecy_rate(legit: f64, eve_rates: &[f64]) -> f64 {
    let worst = eve_rates.iter().copied().fold(0.0_f64, f64::max);
    (legit - worst).max(0.0)
}

/// Full link evaluation for one served UE. `los_override` replaces the
/// elevation-derived LoS weight.
pub fn evaluate_link(
    ue: &Position3D,
    eves: &[Position3D],
    ris: &RisConfig,
    uav: &Position3D,
    rf: &RfParams,
    consts: &LosConstants,
    los_override: Option<f64>,
) -> Result<LinkState> {
    let gain = match los_override {
        Some(w) => effective_gain_with_los(ue, ris, uav, rf, w)?,
        None => effective_gain(ue, ris, uav, rf, consts)?,
    };
    let legit = legit_rate(rf, gain.effective_gain);
    let eve_rates = eves
        .iter()
        .map(|e| eve_rate(rf, ue, e))
        .collect::<Result<Vec<_>>>()?;
    let secrecy = secrecy_rate(legit, &eve_rates);
    Ok(LinkState {
        los_prob: gain.los_prob,
        cascade_gain: gain.cascade_gain,
        effective_gain: gain.effective_gain,
        legit_rate: legit,
        eve_rates,
        secrecy_rate: secrecy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn scene(n: usize) -> (Position3D, RisConfig, Position3D, RfParams) {
        let rf = RfParams::default();
        let ris = RisConfig::new(Position3D::new(200.0, 200.0, 20.0), n, rf.wavelength() / 2.0);
        (Position3D::ground(120.0, 90.0), ris, Position3D::new(310.0, 260.0, 60.0), rf)
    }

    #[test]
    fn elevation_examples() {
        let uav = Position3D::new(0.0, 0.0, 60.0);
        assert!(close(elevation_angle(&uav, &Position3D::ground(60.0, 0.0)), 45.0, 1e-12));
        assert_eq!(elevation_angle(&uav, &Position3D::ground(0.0, 0.0)), 90.0);
        let g = Position3D::ground(60.0 * 3f64.sqrt(), 0.0);
        assert!(close(elevation_angle(&uav, &g), 30.0, 1e-12));
    }

    #[test]
    fn los_examples() {
        let c = LosConstants::default();
        assert!(close(los_probability(9.61, &c), 1.0 / 10.61, 1e-12));
        // 1 / (1 + 9.61 exp(-0.16 * 80.39))
        assert!((los_probability(90.0, &c) - 0.999976).abs() < 1e-6);
        // direct evaluation gives 0.96769..., quoted loosely elsewhere as 0.972
        let oracle = 1.0 / (1.0 + 9.61 * (-0.16f64 * (45.0 - 9.61)).exp());
        assert!(close(los_probability(45.0, &c), oracle, 1e-12));
        assert!((los_probability(45.0, &c) - 0.972).abs() < 5e-3);
    }

    #[test]
    fn steering_prefactor_and_broadside() {
        let rf = RfParams { ris_ref_pathloss: 1e-7, ..RfParams::default() };
        let v = steering_vector(100.0, 0.3, 16, 0.05, &rf).unwrap();
        assert_eq!(v[0], Complex64::new(1e-7f64.sqrt() / 1e4, 0.0));
        for e in &v {
            assert!(close(e.norm(), 3.16227766e-8, 1e-8));
        }
        let flat = steering_vector(100.0, 0.0, 8, 0.05, &rf).unwrap();
        assert!(flat.iter().all(|e| *e == flat[0]));
        assert!(matches!(
            steering_vector(0.0, 0.0, 4, 0.05, &rf),
            Err(Error::SingularGeometry(_))
        ));
    }

    #[test]
    fn cascade_single_element_and_aligned() {
        let (ue, mut ris, uav, rf) = scene(1);
        let (u, v) = segment_responses(&ue, &ris, &uav, &rf).unwrap();
        assert_eq!(cascade_gain(&ue, &ris, &uav, &rf).unwrap(), u[0] * v[0]);

        let (ue, mut big, uav, rf) = scene(64);
        let phases = phase_alignment_oracle(&ue, &big, &uav, &rf).unwrap();
        big.set_phases(&phases).unwrap();
        let (u, v) = segment_responses(&ue, &big, &uav, &rf).unwrap();
        let g = cascade_gain(&ue, &big, &uav, &rf).unwrap();
        assert!(close(g.norm(), 64.0 * u[0].norm() * v[0].norm(), 1e-9));

        // single element oracle is -arg(u v) wrapped
        let theta = phase_alignment_oracle(&ue, &ris, &uav, &rf).unwrap();
        let (u, v) = segment_responses(&ue, &ris, &uav, &rf).unwrap();
        assert!(close(theta[0], wrap_phase(-(u[0] * v[0]).arg()), 1e-12));
        ris.set_phases(&theta).unwrap();
        let g = cascade_gain(&ue, &ris, &uav, &rf).unwrap();
        assert!(g.im.abs() <= 1e-12 * g.re && g.re > 0.0);
    }

    #[test]
    fn oracle_zero_when_already_aligned() {
        // both segments orthogonal to the x axis: sin(aod) = 0 everywhere
        let rf = RfParams::default();
        let ris = RisConfig::new(Position3D::new(100.0, 100.0, 20.0), 8, 0.05);
        let ue = Position3D::ground(100.0, 0.0);
        let uav = Position3D::new(100.0, 250.0, 60.0);
        let theta = phase_alignment_oracle(&ue, &ris, &uav, &rf).unwrap();
        assert!(theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn oracle_beats_random_phases() {
        let (ue, mut ris, uav, rf) = scene(16);
        let best = phase_alignment_oracle(&ue, &ris, &uav, &rf).unwrap();
        ris.set_phases(&best).unwrap();
        let top = cascade_gain(&ue, &ris, &uav, &rf).unwrap().norm();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            ris.set_phases(&p).unwrap();
            assert!(cascade_gain(&ue, &ris, &uav, &rf).unwrap().norm() <= top * (1.0 + 1e-12));
        }
    }

    #[test]
    fn random_phase_power_is_incoherent_sum() {
        let (ue, mut ris, uav, rf) = scene(64);
        let (u, v) = segment_responses(&ue, &ris, &uav, &rf).unwrap();
        let unit = (u[0].norm() * v[0].norm()).powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 20_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let p: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            ris.set_phases(&p).unwrap();
            acc += cascade_gain(&ue, &ris, &uav, &rf).unwrap().norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!(close(mean, 64.0 * unit, 0.05), "{} vs {}", mean, 64.0 * unit);
    }

    #[test]
    fn coherent_gain_doubles_with_elements() {
        let (ue, mut a, uav, rf) = scene(8);
        let (_, mut b, _, _) = scene(16);
        a.set_phases(&phase_alignment_oracle(&ue, &a, &uav, &rf).unwrap()).unwrap();
        b.set_phases(&phase_alignment_oracle(&ue, &b, &uav, &rf).unwrap()).unwrap();
        let ga = cascade_gain(&ue, &a, &uav, &rf).unwrap().norm();
        let gb = cascade_gain(&ue, &b, &uav, &rf).unwrap().norm();
        assert!(close(gb, 2.0 * ga, 1e-9));
    }

    #[test]
    fn effective_gain_branches() {
        let (ue, ris, _, _) = scene(8);
        let rf = RfParams { ref_pathloss: 1e-7, ..RfParams::default() };
        // UAV exactly 100 m above the UE
        let uav = Position3D::new(ue.x, ue.y, 100.0);
        let nlos = effective_gain_with_los(&ue, &ris, &uav, &rf, 0.0).unwrap();
        assert!(close(nlos.effective_gain, 1e-11, 1e-12));
        let los = effective_gain_with_los(&ue, &ris, &uav, &rf, 1.0).unwrap();
        assert_eq!(los.effective_gain, los.cascade_gain.norm_sqr());
        let mixed = effective_gain(&ue, &ris, &uav, &rf, &LosConstants::default()).unwrap();
        let lo = nlos.effective_gain.min(los.effective_gain);
        let hi = nlos.effective_gain.max(los.effective_gain);
        assert!(mixed.effective_gain >= lo && mixed.effective_gain <= hi);
    }

    #[test]
    fn rate_examples() {
        let rf = RfParams::default();
        let snr_unit = rf.noise_var / rf.tx_power_ue;
        assert!(close(legit_rate(&rf, snr_unit), 1e6, 1e-12));
        assert_eq!(legit_rate(&rf, 0.0), 0.0);
        assert!(close(legit_rate(&rf, 3.0 * snr_unit), 2e6, 1e-12));

        let rf = RfParams {
            eve_power: 1e-3,
            eve_ref_pathloss: 1e-7,
            noise_var_eve: 1e-12,
            bandwidth_eve: 1e6,
            ..RfParams::default()
        };
        let ue = Position3D::ground(0.0, 0.0);
        let r = eve_rate(&rf, &ue, &Position3D::ground(100.0, 0.0)).unwrap();
        assert!(close(r, 1e6 * 1.01f64.log2(), 1e-12));
        assert!((r / 1.435e4 - 1.0).abs() < 1e-3);
        let far = eve_rate(&rf, &ue, &Position3D::ground(1e9, 0.0)).unwrap();
        assert!(far < 1e-6);
        // SNR of exactly one at d = 10 m
        let unit = eve_rate(&rf, &ue, &Position3D::ground(10.0, 0.0)).unwrap();
        assert!(close(unit, 1e6, 1e-12));
        assert!(eve_rate(&rf, &ue, &ue).is_err());
    }

    #[test]
    fn secrecy_examples() {
        assert_eq!(secrecy_rate(2e6, &[5e5, 3e5]), 1.5e6);
        assert_eq!(secrecy_rate(1e5, &[2e5]), 0.0);
        assert_eq!(secrecy_rate(1e6, &[]), 1e6);
    }

    #[test]
    fn wavelength_matches_light_speed() {
        let rf = RfParams::default();
        assert!(close(rf.wavelength() * rf.carrier_freq, SPEED_OF_LIGHT, 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn los_monotone_and_bounded(a in 0.01f64..90.0, b in 0.01f64..90.0) {
                let c = LosConstants::default();
                let (pa, pb) = (los_probability(a, &c), los_probability(b, &c));
                prop_assert!(pa > 0.0 && pa < 1.0);
                if a < b { prop_assert!(pa <= pb); }
            }

            #[test]
            fn secrecy_bounded_and_monotone(l in 0.0f64..1e7, e1 in 0.0f64..1e7, e2 in 0.0f64..1e7, dl in 0.0f64..1e6) {
                let s = secrecy_rate(l, &[e1, e2]);
                prop_assert!(s >= 0.0 && s <= l);
                prop_assert!(secrecy_rate(l + dl, &[e1, e2]) >= s);
                prop_assert!(secrecy_rate(l, &[e1 + dl, e2]) <= s);
            }

            #[test]
            fn rates_scale_with_bandwidth(h in 0.0f64..1e-8, k in 0.1f64..10.0) {
                let rf = RfParams::default();
                let scaled = RfParams { bandwidth_ue: rf.bandwidth_ue * k, ..rf.clone() };
                let (a, b) = (legit_rate(&rf, h), legit_rate(&scaled, h));
                prop_assert!((b - k * a).abs() <= 1e-9 * b.abs().max(1e-300));
            }

            #[test]
            fn wrapped_phase_in_range(t in -100.0f64..100.0) {
                let w = wrap_phase(t);
                prop_assert!((0.0..2.0 * PI).contains(&w));
            }
        }
    }
}
