use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::phase_alignment_oracle;
use crate::ddpg::train::splitmix64;
use crate::env::{clamp_action, decode_action, AmecEnv, ScenarioConfig};
use crate::error::Result;
use crate::rl::{EpisodeMetrics, Environment, Step};

/// Rewrites part of every action before the environment sees it.
pub trait ActionOverride {
    fn kind(&self) -> &'static str;

    /// Scenario changes the override needs (e.g. a take-off point).
    fn adjust_scenario(&self, _cfg: &mut ScenarioConfig) {}

    fn on_reset(&mut self, _seed: u64, _env: &AmecEnv) {}

    /// `action` arrives clamped to `[-1, 1]`.
    fn apply(&mut self, env: &AmecEnv, action: &mut [f64]) -> Result<()>;
}

/// Writes `(cos, sin)` pairs for `phases` into the head of `action`.
pub fn write_phases(action: &mut [f64], phases: &[f64]) {
    for (o, &theta) in phases.iter().enumerate() {
        action[2 * o] = theta.cos();
        action[2 * o + 1] = theta.sin();
    }
}

/// Fixed RIS phases: zeros, or one uniform draw per episode.
#[derive(Debug, Clone)]
pub struct NoRis {
    pub random_phases: bool,
    phases: Vec<f64>,
}

impl NoRis {
    pub fn zeros() -> Self {
        Self { random_phases: false, phases: Vec::new() }
    }

    pub fn random() -> Self {
        Self { random_phases: true, phases: Vec::new() }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

impl ActionOverride for NoRis {
    fn kind(&self) -> &'static str {
        "ablation-no-ris"
    }

    fn on_reset(&mut self, seed: u64, env: &AmecEnv) {
        let o = env.config().ris.num_elements;
        self.phases = if self.random_phases {
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x5249_5300));
            (0..o).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
        } else {
            vec![0.0; o]
        };
    }

    fn apply(&mut self, env: &AmecEnv, action: &mut [f64]) -> Result<()> {
        if self.phases.len() != env.config().ris.num_elements {
            self.phases = vec![0.0; env.config().ris.num_elements];
        }
        write_phases(action, &self.phases);
        Ok(())
    }
}

/// Hover in place for the whole episode, taking off at `hover_xy`
/// (the area centroid when `None`).
#[derive(Debug, Clone, Default)]
pub struct NoTrajectory {
    pub hover_xy: Option<[f64; 2]>,
}

impl ActionOverride for NoTrajectory {
    fn kind(&self) -> &'static str {
        "ablation-no-traj"
    }

    fn adjust_scenario(&self, cfg: &mut ScenarioConfig) {
        cfg.start_xy = Some(self.hover_xy.unwrap_or_else(|| cfg.area.centroid()));
    }

    fn apply(&mut self, env: &AmecEnv, action: &mut [f64]) -> Result<()> {
        action[2 * env.config().ris.num_elements] = -1.0;
        Ok(())
    }
}

/// Phases aligned for the selected UE at the post-move UAV position.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePhase;

impl ActionOverride for OraclePhase {
    fn kind(&self) -> &'static str {
        "oracle-phase"
    }

    fn apply(&mut self, env: &AmecEnv, action: &mut [f64]) -> Result<()> {
        let phases = oracle_phases(env, action)?;
        write_phases(action, &phases);
        Ok(())
    }
}

/// Oracle phases for the UE that `action` selects, at the position it flies to.
pub fn oracle_phases(env: &AmecEnv, action: &[f64]) -> Result<Vec<f64>> {
    let cfg = env.config();
    let ctl = decode_action(action, cfg)?;
    let uav = env.preview_position(action)?;
    phase_alignment_oracle(&env.ues()[ctl.selected_ue], env.ris(), &uav, &cfg.rf)
}

/// An [`AmecEnv`] whose actions pass through an [`ActionOverride`].
#[derive(Debug, Clone)]
pub struct Wrapped<O> {
    env: AmecEnv,
    over: O,
}

impl<O: ActionOverride> Wrapped<O> {
    pub fn new(mut cfg: ScenarioConfig, over: O) -> Result<Self> {
        over.adjust_scenario(&mut cfg);
        Ok(Self { env: AmecEnv::new(cfg)?, over })
    }

    pub fn inner(&self) -> &AmecEnv {
        &self.env
    }

    pub fn inner_mut(&mut self) -> &mut AmecEnv {
        &mut self.env
    }

    pub fn overrider(&self) -> &O {
        &self.over
    }

    pub fn kind(&self) -> &'static str {
        self.over.kind()
    }
}

impl<O: ActionOverride> Environment for Wrapped<O> {
    fn state_dim(&self) -> usize {
        self.env.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.env.action_dim()
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let s = self.env.reset(seed)?;
        self.over.on_reset(seed, &self.env);
        Ok(s)
    }

    fn step(&mut self, action: &mut [f64]) -> Result<Step> {
        if action.len() == self.env.action_dim() {
            clamp_action(action);
            self.over.apply(&self.env, action)?;
        }
        Environment::step(&mut self.env, action)
    }

    fn episode_metrics(&self) -> Option<EpisodeMetrics> {
        self.env.episode_metrics()
    }

    fn episode_log(&self) -> Option<&crate::env::EpisodeLog> {
        self.env.episode_log()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::cascade_gain;
    use crate::energy::propulsion_energy;

    fn random_action(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    #[test]
    fn no_ris_zeroes_phases_and_passes_the_rest() {
        let cfg = ScenarioConfig::desk();
        let mut env = Wrapped::new(cfg.clone(), NoRis::zeros()).unwrap();
        env.reset(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let orig = random_action(&mut rng, cfg.action_dim());
            let mut a = orig.clone();
            env.step(&mut a).unwrap();
            assert!(env.inner().ris().phases.iter().all(|&p| p == 0.0));
            assert_eq!(a[2 * 8..], orig[2 * 8..]);
        }
    }

    #[test]
    fn random_phases_reproduce_per_seed() {
        let cfg = ScenarioConfig::desk();
        let draw = |seed| {
            let mut env = Wrapped::new(cfg.clone(), NoRis::random()).unwrap();
            env.reset(seed).unwrap();
            env.overrider().phases().to_vec()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        assert!(draw(5).iter().all(|p| (0.0..std::f64::consts::TAU).contains(p)));
    }

    #[test]
    fn no_trajectory_hovers_at_centroid() {
        let cfg = ScenarioConfig::desk();
        let mut env = Wrapped::new(cfg.clone(), NoTrajectory::default()).unwrap();
        env.reset(2).unwrap();
        let start = env.inner().uav();
        assert_eq!([start.x, start.y], cfg.area.centroid());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hover = propulsion_energy(0.0, 0.0, &cfg.power);
        assert!((hover - 84.4).abs() < 1e-9);
        for _ in 0..cfg.episode_slots {
            let mut a = random_action(&mut rng, cfg.action_dim());
            env.step(&mut a).unwrap();
            assert_eq!(env.inner().uav(), start);
        }
        for r in &env.inner().log().records {
            assert_eq!(r.speed, 0.0);
            assert_eq!(r.propulsion_j, hover);
        }
    }

    #[test]
    fn oracle_phases_dominate_agent_phases() {
        let cfg = ScenarioConfig::desk();
        let mut plain = AmecEnv::new(cfg.clone()).unwrap();
        let mut oracle = Wrapped::new(cfg.clone(), OraclePhase).unwrap();
        plain.reset(4).unwrap();
        oracle.reset(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let mut a = random_action(&mut rng, cfg.action_dim());
            let mut b = a.clone();
            plain.step_detailed(&mut a).unwrap();
            oracle.step(&mut b).unwrap();
            let k = plain.log().records.last().unwrap().selected_ue;
            let uav = plain.uav();
            assert_eq!(uav, oracle.inner().uav());
            let ue = &plain.ues()[k];
            let g_agent = cascade_gain(ue, plain.ris(), &uav, &cfg.rf).unwrap().norm();
            let g_oracle = cascade_gain(ue, oracle.inner().ris(), &uav, &cfg.rf).unwrap().norm();
            assert!(g_oracle >= g_agent * (1.0 - 1e-12));
        }
    }

    #[test]
    fn oracle_with_one_element_matches_single_alignment() {
        let mut cfg = ScenarioConfig::desk();
        cfg.ris.num_elements = 1;
        let mut env = Wrapped::new(cfg.clone(), OraclePhase).unwrap();
        env.reset(1).unwrap();
        let mut a = vec![0.3; cfg.action_dim()];
        let uav = env.inner().preview_position(&a).unwrap();
        let k = decode_action(&a, &cfg).unwrap().selected_ue;
        let expect = phase_alignment_oracle(&env.inner().ues()[k], env.inner().ris(), &uav, &cfg.rf).unwrap();
        env.step(&mut a).unwrap();
        assert!((env.inner().ris().phases[0] - expect[0]).abs() < 1e-12);
    }
}
