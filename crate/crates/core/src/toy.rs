//! One-dimensional target seeking, a sanity environment for the learners.
//!
//! The agent sits on `[0, 1]` and picks a velocity in `[-1, 1]` scaled by
//! `max_step`; the reward is minus the distance to the goal after moving.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rl::{Environment, Step};

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeeking {
    pub goal: f64,
    pub max_step: f64,
    pub horizon: usize,
    position: f64,
    t: usize,
}

impl Default for TargetSeeking {
    fn default() -> Self {
        Self { goal: 0.7, max_step: 0.1, horizon: 30, position: 0.0, t: 0 }
    }
}

impl TargetSeeking {
    pub fn position(&self) -> f64 {
        self.position
    }

    /// Start at `position` instead of a seeded draw.
    pub fn reset_at(&mut self, position: f64) -> Vec<f64> {
        self.position = position.clamp(0.0, 1.0);
        self.t = 0;
        vec![self.position]
    }
}

impl Environment for TargetSeeking {
    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let start = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..=1.0);
        Ok(self.reset_at(start))
    }

    fn step(&mut self, action: &mut [f64]) -> Result<Step> {
        if self.t >= self.horizon {
            return Err(Error::EpisodeDone);
        }
        if action.len() != 1 {
            return Err(Error::Shape { expected: 1, got: action.len() });
        }
        let a = if action[0].is_nan() { 0.0 } else { action[0].clamp(-1.0, 1.0) };
        action[0] = a;
        self.position = (self.position + self.max_step * a).clamp(0.0, 1.0);
        self.t += 1;
        Ok(Step {
            state: vec![self.position],
            reward: -(self.position - self.goal).abs(),
            done: self.t >= self.horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moves_and_rewards() {
        let mut env = TargetSeeking::default();
        env.reset_at(0.5);
        let s = env.step(&mut [1.0]).unwrap();
        assert!((s.state[0] - 0.6).abs() < 1e-12);
        assert!((s.reward + 0.1).abs() < 1e-12);
        let mut a = [5.0];
        env.step(&mut a).unwrap();
        assert_eq!(a[0], 1.0);
    }

    #[test]
    fn horizon_ends_episode() {
        let mut env = TargetSeeking { horizon: 2, ..TargetSeeking::default() };
        env.reset(1).unwrap();
        assert!(!env.step(&mut [0.0]).unwrap().done);
        assert!(env.step(&mut [0.0]).unwrap().done);
        assert!(matches!(env.step(&mut [0.0]), Err(Error::EpisodeDone)));
    }
}
