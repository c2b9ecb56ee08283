use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Additive Gaussian exploration noise with per-episode geometric decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationNoise {
    pub sigma: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for ExplorationNoise {
    fn default() -> Self {
        Self { sigma: 0.2, decay: 0.999, floor: 0.01 }
    }
}

impl ExplorationNoise {
    pub fn off() -> Self {
        Self { sigma: 0.0, decay: 1.0, floor: 0.0 }
    }

    /// Adds noise to `action` and clamps every entry into `[-1, 1]`.
    /// No random numbers are drawn when `sigma == 0`.
    pub fn perturb<R: Rng + ?Sized>(&self, action: &mut [f64], rng: &mut R) {
        for a in action.iter_mut() {
            if self.sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                *a += self.sigma * z;
            }
            *a = a.clamp(-1.0, 1.0);
        }
    }

    pub fn end_episode(&mut self) {
        self.sigma = (self.sigma * self.decay).max(self.floor);
    }
}
