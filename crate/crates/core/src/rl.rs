//! Minimal episodic environment interface shared by the learners.

use serde::{Deserialize, Serialize};

use crate::env::{ConstraintReport, EpisodeLog};
use crate::error::Result;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Domain aggregates of a finished episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Secrecy energy efficiency of the episode, bit/s per J.
    pub see: f64,
    pub final_energy_fraction: f64,
    pub violations: ConstraintReport,
    pub energy_closure_error: f64,
}

pub trait Environment {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;

    /// Advances one slot. Implementations clamp or override `action` in
    /// place, so after the call it holds the action actually executed.
    fn step(&mut self, action: &mut [f64]) -> Result<Step>;

    fn episode_metrics(&self) -> Option<EpisodeMetrics> {
        None
    }

    /// Per-slot trace of the current episode, when the environment keeps one.
    fn episode_log(&self) -> Option<&EpisodeLog> {
        None
    }
}
