use std::io::Write;

use serde::{Deserialize, Serialize};

/// One slot of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub speed: f64,
    pub heading: f64,
    pub selected_ue: usize,
    pub alpha: f64,
    pub secrecy_bps: f64,
    pub propulsion_j: f64,
    pub compute_j: f64,
    pub energy_remaining_j: f64,
    pub reward: f64,
    pub viol_latency: bool,
    pub viol_budget: bool,
    /// Horizontal displacement over the slot, m.
    pub displacement: f64,
    /// Upper bound on displacement, `slot_duration * max_speed`.
    pub max_displacement: f64,
    /// Every stored RIS phase lay in `[0, 2pi)`.
    pub phases_in_range: bool,
    pub num_ues: usize,
    pub ue_energy_j: f64,
}

/// Per-slot trace plus the energy terms needed to close the books.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub initial_energy: f64,
    pub climb_energy: f64,
    pub records: Vec<SlotRecord>,
}

impl EpisodeLog {
    pub fn final_energy(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.energy_remaining_j)
            .unwrap_or(self.initial_energy - self.climb_energy)
    }

    /// Relative mismatch between the reported final energy and the initial
    /// energy minus every logged expense.
    pub fn energy_closure_error(&self) -> f64 {
        let spent: f64 = self.climb_energy
            + self
                .records
                .iter()
                .map(|r| r.propulsion_j + r.compute_j)
                .sum::<f64>();
        let expected = self.initial_energy - spent;
        (expected - self.final_energy()).abs() / self.initial_energy
    }
}

/// Violation counts per constraint of the offloading problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Unit-modulus RIS phases.
    pub phase: usize,
    /// Per-slot displacement bound.
    pub velocity: usize,
    /// Task latency within deadline.
    pub latency: usize,
    /// Offloading fraction in `[0, 1]`.
    pub offload_fraction: usize,
    /// Edge cycle budget.
    pub budget: usize,
    /// Exactly one UE served per slot.
    pub selection: usize,
}

impl ConstraintReport {
    pub fn by_construction_clean(&self) -> bool {
        self.phase == 0 && self.velocity == 0 && self.selection == 0 && self.offload_fraction == 0
    }

    pub fn add(&mut self, other: &ConstraintReport) {
        self.phase += other.phase;
        self.velocity += other.velocity;
        self.latency += other.latency;
        self.offload_fraction += other.offload_fraction;
        self.budget += other.budget;
        self.selection += other.selection;
    }
}

pub fn constraint_report(log: &EpisodeLog) -> ConstraintReport {
    let mut rep = ConstraintReport::default();
    for r in &log.records {
        rep.phase += usize::from(!r.phases_in_range);
        rep.velocity += usize::from(r.displacement > r.max_displacement + 1e-9);
        rep.latency += usize::from(r.viol_latency);
        rep.offload_fraction += usize::from(!(0.0..=1.0).contains(&r.alpha));
        rep.budget += usize::from(r.viol_budget);
        rep.selection += usize::from(r.selected_ue >= r.num_ues);
    }
    rep
}

pub const SLOT_CSV_HEADER: [&str; 16] = [
    "episode",
    "slot",
    "x",
    "y",
    "z",
    "speed",
    "heading",
    "selected_ue",
    "alpha",
    "secrecy_bps",
    "propulsion_J",
    "compute_J",
    "energy_remaining_J",
    "reward",
    "viol_latency",
    "viol_budget",
];

/// Writes slot rows; `extra` columns (name, value) are appended to every row.
pub fn write_slot_csv<W: Write>(
    out: W,
    logs: &[EpisodeLog],
    extra: &[(&str, String)],
) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = SLOT_CSV_HEADER.to_vec();
    header.extend(extra.iter().map(|(k, _)| *k));
    w.write_record(&header)?;
    for log in logs {
        for r in &log.records {
            let mut row = vec![
                log.episode.to_string(),
                r.slot.to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.z.to_string(),
                r.speed.to_string(),
                r.heading.to_string(),
                r.selected_ue.to_string(),
                r.alpha.to_string(),
                r.secrecy_bps.to_string(),
                r.propulsion_j.to_string(),
                r.compute_j.to_string(),
                r.energy_remaining_j.to_string(),
                r.reward.to_string(),
                u8::from(r.viol_latency).to_string(),
                u8::from(r.viol_budget).to_string(),
            ];
            row.extend(extra.iter().map(|(_, v)| v.clone()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
