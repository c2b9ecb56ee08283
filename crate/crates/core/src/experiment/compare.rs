use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::SeedSummary;
use super::spec::AgentKind;
use crate::error::{Error, Result};

pub const COMPARE_CSV_HEADER: [&str; 10] = [
    "scenario_hash",
    "agent_kind",
    "seeds",
    "eval_see",
    "eval_energy_fraction",
    "block_see",
    "block_energy_fraction",
    "delta_eval_see",
    "delta_eval_energy_fraction",
    "delta_block_see",
];

/// Seed-averaged results of one agent kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub agent_kind: AgentKind,
    pub seeds: usize,
    pub eval_see: f64,
    pub eval_energy_fraction: f64,
    pub block_see: f64,
    pub block_energy_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub claim: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario_hash: String,
    /// First row is the reference for the deltas.
    pub rows: Vec<CompareRow>,
    pub verdicts: Vec<Verdict>,
}

impl Comparison {
    pub fn row(&self, kind: AgentKind) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.agent_kind == kind)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COMPARE_CSV_HEADER)?;
        let base = &self.rows[0];
        for r in &self.rows {
            w.write_record([
                self.scenario_hash.clone(),
                r.agent_kind.as_str().to_string(),
                r.seeds.to_string(),
                r.eval_see.to_string(),
                r.eval_energy_fraction.to_string(),
                r.block_see.to_string(),
                r.block_energy_fraction.to_string(),
                (r.eval_see - base.eval_see).to_string(),
                (r.eval_energy_fraction - base.eval_energy_fraction).to_string(),
                (r.block_see - base.block_see).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("scenario {}\n", &self.scenario_hash[..12.min(self.scenario_hash.len())]);
        s += &format!(
            "{:<18} {:>5} {:>14} {:>10} {:>14} {:>10}\n",
            "agent", "seeds", "eval SEE", "eval E", "block SEE", "block E"
        );
        for r in &self.rows {
            s += &format!(
                "{:<18} {:>5} {:>14.6e} {:>10.4} {:>14.6e} {:>10.4}\n",
                r.agent_kind.as_str(),
                r.seeds,
                r.eval_see,
                r.eval_energy_fraction,
                r.block_see,
                r.block_energy_fraction
            );
        }
        for v in &self.verdicts {
            s += &format!("{}: {}\n", if v.holds { "HOLDS" } else { "VIOLATED" }, v.claim);
        }
        s
    }
}

pub fn load_summary(path: &Path) -> Result<SeedSummary> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Seed-averages the summaries per agent kind and checks the expected
/// orderings among the kinds present. Refuses summaries of different
/// scenarios.
pub fn compare(summaries: &[SeedSummary]) -> Result<Comparison> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::ComparisonRefused("no summaries given".into()))?;
    if let Some(other) = summaries.iter().find(|s| s.scenario_hash != first.scenario_hash) {
        return Err(Error::ComparisonRefused(format!(
            "scenario {} differs from {}",
            other.scenario_hash, first.scenario_hash
        )));
    }
    let mut order = Vec::new();
    let mut groups: BTreeMap<AgentKind, Vec<&SeedSummary>> = BTreeMap::new();
    for s in summaries {
        if !groups.contains_key(&s.agent_kind) {
            order.push(s.agent_kind);
        }
        groups.entry(s.agent_kind).or_default().push(s);
    }
    let rows: Vec<CompareRow> = order
        .iter()
        .map(|k| {
            let g = &groups[k];
            let n = g.len() as f64;
            let mean = |f: &dyn Fn(&SeedSummary) -> f64| g.iter().map(|s| f(s)).sum::<f64>() / n;
            CompareRow {
                agent_kind: *k,
                seeds: g.len(),
                eval_see: mean(&|s| s.final_eval.see),
                eval_energy_fraction: mean(&|s| s.final_eval.final_energy_fraction),
                block_see: mean(&|s| s.final_block.see),
                block_energy_fraction: mean(&|s| s.final_block.final_energy_fraction),
            }
        })
        .collect();

    let mut cmp = Comparison { scenario_hash: first.scenario_hash.clone(), rows, verdicts: Vec::new() };
    let mut verdicts = Vec::new();
    if let Some(full) = cmp.row(AgentKind::Ddpg) {
        for (kind, name) in [(AgentKind::AblationNoRis, "no-RIS"), (AgentKind::AblationNoTraj, "no-trajectory")] {
            if let Some(ab) = cmp.row(kind) {
                verdicts.push(Verdict {
                    claim: format!("full energy fraction >= {name}"),
                    holds: full.eval_energy_fraction >= ab.eval_energy_fraction,
                });
                verdicts.push(Verdict {
                    claim: format!("full SEE >= {name}"),
                    holds: full.eval_see >= ab.eval_see,
                });
            }
        }
        if let (Some(nr), Some(nt)) = (cmp.row(AgentKind::AblationNoRis), cmp.row(AgentKind::AblationNoTraj)) {
            verdicts.push(Verdict {
                claim: "no-RIS energy fraction >= no-trajectory".into(),
                holds: nr.eval_energy_fraction >= nt.eval_energy_fraction,
            });
        }
        if let Some(dql) = cmp.row(AgentKind::Dql) {
            verdicts.push(Verdict {
                claim: "DDPG final-block SEE >= DQL".into(),
                holds: full.block_see >= dql.block_see,
            });
        }
    }
    cmp.verdicts = verdicts;
    Ok(cmp)
}
