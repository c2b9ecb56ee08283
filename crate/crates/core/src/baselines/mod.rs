//! Comparison agents: deep Q-learning over a discrete action table and
//! action-overriding ablations around any continuous policy.

mod ablation;
mod dql;

pub use ablation::{
    oracle_phases, write_phases, ActionOverride, NoRis, NoTrajectory, OraclePhase, Wrapped,
};
pub use dql::{
    dql_train, DiscreteActionTable, DiscreteActions, DiscreteTransition, DqlParams, DqlTrainer,
    PhaseCodebook, TableEntry, TableEnv,
};
