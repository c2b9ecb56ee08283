//! Configuration, seeded multi-run orchestration and result comparison.
//!
//! Per-seed outputs live in `<output_dir>/seed_<n>/`: `episodes.csv`,
//! `evals.csv`, `eval_slots.csv`, `summary.json` and `checkpoint.json`.
//! The run folder itself holds the resolved `config.json` and
//! `aggregate.csv`. Every CSV row and summary carries the config hash and
//! seed.

mod compare;
mod run;
mod spec;

pub use compare::{compare, load_summary, CompareRow, Comparison, Verdict, COMPARE_CSV_HEADER};
pub use run::{
    evaluate_run, run, run_seed, seed_dir, EpisodeStats, HarnessEnv, RunOutcome, SeedSummary,
    AGGREGATE_CSV_HEADER, EPISODES_CSV_HEADER, EVALS_CSV_HEADER,
};
pub use spec::{
    load_config, parse_config, AblationSection, AgentKind, ExperimentSpec, Preset, TrainingSection,
};
