use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ris_amec::experiment::{
    compare, evaluate_run, load_config, load_summary, run, AgentKind, ExperimentSpec, Preset,
    RunOutcome, SeedSummary,
};
use ris_amec::Error;

/// RIS-assisted aerial MEC secrecy-energy-efficiency experiments.
#[derive(Parser)]
#[command(name = "ris-amec", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Train every configured seed and write per-seed outputs.
    Train(RunArgs),
    /// Re-evaluate the final checkpoints of a finished run.
    Eval(RunArgs),
    /// Train the full agent and both ablations, then compare them.
    Ablate(RunArgs),
    /// Compare summaries (summary.json files or run folders).
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Folder for compare.csv; defaults to the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve and check a config, printing its hash.
    ValidateConfig(ConfigArgs),
    /// Print the fully resolved defaults of a preset as JSON.
    EmitDefaults {
        #[arg(long, value_enum, default_value = "table1")]
        preset: PresetArg,
    },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Seeds to run (repeatable); replaces the configured list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    agent: Option<AgentKind>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Table1,
    #[value(name = "table1-750")]
    Table1Long,
    Desk,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Table1 => Preset::Table1,
            PresetArg::Table1Long => Preset::Table1Long,
            PresetArg::Desk => Preset::Desk,
        }
    }
}

enum Failure {
    Config(Error),
    Run(Error),
    AllSeedsFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
        Err(Failure::AllSeedsFailed) => {
            eprintln!("all seeds failed");
            ExitCode::from(3)
        }
    }
}

fn dispatch(verb: Verb) -> Result<(), Failure> {
    match verb {
        Verb::Train(args) => {
            let spec = resolve(&args)?;
            report(run(&spec)?)
        }
        Verb::Eval(args) => {
            let spec = resolve(&args)?;
            for s in evaluate_run(&spec)? {
                print_summary(&s);
            }
            Ok(())
        }
        Verb::Ablate(args) => ablate(&args),
        Verb::Compare { inputs, out } => {
            let mut summaries = Vec::new();
            for p in &inputs {
                summaries.extend(collect_summaries(p)?);
            }
            let cmp = compare(&summaries)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).map_err(Error::from)?;
            cmp.write_csv(fs::File::create(dir.join("compare.csv")).map_err(Error::from)?)?;
            print!("{}", cmp.to_text());
            Ok(())
        }
        Verb::ValidateConfig(cfg) => {
            let spec = load(&cfg)?;
            println!("ok {} ({} preset, agent {})", spec.config_hash(), spec.preset.as_str(), spec.agent.as_str());
            Ok(())
        }
        Verb::EmitDefaults { preset } => {
            println!("{}", ExperimentSpec::preset(preset.into()).to_json_pretty());
            Ok(())
        }
    }
}

fn load(cfg: &ConfigArgs) -> Result<ExperimentSpec, Failure> {
    let preset = cfg.preset.map(Preset::from);
    match &cfg.config {
        Some(path) => load_config(path, preset).map_err(Failure::Config),
        None => Ok(ExperimentSpec::preset(preset.unwrap_or(PresetArg::Table1.into()))),
    }
}

fn resolve(args: &RunArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = load(&args.cfg)?;
    if !args.seeds.is_empty() {
        spec.seeds = args.seeds.clone();
    }
    if let Some(out) = &args.out {
        spec.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(agent) = args.agent {
        spec.agent = agent;
    }
    if let Some(n) = args.episodes {
        spec.training.schedule.episodes = n;
    }
    spec.validate().map_err(Failure::Config)?;
    Ok(spec)
}

fn report(outcome: RunOutcome) -> Result<(), Failure> {
    for s in &outcome.summaries {
        print_summary(s);
    }
    for (seed, e) in &outcome.errors {
        eprintln!("seed {seed}: {e}");
    }
    println!("outputs in {}", outcome.output_dir.display());
    if outcome.all_failed() {
        return Err(Failure::AllSeedsFailed);
    }
    Ok(())
}

fn print_summary(s: &SeedSummary) {
    let status = match &s.diverged {
        Some(d) => format!("diverged: {d}"),
        None => "ok".into(),
    };
    println!(
        "{} seed {}: episodes {}, final-block SEE {:.6e}, eval SEE {:.6e}, eval energy {:.4}, {:.1}s, {status}",
        s.agent_kind.as_str(),
        s.seed,
        s.episodes_run,
        s.final_block.see,
        s.final_eval.see,
        s.final_eval.final_energy_fraction,
        s.wall_time_s
    );
}

/// Runs the full agent and the two ablations into sibling folders under the
/// output directory, then writes `compare.csv` there.
fn ablate(args: &RunArgs) -> Result<(), Failure> {
    let base = resolve(args)?;
    let root = PathBuf::from(&base.output_dir);
    let mut summaries = Vec::new();
    let mut all_failed = true;
    for kind in [AgentKind::Ddpg, AgentKind::AblationNoRis, AgentKind::AblationNoTraj] {
        let mut spec = base.clone();
        spec.agent = kind;
        spec.output_dir = root.join(kind.as_str()).to_string_lossy().into_owned();
        let outcome = run(&spec)?;
        for s in &outcome.summaries {
            print_summary(s);
        }
        for (seed, e) in &outcome.errors {
            eprintln!("{} seed {seed}: {e}", kind.as_str());
        }
        all_failed &= outcome.all_failed();
        summaries.extend(outcome.summaries.into_iter().filter(|s| !s.failed()));
    }
    if all_failed {
        return Err(Failure::AllSeedsFailed);
    }
    let cmp = compare(&summaries)?;
    cmp.write_csv(fs::File::create(root.join("compare.csv")).map_err(Error::from)?)?;
    print!("{}", cmp.to_text());
    Ok(())
}

/// A summary file, or every `seed_*/summary.json` below a run folder
/// (searching one level of agent sub-folders too).
fn collect_summaries(path: &Path) -> Result<Vec<SeedSummary>, Failure> {
    if path.is_file() {
        return Ok(vec![load_summary(path)?]);
    }
    let mut found = Vec::new();
    let mut dirs = vec![path.to_path_buf()];
    if let Ok(entries) = fs::read_dir(path) {
        let mut subs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir() && !is_seed_dir(p))
            .collect();
        subs.sort();
        dirs.extend(subs);
    }
    for dir in dirs {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        let mut seeds: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| is_seed_dir(p))
            .map(|p| p.join("summary.json"))
            .filter(|p| p.is_file())
            .collect();
        seeds.sort();
        for p in seeds {
            found.push(load_summary(&p)?);
        }
    }
    if found.is_empty() {
        return Err(Failure::Run(Error::ComparisonRefused(format!(
            "no summary.json found under {}",
            path.display()
        ))));
    }
    Ok(found)
}

fn is_seed_dir(p: &Path) -> bool {
    p.is_dir()
        && p.file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("seed_"))
}
