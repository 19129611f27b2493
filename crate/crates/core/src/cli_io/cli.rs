//! `crs-sim` command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::config::{load_config, RunConfig};
use super::files::{
    save_chemistry, species_csv, trajectory_csv, write_atomic, write_event_ledger, write_json,
};
use crate::engine::{run_simulation, EventStats, Trajectory};
use crate::error::Result;
use crate::experiments::{compare_environments, ensemble_run, EnsembleOptions, RunSummary};

#[derive(Debug, Parser)]
#[command(
    name = "crs-sim",
    version,
    about = "Stochastic catalytic reaction set simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// JSON run configuration; omitted keys take reference-scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gen-chem: chemistry seed. Others: first simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// gen-chem: chemistry file. Others: output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a chemistry and save it as JSON.
    GenChem(Common),
    /// Run one simulation (first seed).
    Run(Common),
    /// Run every seed in the configured reactor.
    Ensemble(Common),
    /// Run every seed in `reactor` and in `compare_reactor`.
    Compare(Common),
}

/// Parses arguments, dispatches, and maps the outcome to an exit code:
/// 0 on success, 1 on usage or validation errors, 2 on runtime failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn resolve(common: &Common, chemistry_seed: bool) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.override_seed(seed, chemistry_seed)?;
    }
    if let (Some(out), false) = (&common.out, chemistry_seed) {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<()> {
    let (common, chemistry_seed) = match &command {
        Command::GenChem(c) => (c, true),
        Command::Run(c) | Command::Ensemble(c) | Command::Compare(c) => (c, false),
    };
    let cfg = resolve(common, chemistry_seed)?;
    if common.print_config {
        print!("{}", cfg.to_canonical_json());
        return Ok(());
    }
    match command {
        Command::GenChem(c) => gen_chem(&cfg, c.out),
        Command::Run(_) => run(&cfg),
        Command::Ensemble(_) => ensemble(&cfg),
        Command::Compare(_) => compare(&cfg),
    }
}

fn gen_chem(cfg: &RunConfig, out: Option<PathBuf>) -> Result<()> {
    let path = out.unwrap_or_else(|| cfg.output_dir.join("chemistry.json"));
    let chem = cfg.chemistry()?;
    save_chemistry(&chem, &path)?;
    eprintln!(
        "wrote {} ({} species, {} catalyses)",
        path.display(),
        chem.registered().len(),
        chem.catalyses().len()
    );
    Ok(())
}

#[derive(Serialize)]
struct RunOutput<'a> {
    format_version: u32,
    summary: &'a RunSummary,
    event_stats: &'a EventStats,
    registered_species: usize,
    catalyses: usize,
}

fn write_run_files(cfg: &RunConfig, tr: &Trajectory, dir: &Path, stem: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.csv")), &trajectory_csv(tr)?)?;
    if cfg.record_counts {
        write_atomic(&dir.join(format!("{stem}_species.csv")), &species_csv(tr)?)?;
    }
    if cfg.event_ledger {
        write_event_ledger(tr, &dir.join(format!("{stem}_events.jsonl")))?;
    }
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<()> {
    let scenario = cfg.scenario()?;
    let seed = cfg.seeds[0];
    let tr = run_simulation(
        &scenario.chemistry,
        &cfg.reactor,
        &scenario.kinetics,
        &scenario.initial_counts,
        &cfg.run_options(seed),
    )?;
    let summary = RunSummary::from_trajectory(&tr, &cfg.reactor, &EnsembleOptions::default())?;
    let dir = &cfg.output_dir;
    write_run_files(cfg, &tr, dir, "trajectory")?;
    let output = RunOutput {
        format_version: super::config::FORMAT_VERSION,
        summary: &summary,
        event_stats: &tr.stats,
        registered_species: tr.chemistry.registered().len(),
        catalyses: tr.chemistry.catalyses().len(),
    };
    write_json(&output, &dir.join("summary.json"))?;
    eprintln!(
        "seed {seed}: {} events, wrote {}",
        tr.stats.total,
        dir.display()
    );
    Ok(())
}

fn ensemble(cfg: &RunConfig) -> Result<()> {
    let scenario = cfg.scenario()?;
    let result = ensemble_run(&scenario, &cfg.reactor, &cfg.seeds, &cfg.ensemble_options())?;
    let dir = &cfg.output_dir;
    for tr in &result.trajectories {
        write_run_files(cfg, tr, &dir.join("runs"), &format!("seed_{}", tr.sim_seed))?;
    }
    write_json(&result.report, &dir.join("report.json"))?;
    eprintln!(
        "{} runs, mass CV {:.4}, wrote {}",
        result.report.stats.runs,
        result.report.stats.mass_cv,
        dir.display()
    );
    Ok(())
}

fn compare(cfg: &RunConfig) -> Result<()> {
    let scenario = cfg.scenario()?;
    let result = compare_environments(
        &scenario,
        &cfg.reactor,
        &cfg.compare_reactor,
        &cfg.seeds,
        &cfg.ensemble_options(),
    )?;
    let dir = &cfg.output_dir;
    for (arm, trs) in ["arm_a", "arm_b"].iter().zip(&result.trajectories) {
        for tr in trs {
            write_run_files(cfg, tr, &dir.join(arm), &format!("seed_{}", tr.sim_seed))?;
        }
    }
    write_json(&result.report, &dir.join("comparison.json"))?;
    let r = &result.report;
    eprintln!(
        "mass CV {:.4} vs {:.4}, median final max_len {} vs {}, wrote {}",
        r.arm_a.stats.mass_cv,
        r.arm_b.stats.mass_cv,
        r.median_final_max_len[0],
        r.median_final_max_len[1],
        dir.display()
    );
    Ok(())
}
