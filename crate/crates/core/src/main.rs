use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kbump::pipeline::{emit_report, Issue, RunConfig, RunError, Stage};

#[derive(Parser)]
#[command(name = "kbump", version, about = "Ring-of-bumps solutions of -Δu + V(|y|)u = u^p")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Artifact directory; overrides `output_dir` from the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// With `all`: stop after this stage
    #[arg(long, global = true)]
    stage: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Radial ground state U -> profile.csv
    GroundState,
    /// A, B1 and single-bump energies -> constants.json
    Constants,
    /// Pair interaction samples and fitted law -> interaction.csv
    Interaction,
    /// Ansatz energy vs its expansion -> expansion.csv
    Expansion,
    /// Reduced energy curves and optimal radii -> reduce.json, curves.csv
    Reduce,
    /// k-ladder of optimal radii -> scaling.csv
    Study,
    /// Newton polish and certificates -> solution_k<k>.csv, certificate.json
    Certify,
    /// Summary of a finished run directory
    Report,
    /// Every stage, then the report
    All,
}

fn stage_of(c: Command) -> Option<Stage> {
    Some(match c {
        Command::GroundState => Stage::GroundState,
        Command::Constants => Stage::Constants,
        Command::Interaction => Stage::Interaction,
        Command::Expansion => Stage::Expansion,
        Command::Reduce => Stage::Reduce,
        Command::Study => Stage::Study,
        Command::Certify => Stage::Certify,
        Command::Report | Command::All => return None,
    })
}

fn usage(message: String) -> RunError {
    RunError::Validation(vec![Issue {
        key: String::new(),
        line: None,
        message,
    }])
}

fn run(cli: Cli) -> Result<(), RunError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| usage(format!("cannot size the worker pool: {e}")))?;
    }
    if let Command::Report = cli.command {
        let dir = cli.out.ok_or_else(|| usage("report needs --out <dir>".into()))?;
        print!("{}", emit_report(&dir)?);
        return Ok(());
    }
    let path = cli.config.ok_or_else(|| usage("--config <path> is required".into()))?;
    let config = RunConfig::load(&path)?;
    let out = cli
        .out
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| usage("no artifact directory: pass --out or set output_dir".into()))?;
    let stages: Vec<Stage> = match stage_of(cli.command) {
        Some(s) => vec![s],
        None => {
            let last = match &cli.stage {
                Some(name) => Stage::from_name(name).ok_or_else(|| usage(format!("unknown stage {name:?}")))?,
                None => Stage::Certify,
            };
            Stage::ALL.into_iter().filter(|s| *s <= last).collect()
        }
    };
    kbump::pipeline::run_pipeline(config, &out, &stages)?;
    if matches!(cli.command, Command::All) && stages.last() == Some(&Stage::Certify) {
        print!("{}", emit_report(&out)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
