//! Campaign runner CLI.
//!
//! Exit codes: 0 the verb ran (and no monitor failed), 1 a monitor reported
//! a requirement violation, 2 tool error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use handover_cdv::campaign::{
    CampaignError, check_model_lines, dump_model, generate_only, read_report, recompute_coverage,
    run_campaign, write_tables,
};
use handover_cdv::config::{CampaignConfig, load_config};
use handover_cdv::coverage::CoverageReport;
use handover_cdv::mbt::CheckConfig;
use handover_cdv::monitors::VerdictState;

#[derive(Parser)]
#[command(
    name = "handover-cdv",
    about = "Coverage-driven verification testbench for a robot-to-human object handover controller",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Campaign configuration file (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides the config's `jobs`.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<CampaignConfig, CampaignError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = Some(seed);
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate abstract tests into the campaign directory.
    Gen(ConfigArgs),
    /// Run a full campaign: generate, concretize, simulate, check, report.
    Run(ConfigArgs),
    /// Recompute coverage offline from one or more campaign directories and
    /// write a merged report.
    Cover {
        /// Campaign directories produced by `run`.
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "coverage_out")]
        out: PathBuf,
    },
    /// Render tables and a text summary from existing reports.
    Report {
        /// Campaign directories holding report.json files.
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "report_out")]
        out: PathBuf,
    },
    /// Check tuple reachability on the protocol model.
    CheckModel {
        /// Write the automata network text form to this file.
        #[arg(long)]
        emit_model: Option<PathBuf>,
        /// State budget for the exploration.
        #[arg(long, default_value_t = 10_000_000)]
        budget: usize,
    },
}

fn labeled_reports(dirs: &[PathBuf]) -> Result<Vec<(String, CoverageReport)>, CampaignError> {
    if dirs.is_empty() {
        return Err(CampaignError::MissingArtifacts(
            "no campaign directories given".into(),
        ));
    }
    let mut out = Vec::new();
    for d in dirs {
        let r = read_report(d)?;
        out.push((r.meta.label.clone(), r));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode, CampaignError> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = args.load()?;
            let written = generate_only(&cfg)?;
            println!("wrote {} abstract tests under {}", written.len(), cfg.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let outcome = run_campaign(&cfg)?;
            let failed_runs = outcome
                .runs
                .iter()
                .filter(|r| r.verdicts.iter().any(|v| v.state == VerdictState::Failed))
                .count();
            let errored = outcome.runs.iter().filter(|r| r.error.is_some()).count();
            println!(
                "{}: {} runs, {} conclusive, {} with failed monitors, {} errored",
                outcome.report.meta.label,
                outcome.report.runs_total,
                outcome.report.runs_conclusive,
                failed_runs,
                errored
            );
            for u in &outcome.unreachable_targets {
                println!("target not reachable: {u}");
            }
            println!("report: {}", outcome.out_dir.join("report.json").display());
            Ok(if outcome.any_failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Cover { dirs, out } => {
            if dirs.is_empty() {
                return Err(CampaignError::MissingArtifacts(
                    "no campaign directories given".into(),
                ));
            }
            let mut labeled = Vec::new();
            for d in &dirs {
                let r = recompute_coverage(d)?;
                labeled.push((r.meta.label.clone(), r));
            }
            std::fs::create_dir_all(&out).map_err(|e| CampaignError::Io(out.clone(), e))?;
            let merged = handover_cdv::coverage::merge(
                &labeled.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>(),
            )?;
            std::fs::write(
                out.join("report.json"),
                serde_json::to_string_pretty(&merged).expect("report serializes"),
            )
            .map_err(|e| CampaignError::Io(out.clone(), e))?;
            write_tables(&out, &labeled)?;
            println!("merged coverage of {} campaigns into {}", labeled.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dirs, out } => {
            let labeled = labeled_reports(&dirs)?;
            std::fs::create_dir_all(&out).map_err(|e| CampaignError::Io(out.clone(), e))?;
            write_tables(&out, &labeled)?;
            println!("tables written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckModel { emit_model, budget } => {
            if let Some(path) = emit_model {
                let mut buf = Vec::new();
                dump_model(&mut buf).expect("writing to memory");
                std::fs::write(&path, buf).map_err(|e| CampaignError::Io(path.clone(), e))?;
                println!("model written to {}", path.display());
            }
            let started = std::time::Instant::now();
            let (lines, flags) = check_model_lines(&CheckConfig { state_budget: budget })?;
            for line in &lines {
                println!("{line}");
            }
            let reachable = flags.iter().filter(|f| **f).count();
            println!(
                "{reachable}/33 tuples reachable ({} not) in {:?}",
                33 - reachable,
                started.elapsed()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
