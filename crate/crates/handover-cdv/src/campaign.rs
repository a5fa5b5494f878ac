//! Campaign runner: generates tests, executes batches of simulations
//! (optionally in parallel), aggregates coverage and writes reproducible
//! reports.
//!
//! Per-run seeds derive deterministically from the master seed and the run
//! index, so a campaign is fully determined by its config file and seed.
//! Runs are independent; a failing run leaves an error artifact and the
//! campaign carries on.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CampaignConfig, ConfigError, GeneratorKind, TargetsSpec};
use crate::coverage::{
    CoverageError, CoverageReport, CrossTuple, Reachability, ReportMeta, classify_trace, merge,
    stmt_coverage, tuple_universe,
};
use crate::mbt::{
    CheckConfig, MbtError, Property, ProtocolModel, build_protocol_model, generate_targeted,
    tuple_name,
};
use crate::monitors::{MonitorError, MonitorSet, MonitorVerdict, RequirementId, VerdictState};
use crate::rng::derive_seed;
use crate::stimulus::{
    ConcreteTest, DriveError, SimTrace, TraceError, TraceEvent, concretize, default_max_ticks,
    drive,
};
use crate::sut::{RunOutcome, statement_count, statement_table};
use crate::testgen::{GenConfig, GenError, gen_constrained, gen_unconstrained};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Mbt(#[from] MbtError),
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("missing campaign artifacts: {0}")]
    MissingArtifacts(String),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("a generator mode is required (set `generator` in the config)")]
    NoGenerator,
    #[error("a master seed is required (set `seed` in the config or pass --seed)")]
    NoSeed,
    #[error("run panicked: {0}")]
    RunPanicked(String),
}

fn write_file(path: &Path, contents: &str) -> Result<(), CampaignError> {
    fs::write(path, contents).map_err(|e| CampaignError::Io(path.to_path_buf(), e))
}

fn mkdirs(path: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(path).map_err(|e| CampaignError::Io(path.to_path_buf(), e))
}

/// Per-run record kept in memory and mirrored into `verdicts/`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: u32,
    pub test_id: String,
    pub seed: u64,
    pub outcome: Option<RunOutcome>,
    pub tuple: Option<CrossTuple>,
    pub verdicts: Vec<MonitorVerdict>,
    pub statements: Vec<u32>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct CampaignOutcome {
    pub report: CoverageReport,
    pub runs: Vec<RunSummary>,
    pub any_failed: bool,
    pub unreachable_targets: Vec<String>,
    pub out_dir: PathBuf,
}

/// Campaign metadata sidecar; holds the only wall-clock timestamp emitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignMeta {
    pub label: String,
    pub generator: String,
    pub master_seed: u64,
    pub test_count: u32,
    pub statement_count: u32,
    pub timestamp_unix_ms: u128,
}

fn resolve_targets(
    model: &ProtocolModel,
    spec: &TargetsSpec,
) -> Result<Vec<Property>, CampaignError> {
    Ok(match spec {
        TargetsSpec::AllTuples => model
            .all_tuple_targets()
            .into_iter()
            .map(|(_, p)| p)
            .collect(),
        TargetsSpec::Requirements => (1..=4)
            .map(|n| model.requirement_property(n).expect("1..=4"))
            .collect(),
        TargetsSpec::List(names) => {
            let mut out = Vec::new();
            for n in names {
                out.push(
                    model
                        .parse_target(n)
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                );
            }
            out
        }
    })
}

struct BuiltTests {
    tests: Vec<ConcreteTest>,
    abstracts: Vec<crate::stimulus::AbstractTest>,
    unreachable: Vec<String>,
}

/// Builds the campaign's concrete tests plus the unreachable-target record.
fn build_tests(cfg: &CampaignConfig, seed: u64) -> Result<BuiltTests, CampaignError> {
    let generator = cfg.generator.ok_or(CampaignError::NoGenerator)?;
    match generator {
        GeneratorKind::Unconstrained | GeneratorKind::Constrained => {
            let gen_cfg = GenConfig {
                seed: derive_seed(seed, 0),
                count: cfg.count,
                length_range: cfg.length_range,
                constraint_profile: match generator {
                    GeneratorKind::Constrained => crate::testgen::ConstraintProfile::ForceActivation,
                    _ => crate::testgen::ConstraintProfile::None,
                },
            };
            let abstracts = match generator {
                GeneratorKind::Constrained => gen_constrained(&gen_cfg)?,
                _ => gen_unconstrained(&gen_cfg)?,
            };
            let mut tests = Vec::with_capacity(abstracts.len());
            for (i, a) in abstracts.iter().enumerate() {
                let run_seed = derive_seed(seed, 1 + i as u64);
                tests.push(concretize(a, &cfg.catalog, &cfg.world, run_seed, cfg.profile).map_err(MbtError::Catalog)?);
            }
            Ok(BuiltTests { tests, abstracts, unreachable: Vec::new() })
        }
        GeneratorKind::ModelBased => {
            let model = build_protocol_model();
            let targets = resolve_targets(&model, &cfg.targets)?;
            let generated = generate_targeted(
                &model,
                &targets,
                cfg.concretizations,
                cfg.profile,
                &cfg.catalog,
                &cfg.world,
                derive_seed(seed, 0),
                &CheckConfig::default(),
            )?;
            Ok(BuiltTests {
                tests: generated.tests,
                abstracts: generated.abstract_tests,
                unreachable: generated.unreachable,
            })
        }
    }
}

fn execute_one(
    cfg: &CampaignConfig,
    out_dir: &Path,
    index: u32,
    test: &ConcreteTest,
) -> RunSummary {
    let attempt = catch_unwind(AssertUnwindSafe(|| -> Result<RunSummary, CampaignError> {
        let effective = match &test.robot_overrides {
            Some(o) => cfg.robot.with_overrides(o),
            None => cfg.robot,
        };
        let max_ticks = cfg.max_ticks.unwrap_or_else(|| default_max_ticks(&effective));
        let mut monitors = MonitorSet::new(cfg.world.clone(), effective.sensing_timeout);
        let trace = drive(test, &cfg.world, &cfg.robot, &cfg.catalog, max_ticks, &mut monitors)?;
        let verdicts = monitors.into_verdicts()?;
        let tuple = classify_trace(&trace)?;
        let statements: BTreeSet<u32> = trace
            .records
            .iter()
            .filter_map(|r| match r.event {
                TraceEvent::StatementHit { statement_id, .. } => Some(statement_id),
                _ => None,
            })
            .collect();

        write_file(
            &out_dir.join(format!("tests/run_{index:04}.concrete.txt")),
            &test.to_text(),
        )?;
        write_file(
            &out_dir.join(format!("traces/run_{index:04}.jsonl")),
            &trace.to_jsonl_string(),
        )?;
        let summary = RunSummary {
            index,
            test_id: test.abstract_test.id.clone(),
            seed: test.seed,
            outcome: trace.outcome().map(|(_, o)| o),
            tuple,
            verdicts,
            statements: statements.into_iter().collect(),
            error: None,
        };
        write_file(
            &out_dir.join(format!("verdicts/run_{index:04}.json")),
            &serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
        Ok(summary)
    }));

    match attempt {
        Ok(Ok(summary)) => summary,
        Ok(Err(e)) => error_summary(out_dir, index, test, e.to_string()),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".to_string());
            error_summary(out_dir, index, test, format!("panic: {msg}"))
        }
    }
}

fn error_summary(out_dir: &Path, index: u32, test: &ConcreteTest, message: String) -> RunSummary {
    let path = out_dir.join(format!("verdicts/run_{index:04}.error.txt"));
    let _ = fs::write(&path, format!("test {}\nseed {}\n{message}\n", test.abstract_test.id, test.seed));
    RunSummary {
        index,
        test_id: test.abstract_test.id.clone(),
        seed: test.seed,
        outcome: None,
        tuple: None,
        verdicts: Vec::new(),
        statements: Vec::new(),
        error: Some(message),
    }
}

/// Generates, concretizes, drives, checks and aggregates one campaign.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome, CampaignError> {
    let seed = cfg.master_seed.ok_or(CampaignError::NoSeed)?;
    let out_dir = cfg.out_dir.clone();
    for sub in ["tests", "traces", "verdicts"] {
        mkdirs(&out_dir.join(sub))?;
    }

    let BuiltTests { tests, abstracts, unreachable: unreachable_targets } =
        build_tests(cfg, seed)?;
    for a in &abstracts {
        write_file(
            &out_dir.join(format!("tests/abstract_{}.txt", a.id)),
            &a.to_text(),
        )?;
    }
    if cfg.generator == Some(GeneratorKind::ModelBased) {
        let mut listing = String::new();
        for a in &abstracts {
            listing.push_str(&format!("reachable {} ({})\n", a.id, a.provenance));
        }
        for u in &unreachable_targets {
            listing.push_str(&format!("not-reachable {u}\n"));
        }
        write_file(&out_dir.join("model_targets.txt"), &listing)?;
    }

    let run_one =
        |(i, t): (usize, &ConcreteTest)| execute_one(cfg, &out_dir, i as u32, t);
    let runs: Vec<RunSummary> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            tests.par_iter().enumerate().map(run_one).collect()
        })
    } else {
        tests.iter().enumerate().map(run_one).collect()
    };

    let mut report = CoverageReport::empty(
        ReportMeta {
            label: cfg.label(),
            generator: cfg.generator.map(|g| g.name().to_string()).unwrap_or_default(),
            master_seed: seed,
            test_count: tests.len() as u32,
        },
        statement_count() as usize,
    );
    for r in &runs {
        report.add_run(&r.verdicts, r.tuple, r.statements.iter().copied())?;
    }

    let any_failed = runs
        .iter()
        .flat_map(|r| &r.verdicts)
        .any(|v| v.state == VerdictState::Failed);

    write_file(
        &out_dir.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    let meta = CampaignMeta {
        label: report.meta.label.clone(),
        generator: report.meta.generator.clone(),
        master_seed: seed,
        test_count: tests.len() as u32,
        statement_count: statement_count(),
        timestamp_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    };
    write_file(
        &out_dir.join("campaign.meta.json"),
        &serde_json::to_string_pretty(&meta).expect("meta serializes"),
    )?;
    write_statements_csv(&out_dir)?;
    let labeled = [(report.meta.label.clone(), report.clone())];
    write_tables(&out_dir, &labeled)?;

    Ok(CampaignOutcome {
        report,
        runs,
        any_failed,
        unreachable_targets,
        out_dir,
    })
}

/// Generates and writes abstract tests only.
pub fn generate_only(cfg: &CampaignConfig) -> Result<Vec<PathBuf>, CampaignError> {
    let seed = cfg.master_seed.ok_or(CampaignError::NoSeed)?;
    mkdirs(&cfg.out_dir.join("tests"))?;
    let BuiltTests { abstracts, unreachable, .. } = build_tests(cfg, seed)?;
    let mut written = Vec::new();
    for a in &abstracts {
        let path = cfg.out_dir.join(format!("tests/abstract_{}.txt", a.id));
        write_file(&path, &a.to_text())?;
        written.push(path);
    }
    if !unreachable.is_empty() {
        let listing: String = unreachable
            .iter()
            .map(|u| format!("not-reachable {u}\n"))
            .collect();
        write_file(&cfg.out_dir.join("model_targets.txt"), &listing)?;
    }
    Ok(written)
}

fn write_statements_csv(out_dir: &Path) -> Result<(), CampaignError> {
    let mut csv = String::from("statement_id,location,description\n");
    for s in statement_table() {
        csv.push_str(&format!("{},{},{}\n", s.statement_id, s.location.name(), s.description));
    }
    write_file(&out_dir.join("statements.csv"), &csv)
}

/// Requirement-by-requirement table: one C/P/F column group per campaign,
/// plus a TOTAL group when there are several.
pub fn render_table1(reports: &[(String, CoverageReport)]) -> String {
    let with_total = reports.len() > 1;
    let mut header = String::from("requirement");
    for (label, _) in reports {
        header.push_str(&format!(",{label}_C,{label}_P,{label}_F"));
    }
    if with_total {
        header.push_str(",TOTAL_C,TOTAL_P,TOTAL_F");
    }
    let total = merge(&reports.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>())
        .expect("same statement table");
    let mut out = header;
    out.push('\n');
    for req in RequirementId::ALL {
        let mut line = req.name().to_string();
        for (_, r) in reports {
            let c = r.requirement(req);
            line.push_str(&format!(",{},{},{}", c.covered, c.passed, c.failed));
        }
        if with_total {
            let c = total.requirement(req);
            line.push_str(&format!(",{},{},{}", c.covered, c.passed, c.failed));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Tuple-by-tuple table over the full 33-tuple universe in canonical order.
pub fn render_table2(reports: &[(String, CoverageReport)]) -> String {
    let with_total = reports.len() > 1;
    let mut header = String::from("tuple,reachable");
    for (label, _) in reports {
        header.push_str(&format!(",{label}"));
    }
    if with_total {
        header.push_str(",TOTAL");
    }
    let total = merge(&reports.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>())
        .expect("same statement table");
    let mut out = header;
    out.push('\n');
    for (i, (tuple, reach)) in tuple_universe().iter().enumerate() {
        let mut line = format!(
            "\"{}\",{}",
            tuple,
            if *reach == Reachability::Reachable { "yes" } else { "no" }
        );
        for (_, r) in reports {
            line.push_str(&format!(",{}", r.tuple_hits[i]));
        }
        if with_total {
            line.push_str(&format!(",{}", total.tuple_hits[i]));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Plain-text roll-up of one or more campaigns.
pub fn render_summary(reports: &[(String, CoverageReport)]) -> String {
    let total = merge(&reports.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>())
        .expect("same statement table");
    let table = statement_table();
    let mut out = String::new();
    out.push_str("campaign summary\n================\n");
    for (label, r) in reports {
        out.push_str(&format!(
            "{label}: {} runs, {} conclusive (generator {}, seed {})\n",
            r.runs_total, r.runs_conclusive, r.meta.generator, r.meta.master_seed
        ));
    }
    out.push_str(&format!(
        "total: {} runs, {} conclusive\n\nrequirements (C/P/F):\n",
        total.runs_total, total.runs_conclusive
    ));
    for req in RequirementId::ALL {
        let c = total.requirement(req);
        out.push_str(&format!(
            "  {:<4} {}/{}/{} of {}\n",
            req.name(),
            c.covered,
            c.passed,
            c.failed,
            total.runs_total
        ));
    }
    let universe = tuple_universe();
    let covered = universe
        .iter()
        .enumerate()
        .filter(|(i, (_, reach))| {
            *reach == Reachability::Reachable && total.tuple_hits[*i] > 0
        })
        .count();
    let unreachable_hits: u32 = universe
        .iter()
        .enumerate()
        .filter(|(_, (_, reach))| *reach == Reachability::Unreachable)
        .map(|(i, _)| total.tuple_hits[i])
        .sum();
    out.push_str(&format!(
        "\ncross-product: {covered}/20 reachable tuples covered, {unreachable_hits} hits on unreachable tuples\n"
    ));
    if let Ok(cov) = stmt_coverage(&table, &total.statements_hit) {
        out.push_str(&format!(
            "\nstatement coverage: {}/{} ({:.1}%)\n",
            cov.overall_hit, cov.overall_total, cov.overall_percent
        ));
        for (block, b) in &cov.blocks {
            out.push_str(&format!(
                "  {:<18} {:>3}/{:<3} ({:.1}%)\n",
                block, b.hit, b.total, b.percent
            ));
        }
    }
    out
}

pub fn write_tables(out_dir: &Path, reports: &[(String, CoverageReport)]) -> Result<(), CampaignError> {
    write_file(&out_dir.join("table1.csv"), &render_table1(reports))?;
    write_file(&out_dir.join("table2.csv"), &render_table2(reports))?;
    write_file(&out_dir.join("summary.txt"), &render_summary(reports))?;
    Ok(())
}

/// Reads one campaign directory's report.json.
pub fn read_report(dir: &Path) -> Result<CoverageReport, CampaignError> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path)
        .map_err(|_| CampaignError::MissingArtifacts(path.display().to_string()))?;
    serde_json::from_str(&text)
        .map_err(|e| CampaignError::MissingArtifacts(format!("{}: {e}", path.display())))
}

/// Recomputes a campaign's coverage offline from its traces and verdict
/// files.
pub fn recompute_coverage(dir: &Path) -> Result<CoverageReport, CampaignError> {
    let meta_path = dir.join("campaign.meta.json");
    let meta: CampaignMeta = serde_json::from_str(
        &fs::read_to_string(&meta_path)
            .map_err(|_| CampaignError::MissingArtifacts(meta_path.display().to_string()))?,
    )
    .map_err(|e| CampaignError::MissingArtifacts(format!("{}: {e}", meta_path.display())))?;

    let traces_dir = dir.join("traces");
    if !traces_dir.is_dir() {
        return Err(CampaignError::MissingArtifacts(traces_dir.display().to_string()));
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(&traces_dir)
        .map_err(|e| CampaignError::Io(traces_dir.clone(), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    entries.sort();

    let mut report = CoverageReport::empty(
        ReportMeta {
            label: meta.label,
            generator: meta.generator,
            master_seed: meta.master_seed,
            test_count: meta.test_count,
        },
        meta.statement_count as usize,
    );
    for path in entries {
        let file = fs::File::open(&path).map_err(|e| CampaignError::Io(path.clone(), e))?;
        let trace = SimTrace::read_jsonl(std::io::BufReader::new(file))?;
        let tuple = classify_trace(&trace)?;
        let statements: BTreeSet<u32> = trace
            .records
            .iter()
            .filter_map(|r| match r.event {
                TraceEvent::StatementHit { statement_id, .. } => Some(statement_id),
                _ => None,
            })
            .collect();
        // Verdicts come from the per-run files written by the checker.
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let verdict_path = dir.join(format!("verdicts/{stem}.json"));
        let verdicts = match fs::read_to_string(&verdict_path) {
            Ok(text) => {
                let summary: RunSummary = serde_json::from_str(&text).map_err(|e| {
                    CampaignError::MissingArtifacts(format!("{}: {e}", verdict_path.display()))
                })?;
                summary.verdicts
            }
            Err(_) => {
                return Err(CampaignError::MissingArtifacts(
                    verdict_path.display().to_string(),
                ));
            }
        };
        report.add_run(&verdicts, tuple, statements)?;
    }
    Ok(report)
}

/// Writes stdout-style lines for the check-model verb and returns the
/// reachable set in universe order.
pub fn check_model_lines(budget: &CheckConfig) -> Result<(Vec<String>, Vec<bool>), CampaignError> {
    let model = build_protocol_model();
    let mut lines = Vec::new();
    let mut flags = Vec::new();
    for (tuple, expected) in tuple_universe() {
        let property = model.tuple_property(&tuple);
        let report = crate::mbt::check(&model.network, &property, budget)
            .map_err(MbtError::Check)?;
        let reachable = matches!(report.outcome, crate::mbt::CheckOutcome::Reachable(_));
        flags.push(reachable);
        let expect_str = match expected {
            Reachability::Reachable => "reachable",
            Reachability::Unreachable => "unreachable",
        };
        let got = if reachable { "REACHABLE" } else { "NOT-REACHABLE" };
        let agree = if reachable == (expected == Reachability::Reachable) {
            "ok"
        } else {
            "MISMATCH"
        };
        lines.push(format!(
            "tuple:{:<28} {:<14} (expected {expect_str}: {agree}) states={}",
            tuple_name(&tuple),
            got,
            report.states_explored
        ));
    }
    Ok((lines, flags))
}

/// Emits the model in its text form.
pub fn dump_model<W: Write>(mut w: W) -> std::io::Result<()> {
    let model = build_protocol_model();
    write!(w, "{}", model.network)
}
