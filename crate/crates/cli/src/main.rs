//! `ctc`: list, run, validate and verify composite tasks from the shell.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ctc_core::engine::EnemyControllerKind;
use ctc_core::eval::{run_plan, EvalPlan, VarianceMode};
use ctc_core::replay::verify_replay;
use ctc_core::{
    classify_variant, validate_spec, Catalog, CompositeTaskSpec, DefenseEnemyMode, EngineConfig,
    PolicyKind, Variant,
};

#[derive(Debug, Parser)]
#[command(
    name = "ctc",
    version,
    about = "Composite-task multi-agent combat environment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List catalog tasks with their variant class and rosters.
    ListTasks {
        /// Only show one variant class (HeA, HeS, HoA, HoS).
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Evaluate a policy and write replays plus report.txt / report.csv.
    Run(RunArgs),
    /// Re-simulate a replay file and report the first divergence.
    VerifyReplay {
        path: PathBuf,
        /// Config to compare the replay's config hash against.
        #[arg(long)]
        engine_config: Option<PathBuf>,
    },
    /// Check task specs (all catalog tasks by default).
    Validate {
        #[arg(long, conflicts_with = "spec_file")]
        task: Option<String>,
        #[arg(long)]
        spec_file: Option<PathBuf>,
        #[arg(long)]
        engine_config: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(
        long,
        required_unless_present = "spec_file",
        conflicts_with = "spec_file"
    )]
    task: Option<String>,
    /// Task spec file (one task, same format as a catalog entry).
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// oracle, no_dol or random.
    #[arg(long, default_value = "oracle")]
    policy: PolicyKind,
    /// Comma-separated base seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Test episodes per checkpoint.
    #[arg(long, default_value_t = 32)]
    episodes: usize,
    /// Test batches per seed.
    #[arg(long, default_value_t = 1)]
    checkpoints: usize,
    #[arg(long, default_value = "ctc-out")]
    out: PathBuf,
    #[arg(long)]
    engine_config: Option<PathBuf>,
    /// Overrides the engine config's defense enemy mode (advance, stationary).
    #[arg(long)]
    defense_enemy_mode: Option<DefenseEnemyMode>,
    /// population or sample.
    #[arg(long, default_value = "population")]
    variance: VarianceMode,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Skip writing per-episode replay files.
    #[arg(long)]
    no_replays: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::ListTasks { variant } => list_tasks(variant),
        Command::Run(args) => run(args),
        Command::VerifyReplay {
            path,
            engine_config,
        } => verify(&path, engine_config.as_deref()),
        Command::Validate {
            task,
            spec_file,
            engine_config,
        } => validate(task, spec_file, engine_config.as_deref()),
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => {
            EngineConfig::load(p).with_context(|| format!("loading engine config {}", p.display()))
        }
        None => Ok(EngineConfig::default()),
    }
}

fn resolve_spec(task: Option<&str>, spec_file: Option<&Path>) -> Result<CompositeTaskSpec> {
    match (task, spec_file) {
        (_, Some(path)) => CompositeTaskSpec::load(path)
            .with_context(|| format!("loading spec {}", path.display())),
        (Some(name), None) => Ok(Catalog::from_env()?.lookup_task(name)?.clone()),
        (None, None) => bail!("either --task or --spec-file is required"),
    }
}

/// Print to stdout; a closed pipe (`ctc list-tasks | head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn list_tasks(variant: Option<Variant>) -> Result<ExitCode> {
    let catalog = Catalog::from_env()?;
    let mut out = format!(
        "{:<12} {:<7} {:>2}  {:<36} subtasks\n",
        "task", "variant", "N", "agents"
    );
    for spec in catalog.iter() {
        let class = classify_variant(spec);
        if variant.is_some_and(|v| v != class) {
            continue;
        }
        let subtasks: Vec<String> = spec
            .subtasks
            .iter()
            .map(|s| {
                let kind = match s.kind {
                    EnemyControllerKind::DefenseGroup => "defense",
                    EnemyControllerKind::PursuitGroup => "pursuit",
                };
                format!("{kind}[{}]", s.enemies)
            })
            .collect();
        writeln!(
            out,
            "{:<12} {:<7} {:>2}  {:<36} {}",
            spec.name,
            class.to_string(),
            spec.subtasks.len(),
            spec.agents.to_string(),
            subtasks.join(" ")
        )?;
    }
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let spec = resolve_spec(args.task.as_deref(), args.spec_file.as_deref())?;
    let mut config = load_config(args.engine_config.as_deref())?;
    if let Some(mode) = args.defense_enemy_mode {
        config.defense_enemy_mode = mode;
    }
    config.check()?;
    let violations = validate_spec(&spec, &config);
    if !violations.is_empty() {
        log::warn!("task {} has spec violations: {violations:?}", spec.name);
    }

    let mut plan = EvalPlan::new(spec, config, args.policy);
    plan.seeds = args.seeds;
    plan.episodes = args.episodes;
    plan.checkpoints = args.checkpoints;
    plan.variance_mode = args.variance;
    plan.record_replays = !args.no_replays;
    plan.workers = args.workers;
    let output = run_plan(&plan)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for replay in &output.replays {
        fs::write(args.out.join(&replay.name), &replay.text)?;
    }
    output.report.write_to(&args.out)?;

    let r = &output.report;
    println!(
        "{} {}: max test win rate {:.4}, stability V {:.6} over {} seeds x {} checkpoints ({} episodes each)",
        r.task,
        r.policy,
        r.max_test_win_rate,
        r.stability_v,
        r.curves.len(),
        r.m,
        plan.episodes
    );
    println!(
        "wrote {} replays and report to {}",
        output.replays.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(path: &Path, engine_config: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let current = load_config(engine_config)?;
    let report = verify_replay(&text, Some(&current))?;
    if let Some(warning) = &report.config_warning {
        eprintln!("warning: {warning}");
    }
    match report.divergence {
        None => {
            println!("ok: {} steps reproduced", report.steps_checked);
            Ok(ExitCode::SUCCESS)
        }
        Some(d) => {
            println!("mismatch at step {}", d.step);
            println!("  recorded:  {}", d.expected);
            println!("  simulated: {}", d.found);
            Ok(ExitCode::FAILURE)
        }
    }
}

fn validate(
    task: Option<String>,
    spec_file: Option<PathBuf>,
    engine_config: Option<&Path>,
) -> Result<ExitCode> {
    let config = load_config(engine_config)?;
    let specs = if task.is_some() || spec_file.is_some() {
        vec![resolve_spec(task.as_deref(), spec_file.as_deref())?]
    } else {
        Catalog::from_env()?.iter().cloned().collect()
    };
    let mut invalid = 0;
    let mut out = String::new();
    for spec in &specs {
        let violations = validate_spec(spec, &config);
        if violations.is_empty() {
            writeln!(out, "ok       {} ({})", spec.name, classify_variant(spec))?;
        } else {
            invalid += 1;
            writeln!(out, "invalid  {}", spec.name)?;
            for v in violations {
                writeln!(out, "  - {v}")?;
            }
        }
    }
    writeln!(
        out,
        "{} of {} specs valid",
        specs.len() - invalid,
        specs.len()
    )?;
    emit(&out)?;
    Ok(if invalid == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
