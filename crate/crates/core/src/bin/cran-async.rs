use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cran_async::harness::{self, ExperimentPlan, Preset};
use cran_async::model::sample_channels;
use cran_async::{run_cccp, selftest, Error, Scheme};

#[derive(Parser)]
#[command(
    version,
    about = "Robust cooperative precoding for a two-RRH C-RAN with unknown time offset"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep of the average worst-case rate.
    Sweep(SweepArgs),
    /// Designs one scheme on one channel draw and prints its rates and trace.
    Single(SingleArgs),
    /// Runs quick invariant checks.
    Selftest,
}

#[derive(Args)]
struct PlanArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["fig2", "fig3"])]
    preset: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    plan: PlanArgs,
    /// Comma-separated scheme names.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Also write every (scheme, trial) result next to the output file.
    #[arg(long)]
    dump_trials: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SingleArgs {
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, default_value = "robust")]
    scheme: String,
    /// Delay known to the synchronous genie.
    #[arg(long, default_value_t = 0)]
    genie_delay: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    delay: Option<usize>,
    #[arg(long)]
    phase_deg: Option<f64>,
}

fn load_plan(args: &PlanArgs) -> cran_async::Result<ExperimentPlan> {
    let preset: Option<Preset> = args.preset.as_deref().map(str::parse).transpose()?;
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            ExperimentPlan::from_config_text(&text, preset)
        }
        None => Ok(ExperimentPlan::from_preset(preset.unwrap_or(Preset::Fig2))),
    }
}

fn sweep(args: SweepArgs) -> cran_async::Result<ExitCode> {
    let mut plan = load_plan(&args.plan)?;
    if let Some(s) = &args.schemes {
        plan.set("schemes", s)?;
    }
    if let Some(t) = args.trials {
        plan.trials = t;
    }
    if let Some(s) = args.seed {
        plan.master_seed = s;
    }
    if let Some(o) = args.out {
        plan.output_path = Some(o);
    }
    if let Some(f) = &args.format {
        plan.format = f.parse()?;
    }
    plan.dump_trials |= args.dump_trials;
    plan.validate()?;

    let quiet = args.quiet;
    let progress = move |done: usize, total: usize| {
        if !quiet && (done.is_multiple_of(10) || done == total) {
            eprintln!("{done}/{total} trials");
        }
    };
    let out = harness::run_sweep_with_progress(&plan, &progress)?;
    match &plan.output_path {
        Some(path) => {
            harness::emit_results(&out.rows, plan.format, path)?;
            if plan.dump_trials {
                std::fs::write(
                    harness::trials_path(path),
                    harness::trials_to_csv(&out.trials),
                )?;
            }
        }
        None => print!("{}", harness::render(&out.rows, plan.format)?),
    }
    if out.excessive_failures() {
        eprintln!("solver failures exceeded 10% of trials");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn single(args: SingleArgs) -> cran_async::Result<ExitCode> {
    let plan = load_plan(&args.plan)?;
    let mut cfg = plan.base_config.clone();
    if let Some(db) = args.snr_db {
        cfg.power_rrh1 = 10f64.powf(db / 10.0);
        cfg.power_rrh2 = cfg.power_rrh1;
    }
    if let Some(d) = args.delay {
        cfg.worst_case_delay = d;
    }
    if let Some(p) = args.phase_deg {
        cfg.phase_offset_eval = p.to_radians();
    }
    cfg.validate()?;
    let scheme = match args.scheme.parse()? {
        Scheme::SyncGenie { .. } => Scheme::SyncGenie {
            known_delay: args.genie_delay,
        },
        s => s,
    };
    let channels = sample_channels(&cfg, args.seed);
    let trace = run_cccp(&cfg, &channels, &scheme, &plan.cccp)?;
    let value = serde_json::json!({
        "config": cfg,
        "scheme": scheme.name(),
        "report": trace.final_report,
        "trace": {
            "objective": trace.objective,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "extrapolations": trace.extrapolations,
            "failure": trace.failure,
        },
    });
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Single(a) => single(a),
        Command::Selftest => {
            let checks = selftest::run_selftest();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_)
                | Error::InvalidPartition(_)
                | Error::DimensionMismatch(_) => ExitCode::from(1),
                Error::Io(_) | Error::Json(_) | Error::EmptyResults => ExitCode::from(1),
                Error::Singular(_) | Error::Solver(_) => ExitCode::from(2),
            }
        }
    }
}
