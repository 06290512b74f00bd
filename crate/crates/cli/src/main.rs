use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnrelax::harness::{
    self, entry, final_pressure_gap, load_config_file, resolve, Entry, HarnessError, Origin, ProblemKind, Resolved,
};
use clap::{Args, Parser, Subcommand};

/// Stiff relaxation solver suite for two-phase flow.
#[derive(Debug, Parser)]
#[command(name = "bnrelax", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a relaxation ODE problem (A1, A2, custom-ode).
    Ode(OdeArgs),
    /// Error-vs-step study of the relaxation solver against the reference.
    Convergence(ConvergenceArgs),
    /// Run a Riemann problem (RP1, RP2, RP3, custom-rp), once per `nu`.
    Rp(RpArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    problem: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    lambda: Option<String>,
    /// Comma-separated list for Riemann problems.
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    delta_max: Option<String>,
    /// Initial step, or `auto`.
    #[arg(long)]
    dt0: Option<String>,
    /// Any config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct OdeArgs {
    #[command(flatten)]
    common: Common,
    /// Also run the reference solver and report errors at the final time.
    #[arg(long)]
    oracle: bool,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_runs: Option<String>,
    /// `dt` (fixed steps) or `delta_max` (adaptive runs).
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Debug, Args)]
struct RpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    cells: Option<String>,
    /// rusanov, hll or hllem.
    #[arg(long)]
    riemann: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
}

fn cli_entries(common: &Common, extra: &[(&str, Option<&str>)]) -> Result<Vec<Entry>, HarnessError> {
    let mut out = Vec::new();
    let flags = [
        ("problem", common.problem.as_deref()),
        ("lambda", common.lambda.as_deref()),
        ("nu", common.nu.as_deref()),
        ("delta_max", common.delta_max.as_deref()),
        ("dt0", common.dt0.as_deref()),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            out.push(entry(k, v, Origin::Cli)?);
        }
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        out.push(entry(k.trim(), v, Origin::Cli)?);
    }
    Ok(out)
}

fn resolved(common: &Common, extra: &[(&str, Option<&str>)], default: ProblemKind) -> Result<Resolved, HarnessError> {
    let file = match &common.config {
        Some(path) => load_config_file(path)?,
        None => Vec::new(),
    };
    resolve(&file, &cli_entries(common, extra)?, Some(default))
}

fn run_ode(args: &OdeArgs) -> Result<(), HarnessError> {
    let oracle = args.oracle.then_some("true");
    let r = resolved(&args.common, &[("oracle", oracle)], ProblemKind::A1)?;
    let setup = r.ode_setup()?;
    let dir = args.common.out_dir.as_path();
    harness::write_resolved(&r, dir)?;
    let report = harness::run_ode(&setup, r.kind.name(), Some(dir))?;
    println!(
        "{}: {} accepted, {} rejected steps in {:.3} s",
        r.kind,
        report.accepted,
        report.rejected,
        report.wall_time.as_secs_f64()
    );
    if let Some(v) = report.final_state {
        println!("final state: u1 {:e} u2 {:e} p1 {:e} p2 {:e} alpha1 {:e}", v.u1, v.u2, v.p1, v.p2, v.alpha1);
    }
    if let Some(e) = report.max_oracle_error() {
        println!("max relative error vs reference: {e:.3e}");
    }
    print_outputs(dir);
    Ok(())
}

fn run_convergence(args: &ConvergenceArgs) -> Result<(), HarnessError> {
    let extra = [("n_runs", args.n_runs.as_deref()), ("sweep", args.sweep.as_deref())];
    let r = resolved(&args.common, &extra, ProblemKind::A1)?;
    let setup = r.ode_setup()?;
    let dir = args.common.out_dir.as_path();
    harness::write_resolved(&r, dir)?;
    let report = harness::run_convergence(&setup, r.kind.name(), Some(dir))?;
    for (name, fit) in [("u1", &report.fit_u1), ("p1", &report.fit_p1), ("alpha1", &report.fit_alpha1)] {
        let note = if fit.degenerate { " (degenerate: errors at reference accuracy)" } else { "" };
        println!("slope {name}: {:.3}{note}", fit.slope);
    }
    println!("{} runs in {:.2} s", report.rows.len(), report.wall_time.as_secs_f64());
    print_outputs(dir);
    Ok(())
}

fn run_rp(args: &RpArgs) -> Result<(), HarnessError> {
    let extra =
        [("cells", args.cells.as_deref()), ("riemann", args.riemann.as_deref()), ("cfl", args.cfl.as_deref())];
    let r = resolved(&args.common, &extra, ProblemKind::Rp1)?;
    let setup = r.rp_setup()?;
    let dir = args.common.out_dir.as_path();
    harness::write_resolved(&r, dir)?;
    for run in harness::run_rp(&setup, Some(dir))? {
        println!(
            "{}: {} steps to t = {:e} in {:.2} s, final max |p1 - p2|/(|p1| + |p2|) = {:.3e}",
            run.report.label,
            run.report.accepted,
            run.run.final_profile().t,
            run.report.wall_time.as_secs_f64(),
            final_pressure_gap(&run.run)
        );
    }
    print_outputs(dir);
    Ok(())
}

fn print_outputs(dir: &Path) {
    println!("outputs in {}", dir.display());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = harness::init_thread_pool_from_env().and_then(|()| match &cli.command {
        Command::Ode(a) => run_ode(a),
        Command::Convergence(a) => run_convergence(a),
        Command::Rp(a) => run_rp(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
