//! Command-line front end for the `oscpop` population models.
//!
//! Every subcommand writes CSV (to `--output` or standard output) and a short
//! `key: value` summary. The summary goes to standard output when the CSV is
//! written to a file and to standard error otherwise, so piped CSV stays
//! clean.
//!
//! Exit status: 0 success, 1 failed `verify` check, 2 usage or parse error,
//! 3 domain error, 4 numerical failure. The error name is printed on
//! standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use oscpop::{CapacitySchedule, Error, ErrorClass, SolverConfig};

pub mod commands;
pub mod output;
pub mod verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// One invocation of the tool.
#[derive(Debug, Parser)]
#[command(
    name = "oscpop",
    version,
    about = "Logistic growth under oscillating carrying capacity"
)]
pub struct RunSpec {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the logistic equation with RK45; CSV `t,P,M`.
    #[command(allow_negative_numbers = true)]
    Simulate(TrajectoryArgs),
    /// Compare the integrating-factor solution with RK45; CSV `t,P_closed,P_numeric,abs_diff`.
    #[command(allow_negative_numbers = true)]
    ClosedForm(TrajectoryArgs),
    /// Exact two-phase trajectory plus the periodic-cycle report; CSV `t,P,M`.
    #[command(allow_negative_numbers = true)]
    TwoPhase(TwoPhaseArgs),
    /// Periodic solution for a periodic schedule; one-period orbit CSV `t,P,M`.
    #[command(allow_negative_numbers = true)]
    Periodic(PeriodicArgs),
    /// Period-doubling scan of the discrete map; scatter CSV `rho,branch_value`.
    #[command(allow_negative_numbers = true)]
    Bifurcation(BifurcationArgs),
    /// Run the built-in invariant battery and print pass/fail lines.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// `constant:M`, `twophase:M1,M2,h`, `sinusoid:M0,A,period` or `table:path.csv`.
    #[arg(long)]
    pub schedule: String,
    /// Declare a period for constant or tabulated schedules.
    #[arg(long)]
    pub period: Option<f64>,
}

impl ScheduleArgs {
    pub fn build(&self) -> oscpop::Result<CapacitySchedule> {
        let cap = CapacitySchedule::parse(&self.schedule)?;
        match self.period {
            Some(h) => cap.with_period(h),
            None => Ok(cap),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub min_step: Option<f64>,
    /// Step/iteration budget shared by one integration.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

impl SolverArgs {
    pub fn build(&self) -> oscpop::Result<SolverConfig> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            max_step: self.max_step.unwrap_or(d.max_step),
            min_step: self.min_step.unwrap_or(d.min_step),
            max_iterations: self.max_iter.unwrap_or(d.max_iterations),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// CSV destination; relative paths are placed under $OSCPOP_OUT_DIR when set.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub p0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long)]
    pub t_end: f64,
    /// Sampling interval of the CSV.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TwoPhaseArgs {
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    /// Relative tolerance for the saturation and P1 ≈ P2 flags.
    #[arg(long, default_value_t = oscpop::periodic::DEFAULT_REGIME_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PeriodicArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub r: f64,
    /// Orbit sampling interval; defaults to period/200.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Half-width of the band around M_max/2, as a fraction of M_max.
    #[arg(long, default_value_t = 0.1)]
    pub band: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BifurcationArgs {
    /// Growth coefficient; M = rho / r.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.5)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 301)]
    pub steps: usize,
    #[arg(long, default_value_t = 20_000)]
    pub transient: usize,
    #[arg(long, default_value_t = 512)]
    pub window: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub match_tol: f64,
    /// Normalized starting state x0 in (0, 1).
    #[arg(long, default_value_t = 0.3)]
    pub x0: f64,
    /// Restart every point from x0 instead of the previous attractor.
    #[arg(long)]
    pub no_carry: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Usage => EXIT_USAGE,
        ErrorClass::Domain => EXIT_DOMAIN,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match RunSpec::try_parse_from(args) {
        Ok(spec) => spec,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    execute(&spec, out, err)
}

/// Runs an already parsed command.
pub fn execute(spec: &RunSpec, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Command::Verify(args) = &spec.command {
        return verify::run_battery(args.seed, out);
    }
    let (outcome, destination) = match &spec.command {
        Command::Simulate(a) => (commands::simulate(a), &a.output),
        Command::ClosedForm(a) => (commands::closed_form(a), &a.output),
        Command::TwoPhase(a) => (commands::two_phase(a), &a.trajectory.output),
        Command::Periodic(a) => (commands::periodic(a), &a.output),
        Command::Bifurcation(a) => (commands::bifurcation(a), &a.output),
        Command::Verify(_) => unreachable!("handled above"),
    };
    match outcome.and_then(|o| emit(&o, destination, out, err)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            exit_code(&e)
        }
    }
}

fn emit(
    outcome: &commands::Outcome,
    destination: &OutputArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> oscpop::Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    for warning in &outcome.warnings {
        writeln!(err, "warning: {warning}").map_err(io)?;
    }
    let summary: &mut dyn Write = match &destination.output {
        Some(path) => {
            output::write_file(&output::resolve_output(path), &outcome.csv)?;
            out
        }
        None => {
            out.write_all(outcome.csv.as_bytes()).map_err(io)?;
            err
        }
    };
    for (key, value) in &outcome.summary {
        writeln!(summary, "{key}: {value}").map_err(io)?;
    }
    Ok(())
}
