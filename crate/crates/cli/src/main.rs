//! `cpbox`: run builtin or file-based scenarios and write their series.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cpbox_core::runner::{self, Format, RunOutput};
use cpbox_core::{Error, Scenario};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "cpbox", version, about = "Cooper-pair box / cavity dynamics under intrinsic decoherence")]
#[command(args_conflicts_with_subcommands = true, arg_required_else_help = true)]
struct Cli {
    /// Print the names of the embedded scenarios and exit.
    #[arg(long)]
    list_builtins: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a builtin by name.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to a scenario TOML file, or a builtin name.
    scenario: String,

    /// Output path prefix; defaults to the scenario's `output` or its name.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Override the number of time samples.
    #[arg(long)]
    samples: Option<usize>,

    /// Override the final time (in units of 1/λ).
    #[arg(long)]
    t_max: Option<f64>,

    /// Override the Fock-space dimension.
    #[arg(long)]
    dim: Option<usize>,

    /// Check invariants only; write nothing.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => EXIT_IO,
        Error::Truncation { .. }
        | Error::UnsupportedOrder(_)
        | Error::Degenerate
        | Error::Validation(_)
        | Error::Config(_)
        | Error::NegligibleSupport(_) => EXIT_VALIDATION,
        Error::Convergence { .. }
        | Error::InvalidState(_)
        | Error::Step { .. }
        | Error::Linalg(_)
        | Error::Context { .. } => EXIT_NUMERICAL,
    }
}

fn summarize(out: &RunOutput) {
    let m = &out.manifest;
    eprintln!("{}: fock dim {}, truncation tail {:e}", m.scenario.name, m.fock_dim, m.truncation_tail);
    for v in &m.variants {
        let inv = v.invariants;
        eprintln!(
            "  {}: {} states, trace defect {:e}, hermiticity defect {:e}, min eigenvalue {:e}",
            v.label, v.states_checked, inv.trace_defect, inv.hermiticity_defect, inv.min_eigenvalue
        );
        if let Some(onset) = v.concurrence.and_then(|c| c.onset) {
            eprintln!("    concurrence zero until t = {}, exceeds 0.01 at t = {}", onset.quiet_until, onset.rise_time);
        }
    }
}

fn run(args: RunArgs) -> Result<u8, Error> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(n) = args.samples {
        scenario.times.samples = n;
    }
    if let Some(t) = args.t_max {
        scenario.times.t_max = t;
    }
    if args.dim.is_some() {
        scenario.dim = args.dim;
    }
    scenario.validate()?;

    let out = runner::run_scenario(&scenario)?;
    summarize(&out);
    if !args.check {
        let prefix = args.out.unwrap_or_else(|| PathBuf::from(scenario.output_prefix()));
        for path in runner::emit(&out, &prefix, args.format.into())? {
            println!("{}", path.display());
        }
    }
    if !out.manifest.passed() {
        eprintln!(
            "error: trace defect {:e} exceeds {:e}",
            out.manifest.invariants().trace_defect,
            runner::RUN_TRACE_LIMIT
        );
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_builtins {
        for name in runner::list_builtins() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let Some(Command::Run(args)) = cli.command else {
        return ExitCode::from(EXIT_VALIDATION);
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
