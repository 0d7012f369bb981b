mod commands;
mod docs;

use clap::{Args, Parser, Subcommand};
use modwave::error::WaveError;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

/// Criticality detection and mKdV reduction for two-phase wave systems.
#[derive(Parser)]
#[command(name = "modwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conservation-law derivative bundle at one (k, omega) point
    Tensors(TensorsArgs),
    /// Criticality surfaces, double-critical points and curve tracing
    Critical {
        #[command(subcommand)]
        sub: CriticalCmd,
    },
    /// mKdV coefficients with cross-checks at a double-critical point
    Coeffs(CoeffsArgs),
    /// Kuramoto cross-check of the cubic coefficient
    Kuramoto(KuramotoArgs),
    /// Integrate the mKdV on a periodic domain
    Simulate(SimulateArgs),
    /// Run the full invariant suite at the canonical fixtures
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TensorsArgs {
    /// Model config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Wavenumbers k1,k2
    #[arg(long)]
    k: String,
    /// Frequencies w1,w2 (default: inverted from the config's fixed_state)
    #[arg(long)]
    omega: Option<String>,
    /// Highest derivative order (1..3)
    #[arg(long, default_value_t = 3)]
    order: u8,
    /// Derivative route: fd|analytic
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CriticalCmd {
    /// Newton search for a double-critical point
    Find(FindArgs),
    /// Pseudo-arclength continuation of the double-critical curve
    Trace(TraceArgs),
    /// Gridded values of both criticality conditions
    Scan(ScanArgs),
}

#[derive(Args)]
struct FindArgs {
    #[arg(long)]
    config: PathBuf,
    /// Pinned slice parameter, name=value (default: config slice section)
    #[arg(long)]
    pin: Option<String>,
    /// Initial guess for the free parameters, name=value,name=value
    #[arg(long)]
    guess: Option<String>,
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Seed point JSON (default: find from the config slice section)
    #[arg(long)]
    seed: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    max_step: Option<f64>,
    /// Continuation direction (+1 or -1)
    #[arg(long)]
    direction: Option<f64>,
    #[arg(long)]
    route: Option<String>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    config: PathBuf,
    /// Window override, name=lo:hi,... (default: config window section)
    #[arg(long)]
    window: Option<String>,
    /// Nodes per axis, n1,n2,n3
    #[arg(long, default_value = "50,50,50")]
    nodes: String,
    /// Worker threads (default: logical cores; env MODWAVE_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    route: Option<String>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long)]
    config: PathBuf,
    /// Critical point JSON (default: find from config/--pin/--guess)
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long)]
    pin: Option<String>,
    #[arg(long)]
    guess: Option<String>,
    #[arg(long)]
    route: Option<String>,
    /// Append a soliton run under the reduced raw coefficients
    #[arg(long)]
    simulate: bool,
    /// Soliton amplitude for --simulate
    #[arg(long, default_value_t = 10.0)]
    amplitude: f64,
    /// Domain length for --simulate
    #[arg(long = "L", default_value_t = 40.0)]
    l: f64,
    /// Grid size for --simulate (power of two)
    #[arg(long = "N", default_value_t = 512)]
    n: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct KuramotoArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long)]
    pin: Option<String>,
    #[arg(long)]
    guess: Option<String>,
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    a0: f64,
    #[arg(long)]
    a1: f64,
    #[arg(long)]
    a2: f64,
    #[arg(long = "L")]
    l: f64,
    /// Grid size (power of two, >= 16)
    #[arg(long = "N")]
    n: usize,
    /// Time step (default: an eighth of the stability bound)
    #[arg(long)]
    dt: Option<f64>,
    /// Final time
    #[arg(long = "T")]
    t_end: f64,
    /// Initial condition: soliton:A,X0 or file:path (CSV X,q or JSON {"q": [...]})
    #[arg(long)]
    ic: String,
    /// Record a frame every K steps (0 = endpoints only)
    #[arg(long, default_value_t = 0)]
    snap_every: usize,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Shallow-water fixture config (default: built-in canonical fixture)
    #[arg(long)]
    sw_config: Option<PathBuf>,
    /// Coupled-NLS fixture config (default: built-in canonical fixture)
    #[arg(long)]
    cnls_config: Option<PathBuf>,
    /// Tolerance overrides, name=value (repeatable)
    #[arg(long = "tol")]
    tolerances: Vec<String>,
}

const SW_FIXTURE: &str = include_str!("../../../fixtures/sw.json");
const CNLS_FIXTURE: &str = include_str!("../../../fixtures/cnls.json");

fn run_verify(args: &VerifyArgs) -> Result<bool, WaveError> {
    let load = |path: &Option<PathBuf>, builtin: &str| -> Result<modwave::config::ModelSpec, WaveError> {
        match path {
            Some(p) => modwave::config::ModelSpec::from_path(p),
            None => serde_json::from_str(builtin)
                .map_err(|e| WaveError::InvalidInput(format!("built-in fixture: {e}"))),
        }
    };
    let sw_spec = load(&args.sw_config, SW_FIXTURE)?;
    let nls_spec = load(&args.cnls_config, CNLS_FIXTURE)?;
    let sw = modwave::verify::fixture_from_spec(&sw_spec)?;
    let nls = modwave::verify::fixture_from_spec(&nls_spec)?;
    let mut overrides = BTreeMap::new();
    for t in &args.tolerances {
        let (name, value) = t.split_once('=').ok_or_else(|| {
            WaveError::InvalidInput(format!("--tol expects name=value, got '{t}'"))
        })?;
        let value: f64 = value
            .parse()
            .map_err(|e| WaveError::InvalidInput(format!("--tol '{t}': {e}")))?;
        overrides.insert(name.to_string(), value);
    }
    let report = modwave::verify::run_suite(&sw, &nls, overrides);
    for check in &report.checks {
        println!(
            "{} {:<28} value {:>12.5e}  tol {:>9.1e}  {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance,
            check.detail
        );
    }
    for note in &report.notes {
        println!("{note}");
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!("{passed}/{} checks passed", report.checks.len());
    Ok(report.all_passed())
}

fn dispatch(cli: Cli) -> Result<bool, WaveError> {
    match cli.command {
        Command::Tensors(a) => {
            commands::cmd_tensors(
                &a.config,
                &a.k,
                a.omega.as_deref(),
                a.order,
                a.route.as_deref(),
                a.output.as_deref(),
            )?;
            Ok(true)
        }
        Command::Critical { sub } => {
            match sub {
                CriticalCmd::Find(a) => commands::cmd_critical_find(
                    &a.config,
                    a.pin.as_deref(),
                    a.guess.as_deref(),
                    a.route.as_deref(),
                    a.output.as_deref(),
                )?,
                CriticalCmd::Trace(a) => commands::cmd_critical_trace(
                    &a.config,
                    a.seed.as_deref(),
                    a.steps,
                    a.max_step,
                    a.direction,
                    a.route.as_deref(),
                    &a.format,
                    a.output.as_deref(),
                )?,
                CriticalCmd::Scan(a) => commands::cmd_critical_scan(
                    &a.config,
                    a.window.as_deref(),
                    &a.nodes,
                    a.threads,
                    a.route.as_deref(),
                    &a.format,
                    a.output.as_deref(),
                )?,
            }
            Ok(true)
        }
        Command::Coeffs(a) => {
            let simulate = a.simulate.then_some((a.amplitude, a.l, a.n));
            commands::cmd_coeffs(
                &a.config,
                a.point.as_deref(),
                a.pin.as_deref(),
                a.guess.as_deref(),
                a.route.as_deref(),
                simulate,
                a.output.as_deref(),
            )?;
            Ok(true)
        }
        Command::Kuramoto(a) => {
            commands::cmd_kuramoto(
                &a.config,
                a.point.as_deref(),
                a.pin.as_deref(),
                a.guess.as_deref(),
                a.route.as_deref(),
                a.output.as_deref(),
            )?;
            Ok(true)
        }
        Command::Simulate(a) => {
            commands::cmd_simulate(commands::SimulateArgsParsed {
                a0: a.a0,
                a1: a.a1,
                a2: a.a2,
                l: a.l,
                n: a.n,
                dt: a.dt,
                t_end: a.t_end,
                ic: a.ic,
                snap_every: a.snap_every,
                format: a.format,
                output: a.output,
            })?;
            Ok(true)
        }
        Command::Verify(a) => run_verify(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                WaveError::InvalidInput(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
