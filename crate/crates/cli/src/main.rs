use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use piecert::scalar::Rational;
use piecert_cli::{
    cmd_check, cmd_convert, cmd_spectrum, cmd_stability, cmd_sweep, parse_assignment, Settings, EXIT_INVALID,
};

#[derive(Parser)]
#[command(name = "piecert", version)]
#[command(about = "Convert 1-D PDEs with integral terms to PIEs and certify exponential stability")]
struct Cli {
    /// Parameter value, as name=value (repeatable)
    #[arg(long = "set", global = true, value_parser = parse_assignment)]
    set: Vec<(String, Rational)>,

    /// Polynomial degree of the Lyapunov operator
    #[arg(long, global = true, default_value_t = 2)]
    degree: usize,

    /// Margin in R >= alpha I
    #[arg(long, global = true, default_value_t = 1e-4)]
    alpha: f64,

    /// Margin in H >= delta T*T
    #[arg(long, global = true, default_value_t = 1e-4)]
    delta: f64,

    /// SDP solver
    #[arg(long, global = true, default_value = "clarabel")]
    backend: String,

    /// Write the assembled SDP in SDPA sparse format
    #[arg(long, global = true, value_name = "PATH")]
    export_sdpa: Option<PathBuf>,

    /// Time limit per solve, in seconds
    #[arg(long, global = true, value_name = "SECONDS")]
    timeout: Option<f64>,

    /// Grid points of the numerical oracle
    #[arg(short = 'N', global = true, default_value_t = 200)]
    grid: usize,

    /// Output file instead of standard output
    #[arg(short = 'o', global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Include solve times in the output
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the boundary conditions are admissible
    Check { model: String },
    /// Convert a PDE model to its PIE representation
    Convert { model: String },
    /// Search for a Lyapunov certificate of exponential stability
    Stability { model: String },
    /// Bisect a parameter for the boundary of proven stability
    Sweep {
        model: String,
        /// Parameter to vary
        param: String,
        lo: f64,
        hi: f64,
        /// Final bracket width
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Print the spectral abscissa and leading eigenvalues of the discretized PIE
    Spectrum { model: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = Settings {
        params: cli.set.into_iter().collect(),
        degree: cli.degree,
        alpha: cli.alpha,
        delta: cli.delta,
        backend: cli.backend,
        export_sdpa: cli.export_sdpa,
        timeout: cli.timeout,
        grid: cli.grid,
        output: cli.output,
        timings: cli.timings,
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Check { model } => cmd_check(model, &settings, &mut out),
        Command::Convert { model } => cmd_convert(model, &settings, &mut out),
        Command::Stability { model } => cmd_stability(model, &settings, &mut out),
        Command::Sweep { model, param, lo, hi, tol } => {
            cmd_sweep(model, param, *lo, *hi, *tol, &settings, &mut out, &mut std::io::stderr())
        }
        Command::Spectrum { model } => cmd_spectrum(model, &settings, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
