mod report;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use ckn_core::Error;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ckn", version, about = "Stability numerics for the Caffarelli-Kohn-Nirenberg inequality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
#[command(allow_negative_numbers = true)]
struct Point {
    /// Dimension N >= 2
    n: u32,
    a: f64,
    b: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Region classification and curve values.
    #[command(allow_negative_numbers = true)]
    Region {
        #[command(flatten)]
        point: Point,
    },
    /// Closed-form eigenvalues lambda_{i,j}.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 2)]
        imax: u32,
        #[arg(long, default_value_t = 2)]
        jmax: u32,
    },
    /// Spectral gap constant with every branch.
    #[command(allow_negative_numbers = true)]
    Gap {
        #[command(flatten)]
        point: Point,
    },
    /// Upper bounds on c_BE.
    #[command(allow_negative_numbers = true)]
    Bounds {
        #[command(flatten)]
        point: Point,
    },
    /// Two-bubble and gap-perturbation quotients with their expansions.
    #[command(allow_negative_numbers = true)]
    Energy {
        #[command(flatten)]
        point: Point,
        /// Bubble separation; defaults to 10/gamma.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Fourth-order coefficient and the sign analysis around it.
    #[command(allow_negative_numbers = true)]
    Zhat {
        #[command(flatten)]
        point: Point,
    },
    /// Multi-start minimization of the quotient.
    #[command(allow_negative_numbers = true)]
    Minimize {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Batch evaluation over an (a, b) grid described by a JSON file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn emit(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("values serialize");
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn fail(err: &Error) -> ExitCode {
    emit(&json!({ "error": err.to_string(), "kind": err.kind() }));
    if err.is_parameter_error() { ExitCode::from(2) } else { ExitCode::from(3) }
}

fn run(cmd: Command) -> Result<Option<Value>, Error> {
    Ok(Some(match cmd {
        Command::Region { point } => report::region(point.n, point.a, point.b)?,
        Command::Spectrum { point, imax, jmax } => report::spectrum(point.n, point.a, point.b, imax, jmax)?,
        Command::Gap { point } => report::gap(point.n, point.a, point.b)?,
        Command::Bounds { point } => report::bounds(point.n, point.a, point.b)?,
        Command::Energy { point, s, eps } => report::energy(point.n, point.a, point.b, s, eps)?,
        Command::Zhat { point } => report::zhat(point.n, point.a, point.b)?,
        Command::Minimize { point, starts, seed } => report::minimize(point.n, point.a, point.b, starts, seed)?,
        Command::Sweep { config } => return sweep::run(&config),
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit(&json!({ "error": e.to_string().trim(), "kind": "Usage" }));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = std::env::var("CKN_WORKERS").ok().and_then(|s| s.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().ok();
    }
    match run(cli.command) {
        Ok(Some(v)) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
