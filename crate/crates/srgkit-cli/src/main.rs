//! `srgkit`: SRG stability verdicts and L2-gain bounds from the command line.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "srgkit", version, about = "Scaled relative graph analysis of feedback interconnections")]
struct Cli {
    /// Root directory for run artifacts.
    #[arg(long, global = true, env = "SRGKIT_OUT_DIR", default_value = "srgkit-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

/// A configuration file or one of the bundled examples.
#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Project configuration (JSON).
    config: Option<PathBuf>,
    /// Bundled example: duffing, duffing_sqrt2, pendulum_k1, pendulum_k2, pitfall, lure_saturation.
    #[arg(long)]
    example: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Stability verdict and gain bound for a configured interconnection.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Override the configured mode (incremental | non-incremental).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Nyquist curve and criterion of a loop transfer function.
    Nyquist {
        /// Loop transfer function, e.g. "-2/(s^2+s+1)".
        #[arg(long, allow_hyphen_values = true)]
        tf: String,
    },
    /// SRG of a transfer function, or the SRG bound of a configured word.
    Srg {
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["config", "example"])]
        tf: Option<String>,
        config: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        /// Plain SRG (hull of the Nyquist curve) instead of the extended one.
        #[arg(long)]
        plain: bool,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Time-domain simulation of a configured scenario.
    Simulate {
        #[command(flatten)]
        source: Source,
    },
    /// Amplitude bound of the controlled Duffing oscillator under bounded disturbances.
    DuffingBound {
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value_t = 5.0)]
        kp: f64,
        #[arg(long, default_value_t = 5.0)]
        kd: f64,
        #[arg(long, default_value_t = 1.0)]
        d_max: f64,
    },
    /// Classical and SRG circle criteria side by side for a sector [k1, k2].
    Circle {
        #[arg(long, allow_hyphen_values = true)]
        tf: String,
        #[arg(long, allow_negative_numbers = true)]
        k1: f64,
        #[arg(long, allow_negative_numbers = true)]
        k2: f64,
        #[arg(long, default_value = "non-incremental")]
        mode: String,
    },
}

/// The error chain, skipping causes whose text an outer message already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn main() -> ExitCode {
    // Exit status 2 is reserved for verdicts, so usage errors exit with 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = cli.out_dir.as_path();
    let result = match cli.command {
        Command::Analyze { source, mode } => commands::analyze(out, &source, mode.as_deref()),
        Command::Nyquist { tf } => commands::nyquist(out, &tf),
        Command::Srg { tf, config, example, plain, mode } => {
            let source = (tf.is_none()).then_some(Source { config, example });
            commands::srg(out, tf.as_deref(), source.as_ref(), plain, mode.as_deref())
        }
        Command::Simulate { source } => commands::simulate(out, &source),
        Command::DuffingBound { alpha, beta, delta, kp, kd, d_max } => {
            commands::duffing_bound(out, [alpha, beta, delta, kp, kd, d_max])
        }
        Command::Circle { tf, k1, k2, mode } => commands::circle(out, &tf, k1, k2, &mode),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
