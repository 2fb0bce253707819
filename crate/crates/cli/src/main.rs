use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use layercast_cli::random::InstanceBounds;
use layercast_cli::run::{
    cmd_check, cmd_compare, cmd_oracle, cmd_plan, cmd_sweep, cmd_verify, SweepFormat, SweepSpec,
    EXIT_ERROR,
};
use layercast_core::oracle::DEFAULT_PEER_LIMIT;
use layercast_core::rational::Rational;

/// Capacity checks and routing plans for layered peer-to-peer streaming.
#[derive(Parser)]
#[command(name = "layercast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide feasibility of an instance's rate vector (exit 0 feasible, 1 not).
    Check { instance: PathBuf },
    /// Synthesize a transmission plan for a feasible instance.
    Plan {
        instance: PathBuf,
        /// Write the plan JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify a plan file against an instance.
    Verify { instance: PathBuf, plan: PathBuf },
    /// Decide feasibility by exhaustive tree packing (small instances).
    Oracle {
        instance: PathBuf,
        /// Peer-count ceiling for the enumeration.
        #[arg(long, default_value_t = DEFAULT_PEER_LIMIT)]
        max_peers: usize,
    },
    /// Cross-check the closed form against the oracle on random instances.
    Compare {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        max_peers: usize,
        #[arg(long, default_value_t = 3)]
        max_layers: usize,
        #[arg(long, default_value_t = 6)]
        max_capacity: u64,
        #[arg(long, default_value_t = 3)]
        max_rate: u64,
        /// 1 keeps capacities and rates integral.
        #[arg(long, default_value_t = 1)]
        max_denominator: u64,
    },
    /// Tabulate feasibility over a grid of two layer rates.
    Sweep {
        instance: PathBuf,
        /// First varied layer (1-based).
        #[arg(long)]
        vary_a: usize,
        /// Second varied layer (1-based).
        #[arg(long)]
        vary_b: usize,
        /// Grid start, inclusive (integer or p/q).
        #[arg(long)]
        from: String,
        /// Grid end, inclusive.
        #[arg(long)]
        to: String,
        /// Grid step.
        #[arg(long)]
        step: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_rational(text: &str, what: &str) -> Result<Rational, i32> {
    text.parse().map_err(|e| {
        eprintln!("error: invalid {what} {text:?}: {e}");
        EXIT_ERROR
    })
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Check { instance } => cmd_check(&instance),
        Command::Plan { instance, out } => cmd_plan(&instance, out.as_deref()),
        Command::Verify { instance, plan } => cmd_verify(&instance, &plan),
        Command::Oracle {
            instance,
            max_peers,
        } => cmd_oracle(&instance, max_peers),
        Command::Compare {
            seed,
            count,
            max_peers,
            max_layers,
            max_capacity,
            max_rate,
            max_denominator,
        } => cmd_compare(
            seed,
            count,
            &InstanceBounds {
                max_peers,
                max_layers,
                max_capacity,
                max_rate,
                max_denominator,
            },
        ),
        Command::Sweep {
            instance,
            vary_a,
            vary_b,
            from,
            to,
            step,
            format,
            out,
        } => {
            let spec = match (
                parse_rational(&from, "--from"),
                parse_rational(&to, "--to"),
                parse_rational(&step, "--step"),
            ) {
                (Ok(from), Ok(to), Ok(step)) => SweepSpec {
                    vary_a,
                    vary_b,
                    from,
                    to,
                    step,
                },
                (Err(code), _, _) | (_, Err(code), _) | (_, _, Err(code)) => return code,
            };
            let format = match format {
                OutputFormat::Csv => SweepFormat::Csv,
                OutputFormat::Json => SweepFormat::Json,
            };
            cmd_sweep(&instance, &spec, format, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}
