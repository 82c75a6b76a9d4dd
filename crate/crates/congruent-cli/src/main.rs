//! Command-line front end: certification, batch scans, family generation,
//! and direct access to the descent, L-value, Heegner and graph layers.

mod cache;
mod commands;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

/// Exit codes: 0 verdict reached, 2 inconclusive, 3 input error,
/// 4 precision or internal failure.
#[derive(Parser)]
#[command(name = "congruent", version, about = "Congruent-number certification")]
struct Cli {
    /// Working precision in decimal digits for analytic steps.
    #[arg(long, global = true, default_value_t = 60)]
    prec: u32,
    /// Certificate cache directory (falls back to $CONGRUENT_CACHE).
    #[arg(long, global = true)]
    cache: Option<String>,
    /// Emit JSON instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify an area as congruent or non-congruent. Accepts one integer
    /// (the area) or a list of odd primes.
    Certify {
        #[arg(required = true)]
        input: Vec<u64>,
    },
    /// Classify every squarefree area in a range; criterion and descent by
    /// default, Heegner construction opt-in.
    Scan {
        lo: u64,
        hi: u64,
        /// Also run the Heegner construction on flagged areas.
        #[arg(long)]
        heegner: bool,
        /// Bound on k (number of primes beyond p0) for Heegner runs.
        #[arg(long, default_value_t = 1)]
        max_k: usize,
    },
    /// Generate a prime family for p0 and certify prefix products.
    Family {
        p0: u64,
        count: usize,
        /// Search bound for the family primes.
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
        /// Bound on k for end-to-end certification of prefix products.
        #[arg(long, default_value_t = 1)]
        max_k: usize,
    },
    /// Run only the Heegner-point construction.
    Heegner {
        #[arg(required = true)]
        input: Vec<u64>,
    },
    /// 2-isogeny descent report for an area.
    Selmer { m: u64 },
    /// Central L-value and its algebraic part for a twist index.
    Lvalue { d: u64 },
    /// DOT dump of the prime graph.
    Graph {
        #[arg(required = true)]
        input: Vec<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = cache::resolve(cli.cache.as_deref());
    let code = match &cli.command {
        Command::Certify { input } => {
            commands::cmd_certify(input, cli.prec, cache.as_deref(), cli.json)
        }
        Command::Scan {
            lo,
            hi,
            heegner,
            max_k,
        } => commands::cmd_scan(*lo, *hi, *heegner, *max_k, cli.prec, cache.as_deref(), cli.json),
        Command::Family {
            p0,
            count,
            bound,
            max_k,
        } => commands::cmd_family(*p0, *count, *bound, *max_k, cli.prec, cache.as_deref(), cli.json),
        Command::Heegner { input } => commands::cmd_heegner(input, cli.prec, cli.json),
        Command::Selmer { m } => commands::cmd_selmer(*m, cli.json),
        Command::Lvalue { d } => commands::cmd_lvalue(*d, cli.prec, cli.json),
        Command::Graph { input } => commands::cmd_graph(input),
    };
    ExitCode::from(code)
}
