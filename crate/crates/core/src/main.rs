use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use efg_smooth::cli::{self, CliError, Game, Method, RunConfig, DEFAULT_WARM_FRACTION};

/// Solve Kuhn poker or Leduc Hold'em with EGT, CFR or CFR+ and write the
/// exploitability trace as CSV.
#[derive(Debug, Parser)]
#[command(name = "efg-smooth", version)]
struct Args {
    #[arg(long, value_enum, required_unless_present = "summarize")]
    game: Option<Game>,

    #[arg(long, value_enum, required_unless_present = "summarize")]
    method: Option<Method>,

    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,

    /// Fraction of iterations spent in the warm start of centering methods.
    #[arg(long, default_value_t = DEFAULT_WARM_FRACTION)]
    warm_fraction: f64,

    /// Evaluate exploitability every N iterations (and at the last one).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    eval_stride: u64,

    /// Unused; all solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Tabulate existing CSV traces instead of solving.
    #[arg(long, num_args = 0.., value_name = "FILES", conflicts_with_all = ["game", "method", "output"])]
    summarize: Option<Vec<PathBuf>>,
}

fn init_logging() {
    let level = match std::env::var("EFG_SMOOTH_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("info") => LevelFilter::Info,
        Ok("debug") => LevelFilter::Debug,
        _ => LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).init();
}

fn execute(args: Args) -> Result<(), CliError> {
    if let Some(paths) = args.summarize {
        return cli::summarize(&paths, &mut io::stdout().lock());
    }
    let config = RunConfig {
        game: args.game.expect("required by clap"),
        method: args.method.expect("required by clap"),
        iterations: args.iterations as usize,
        warm_fraction: args.warm_fraction,
        eval_stride: args.eval_stride as usize,
        seed: args.seed,
        output: args.output,
    };
    cli::run(&config).map(|_| ())
}

fn main() -> ExitCode {
    init_logging();
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
