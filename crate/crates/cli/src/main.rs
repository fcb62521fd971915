mod batch;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use plurisurf::programs::CrossingOrder;

/// Exact computations on log surface pairs.
#[derive(Parser)]
#[command(name = "plurisurf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Io {
    /// Input document.
    #[arg(long, short)]
    input: PathBuf,
    /// Where to write the report; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Add wall-clock timing to the report (makes it non-deterministic).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Ascending,
    Descending,
}

impl From<Order> for CrossingOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Ascending => CrossingOrder::Ascending,
            Order::Descending => CrossingOrder::Descending,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Discrepancy,
    Semigroup,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Singularity class, minimal discrepancy and ε-klt threshold of a case.
    Classify {
        #[command(flatten)]
        io: Io,
        /// Also run the blow-up search to this depth and compare.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Crepant terminal model of a klt case.
    Terminalize {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "ascending")]
        order: Order,
    },
    /// Numerical MMP on a case.
    Mmp {
        #[command(flatten)]
        io: Io,
    },
    /// Decompose m in the semigroup generated by qN + 1.
    Semigroup {
        #[arg(long)]
        n: u64,
        #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
        m: Option<u64>,
        /// Inclusive range `A..B` of values of m.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Full bound pipeline on one case or on every `*.json` in a directory.
    Pipeline {
        #[command(flatten)]
        io: Io,
        /// Worker threads for directory input.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Replay the certificate in a pipeline report.
    Verify {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Brute-force cross-checks against the closed forms.
    Oracle {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random pairs in the discrepancy suite.
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = plurisurf::singularity::DEFAULT_ORACLE_DEPTH)]
        depth: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify { io, depth } => commands::single(&io.input, io.output.as_deref(), io.timing, |case| {
            commands::classify(case, depth)
        }),
        Command::Terminalize { io, order } => {
            commands::single(&io.input, io.output.as_deref(), io.timing, |case| {
                commands::terminalize(case, order.into())
            })
        }
        Command::Mmp { io } => commands::single(&io.input, io.output.as_deref(), io.timing, commands::mmp),
        Command::Semigroup { n, m, sweep, output } => commands::semigroup(n, m, sweep.as_deref(), output.as_deref()),
        Command::Pipeline { io, jobs } => {
            if io.input.is_dir() {
                batch::run(&io.input, io.output.as_deref(), jobs, io.timing)
            } else {
                commands::single(&io.input, io.output.as_deref(), io.timing, commands::pipeline)
            }
        }
        Command::Verify { input, output } => commands::verify(&input, output.as_deref()),
        Command::Oracle {
            suite,
            seed,
            cases,
            depth,
            output,
        } => {
            let (discrepancy, semigroup) = match suite {
                Suite::Discrepancy => (true, false),
                Suite::Semigroup => (false, true),
                Suite::All => (true, true),
            };
            commands::oracle(discrepancy, semigroup, seed, cases, depth, output.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
