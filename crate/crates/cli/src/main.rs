use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rmw::harness::{DEFAULT_ALPHA, DEFAULT_REPLICATES};
use rmw_cli::{
    AnalyzeConfig, AssuranceConfig, Command, Format, PowerConfig, RunConfig, SimulateConfig, TestKind, THREADS_ENV,
};

/// Weighted log-rank and max-combo tests for two-arm survival data.
#[derive(Debug, Parser)]
#[command(name = "rmw", version, about, long_about = None)]
struct Cli {
    /// Worker threads for Monte Carlo work (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Test one dataset and print the combined result as JSON or CSV.
    Analyze {
        /// CSV with header `time,event,arm` (event and arm are 0/1).
        #[arg(long)]
        data: PathBuf,
        /// Preset pairing: log-rank with mw(0.5), with fh(0,0.5), or a single test.
        #[arg(long, value_enum, default_value_t = TestArg::Rmw)]
        test: TestArg,
        /// Full method in the grammar, e.g. `max(lr,mw(0.5);k1=0.6)`. Overrides the other test flags.
        #[arg(long, conflicts_with_all = ["w1", "w2", "k1"])]
        method: Option<String>,
        /// First weight (default `lr`).
        #[arg(long)]
        w1: Option<String>,
        /// Second weight (default depends on --test).
        #[arg(long)]
        w2: Option<String>,
        /// Share of alpha given to the first test; the second gets 1 - k1.
        #[arg(long, default_value_t = 0.5)]
        k1: f64,
        /// One-sided significance level.
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one trial dataset from a scenario.
    Simulate {
        /// Built-in scenario name or path to a scenario JSON file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate rejection rates over many simulated trials.
    Power {
        /// `all`, built-in names, or scenario JSON paths; repeatable or comma separated.
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<String>,
        /// `paper6` or methods in the grammar; repeatable.
        #[arg(long, required = true, num_args = 1..)]
        methods: Vec<String>,
        /// Replicates per scenario.
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average rejection rates from a power CSV under a prior over scenarios.
    Assurance {
        /// CSV written by `rmw power`.
        #[arg(long = "in")]
        input: PathBuf,
        /// `scenario:weight,...` with weights summing to 1.
        #[arg(long)]
        prior: String,
        /// Method label to report (all methods when omitted).
        #[arg(long)]
        method: Option<String>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestArg {
    Rmw,
    Maxcombo,
    Single,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn into_config(cli: Cli) -> RunConfig {
    let command = match cli.command {
        Cmd::Analyze { data, test, method, w1, w2, k1, alpha, format, out } => Command::Analyze(AnalyzeConfig {
            data,
            test: match test {
                TestArg::Rmw => TestKind::Rmw,
                TestArg::Maxcombo => TestKind::Maxcombo,
                TestArg::Single => TestKind::Single,
            },
            method,
            w1,
            w2,
            k1,
            alpha,
            format: format.into(),
            out,
        }),
        Cmd::Simulate { scenario, seed, out } => Command::Simulate(SimulateConfig { scenario, seed, out }),
        Cmd::Power { scenario, methods, reps, seed, out } => {
            Command::Power(PowerConfig { scenarios: scenario, methods, reps, seed, out })
        }
        Cmd::Assurance { input, prior, method, format, out } => {
            Command::Assurance(AssuranceConfig { input, prior, method, format: format.into(), out })
        }
    };
    RunConfig { command, threads: cli.threads }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = into_config(Cli::parse());
    match rmw_cli::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
