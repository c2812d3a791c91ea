use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opexcheck::sigma::DEFAULT_SETWISE_BUDGET;
use opexcheck::Strategy;
use opexcheck_cli::{CheckOptions, CliError, Outcome};

/// Correctness checking and state-graph audits for concurrent-object histories.
#[derive(Parser)]
#[command(name = "opexcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a history is correct under a consistency condition.
    Check(CheckArgs),
    /// Like `check`, repairing the op-exes of Byzantine processes.
    ByzCheck {
        #[command(flatten)]
        check: CheckArgs,
        /// JSON array of candidate op-ex templates.
        #[arg(long)]
        universe: PathBuf,
        /// Inserted op-exes per Byzantine process.
        #[arg(long, default_value_t = 1)]
        max_insert: usize,
        #[arg(long, default_value_t = 100_000)]
        candidate_budget: u64,
    },
    /// Enumerate the histories of a program into a directory.
    Gen {
        /// Built-in program name (alg1..alg5) or program file.
        #[arg(long)]
        program: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the state graph of a history directory and export it as DOT.
    Sigma {
        #[arg(long)]
        histories: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop pre-broadcast deliveries and broadcast responses.
        #[arg(long)]
        reduced: bool,
    },
    /// Audit the consensus impossibility axioms.
    AuditFlp {
        #[arg(long)]
        histories: PathBuf,
    },
    /// Audit the k-set-agreement impossibility axioms.
    AuditKsa {
        #[arg(long)]
        histories: PathBuf,
        #[arg(long)]
        k: usize,
        /// Bound on chain pairs examined by setwise asynchrony.
        #[arg(long, default_value_t = DEFAULT_SETWISE_BUDGET)]
        budget: u64,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    history: PathBuf,
    /// `NAME[:params]` for every object, or `OBJ=NAME[:params]`.
    #[arg(long = "spec", required = true)]
    specs: Vec<String>,
    /// Condition name, or clause and condition names joined by `+`.
    #[arg(long)]
    consistency: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "auto")]
    strategy: Strategy,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long)]
    max_opexes: Option<usize>,
}

impl CheckArgs {
    fn options(self) -> (PathBuf, CheckOptions) {
        let opts = CheckOptions {
            specs: self.specs,
            consistency: self.consistency,
            k: self.k,
            strategy: self.strategy,
            node_budget: self.node_budget,
            max_opexes: self.max_opexes,
        };
        (self.history, opts)
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Check(args) => {
            let (history, opts) = args.options();
            opexcheck_cli::run_check(&history, &opts)
        }
        Command::ByzCheck { check, universe, max_insert, candidate_budget } => {
            let (history, opts) = check.options();
            opexcheck_cli::run_byz_check(&history, &opts, &universe, max_insert, candidate_budget)
        }
        Command::Gen { program, out } => opexcheck_cli::run_gen(&program, &out),
        Command::Sigma { histories, out, reduced } => {
            opexcheck_cli::run_sigma(&histories, &out, reduced)
        }
        Command::AuditFlp { histories } => opexcheck_cli::run_audit_flp(&histories),
        Command::AuditKsa { histories, k, budget } => {
            opexcheck_cli::run_audit_ksa(&histories, k, budget)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("serializable");
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
