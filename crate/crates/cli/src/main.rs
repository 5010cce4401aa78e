use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use erl_cli::experiments::{self, RunResult};
use erl_cli::{ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "erl", version, about = "Relative-energy experiments for isentropic Euler on a torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Run {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-volume run with snapshots.
    Solve(Run),
    /// Exact torus Riemann solution with snapshots.
    Riemann(Run),
    /// Mollification rates of a Weierstrass field.
    BesovRate(Run),
    /// Commutator decay of a Weierstrass field.
    CommutatorRate(Run),
    /// Relative energy series and commutator trend.
    Relenergy(Run),
    /// Weak-strong uniqueness certificate.
    Certify(Run),
    /// Certificate for a dissipative measure-valued solution.
    MvsCertify(Run),
    /// Periodic extension and rescaled classical solution.
    Extend(Run),
    /// Merge JSON reports into one summary CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ERL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("ERL_THREADS: must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| format!("ERL_THREADS: {e}"))
}

fn run(args: &Run, f: fn(&ExperimentConfig, &std::path::Path) -> RunResult) -> ExitCode {
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    match f(&cfg, &out) {
        Ok(o) => {
            println!("{}", o.summary);
            for a in o.artifacts.iter().filter(|a| a.extension().is_some_and(|e| e != "erl")) {
                println!("wrote {}", a.display());
            }
            if o.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = threads() {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    match &cli.command {
        Command::Solve(a) => run(a, experiments::run_solve),
        Command::Riemann(a) => run(a, experiments::run_riemann),
        Command::BesovRate(a) => run(a, experiments::run_besov_rate),
        Command::CommutatorRate(a) => run(a, experiments::run_commutator_rate),
        Command::Relenergy(a) => run(a, experiments::run_relenergy),
        Command::Certify(a) => run(a, experiments::run_certify),
        Command::MvsCertify(a) => run(a, experiments::run_mvs_certify),
        Command::Extend(a) => run(a, experiments::run_extend),
        Command::Report { out, inputs } => match experiments::merge_reports(inputs, out) {
            Ok(n) => {
                println!("merged {n} reports into {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
    }
}
