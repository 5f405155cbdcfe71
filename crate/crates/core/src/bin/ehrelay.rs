use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ehrelay::experiment::{self, output, RateUnits, ScenarioConfig};
use ehrelay::{jopta, ratefns, EpochChannel, SolverSettings};

const RESULTS_FILE: &str = "results.csv";
const PLOTDATA_FILE: &str = "plotdata.csv";

#[derive(Parser)]
#[command(name = "ehrelay", version, about = "Power and time-fraction allocation for a wireless-powered relay link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every selected scheme over the budget grid and write CSV results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the closed-form solvers against oracles and alternative routes.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Find the OPA time fraction maximizing the average rate at one budget.
    TauSearch {
        #[arg(long)]
        config: PathBuf,
        /// Average relay power budget in watts.
        #[arg(long = "p-bar")]
        p_bar: f64,
    },
    /// Solve the JOPTA per-epoch problem for one channel state.
    SolveEpoch {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        lambda: f64,
    },
}

/// Usage and configuration problems.
const EXIT_USAGE: u8 = 2;
/// A check or a scheme failed.
const EXIT_FAILURE: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep { config } => run_sweep(&config),
        Command::Validate { config } => run_validate(&config),
        Command::TauSearch { config, p_bar } => run_tau_search(&config, p_bar),
        Command::SolveEpoch { a, y, lambda } => run_solve_epoch(a, y, lambda),
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    experiment::load_config(path)
        .and_then(|c| c.validate().map(|_| c))
        .map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        })
}

fn fail(code: u8, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn run_sweep(path: &Path) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let outcome = match experiment::sweep(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let results = cfg.output_dir.join(RESULTS_FILE);
    let plot = cfg.output_dir.join(PLOTDATA_FILE);
    if let Err(e) = output::write_csv(&outcome.rows, &results)
        .and_then(|_| output::emit_plotdata(&outcome.rows, cfg.rate_units, &plot))
    {
        return fail(EXIT_FAILURE, e);
    }

    for row in &outcome.rows {
        let rate = match cfg.rate_units {
            RateUnits::Nats => format!("{:.6} nats", row.avg_rate_nats),
            RateUnits::Bits => format!("{:.6} bits", row.avg_rate_bits),
            RateUnits::Both => format!("{:.6} nats  {:.6} bits", row.avg_rate_nats, row.avg_rate_bits),
        };
        let tau0 = row.tau0.map(|t| format!("  tau0 {t:.4}")).unwrap_or_default();
        println!("{:<5} p_bar {:<8} {rate}{tau0}", row.scheme, output::format_sig12(row.p_bar));
    }
    println!("wrote {} and {}", results.display(), plot.display());
    for f in &outcome.failures {
        eprintln!("failed: {} at p_bar {}: {}", f.scheme, f.p_bar, f.message);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn run_validate(path: &Path) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match experiment::validate(&cfg) {
        Ok(report) => {
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

fn run_tau_search(path: &Path, p_bar: f64) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if p_bar.is_nan() || p_bar <= 0.0 || p_bar.is_infinite() {
        return fail(EXIT_USAGE, format!("--p-bar must be positive, got {p_bar}"));
    }
    match experiment::tau_search(&cfg, p_bar) {
        Ok((tau0, rate)) => {
            println!("tau0 {}", output::format_sig12(tau0));
            println!("avg_rate_nats {}", output::format_sig12(rate));
            println!("avg_rate_bits {}", output::format_sig12(rate / std::f64::consts::LN_2));
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

fn run_solve_epoch(a: f64, y: f64, lambda: f64) -> ExitCode {
    if !(a >= 0.0 && a.is_finite() && y >= 0.0 && y.is_finite()) {
        return fail(EXIT_USAGE, "--a and --y must be finite and non-negative");
    }
    if lambda.is_nan() || lambda <= 0.0 || lambda.is_infinite() {
        return fail(EXIT_USAGE, format!("--lambda must be positive, got {lambda}"));
    }
    let ch = EpochChannel::from_coefficients(a, y);
    match jopta::solve_epoch(&ch, lambda, &SolverSettings::default()) {
        Ok(s) => {
            let rate = ratefns::c1(s.tau_star, s.p_star, a).min(ratefns::c2(s.tau_star, s.p_star, y));
            let g = output::format_sig12;
            println!("branch {:?}", s.branch);
            println!("tau1 {}", g(s.tau1));
            println!("tau2 {}", g(s.tau2));
            println!("tau_star {}", g(s.tau_star));
            println!("p_star {}", g(s.p_star));
            println!("energy {}", g(s.energy()));
            println!("rate_nats {}", g(rate));
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_FAILURE, e),
    }
}
