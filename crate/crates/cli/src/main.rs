mod commands;
mod config;

use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use commands::{CliError, Status};
use config::Flags;

#[derive(Parser, Debug)]
#[command(name = "chensieve", version, about = "Sieve and Chen-prime Goldbach computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Find m = 4 mod 6 up to N with no representation as a sum of two Chen primes.
    Scan,
    /// Sandwich, fundamental-lemma gap and minorant checks up to N.
    SieveAudit,
    /// Singular series and representation counts at a single m.
    SingularSeries,
    /// Fourier norms of the Chen-prime window and the b_R kernel check.
    Fourier,
    /// Gallagher-type discrepancy at N and R.
    Gallagher,
    /// Bombieri-Vinogradov type sums at N, Q, P.
    Bv,
    /// The positivity constant of the Chen sieve.
    ChenConstant,
    /// Pre-sieved additive sums against the singular-series prediction.
    AdditiveCheck,
    /// Majorant sweep for the Heath-Brown type model.
    ModelsCheck,
    /// Search for real zeros close to 1 of L-functions of small conductor.
    ExceptionalZero,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::SieveAudit => "sieve_audit",
            Command::SingularSeries => "singular_series",
            Command::Fourier => "fourier",
            Command::Gallagher => "gallagher",
            Command::Bv => "bv",
            Command::ChenConstant => "chen_constant",
            Command::AdditiveCheck => "additive_check",
            Command::ModelsCheck => "models_check",
            Command::ExceptionalZero => "exceptional_zero",
        }
    }
}

fn run(cmd: Command, flags: &Flags, stop: &AtomicBool) -> commands::CmdResult {
    match cmd {
        Command::Scan => commands::scan(flags, stop),
        Command::SieveAudit => commands::sieve_audit(flags),
        Command::SingularSeries => commands::singular_series(flags),
        Command::Fourier => commands::fourier(flags),
        Command::Gallagher => commands::gallagher(flags),
        Command::Bv => commands::bv(flags),
        Command::ChenConstant => commands::chen_constant_cmd(flags),
        Command::AdditiveCheck => commands::additive_check(flags),
        Command::ModelsCheck => commands::models_check(flags),
        Command::ExceptionalZero => commands::exceptional_zero(flags),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let usage = |msg: &dyn std::fmt::Display| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    let flags = match cli.flags.resolve() {
        Ok(f) => f,
        Err(e) => return usage(&e),
    };
    match flags.thread_count() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: thread pool: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => return usage(&e),
    }
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        let _ = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst));
    }
    let result = run(cli.command, &flags, &stop).and_then(|o| {
        commands::emit(&flags, cli.command.name(), &o.report)?;
        Ok(o.status)
    });
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => {
            eprintln!("{}: invariant check failed", cli.command.name());
            ExitCode::from(1)
        }
        Ok(Status::Interrupted) => ExitCode::from(3),
        Err(CliError::Usage(m)) => usage(&m),
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
