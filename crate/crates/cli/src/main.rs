mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CertifyArgs, MkhArgs, ParseArgs, SampleArgs, TraceArgs, VerifyArgs};

/// Levi-form convexity certificates for real hypersurfaces of C^n.
///
/// Exit codes: 0 certified, 2 infeasible at some points, 3 degenerate, 1 usage or input error.
#[derive(Parser)]
#[command(name = "levi-scope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an expression and print its canonical form.
    Parse(ParseArgs),
    /// Certify weak Z(q) (or weak Y(q)) on sampled boundary points.
    Certify(CertifyArgs),
    /// Check a Υ field at sampled or listed boundary points.
    VerifyUpsilon(VerifyArgs),
    /// Levi eigenvalues and certificates along a parametrized curve, as CSV.
    Trace(TraceArgs),
    /// Numerically check the flat basic identity for a bump (0,q)-form.
    MkhCheck(MkhArgs),
    /// Print sampled boundary points as CSV.
    Sample(SampleArgs),
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LEVI_SCOPE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("LEVI_SCOPE_THREADS=`{}` is not a count", v))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Parse(a) => commands::run_parse(a),
        Command::Certify(a) => commands::run_certify(a),
        Command::VerifyUpsilon(a) => commands::run_verify(a),
        Command::Trace(a) => commands::run_trace(a),
        Command::MkhCheck(a) => commands::run_mkh(a),
        Command::Sample(a) => commands::run_sample(a),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
