// SPDX-License-Identifier: Apache-2.0

//! `nklab`: runs the verification suites and writes a JSON or CSV report.
//!
//! Exit status is 0 when every record passes, 1 when some record fails and
//! 2 when the run could not be carried out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nklab::report::{self, CheckRecord, Format, ReportError, RunConfig, Summary};

#[derive(Parser, Debug)]
#[command(name = "nklab", version, about = "Numerical checks for the nearly Kaehler SL(2,R)xSL(2,R) and its Lagrangian catalog")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Identity suites.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Invariants of the homogeneous Lagrangian catalog.
    Catalog {
        /// Row key: diag, berger_spacelike, berger_timelike, psl, torus, iota, f_lambda, jmath.
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Suite {
    /// Metric, J, P, Q, connection, G and curvature identities.
    Structure,
    /// Isometry generators and group laws.
    Isometries,
    /// Structure, isometries and the whole catalog.
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Opts {
    #[arg(long, global = true, env = "NKLAB_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_exact: f64,
    #[arg(long, global = true, default_value_t = 1e-5)]
    tol_fd: f64,
    #[arg(long, global = true, default_value_t = 1e-4)]
    fd_step: f64,
    /// Comma-separated lambda values for the f_lambda row.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<f64>,
    /// Report file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: FormatArg,
    /// Run every check on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

impl Opts {
    fn config(&self) -> RunConfig {
        let base = RunConfig::default();
        RunConfig {
            seed: self.seed,
            samples: self.samples,
            tol_exact: self.tol_exact,
            tol_fd: self.tol_fd,
            fd_step: self.fd_step,
            lambda_grid: if self.lambda.is_empty() { base.lambda_grid } else { self.lambda.clone() },
            out_path: self.out.clone(),
            format: match self.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
            parallel: base.parallel && !self.sequential,
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<CheckRecord>, ReportError> {
    let cfg = cli.opts.config();
    let records = match &cli.cmd {
        Command::Verify { suite: Suite::Structure } => report::verify_structure(&cfg)?,
        Command::Verify { suite: Suite::Isometries } => report::verify_isometries(&cfg)?,
        Command::Verify { suite: Suite::All } => report::verify_all(&cfg)?,
        Command::Catalog { id } => report::verify_catalog(&cfg, id.as_deref())?,
    };
    report::write_report(&records, &cfg)?;
    Ok(records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(records) => {
            let s = Summary::of(&records);
            eprintln!("{} checks, {} passed, {} failed", s.total, s.passed, s.failed);
            for r in records.iter().filter(|r| !r.pass) {
                eprintln!("FAIL {}: {} (residual {:e}, tolerance {:e})", r.suite, r.check, r.max_residual, r.tolerance);
            }
            if s.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
