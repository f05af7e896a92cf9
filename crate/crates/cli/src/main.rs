use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaosclt::error::{Error, Result};
use chaosclt::experiment::{powers_of_two, run_bm, run_rate, ExperimentConfig};
use chaosclt::table::{read_rows, rows_to_string};
use chaosclt::verify::{run_verify, VerifyConfig};
use chaosclt_core::breuer_major::{CovModel, SlowlyVarying, DEFAULT_SIGMA_CUTOFF};
use chaosclt_core::hilbert::GridK;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bound calculators and rate experiments for Breuer-Major functionals.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Bound table for a power-law (or iid) covariance.
    Bm(BmArgs),
    /// Bound table for fractional Brownian motion increments.
    Fbm(FbmArgs),
    /// Slope regression over a table written by `bm` or `fbm`; exits 1 on FAIL.
    Rate(RateArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo replicas per check.
    #[arg(long, default_value_t = 100_000)]
    replicas: usize,
    /// Fault injection: scales the exact Γ-variance before comparison.
    #[arg(long, default_value_t = 1.0, hide = true)]
    inject_gamma_scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    /// Hermite order.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Smallest sample size (power of two).
    #[arg(long, default_value_t = 256)]
    nmin: usize,
    /// Largest sample size (power of two).
    #[arg(long, default_value_t = 8192)]
    nmax: usize,
    /// Explicit comma-separated sample sizes; overrides --nmin/--nmax.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Number of grid nodes discretizing [0, 1].
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Monte Carlo replicas for the empirical discrepancy (0 = off).
    #[arg(long, default_value_t = 0)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of terms in the series for the limiting variance.
    #[arg(long, default_value_t = DEFAULT_SIGMA_CUTOFF)]
    sigma_cutoff: usize,
    /// Output CSV path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LFunc {
    Const,
    Log,
}

#[derive(Args)]
struct BmArgs {
    /// Covariance exponent: rho(k) = |k|^alpha l(|k|).
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    alpha: f64,
    /// Scale c of the slowly varying factor.
    #[arg(long, default_value_t = 0.5)]
    lconst: f64,
    /// Shape of the slowly varying factor: c or c (1 + ln k).
    #[arg(long, value_enum, default_value_t = LFunc::Const)]
    lfunc: LFunc,
    /// Use an iid sequence instead of a power law.
    #[arg(long)]
    iid: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct FbmArgs {
    #[arg(long, default_value_t = 0.6)]
    hurst: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct RateArgs {
    /// Input CSV (stdin if absent).
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(text.as_bytes()))
            .map_err(io_err(path)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn usage<E: std::fmt::Display>(e: E) -> Error {
    Error::Usage(e.to_string())
}

fn experiment(common: &CommonArgs, cov: CovModel) -> Result<()> {
    let n_list = match &common.n_list {
        Some(list) => list.clone(),
        None => powers_of_two(common.nmin, common.nmax)?,
    };
    let cfg = ExperimentConfig {
        p: common.p,
        cov,
        n_list,
        grid: GridK::new(common.grid).map_err(usage)?,
        replicas: common.replicas,
        seed: common.seed,
        sigma_cutoff: common.sigma_cutoff,
    };
    if cfg.p == 0 {
        return Err(Error::Usage("--p must be at least 1".into()));
    }
    let rows = run_bm(&cfg)?;
    emit(common.out.as_deref(), &rows_to_string(&rows))
}

/// `Ok(false)` means the command ran but a check failed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify(a) => {
            let report = run_verify(&VerifyConfig {
                seed: a.seed,
                replicas: a.replicas,
                gamma_scale: a.inject_gamma_scale,
            })?;
            emit(a.out.as_deref(), &report.to_string())?;
            Ok(report.passed())
        }
        Command::Bm(a) => {
            let cov = if a.iid {
                CovModel::Iid
            } else {
                let l = match a.lfunc {
                    LFunc::Const => SlowlyVarying::Const(a.lconst),
                    LFunc::Log => SlowlyVarying::Log(a.lconst),
                };
                CovModel::power_law(a.alpha, l).map_err(usage)?
            };
            experiment(&a.common, cov)?;
            Ok(true)
        }
        Command::Fbm(a) => {
            let cov = CovModel::fbm_increment(a.hurst).map_err(usage)?;
            experiment(&a.common, cov)?;
            Ok(true)
        }
        Command::Rate(a) => {
            let rows = match &a.input {
                Some(path) => read_rows(File::open(path).map_err(io_err(path))?)?,
                None => {
                    let mut text = String::new();
                    io::stdin()
                        .read_to_string(&mut text)
                        .map_err(io_err(Path::new("<stdin>")))?;
                    read_rows(text.as_bytes())?
                }
            };
            let report = run_rate(&rows)?;
            emit(None, &report.to_string())?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Usage(_) | Error::TooFewRows(_) | Error::Csv { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
