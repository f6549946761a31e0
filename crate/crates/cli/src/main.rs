//! `bi-racah`: Bannai-Ito polynomial tables, sl₋₁(2) Racah coefficients and
//! the verification suite, from the command line.
//!
//! Exit status is 0 on success, 1 when a verification fails and 2 for usage
//! errors or invalid parameters.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod bi;
mod config;
mod racah;
mod verify;

use config::{CliError, Format, RunConfig};

const DEFAULT_SEED: u64 = 20_130_604;

#[derive(Parser, Debug)]
#[command(
    name = "bi-racah",
    version,
    about = "Bannai-Ito polynomials and sl_{-1}(2) Racah coefficients"
)]
struct Cli {
    /// Working precision in decimal digits (at least 30).
    #[arg(long, global = true, env = "BI_RACAH_PRECISION", default_value_t = 50)]
    precision: u32,
    /// Absolute tolerance for real comparisons; defaults to 10^-(precision-10).
    #[arg(long, global = true, allow_hyphen_values = true)]
    tolerance: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the randomized checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate, tabulate or verify one truncated Bannai-Ito family.
    Bi(BiArgs),
    /// Racah coefficients for three positive-discrete-series modules.
    Racah(RacahArgs),
    /// Run every check over a parameter grid.
    VerifyAll(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Even,
    Odd,
}

#[derive(Args, Debug)]
pub struct BiArgs {
    #[arg(long, value_enum)]
    family: FamilyKind,
    /// `a,b,c` for the even family or `alpha,beta,gamma` for the odd one.
    #[arg(long)]
    params: String,
    #[arg(long = "N")]
    degree: usize,
    #[command(flatten)]
    action: BiAction,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct BiAction {
    /// `n,x`: the monic polynomial P_n at x.
    #[arg(long, allow_hyphen_values = true)]
    eval: Option<String>,
    /// Grid, weights and norms.
    #[arg(long)]
    table: bool,
    /// Exact orthogonality, roots and hypergeometric agreement.
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
pub struct RacahArgs {
    /// `mu1,mu2,mu3`.
    #[arg(long)]
    mu: String,
    #[arg(long = "N")]
    degree: usize,
    /// Also diagonalize the intermediate Casimirs directly and compare.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// `mu=v1,v2,...`; every mu_i runs over the listed values.
    #[arg(long, default_value = "mu=0,1/2,1")]
    grid: String,
    #[arg(long = "Nmax", default_value_t = 6)]
    nmax: usize,
    #[arg(long = "oracle-Nmax", default_value_t = 3)]
    oracle_nmax: usize,
    /// Negate u_1 of every Leonard pair before checking.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Text printed on stdout, plus the verification verdict.
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub passed: bool,
}

impl Output {
    pub fn ok(stdout: String) -> Self {
        Output {
            stdout,
            stderr: String::new(),
            passed: true,
        }
    }
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let cfg = RunConfig::new(cli.precision, cli.tolerance.as_deref(), cli.format, cli.seed)?;
    match cli.command {
        Command::Bi(args) => bi::run(&cfg, &args),
        Command::Racah(args) => racah::run(&cfg, &args),
        Command::VerifyAll(args) => verify::run(&cfg, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn bi_needs_exactly_one_action() {
        let base = ["bi-racah", "bi", "--family", "even", "--params", "1,1,1", "--N", "2"];
        assert!(Cli::try_parse_from(base).is_err());
        assert!(Cli::try_parse_from(base.iter().chain(&["--table", "--verify"])).is_err());
        let cli = Cli::try_parse_from(base.iter().chain(&["--eval", "2,-1/3"])).unwrap();
        match cli.command {
            Command::Bi(args) => assert_eq!(args.action.eval.as_deref(), Some("2,-1/3")),
            _ => panic!("wrong subcommand"),
        }
    }
}
