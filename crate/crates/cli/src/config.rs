use std::fmt;

use bannai_ito::scalars::{format_real, parse_rational, parse_real, Precision, Tolerance};
use bannai_ito::{Error, Rational};
use clap::ValueEnum;

pub const MIN_PRECISION: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub precision: Precision,
    pub tolerance: Tolerance,
    pub format: Format,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(digits: u32, tolerance: Option<&str>, format: Format, seed: u64) -> Result<Self, CliError> {
        if digits < MIN_PRECISION {
            return Err(CliError::Usage(format!(
                "precision must be at least {MIN_PRECISION} digits, got {digits}"
            )));
        }
        let precision = Precision::new(digits)?;
        let floor = precision.tolerance();
        let tolerance = match tolerance {
            None => floor,
            Some(text) => {
                let eps = parse_real(text, precision.bits())?;
                let tol = Tolerance::new(eps)?;
                if tol.eps() < floor.eps() {
                    return Err(CliError::Usage(format!(
                        "tolerance {tol} is below the {floor} floor of {digits}-digit arithmetic"
                    )));
                }
                tol
            }
        };
        Ok(RunConfig {
            precision,
            tolerance,
            format,
            seed,
        })
    }

    /// Significant digits for decimal output.
    pub fn digits(&self) -> usize {
        self.precision.digits() as usize
    }
}

/// Exit status 2 for bad input, 1 for a failed verification.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::BadParity { .. }
            | Error::NegativeParameter { .. }
            | Error::TruncationViolation(_)
            | Error::DenominatorPole { .. }
            | Error::SingularCoefficient { .. }
            | Error::SingularDenominator { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Verification(e.to_string()),
        }
    }
}

/// Comma-separated exact numbers, `"p/q"` or decimal.
pub fn parse_list(text: &str, len: usize, what: &str) -> Result<Vec<Rational>, CliError> {
    let values = text.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
    if values.len() != len {
        return Err(CliError::Usage(format!(
            "{what} needs {len} comma-separated values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

pub fn triple(text: &str, what: &str) -> Result<[Rational; 3], CliError> {
    let v = parse_list(text, 3, what)?;
    Ok([v[0].clone(), v[1].clone(), v[2].clone()])
}

/// `0` for exact zeros, otherwise three significant digits.
pub fn short(x: &bannai_ito::Float) -> String {
    if x.is_zero() {
        "0".into()
    } else {
        format_real(x, 3)
    }
}
