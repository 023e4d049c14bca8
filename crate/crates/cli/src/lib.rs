//! Batch front end for `elfving-core`: problem files in, result documents,
//! certificates, polynomial design tables and curve samples out.

pub mod commands;
pub mod problem;
pub mod report;
pub mod table;

use elfving_core::Error;
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_OPTIMIZATION: i32 = 2;
pub const EXIT_ESTIMABILITY: i32 = 3;
pub const EXIT_ORACLE_INFEASIBLE: i32 = 4;
pub const EXIT_MODEL: i32 = 5;

/// Significant digits used unless a problem file asks otherwise.
pub const DEFAULT_PRECISION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_PARSE, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::InvalidDesign(_) | Error::Domain { .. } => EXIT_PARSE,
            Error::OptimizationFailed { .. } => EXIT_OPTIMIZATION,
            Error::NotEstimable { .. } => EXIT_ESTIMABILITY,
            Error::OracleInfeasible(_) => EXIT_ORACLE_INFEASIBLE,
            Error::TurningPointUndefined => EXIT_MODEL,
        };
        Self::new(code, e.to_string())
    }
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal text of `x` after rounding to `digits` significant
/// digits, in exponent notation outside `[1e-4, 1e15)`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let r = round_sig(x, digits);
    if r == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&r.abs()) || !r.is_finite() {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0, 12), 0.333333333333);
        assert_eq!(round_sig(-123456.7891234567, 12), -123456.789123);
        assert_eq!(round_sig(2.5e-17, 12), 2.5e-17);
        assert_eq!(fmt_sig(25.000000000000004, 12), "25");
        assert_eq!(fmt_sig(-0.0, 12), "0");
        assert_eq!(fmt_sig(0.1 + 0.2, 12), "0.3");
        assert_eq!(fmt_sig(-6.59194920871234e-17, 12), "-6.59194920871e-17");
        assert_eq!(fmt_sig(2.5e20, 12), "2.5e20");
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::NotEstimable { residual: 1.0 }).code, EXIT_ESTIMABILITY);
        assert_eq!(CliError::from(Error::TurningPointUndefined).code, EXIT_MODEL);
        assert_eq!(CliError::from(Error::OracleInfeasible("k".into())).code, EXIT_ORACLE_INFEASIBLE);
        assert_eq!(CliError::from(Error::OptimizationFailed { best_residual: 1.0 }).code, EXIT_OPTIMIZATION);
    }
}
