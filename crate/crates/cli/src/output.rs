//! CSV writing with fixed headers.

use crate::error::CliError;
use std::path::Path;

pub const ENERGY_HEADER: [&str; 4] = ["t", "E", "V", "E_bound"];
pub const TRACE_HEADER: [&str; 5] = ["t", "ux_L", "ux_delayed", "vx_0", "dissipation_rhs"];
pub const SWEEP_HEADER: [&str; 9] = [
    "alpha",
    "beta",
    "admissible",
    "lambda_theory",
    "kappa_theory",
    "lambda_emp",
    "kappa_emp",
    "abscissa",
    "error",
];
pub const QUOTIENT_HEADER: [&str; 2] = ["sample", "quotient"];
pub const SPECTRUM_HEADER: [&str; 2] = ["re", "im"];

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let fail = |e: &dyn std::fmt::Display| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    w.write_record(header).map_err(|e| fail(&e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}
