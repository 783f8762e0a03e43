// SPDX-License-Identifier: Apache-2.0

//! Textual drive specifications.
//!
//! | spec | drive |
//! |---|---|
//! | `mono` | `b_1 = 1` |
//! | `mono:B` | `b_1 = B` |
//! | `triangle:M` | triangle wave with harmonics `n <= M` |
//! | `coeffs:b1,b2,...` | explicit Fourier sine coefficients |
//! | `x:X1,X2,...` | optimizer decision vector, `b_{2n-1} = X_n` |
//! | `result:PATH` | `coefficients` of an optimization result JSON |

use std::path::Path;

use floqopt::optimizer::DecisionVector;
use floqopt::{triangle_drive, FourierDrive};

use crate::error::{CliError, CliResult};

fn numbers(list: &str, spec: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("drive `{spec}`: `{s}` is not a number")))
        })
        .collect()
}

pub fn parse_drive(spec: &str) -> CliResult<FourierDrive> {
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let drive = match (kind, arg) {
        ("mono", None) => Ok(FourierDrive::monochromatic()),
        ("mono", Some(b)) => FourierDrive::new(numbers(b, spec)?),
        ("triangle", Some(m)) => {
            let m = m
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("drive `{spec}`: harmonic count must be an integer")))?;
            triangle_drive(m)
        }
        ("coeffs", Some(list)) => FourierDrive::new(numbers(list, spec)?),
        ("x", Some(list)) => DecisionVector(numbers(list, spec)?).to_drive(),
        ("result", Some(path)) => return drive_from_result(Path::new(path)),
        _ => {
            return Err(CliError::config(format!(
                "drive `{spec}` not recognised; use mono, mono:B, triangle:M, coeffs:..., x:... or result:PATH"
            )))
        }
    };
    drive.map_err(|e| CliError::config(format!("drive `{spec}`: {e}")))
}

/// Drive stored under `coefficients` in a result file.
pub fn drive_from_result(path: &Path) -> CliResult<FourierDrive> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read result file {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("result file {}: {e}", path.display())))?;
    let coefficients: Vec<f64> = value
        .get("coefficients")
        .and_then(|c| serde_json::from_value(c.clone()).ok())
        .ok_or_else(|| CliError::config(format!("result file {} has no `coefficients` array", path.display())))?;
    FourierDrive::new(coefficients).map_err(|e| CliError::config(format!("result file {}: {e}", path.display())))
}
