// SPDX-License-Identifier: Apache-2.0

//! Periodic drive waveforms as real sine series.
//!
//! A drive is `g(t) = sum_n b_n sin(n t)` with the fundamental frequency set
//! to one. Every energy in the crate is measured in units of that frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real sine-series coefficients `b_1 ..= b_M` of a periodic drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FourierDrive {
    coefficients: Vec<f64>,
}

impl FourierDrive {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("drive needs at least one harmonic"));
        }
        if let Some(i) = coefficients.iter().position(|b| !b.is_finite()) {
            return Err(Error::invalid(format!("drive coefficient b_{} is not finite", i + 1)));
        }
        Ok(Self { coefficients })
    }

    /// `sin(t)` with unit amplitude.
    pub fn monochromatic() -> Self {
        Self { coefficients: vec![1.0] }
    }

    /// A single harmonic `amplitude * sin(n t)`.
    pub fn single_harmonic(n: usize, amplitude: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("harmonic index starts at 1"));
        }
        let mut c = vec![0.0; n];
        c[n - 1] = amplitude;
        Self::new(c)
    }

    /// Triangle wave truncated to `m_harmonics`, normalized so that `b_1 = 1`.
    pub fn triangle(m_harmonics: usize) -> Result<Self> {
        if m_harmonics == 0 {
            return Err(Error::invalid("triangle drive needs m_harmonics >= 1"));
        }
        let coefficients = (1..=m_harmonics)
            .map(|n| {
                if n % 2 == 0 {
                    0.0
                } else {
                    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    sign / (n * n) as f64
                }
            })
            .collect();
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Highest harmonic index `M`.
    pub fn harmonics(&self) -> usize {
        self.coefficients.len()
    }

    /// `b_n` for `n >= 1`, zero beyond the stored range.
    pub fn coefficient(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.coefficients.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, b)| b * ((i + 1) as f64 * t).sin())
            .sum()
    }

    /// Upper bound on `max_t |g(t)|`.
    ///
    /// Attained exactly at `t = T/4` for odd-harmonic series with alternating
    /// signs, which is the family the optimizer produces.
    pub fn peak_bound(&self) -> f64 {
        self.coefficients.iter().map(|b| b.abs()).sum()
    }

    pub fn has_only_odd_harmonics(&self) -> bool {
        self.coefficients
            .iter()
            .enumerate()
            .all(|(i, b)| (i + 1) % 2 == 1 || *b == 0.0)
    }

    /// `max_t |g(t)|` estimated on a uniform grid of `samples` points.
    pub fn sampled_peak(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.value(2.0 * PI * k as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for FourierDrive {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FourierDrive> for Vec<f64> {
    fn from(d: FourierDrive) -> Self {
        d.coefficients
    }
}

/// Triangle wave with `b_n = (-1)^((n-1)/2) / n^2` on odd `n <= m_harmonics`.
pub fn triangle_drive(m_harmonics: usize) -> Result<FourierDrive> {
    FourierDrive::triangle(m_harmonics)
}

/// Complex exponential coefficients `c_n`, `n = -M ..= M`.
///
/// `c_n = -i b_n / 2` for `n > 0`, `c_{-n} = conj(c_n)`, `c_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDriveCoefficients {
    // index n + M
    values: Vec<Complex64>,
    max_harmonic: usize,
}

impl ComplexDriveCoefficients {
    pub fn max_harmonic(&self) -> usize {
        self.max_harmonic
    }

    /// `c_n`, zero outside `-M ..= M`.
    pub fn get(&self, n: i64) -> Complex64 {
        let m = self.max_harmonic as i64;
        if n.abs() > m {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(n + m) as usize]
        }
    }

    /// `sum_n c_n exp(i sign n t)`.
    ///
    /// With `sign = +1` this reproduces the sine series `g(t)`; `sign = -1`
    /// gives `-g(t)`. Both are real.
    pub fn reconstruct(&self, t: f64, sign: f64) -> Complex64 {
        let m = self.max_harmonic as i64;
        (-m..=m)
            .map(|n| self.get(n) * Complex64::from_polar(1.0, sign * n as f64 * t))
            .sum()
    }
}

pub fn complex_coefficients(drive: &FourierDrive) -> ComplexDriveCoefficients {
    let m = drive.harmonics();
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    for n in 1..=m {
        let b = drive.coefficient(n);
        values[m + n] = Complex64::new(0.0, -b / 2.0);
        values[m - n] = Complex64::new(0.0, b / 2.0);
    }
    ComplexDriveCoefficients { values, max_harmonic: m }
}
