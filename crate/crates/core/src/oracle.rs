// SPDX-License-Identifier: Apache-2.0

//! Time-domain oracle: direct propagation of the driven two-level
//! Schrödinger equation, independent of the Floquet matrix.
//!
//! Each step applies a closed-form 2x2 exponential `exp(-i k.sigma)`, so the
//! propagator stays unitary to rounding for any step size.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::drive::FourierDrive;
use crate::error::{Error, Result};
use crate::floquet::fold_quasi_energy;
use crate::system::{field_free_basis, SystemPoint};

/// Smallest number of steps per period accepted by the propagator.
pub const MIN_STEPS: usize = 256;
/// Steps per period used when none is given.
pub const DEFAULT_STEPS: usize = 4096;
/// Eigenvalues of the monodromy closer than this are reported as degenerate.
pub const DEGENERATE_EIGENVALUE_TOL: f64 = 1e-12;

const PERIOD: f64 = 2.0 * PI;

pub type Matrix2 = [[Complex64; 2]; 2];

/// Single-step integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Second order: `exp(-i H(t_mid) dt)`.
    Midpoint,
    /// Fourth-order Magnus expansion on the two Gauss nodes of each step.
    #[default]
    Magnus4,
}

/// Weighting of the time samples in the long-time average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Uniform,
    /// `sin^2` taper over the whole averaging interval.
    #[default]
    Hann,
}

/// One-period propagator `U(t0 + T, t0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    pub u: Matrix2,
    pub steps: usize,
    pub t0: f64,
    pub scheme: Scheme,
}

impl Monodromy {
    /// `max |U^dagger U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.u)
    }

    pub fn determinant(&self) -> Complex64 {
        self.u[0][0] * self.u[1][1] - self.u[0][1] * self.u[1][0]
    }
}

/// Folded quasi-energies from a monodromy matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleQuasiEnergies {
    /// Ascending, each in `[-1/2, 1/2)`.
    pub values: [f64; 2],
    /// The two eigenvalues of `U` nearly coincide; the assignment of the
    /// branches is then arbitrary.
    pub near_degenerate: bool,
}

/// Numerical settings of [`oracle_average_probability_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageOptions {
    pub steps: usize,
    pub scheme: Scheme,
    pub window: Window,
}

impl Default for AverageOptions {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, scheme: Scheme::default(), window: Window::default() }
    }
}

fn identity() -> Matrix2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

fn mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn unitarity_error(u: &Matrix2) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let dot = u[0][i].conj() * u[0][j] + u[1][i].conj() * u[1][j];
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// `exp(-i k.sigma)` for a real 3-vector `k`.
fn pauli_exp(k: [f64; 3]) -> Matrix2 {
    let theta = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let c = theta.cos();
    // sin(theta)/theta, with its series near zero
    let s = if theta < 1e-8 { 1.0 - theta * theta / 6.0 } else { theta.sin() / theta };
    let (x, y, z) = (k[0] * s, k[1] * s, k[2] * s);
    [
        [Complex64::new(c, -z), Complex64::new(-y, -x)],
        [Complex64::new(y, -x), Complex64::new(c, z)],
    ]
}

/// Pauli vector of `H(t) = -(eps0/2 + A g(t)/2) sigma_z - (delta/2) sigma_x`.
fn field(point: &SystemPoint, drive: &FourierDrive, t: f64) -> [f64; 3] {
    [-0.5 * point.delta, 0.0, -0.5 * (point.eps0 + point.amplitude * drive.value(t))]
}

fn step_generator(point: &SystemPoint, drive: &FourierDrive, t: f64, h: f64, scheme: Scheme) -> [f64; 3] {
    match scheme {
        Scheme::Midpoint => field(point, drive, t + 0.5 * h).map(|v| v * h),
        Scheme::Magnus4 => {
            let off = h * 3f64.sqrt() / 6.0;
            let a = field(point, drive, t + 0.5 * h - off);
            let b = field(point, drive, t + 0.5 * h + off);
            // h/2 (a + b) + (sqrt3/6) h^2 (b x a)
            let c = 3f64.sqrt() / 6.0 * h * h;
            let cross = [
                b[1] * a[2] - b[2] * a[1],
                b[2] * a[0] - b[0] * a[2],
                b[0] * a[1] - b[1] * a[0],
            ];
            [0, 1, 2].map(|i| 0.5 * h * (a[i] + b[i]) + c * cross[i])
        }
    }
}

/// Propagate from `t0` through `chunks * per_chunk` uniform steps of one
/// period, returning `U(t0 + s_j, t0)` at each chunk boundary `j = 1..=chunks`.
fn propagate_chunks(
    point: &SystemPoint,
    drive: &FourierDrive,
    t0: f64,
    chunks: usize,
    per_chunk: usize,
    scheme: Scheme,
) -> Vec<Matrix2> {
    let total = chunks * per_chunk;
    let h = PERIOD / total as f64;
    let mut u = identity();
    let mut out = Vec::with_capacity(chunks);
    for step in 0..total {
        let t = t0 + h * step as f64;
        u = mul(&pauli_exp(step_generator(point, drive, t, h, scheme)), &u);
        if (step + 1) % per_chunk == 0 {
            out.push(u);
        }
    }
    out
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::invalid(format!("steps {steps} below minimum {MIN_STEPS}")));
    }
    Ok(())
}

/// One-period propagator with the default fourth-order scheme.
pub fn propagate_period(
    point: &SystemPoint,
    drive: &FourierDrive,
    t0: f64,
    steps: usize,
) -> Result<Monodromy> {
    propagate_period_with(point, drive, t0, steps, Scheme::default())
}

pub fn propagate_period_with(
    point: &SystemPoint,
    drive: &FourierDrive,
    t0: f64,
    steps: usize,
    scheme: Scheme,
) -> Result<Monodromy> {
    point.validate()?;
    check_steps(steps)?;
    if !t0.is_finite() {
        return Err(Error::invalid("t0 must be finite"));
    }
    let u = propagate_chunks(point, drive, t0, 1, steps, scheme)[0];
    Ok(Monodromy { u, steps, t0, scheme })
}

/// Quasi-energies `q = (i/T) log(lambda)` of the monodromy eigenvalues.
pub fn oracle_quasi_energies(m: &Monodromy) -> OracleQuasiEnergies {
    let u = &m.u;
    let half_trace = 0.5 * (u[0][0] + u[1][1]);
    let root = (half_trace * half_trace - m.determinant()).sqrt();
    let (l1, l2) = (half_trace + root, half_trace - root);
    // lambda = exp(-i q T)
    let q = |l: Complex64| fold_quasi_energy(-l.arg() / PERIOD);
    let mut values = [q(l1), q(l2)];
    values.sort_by(f64::total_cmp);
    OracleQuasiEnergies { values, near_degenerate: (l1 - l2).norm() < DEGENERATE_EIGENVALUE_TOL }
}

/// Drive-phase and long-time average of `|<+| U(t + t0, t0) |->|^2` with the
/// default numerical settings.
pub fn oracle_average_probability(
    point: &SystemPoint,
    drive: &FourierDrive,
    periods: usize,
    phase_samples: usize,
    samples_per_period: usize,
) -> Result<f64> {
    oracle_average_probability_with(
        point,
        drive,
        periods,
        phase_samples,
        samples_per_period,
        AverageOptions::default(),
    )
}

/// As [`oracle_average_probability`], with explicit step count, scheme and
/// time window.
///
/// Phases are `t0 = j T / phase_samples`. Times are `t = i T /
/// samples_per_period` for `i < periods * samples_per_period`; later periods
/// reuse the first one through powers of the monodromy.
pub fn oracle_average_probability_with(
    point: &SystemPoint,
    drive: &FourierDrive,
    periods: usize,
    phase_samples: usize,
    samples_per_period: usize,
    options: AverageOptions,
) -> Result<f64> {
    point.validate()?;
    check_steps(options.steps)?;
    if periods < 50 {
        return Err(Error::invalid(format!("periods {periods} below minimum 50")));
    }
    if phase_samples < 8 {
        return Err(Error::invalid(format!("phase_samples {phase_samples} below minimum 8")));
    }
    if samples_per_period < 32 {
        return Err(Error::invalid(format!(
            "samples_per_period {samples_per_period} below minimum 32"
        )));
    }
    let basis = field_free_basis(point);
    let minus = basis.minus_state.map(|v| Complex64::new(v, 0.0));
    let plus = basis.plus_state.map(|v| Complex64::new(v, 0.0));
    let per_chunk = options.steps.div_ceil(samples_per_period);

    let n_samples = periods * samples_per_period;
    let weights: Vec<f64> = match options.window {
        Window::Uniform => vec![1.0; n_samples],
        Window::Hann => (0..n_samples)
            .map(|i| (PI * (i as f64 + 0.5) / n_samples as f64).sin().powi(2))
            .collect(),
    };
    let weight_sum: f64 = weights.iter().sum();

    let mut total = 0.0;
    for phase in 0..phase_samples {
        let t0 = PERIOD * phase as f64 / phase_samples as f64;
        let chunks =
            propagate_chunks(point, drive, t0, samples_per_period, per_chunk, options.scheme);
        let monodromy = chunks[samples_per_period - 1];
        // row vectors <+| U(t0 + s_j, t0), with s_0 = 0
        let rows: Vec<[Complex64; 2]> = std::iter::once(identity())
            .chain(chunks[..samples_per_period - 1].iter().copied())
            .map(|u| {
                [
                    plus[0] * u[0][0] + plus[1] * u[1][0],
                    plus[0] * u[0][1] + plus[1] * u[1][1],
                ]
            })
            .collect();
        let mut v = minus;
        let mut acc = 0.0;
        for p in 0..periods {
            for (j, r) in rows.iter().enumerate() {
                let amp = r[0] * v[0] + r[1] * v[1];
                acc += weights[p * samples_per_period + j] * amp.norm_sqr();
            }
            v = [
                monodromy[0][0] * v[0] + monodromy[0][1] * v[1],
                monodromy[1][0] * v[0] + monodromy[1][1] * v[1],
            ];
        }
        total += acc / weight_sum;
    }
    Ok(total / phase_samples as f64)
}
