// SPDX-License-Identifier: Apache-2.0

//! Verification suites: direct time propagation, the weak-tunneling
//! Lorentzian limit and exact null cases.

use floqopt::bessel::bessel_j;
use floqopt::floquet::{
    analytic_probability, build_floquet_hamiltonian, default_cutoff, dense_probability, diagonalize,
    fold_quasi_energy, point_probability, spectral_cutoff,
};
use floqopt::oracle::{
    oracle_average_probability_with, oracle_quasi_energies, propagate_period, AverageOptions,
    DEFAULT_STEPS,
};
use floqopt::{triangle_drive, FourierDrive, Result, SystemPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_SEED: u64 = 1_729;
pub const DEFAULT_PHASES: usize = 16;
pub const DEFAULT_PERIODS: usize = 200;
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 64;

pub const QUASI_ENERGY_TOL: f64 = 1e-8;
pub const PROBABILITY_TOL: f64 = 1e-3;
/// Points whose two quasi-energies lie closer than this are redrawn.
pub const EXCLUSION_GAP: f64 = 1e-3;
pub const ANALYTIC_DELTA: f64 = 0.05;
pub const ANALYTIC_AMPLITUDE: f64 = 6.0;
pub const ANALYTIC_ORDERS: usize = 5;
pub const ANALYTIC_TOL: f64 = 0.02;
/// Largest value accepted as an exact zero.
pub const NULL_TOL: f64 = 1e-12;
/// `|J_k(A)|` below this counts as near a Bessel zero.
pub const BESSEL_NEAR_ZERO: f64 = 0.05;
/// Resonances included in the analytic sum.
const ANALYTIC_TERMS: usize = 40;
/// Triangle harmonics in the random point set.
const TRIANGLE_HARMONICS: usize = 15;

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = fold_quasi_energy(a - b).abs();
    d.min(1.0 - d)
}

/// One point of the seeded random set.
#[derive(Debug, Clone, Serialize)]
pub struct RandomPoint {
    pub eps0: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub drive: String,
    #[serde(skip)]
    pub coefficients: FourierDrive,
}

impl RandomPoint {
    pub fn system(&self) -> Result<SystemPoint> {
        SystemPoint::new(self.eps0, self.delta, self.amplitude)
    }
}

/// `count` points with `eps0, delta` in `[0, 10]` and `A` in `[0, 9]`,
/// alternating monochromatic and triangle drives. Points whose monodromy
/// quasi-energies come within [`EXCLUSION_GAP`] are redrawn; the number of
/// redraws is returned alongside.
pub fn random_points(count: usize, seed: u64) -> Result<(Vec<RandomPoint>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triangle = triangle_drive(TRIANGLE_HARMONICS)?;
    let mut points = Vec::with_capacity(count);
    let mut excluded = 0;
    while points.len() < count {
        let eps0 = rng.gen_range(0.0..=10.0);
        let delta = rng.gen_range(0.0..=10.0);
        let amplitude = rng.gen_range(0.0..=9.0);
        let (name, drive) = if points.len() % 2 == 0 {
            ("mono".to_string(), FourierDrive::monochromatic())
        } else {
            (format!("triangle:{TRIANGLE_HARMONICS}"), triangle.clone())
        };
        let system = SystemPoint::new(eps0, delta, amplitude)?;
        let q = oracle_quasi_energies(&propagate_period(&system, &drive, 0.0, DEFAULT_STEPS)?);
        if q.near_degenerate || circular_distance(q.values[0], q.values[1]) < EXCLUSION_GAP {
            excluded += 1;
            continue;
        }
        points.push(RandomPoint { eps0, delta, amplitude, drive: name, coefficients: drive });
    }
    Ok((points, excluded))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiEnergyCheck {
    pub point: RandomPoint,
    pub n_ph: usize,
    pub oracle: [f64; 2],
    pub interior_states: usize,
    /// Largest distance from any interior Floquet quasi-energy to the
    /// nearest monodromy value, or from a monodromy value to the nearest
    /// interior one.
    pub mismatch: f64,
}

pub fn quasi_energy_check(p: &RandomPoint) -> Result<QuasiEnergyCheck> {
    let system = p.system()?;
    let n_ph = spectral_cutoff(p.amplitude, &p.coefficients, p.eps0);
    let oracle = oracle_quasi_energies(&propagate_period(&system, &p.coefficients, 0.0, DEFAULT_STEPS)?).values;
    let spectrum = diagonalize(&build_floquet_hamiltonian(&system, &p.coefficients, n_ph)?)?;
    let interior = spectrum.interior_quasi_energies();
    let nearest = |q: f64, set: &[f64]| set.iter().map(|&o| circular_distance(q, o)).fold(f64::INFINITY, f64::min);
    let forward = interior.iter().map(|&q| nearest(q, &oracle)).fold(0.0, f64::max);
    let backward = oracle.iter().map(|&o| nearest(o, &interior)).fold(0.0, f64::max);
    Ok(QuasiEnergyCheck {
        point: p.clone(),
        n_ph,
        oracle,
        interior_states: interior.len(),
        mismatch: forward.max(backward),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityCheck {
    pub point: RandomPoint,
    pub floquet: f64,
    pub oracle: f64,
    pub deviation: f64,
}

/// Floquet projector sum against the drive-phase and time average of direct
/// propagation.
pub fn probability_check(
    p: &RandomPoint,
    phases: usize,
    periods: usize,
    samples_per_period: usize,
) -> Result<ProbabilityCheck> {
    let system = p.system()?;
    let n_ph = default_cutoff(p.amplitude, &p.coefficients, p.eps0);
    let floquet = dense_probability(&system, &p.coefficients, n_ph)?;
    let oracle = oracle_average_probability_with(
        &system,
        &p.coefficients,
        periods,
        phases,
        samples_per_period,
        AverageOptions::default(),
    )?;
    Ok(ProbabilityCheck { point: p.clone(), floquet, oracle, deviation: (floquet - oracle).abs() })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub excluded: usize,
    pub phases: usize,
    pub periods: usize,
    pub samples_per_period: usize,
    pub quasi_energies: Vec<QuasiEnergyCheck>,
    pub probabilities: Vec<ProbabilityCheck>,
    pub max_quasi_energy_mismatch: f64,
    pub max_probability_deviation: f64,
    pub quasi_energy_tolerance: f64,
    pub probability_tolerance: f64,
    pub quasi_energy_pass: bool,
    pub probability_pass: bool,
}

pub fn oracle_suite(count: usize, seed: u64, phases: usize, periods: usize, samples_per_period: usize) -> Result<OracleReport> {
    let (points, excluded) = random_points(count, seed)?;
    let quasi_energies = points.par_iter().map(quasi_energy_check).collect::<Result<Vec<_>>>()?;
    let probabilities = points
        .par_iter()
        .map(|p| probability_check(p, phases, periods, samples_per_period))
        .collect::<Result<Vec<_>>>()?;
    let max_q = quasi_energies.iter().map(|c| c.mismatch).fold(0.0, f64::max);
    let max_p = probabilities.iter().map(|c| c.deviation).fold(0.0, f64::max);
    Ok(OracleReport {
        seed,
        excluded,
        phases,
        periods,
        samples_per_period,
        quasi_energies,
        probabilities,
        max_quasi_energy_mismatch: max_q,
        max_probability_deviation: max_p,
        quasi_energy_tolerance: QUASI_ENERGY_TOL,
        probability_tolerance: PROBABILITY_TOL,
        quasi_energy_pass: max_q <= QUASI_ENERGY_TOL,
        probability_pass: max_p <= PROBABILITY_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticRow {
    pub k: usize,
    pub bessel: f64,
    pub numeric: f64,
    pub analytic: f64,
    pub relative_deviation: f64,
    /// Deviation of the numeric value from 1/2, when `J_k(A)` is not near zero.
    pub single_term_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    pub delta: f64,
    pub amplitude: f64,
    pub rows: Vec<AnalyticRow>,
    pub max_relative_deviation: f64,
    pub max_single_term_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Weak tunneling, monochromatic drive, bias on the `k`-photon resonances.
pub fn analytic_suite() -> Result<AnalyticReport> {
    let drive = FourierDrive::monochromatic();
    let rows = (1..=ANALYTIC_ORDERS)
        .map(|k| {
            let point = SystemPoint::new(k as f64, ANALYTIC_DELTA, ANALYTIC_AMPLITUDE)?;
            let n_ph = default_cutoff(ANALYTIC_AMPLITUDE, &drive, k as f64);
            let numeric = point_probability(&point, &drive, n_ph)?.probability;
            let analytic = analytic_probability(&point, ANALYTIC_TERMS)?;
            let bessel = bessel_j(k, ANALYTIC_AMPLITUDE)?;
            Ok(AnalyticRow {
                k,
                bessel,
                numeric,
                analytic,
                relative_deviation: (numeric - analytic).abs() / analytic,
                single_term_deviation: (bessel.abs() >= BESSEL_NEAR_ZERO).then(|| (numeric - 0.5).abs() / 0.5),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel = rows.iter().map(|r| r.relative_deviation).fold(0.0, f64::max);
    let max_single = rows.iter().filter_map(|r| r.single_term_deviation).fold(0.0, f64::max);
    Ok(AnalyticReport {
        delta: ANALYTIC_DELTA,
        amplitude: ANALYTIC_AMPLITUDE,
        rows,
        max_relative_deviation: max_rel,
        max_single_term_deviation: max_single,
        tolerance: ANALYTIC_TOL,
        pass: max_rel <= ANALYTIC_TOL && max_single <= ANALYTIC_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NullRow {
    pub eps0: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub drive: String,
    pub probability: f64,
    pub dense_probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullReport {
    pub rows: Vec<NullRow>,
    pub max_value: f64,
    pub pass: bool,
}

/// Undriven (`A = 0`) and untunneled (`delta = 0`) points, where the
/// probability vanishes up to rounding.
pub fn null_suite() -> Result<NullReport> {
    let cases = [
        (1.0, 0.5, 0.0),
        (5.0, 2.0, 0.0),
        (0.3, 7.0, 0.0),
        (1.0, 0.0, 6.0),
        (5.0, 0.0, 9.0),
        (2.5, 0.0, 3.0),
    ];
    let drives = [("mono".to_string(), FourierDrive::monochromatic()), (format!("triangle:{TRIANGLE_HARMONICS}"), triangle_drive(TRIANGLE_HARMONICS)?)];
    let mut rows = Vec::new();
    for (name, drive) in &drives {
        for &(eps0, delta, amplitude) in &cases {
            let point = SystemPoint::new(eps0, delta, amplitude)?;
            let n_ph = default_cutoff(amplitude, drive, eps0);
            rows.push(NullRow {
                eps0,
                delta,
                amplitude,
                drive: name.clone(),
                probability: point_probability(&point, drive, n_ph)?.probability,
                dense_probability: dense_probability(&point, drive, n_ph)?,
            });
        }
    }
    let max_value = rows.iter().map(|r| r.probability.max(r.dense_probability)).fold(0.0, f64::max);
    Ok(NullReport { rows, max_value, pass: max_value <= NULL_TOL })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub artifact: &'static str,
    pub artifact_version: &'static str,
    pub kind: &'static str,
    pub oracle: Option<OracleReport>,
    pub analytic: Option<AnalyticReport>,
    pub null: Option<NullReport>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(oracle: Option<OracleReport>, analytic: Option<AnalyticReport>, null: Option<NullReport>) -> Self {
        let pass = oracle.as_ref().map_or(true, |o| o.quasi_energy_pass && o.probability_pass)
            && analytic.as_ref().map_or(true, |a| a.pass)
            && null.as_ref().map_or(true, |n| n.pass);
        Self {
            schema_version: floqopt::scan::SCHEMA_VERSION,
            artifact: "floqopt",
            artifact_version: env!("CARGO_PKG_VERSION"),
            kind: "verification_report",
            oracle,
            analytic,
            null,
            pass,
        }
    }

    /// Names of the failed checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(o) = &self.oracle {
            if !o.quasi_energy_pass {
                out.push(format!("quasi-energy mismatch {:.3e} > {:.0e}", o.max_quasi_energy_mismatch, o.quasi_energy_tolerance));
            }
            if !o.probability_pass {
                out.push(format!("probability deviation {:.3e} > {:.0e}", o.max_probability_deviation, o.probability_tolerance));
            }
        }
        if let Some(a) = self.analytic.as_ref().filter(|a| !a.pass) {
            out.push(format!(
                "analytic limit deviation {:.3e} (single term {:.3e}) > {}",
                a.max_relative_deviation, a.max_single_term_deviation, a.tolerance
            ));
        }
        if let Some(n) = self.null.as_ref().filter(|n| !n.pass) {
            out.push(format!("null case value {:.3e} > {NULL_TOL:.0e}", n.max_value));
        }
        out
    }
}
