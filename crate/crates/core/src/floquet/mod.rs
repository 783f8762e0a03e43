// SPDX-License-Identifier: Apache-2.0

//! Floquet treatment of the periodically driven two-level system.
//!
//! The dense route ([`build_floquet_hamiltonian`], [`diagonalize`],
//! [`transition_probability`]) evaluates the full truncated spectrum.
//! [`point_probability`] is the per-point entry used by scans and the
//! optimizer: it computes one central mode on the banded real form when the
//! drive allows it and falls back to the dense route otherwise.

mod band;
mod matrix;
mod probability;
mod spectrum;

pub use matrix::{build_floquet_hamiltonian, default_cutoff, spectral_cutoff, FloquetMatrix, MIN_PHOTONS, PHOTON_MARGIN};
pub use probability::{analytic_probability, transition_probability, DEGENERACY_TOL};
pub use spectrum::{diagonalize, fold_quasi_energy, FloquetSpectrum, EDGE_BLOCKS, INTERIOR_WEIGHT};

use crate::drive::FourierDrive;
use crate::error::Result;
use crate::system::{field_free_basis, SystemPoint};

/// Below this zone distance between the two central quasi-energies the
/// banded route defers to the dense route, which groups degenerate levels.
const FAST_GAP_TOL: f64 = 1e-7;

/// How a probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Banded,
    Dense,
}

/// Transition probability and the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointProbability {
    pub probability: f64,
    pub route: Route,
}

/// Distance between the two folded quasi-energies `q` and `-q` of a zone.
pub fn zone_gap(q: f64) -> f64 {
    let d = fold_quasi_energy(2.0 * q).abs();
    d.min(1.0 - d)
}

/// Time-averaged `|-> -> |+>` probability at one point.
pub fn point_probability(
    point: &SystemPoint,
    drive: &FourierDrive,
    n_ph: usize,
) -> Result<PointProbability> {
    point.validate()?;
    if let Some(band) = band::gauged_band(point, drive, n_ph) {
        if let Ok(mode) = band::central_mode(&band) {
            if zone_gap(mode.quasi_energy) > FAST_GAP_TOL {
                let basis = field_free_basis(point);
                let w = band::plus_weight(&mode.vector, &basis).clamp(0.0, 1.0);
                return Ok(PointProbability { probability: 2.0 * w * (1.0 - w), route: Route::Banded });
            }
        }
    }
    dense_probability(point, drive, n_ph)
        .map(|probability| PointProbability { probability, route: Route::Dense })
}

/// Dense-route probability for photon cutoff `n_ph`.
///
/// The photon sum runs over `|k| <= n_ph`, so the matrix is built with cutoff
/// `2 n_ph` to keep that window in the interior.
pub fn dense_probability(point: &SystemPoint, drive: &FourierDrive, n_ph: usize) -> Result<f64> {
    let h = build_floquet_hamiltonian(point, drive, 2 * n_ph)?;
    let spectrum = diagonalize(&h)?;
    transition_probability(&spectrum, &field_free_basis(point), n_ph)
}

/// Central quasi-energy from the banded route, if the drive allows it.
pub fn central_quasi_energy(point: &SystemPoint, drive: &FourierDrive, n_ph: usize) -> Option<f64> {
    let band = band::gauged_band(point, drive, n_ph)?;
    band::central_mode(&band).ok().map(|m| m.quasi_energy)
}
