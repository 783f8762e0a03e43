// SPDX-License-Identifier: Apache-2.0

//! Static two-level Hamiltonian and its field-free eigenbasis.
//!
//! The diabatic basis is `{|alpha>, |beta>}` with `sigma_z = diag(1, -1)`, so
//! `|alpha>` carries the field-free energy `-eps0/2` when `delta = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One two-level system instance, in units of the drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemPoint {
    /// Static bias `eps0 / omega`.
    pub eps0: f64,
    /// Tunneling amplitude `delta / omega`.
    pub delta: f64,
    /// Drive strength `A / omega`.
    pub amplitude: f64,
}

impl SystemPoint {
    pub fn new(eps0: f64, delta: f64, amplitude: f64) -> Result<Self> {
        let p = Self { eps0, delta, amplitude };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0.is_finite() && self.delta.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::invalid(format!("non-finite system point {self:?}")));
        }
        if self.delta < 0.0 {
            return Err(Error::invalid(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.amplitude < 0.0 {
            return Err(Error::invalid(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        Ok(())
    }

    /// Field-free level splitting `sqrt(eps0^2 + delta^2)`.
    pub fn gap(&self) -> f64 {
        self.eps0.hypot(self.delta)
    }

    /// Static Hamiltonian `-(eps0/2) sigma_z - (delta/2) sigma_x` as a real
    /// symmetric 2x2 matrix.
    pub fn static_hamiltonian(&self) -> [[f64; 2]; 2] {
        [
            [-0.5 * self.eps0, -0.5 * self.delta],
            [-0.5 * self.delta, 0.5 * self.eps0],
        ]
    }
}

/// Eigenstates `|->` and `|+>` of the static Hamiltonian.
///
/// The Hamiltonian is real symmetric, so both states are stored as real
/// vectors in the `{|alpha>, |beta>}` basis. The phase is fixed by making the
/// first nonzero component positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldFreeBasis {
    pub minus_state: [f64; 2],
    pub plus_state: [f64; 2],
    pub minus_energy: f64,
    pub plus_energy: f64,
}

impl FieldFreeBasis {
    pub fn minus_overlap(&self, alpha: f64, beta: f64) -> f64 {
        self.minus_state[0] * alpha + self.minus_state[1] * beta
    }

    pub fn plus_overlap(&self, alpha: f64, beta: f64) -> f64 {
        self.plus_state[0] * alpha + self.plus_state[1] * beta
    }
}

fn fix_phase(v: [f64; 2]) -> [f64; 2] {
    let lead = if v[0] != 0.0 { v[0] } else { v[1] };
    if lead < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Eigenbasis of `-(eps0/2) sigma_z - (delta/2) sigma_x`, lower state first.
///
/// At `eps0 = delta = 0` the pair `(|alpha>, |beta>)` is returned.
pub fn field_free_basis(point: &SystemPoint) -> FieldFreeBasis {
    let half_gap = 0.5 * point.gap();
    let theta = point.delta.atan2(point.eps0);
    let (s, c) = (0.5 * theta).sin_cos();
    FieldFreeBasis {
        minus_state: fix_phase([c, s]),
        plus_state: fix_phase([-s, c]),
        minus_energy: -half_gap,
        plus_energy: half_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(h: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
        [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]]
    }

    #[test]
    fn diagonal_case() {
        let b = field_free_basis(&SystemPoint::new(1.0, 0.0, 0.0).unwrap());
        assert_eq!(b.minus_state, [1.0, 0.0]);
        assert_eq!(b.plus_state, [0.0, 1.0]);
        assert_eq!(b.minus_energy, -0.5);
    }

    #[test]
    fn pure_sigma_x() {
        let b = field_free_basis(&SystemPoint::new(0.0, 1.0, 0.0).unwrap());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.minus_state[0] - r).abs() < 1e-15 && (b.minus_state[1] - r).abs() < 1e-15);
        assert_eq!(b.minus_energy, -0.5);
    }

    #[test]
    fn three_four_five() {
        // 2x2 oracle: eigenvalues of [[-1.5, -2], [-2, 1.5]] are +-2.5.
        let p = SystemPoint::new(3.0, 4.0, 0.0).unwrap();
        let b = field_free_basis(&p);
        assert!((b.minus_energy + 2.5).abs() < 1e-15);
        let hv = apply(p.static_hamiltonian(), b.minus_state);
        let expect = hv[0] * b.minus_state[0] + hv[1] * b.minus_state[1];
        assert!((expect + 2.5).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_eigenpairs() {
        for &(e, d) in &[(0.3, 2.0), (-4.0, 0.7), (9.5, 0.0), (-2.0, 0.0), (0.0, 0.0)] {
            let p = SystemPoint::new(e, d, 1.0).unwrap();
            let b = field_free_basis(&p);
            let h = p.static_hamiltonian();
            for (v, en) in [(b.minus_state, b.minus_energy), (b.plus_state, b.plus_energy)] {
                let hv = apply(h, v);
                assert!((hv[0] - en * v[0]).abs() <= 1e-12 && (hv[1] - en * v[1]).abs() <= 1e-12);
                assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-15);
                let lead = if v[0] != 0.0 { v[0] } else { v[1] };
                assert!(lead > 0.0);
            }
            let dot = b.minus_state[0] * b.plus_state[0] + b.minus_state[1] * b.plus_state[1];
            assert!(dot.abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_negative_delta() {
        assert!(SystemPoint::new(1.0, -0.1, 1.0).is_err());
        assert!(SystemPoint::new(f64::INFINITY, 0.1, 1.0).is_err());
    }
}
