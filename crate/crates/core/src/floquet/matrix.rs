// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use crate::drive::{complex_coefficients, FourierDrive};
use crate::error::{Error, Result};
use crate::system::SystemPoint;

/// Smallest photon cutoff ever used by the default policy.
pub const MIN_PHOTONS: usize = 32;
/// Photon blocks added on top of the drive and bias extent.
pub const PHOTON_MARGIN: usize = 16;

/// Photon cutoff `N_ph` for a drive of strength `amplitude` and biases up to
/// `max_abs_eps0`.
///
/// The drive extent is `A * max|g|`, bounded by `A * sum |b_n|`. For a single
/// unit harmonic this is just `A`.
pub fn default_cutoff(amplitude: f64, drive: &FourierDrive, max_abs_eps0: f64) -> usize {
    let extent = (amplitude.abs() * drive.peak_bound()).ceil() as usize;
    let bias = max_abs_eps0.abs().ceil() as usize;
    (extent + bias + PHOTON_MARGIN)
        .max(MIN_PHOTONS)
        .max(drive.harmonics() + 2)
}

/// Cutoff for full spectra: [`default_cutoff`] widened by the extra edge
/// layer that a multi-harmonic drive needs for its interior states.
pub fn spectral_cutoff(amplitude: f64, drive: &FourierDrive, max_abs_eps0: f64) -> usize {
    default_cutoff(amplitude, drive, max_abs_eps0) + super::EDGE_BLOCKS * (drive.harmonics().max(1) - 1)
}

/// Truncated Floquet Hamiltonian on `{|alpha>, |beta>} x {|-N_ph> .. |N_ph>}`.
///
/// Row/column `2 (n + N_ph) + nu` holds system state `nu` (0 = alpha,
/// 1 = beta) in photon block `n`. Block `(n, m)` is `H^[n-m]`, plus `n`
/// times the identity on the diagonal.
#[derive(Debug, Clone)]
pub struct FloquetMatrix {
    n_ph: usize,
    dim: usize,
    max_harmonic: usize,
    // row-major
    data: Vec<Complex64>,
}

impl FloquetMatrix {
    pub fn photon_cutoff(&self) -> usize {
        self.n_ph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_harmonic(&self) -> usize {
        self.max_harmonic
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// Matrix index of system state `nu` in photon block `n`.
    pub fn index(&self, n: i64, nu: usize) -> usize {
        photon_index(self.n_ph, n, nu)
    }

    /// 2x2 block `(n, m)`.
    pub fn block(&self, n: i64, m: i64) -> [[Complex64; 2]; 2] {
        let mut b = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (nu, row) in b.iter_mut().enumerate() {
            for (mu, v) in row.iter_mut().enumerate() {
                *v = self.get(self.index(n, nu), self.index(m, mu));
            }
        }
        b
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub(crate) fn data(&self) -> &[Complex64] {
        &self.data
    }
}

pub(crate) fn photon_index(n_ph: usize, n: i64, nu: usize) -> usize {
    debug_assert!(n.unsigned_abs() as usize <= n_ph && nu < 2);
    2 * (n + n_ph as i64) as usize + nu
}

/// Assemble the truncated Floquet Hamiltonian.
///
/// Rejects cutoffs below `M + 2`, which would clip drive couplings. An
/// undriven system has no couplings to clip and accepts any `n_ph >= 1`.
pub fn build_floquet_hamiltonian(
    point: &SystemPoint,
    drive: &FourierDrive,
    n_ph: usize,
) -> Result<FloquetMatrix> {
    point.validate()?;
    let m_harm = drive.harmonics();
    if n_ph == 0 || (point.amplitude != 0.0 && n_ph < m_harm + 2) {
        return Err(Error::invalid(format!(
            "photon cutoff {n_ph} too small for a drive with {m_harm} harmonics (need >= {})",
            m_harm + 2
        )));
    }
    let dim = 2 * (2 * n_ph + 1);
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    let c = complex_coefficients(drive);
    let half_a = 0.5 * point.amplitude;
    let n_max = n_ph as i64;

    for n in -n_max..=n_max {
        let a = photon_index(n_ph, n, 0);
        let b = a + 1;
        data[a * dim + a] = Complex64::new(-0.5 * point.eps0 + n as f64, 0.0);
        data[b * dim + b] = Complex64::new(0.5 * point.eps0 + n as f64, 0.0);
        data[a * dim + b] = Complex64::new(-0.5 * point.delta, 0.0);
        data[b * dim + a] = Complex64::new(-0.5 * point.delta, 0.0);

        for j in 1..=m_harm as i64 {
            for (m, shift) in [(n - j, j), (n + j, -j)] {
                if m.abs() > n_max {
                    continue;
                }
                // H^[shift] = -(A/2) c_shift sigma_z
                let coupling = -half_a * c.get(shift);
                if coupling == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ma = photon_index(n_ph, m, 0);
                data[a * dim + ma] = coupling;
                data[b * dim + ma + 1] = -coupling;
            }
        }
    }

    Ok(FloquetMatrix { n_ph, dim, max_harmonic: m_harm, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_policy() {
        let mono = FourierDrive::monochromatic();
        assert_eq!(default_cutoff(6.0, &mono, 10.0), 32);
        assert_eq!(default_cutoff(9.0, &mono, 10.0), 35);
        let wide = FourierDrive::new(vec![1.0, 0.0, -1.0]).unwrap();
        assert_eq!(default_cutoff(9.0, &wide, 5.2), 18 + 6 + 16);
        let long = FourierDrive::new(vec![0.01; 40]).unwrap();
        assert_eq!(default_cutoff(0.0, &long, 0.0), 42);
    }

    #[test]
    fn rejects_small_cutoff() {
        let p = SystemPoint::new(1.0, 1.0, 1.0).unwrap();
        let tri = FourierDrive::triangle(5).unwrap();
        assert!(build_floquet_hamiltonian(&p, &tri, 6).is_err());
        assert!(build_floquet_hamiltonian(&p, &tri, 7).is_ok());
        let undriven = SystemPoint::new(1.0, 1.0, 0.0).unwrap();
        assert!(build_floquet_hamiltonian(&undriven, &tri, 1).is_ok());
        assert!(build_floquet_hamiltonian(&undriven, &tri, 0).is_err());
    }

    #[test]
    fn monochromatic_couplings() {
        let p = SystemPoint::new(2.0, 0.5, 6.0).unwrap();
        let h = build_floquet_hamiltonian(&p, &FourierDrive::monochromatic(), 4).unwrap();
        assert_eq!(h.dim(), 18);
        let up = h.block(1, 0);
        assert_eq!(up[0][0], Complex64::new(0.0, 1.5));
        assert_eq!(up[1][1], Complex64::new(0.0, -1.5));
        assert_eq!(up[0][1], Complex64::new(0.0, 0.0));
        let down = h.block(0, 1);
        assert_eq!(down[0][0], Complex64::new(0.0, -1.5));
        for n in -4i64..=4 {
            for m in -4i64..=4 {
                if (n - m).abs() > 1 {
                    assert!(h.block(n, m).iter().flatten().all(|z| z.norm() == 0.0));
                }
            }
        }
        let d = h.block(2, 2);
        assert_eq!(d[0][0].re, -1.0 + 2.0);
        assert_eq!(d[1][1].re, 1.0 + 2.0);
        assert_eq!(d[0][1].re, -0.25);
        assert_eq!(h.hermiticity_error(), 0.0);
    }
}
