// SPDX-License-Identifier: Apache-2.0

use faer::{Mat, Side};
use num_complex::Complex64;

use super::matrix::{photon_index, FloquetMatrix};
use crate::error::{Error, Result};

/// Outermost photon blocks inspected when classifying interior states, per
/// unit of coupling range. A drive with harmonics up to `M` couples blocks `M`
/// apart, so its edge layer is `EDGE_BLOCKS * M` blocks wide.
pub const EDGE_BLOCKS: usize = 4;
/// Maximum eigenvector weight on the edge blocks for an interior state.
pub const INTERIOR_WEIGHT: f64 = 1e-6;

/// Full eigendecomposition of a truncated Floquet Hamiltonian.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    n_ph: usize,
    dim: usize,
    coupling_range: usize,
    quasi_energies: Vec<f64>,
    // column-major: eigenvector k occupies vectors[k*dim .. (k+1)*dim]
    vectors: Vec<Complex64>,
}

impl FloquetSpectrum {
    pub fn photon_cutoff(&self) -> usize {
        self.n_ph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Quasi-energies in ascending order.
    pub fn quasi_energies(&self) -> &[f64] {
        &self.quasi_energies
    }

    pub fn eigenvector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Component `<nu, n | q_k>`.
    pub fn component(&self, k: usize, n: i64, nu: usize) -> Complex64 {
        self.eigenvector(k)[photon_index(self.n_ph, n, nu)]
    }

    /// Weight of eigenvector `k` on the `blocks` outermost photon blocks at
    /// each end of the ladder.
    pub fn edge_weight(&self, k: usize, blocks: usize) -> f64 {
        let v = self.eigenvector(k);
        let edge = 2 * blocks.min(self.n_ph);
        v[..edge]
            .iter()
            .chain(&v[self.dim - edge..])
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Width in blocks of the edge layer at each end of the ladder.
    pub fn edge_blocks(&self) -> usize {
        (EDGE_BLOCKS * self.coupling_range).min(self.n_ph)
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.edge_weight(k, self.edge_blocks()) <= INTERIOR_WEIGHT
    }

    /// Indices of states not touched by the truncation edge.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.dim).filter(|&k| self.is_interior(k)).collect()
    }

    pub fn interior_quasi_energies(&self) -> Vec<f64> {
        self.interior_indices().into_iter().map(|k| self.quasi_energies[k]).collect()
    }

    /// Distinct folded quasi-energies of the interior states, ascending.
    ///
    /// Ladder copies fold onto the same value; values closer than `tol` are
    /// merged.
    pub fn folded_interior(&self, tol: f64) -> Vec<f64> {
        let mut folded: Vec<f64> = self
            .interior_quasi_energies()
            .into_iter()
            .map(fold_quasi_energy)
            .collect();
        folded.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for q in folded {
            if out.last().is_none_or(|&last| q - last > tol) {
                out.push(q);
            }
        }
        // -1/2 and +1/2 - tiny describe the same point of the zone
        if out.len() > 1 && out[0] + 1.0 - out[out.len() - 1] <= tol {
            out.pop();
        }
        out
    }

    /// `max |V^dagger V - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            let va = self.eigenvector(a);
            for b in a..self.dim {
                let vb = self.eigenvector(b);
                let dot: Complex64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// `max_k max_i |(H v_k - q_k v_k)_i|`.
    pub fn residual(&self, matrix: &FloquetMatrix) -> f64 {
        let dim = self.dim;
        let data = matrix.data();
        let mut worst = 0.0f64;
        for k in 0..dim {
            let v = self.eigenvector(k);
            let q = self.quasi_energies[k];
            for i in 0..dim {
                let row = &data[i * dim..(i + 1) * dim];
                let hv: Complex64 = row.iter().zip(v).map(|(h, x)| h * x).sum();
                worst = worst.max((hv - q * v[i]).norm());
            }
        }
        worst
    }
}

/// Reduce `q` into the zone `[-1/2, 1/2)`.
pub fn fold_quasi_energy(q: f64) -> f64 {
    let r = q - (q + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Phase `i^n` of the gauge that makes odd-harmonic Floquet matrices real.
fn gauge_phase(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn photon_of(n_ph: usize, row: usize) -> i64 {
    (row / 2) as i64 - n_ph as i64
}

/// Full Hermitian eigendecomposition with quasi-energies ascending.
///
/// Drives made of odd harmonics only give a matrix that is real symmetric in
/// the photon gauge `|nu, n> -> i^n |nu, n>`; that case runs the cheaper real
/// solver and maps the eigenvectors back.
pub fn diagonalize(matrix: &FloquetMatrix) -> Result<FloquetSpectrum> {
    let dim = matrix.dim();
    let n_ph = matrix.photon_cutoff();
    let phases: Vec<Complex64> = (0..dim).map(|r| gauge_phase(photon_of(n_ph, r))).collect();

    let mut real_ok = true;
    let gauged = Mat::<f64>::from_fn(dim, dim, |i, j| {
        let z = phases[i].conj() * matrix.get(i, j) * phases[j];
        if z.im != 0.0 {
            real_ok = false;
        }
        z.re
    });

    let (values, vectors) = if real_ok {
        let evd = gauged
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values: Vec<f64> = (0..dim).map(|k| s[k]).collect();
        let mut vectors = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                vectors[k * dim + i] = phases[i] * u[(i, k)];
            }
        }
        (values, vectors)
    } else {
        let h = Mat::<faer::c64>::from_fn(dim, dim, |i, j| {
            let z = matrix.get(i, j);
            faer::c64::new(z.re, z.im)
        });
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values: Vec<f64> = (0..dim).map(|k| s[k].re).collect();
        let mut vectors = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                let z = u[(i, k)];
                vectors[k * dim + i] = Complex64::new(z.re, z.im);
            }
        }
        (values, vectors)
    };

    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence("non-finite eigenvalue".into()));
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let quasi_energies = order.iter().map(|&k| values[k]).collect();
    let mut sorted = Vec::with_capacity(dim * dim);
    for &k in &order {
        sorted.extend_from_slice(&vectors[k * dim..(k + 1) * dim]);
    }

    Ok(FloquetSpectrum { n_ph, dim, coupling_range: matrix.max_harmonic().max(1), quasi_energies, vectors: sorted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::FourierDrive;
    use crate::floquet::matrix::build_floquet_hamiltonian;
    use crate::system::SystemPoint;

    #[test]
    fn folding() {
        assert!((fold_quasi_energy(0.5001) + 0.4999).abs() < 1e-12);
        assert_eq!(fold_quasi_energy(0.0), 0.0);
        assert_eq!(fold_quasi_energy(3.25), 0.25);
        assert_eq!(fold_quasi_energy(0.5), -0.5);
        assert_eq!(fold_quasi_energy(-0.5), -0.5);
        assert!((fold_quasi_energy(-2.75) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn undriven_ladder() {
        let p = SystemPoint::new(1.3, 0.4, 0.0).unwrap();
        let h = build_floquet_hamiltonian(&p, &FourierDrive::monochromatic(), 3).unwrap();
        let s = diagonalize(&h).unwrap();
        let half = 0.5 * p.gap();
        let mut expected: Vec<f64> = (-3..=3)
            .flat_map(|n| [n as f64 - half, n as f64 + half])
            .collect();
        expected.sort_by(f64::total_cmp);
        for (q, e) in s.quasi_energies().iter().zip(&expected) {
            assert!((q - e).abs() < 1e-12, "{q} vs {e}");
        }
    }

    #[test]
    fn complex_path_matches_real_gauge() {
        // An even harmonic defeats the real gauge; compare against the same
        // physics with the even coefficient set to exactly zero.
        let p = SystemPoint::new(2.1, 0.8, 3.0).unwrap();
        let odd = FourierDrive::new(vec![1.0, 0.0, -0.3]).unwrap();
        let tiny = FourierDrive::new(vec![1.0, 1e-300, -0.3]).unwrap();
        let a = diagonalize(&build_floquet_hamiltonian(&p, &odd, 20).unwrap()).unwrap();
        let hb = build_floquet_hamiltonian(&p, &tiny, 20).unwrap();
        let b = diagonalize(&hb).unwrap();
        for (x, y) in a.quasi_energies().iter().zip(b.quasi_energies()) {
            assert!((x - y).abs() < 1e-11);
        }
        assert!(b.residual(&hb) < 1e-10);
        assert!(b.unitarity_error() < 1e-10);
    }
}
