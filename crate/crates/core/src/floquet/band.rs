// SPDX-License-Identifier: Apache-2.0

//! Central Floquet mode by shift-invert Lanczos on the real banded form.
//!
//! For odd-harmonic drives the photon gauge `|nu, n> -> i^n |nu, n>` turns the
//! Floquet Hamiltonian into a real symmetric band matrix with half-bandwidth
//! `2M`. One eigenvector near quasi-energy zero is enough to evaluate the
//! transition probability: with weight `w` of that mode on `|+>` (summed over
//! all photon blocks), the two Floquet modes of the zone carry `w` and `1 - w`
//! and the probability is `2 w (1 - w)`.

use crate::drive::FourierDrive;
use crate::error::{Error, Result};
use crate::system::{FieldFreeBasis, SystemPoint};

const SHIFT: f64 = 0.012_345_678_9;
const RESIDUAL_TOL: f64 = 1e-13;
const MIN_STEPS: usize = 4;
const MAX_STEPS: usize = 80;

/// Real symmetric band matrix, stored as full rows of the band.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricBand {
    n: usize,
    kb: usize,
    // lower band, diag[i][d] = A(i, i - d) for d in 0..=kb
    lower: Vec<f64>,
}

impl SymmetricBand {
    fn zeros(n: usize, kb: usize) -> Self {
        Self { n, kb, lower: vec![0.0; n * (kb + 1)] }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.kb);
        self.lower[i * (self.kb + 1) + (i - j)] = v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.kb {
            0.0
        } else {
            self.lower[i * (self.kb + 1) + (i - j)]
        }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let kb = self.kb;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.lower[i * (kb + 1)..(i + 1) * (kb + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=kb.min(i) {
                let a = row[d];
                if a != 0.0 {
                    y[i] += a * x[i - d];
                    y[i - d] += a * x[i];
                }
            }
        }
    }
}

/// Gauge-transformed Floquet matrix, or `None` if the drive has even harmonics.
pub(crate) fn gauged_band(
    point: &SystemPoint,
    drive: &FourierDrive,
    n_ph: usize,
) -> Option<SymmetricBand> {
    if !drive.has_only_odd_harmonics() {
        return None;
    }
    let m_harm = drive.harmonics();
    let dim = 2 * (2 * n_ph + 1);
    let mut a = SymmetricBand::zeros(dim, (2 * m_harm).max(1));
    let np = n_ph as i64;
    for n in -np..=np {
        let r = 2 * (n + np) as usize;
        a.set(r, r, -0.5 * point.eps0 + n as f64);
        a.set(r + 1, r + 1, 0.5 * point.eps0 + n as f64);
        a.set(r + 1, r, -0.5 * point.delta);
        for j in (1..=m_harm).step_by(2) {
            let m = n - j as i64;
            if m < -np {
                break;
            }
            // i^{-j} * i * (A b_j / 4) = (-1)^((j-1)/2) A b_j / 4
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let v = sign * point.amplitude * drive.coefficient(j) / 4.0;
            let c = 2 * (m + np) as usize;
            a.set(r, c, v);
            a.set(r + 1, c + 1, -v);
        }
    }
    Some(a)
}

/// LU factorization with partial pivoting in LAPACK `gbtrf` band layout:
/// column `c` stores rows `c - kl - ku ..= c + kl` contiguously.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        (self.kl + self.ku + r - c) + c * self.ldab
    }

    fn factor(a: &SymmetricBand, shift: f64) -> Option<Self> {
        let n = a.n;
        let kl = a.kb;
        let ku = a.kb;
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n], pivots: vec![0; n] };
        for c in 0..n {
            for r in c.saturating_sub(ku)..=(c + kl).min(n - 1) {
                let idx = lu.at(r, c);
                lu.ab[idx] = a.get(r, c) - if r == c { shift } else { 0.0 };
            }
        }
        let scale = lu.ab.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);

        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let diag = kv + j * ldab;
            let col = &lu.ab[diag..=diag + km];
            let (p, best) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bp, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bp, bv) });
            lu.pivots[j] = j + p;
            if best <= 1e-14 * scale {
                return None;
            }
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let (x, y) = (lu.at(j, c), lu.at(j + p, c));
                    lu.ab.swap(x, y);
                }
            }
            let inv = 1.0 / lu.ab[diag];
            lu.ab[diag + 1..=diag + km].iter_mut().for_each(|v| *v *= inv);
            if km == 0 {
                continue;
            }
            let (head, tail) = lu.ab.split_at_mut((j + 1) * ldab);
            let mult = &head[diag + 1..=diag + km];
            for c in j + 1..=ju {
                // column c, rows j ..= j + km start at offset kv + j - c
                let base = (c - j - 1) * ldab + kv + j - c;
                let u = tail[base];
                if u == 0.0 {
                    continue;
                }
                let target = &mut tail[base + 1..=base + km];
                for (t, m) in target.iter_mut().zip(mult) {
                    *t -= m * u;
                }
            }
        }
        Some(lu)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let l = self.pivots[j];
            if l != j {
                b.swap(l, j);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 && km > 0 {
                let diag = kv + j * self.ldab;
                let mult = &self.ab[diag + 1..=diag + km];
                for (t, m) in b[j + 1..=j + km].iter_mut().zip(mult) {
                    *t -= m * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let diag = kv + j * self.ldab;
            b[j] /= self.ab[diag];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            if bj != 0.0 && lo < j {
                let col = &self.ab[diag - (j - lo)..diag];
                for (t, u) in b[lo..j].iter_mut().zip(col) {
                    *t -= u * bj;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` by implicit QL. On return `d` holds the eigenvalues.
/// The rotations are applied to the rows of `z` (row-major, `k` columns):
/// starting from the identity gives the eigenvectors as columns, starting
/// from a single unit row tracks one component of each.
fn tridiagonal_ql(d: &mut [f64], e_in: &[f64], z: &mut [f64]) -> Result<()> {
    let k = d.len();
    let rows = z.len() / k;
    let mut e = vec![0.0; k];
    e[..k - 1].copy_from_slice(&e_in[..k - 1]);
    for l in 0..k {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < k {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence("tridiagonal QL".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..rows {
                    let zi1 = z[row * k + i + 1];
                    let zi = z[row * k + i];
                    z[row * k + i + 1] = s * zi + c * zi1;
                    z[row * k + i] = c * zi - s * zi1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// The Floquet mode nearest the shift.
#[derive(Debug, Clone)]
pub(crate) struct CentralMode {
    pub quasi_energy: f64,
    /// Eigenvector in the real photon gauge, unit norm.
    pub vector: Vec<f64>,
    /// Diagnostics, read by tests.
    #[allow(dead_code)]
    pub residual: f64,
    #[allow(dead_code)]
    pub steps: usize,
}

pub(crate) fn central_mode(a: &SymmetricBand) -> Result<CentralMode> {
    nearest_mode(a, SHIFT)
}

/// Eigenpair of `a` nearest `shift`, by shift-invert Lanczos with full
/// reorthogonalization.
pub(crate) fn nearest_mode(a: &SymmetricBand, shift: f64) -> Result<CentralMode> {
    let n = a.n;
    let mut sigma = shift;
    let lu = loop {
        match BandLu::factor(a, sigma) {
            Some(lu) => break lu,
            None if sigma - shift < 0.2 => sigma += 0.031_415_926_5,
            None => return Err(Error::NoConvergence("singular shifted band matrix".into())),
        }
    };
    let norm_a = a.lower.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (2 * a.kb + 1) as f64;
    let tol = RESIDUAL_TOL * norm_a.max(1.0);

    // Deterministic start vector concentrated on the central photon blocks.
    let centre = n / 2;
    let mut q: Vec<f64> = (0..n)
        .map(|i| {
            let d = i.abs_diff(centre) as f64;
            (1.0 + 0.37 * ((i * 7919) % 13) as f64 / 13.0) / (1.0 + d)
        })
        .collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);

    let max_steps = MAX_STEPS.min(n);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);
    let mut w = vec![0.0; n];
    let mut hx = vec![0.0; n];
    let mut d = Vec::with_capacity(max_steps);
    let mut z = Vec::with_capacity(max_steps * max_steps);

    for step in 0..max_steps {
        w.copy_from_slice(&basis[step]);
        lu.solve(&mut w);
        alpha.push(dot(&basis[step], &w));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b_j = norm(&w);
        let k = step + 1;
        let exhausted = b_j <= 1e-14 * alpha[step].abs().max(1.0) || k == max_steps;

        if k >= MIN_STEPS || exhausted {
            d.clear();
            d.extend_from_slice(&alpha);
            z.clear();
            z.resize(k, 0.0);
            z[k - 1] = 1.0;
            tridiagonal_ql(&mut d, &beta, &mut z)?;
            let top = (0..k).max_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs())).unwrap_or(0);
            // Lanczos residual of the inverse operator, then mapped back.
            let est = (b_j * z[top]).abs() / d[top].abs() * (norm_a + sigma.abs());
            if est <= tol || exhausted {
                d.clear();
                d.extend_from_slice(&alpha);
                z.clear();
                z.resize(k * k, 0.0);
                for i in 0..k {
                    z[i * k + i] = 1.0;
                }
                tridiagonal_ql(&mut d, &beta, &mut z)?;
                let mut x = vec![0.0; n];
                for (row, v) in basis.iter().enumerate() {
                    let c = z[row * k + top];
                    x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
                }
                let xn = norm(&x);
                x.iter_mut().for_each(|v| *v /= xn);
                a.matvec(&x, &mut hx);
                let lambda = dot(&x, &hx);
                let residual = hx
                    .iter()
                    .zip(&x)
                    .map(|(h, v)| (h - lambda * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if residual <= tol {
                    return Ok(CentralMode { quasi_energy: lambda, vector: x, residual, steps: k });
                }
            }
        }
        if exhausted {
            break;
        }
        beta.push(b_j);
        w.iter_mut().for_each(|v| *v /= b_j);
        basis.push(w.clone());
    }
    Err(Error::NoConvergence("shift-invert Lanczos did not reach the residual tolerance".into()))
}

/// Summed weight of a gauge-basis vector on `|+>`.
pub(crate) fn plus_weight(vector: &[f64], basis: &FieldFreeBasis) -> f64 {
    vector
        .chunks_exact(2)
        .map(|ab| basis.plus_overlap(ab[0], ab[1]).powi(2))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &SymmetricBand) -> Vec<Vec<f64>> {
        (0..a.n).map(|i| (0..a.n).map(|j| a.get(i, j)).collect()).collect()
    }

    #[test]
    fn band_lu_solves() {
        let p = SystemPoint::new(2.3, 1.1, 4.0).unwrap();
        let drive = FourierDrive::new(vec![0.8, 0.0, -0.3, 0.0, 0.1]).unwrap();
        let a = gauged_band(&p, &drive, 8).unwrap();
        let lu = BandLu::factor(&a, 0.37).unwrap();
        let x: Vec<f64> = (0..a.n).map(|i| ((i * 31) % 7) as f64 - 3.0).collect();
        let d = dense(&a);
        let mut b: Vec<f64> = (0..a.n)
            .map(|i| (0..a.n).map(|j| (d[i][j] - if i == j { 0.37 } else { 0.0 }) * x[j]).sum())
            .collect();
        lu.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_even_harmonics() {
        let p = SystemPoint::new(1.0, 1.0, 1.0).unwrap();
        assert!(gauged_band(&p, &FourierDrive::new(vec![1.0, 0.2]).unwrap(), 8).is_none());
    }

    #[test]
    fn matvec_matches_dense() {
        let p = SystemPoint::new(-1.3, 0.6, 2.0).unwrap();
        let a = gauged_band(&p, &FourierDrive::triangle(3).unwrap(), 6).unwrap();
        let x: Vec<f64> = (0..a.n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut y = vec![0.0; a.n];
        a.matvec(&x, &mut y);
        let d = dense(&a);
        for i in 0..a.n {
            let want: f64 = (0..a.n).map(|j| d[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn tridiagonal_ql_reconstructs() {
        let alpha = [2.0, -1.0, 0.5, 3.0, 0.25];
        let beta = [0.7, 1.3, -0.4, 0.9];
        let k = alpha.len();
        let mut d = alpha.to_vec();
        let mut z = vec![0.0; k * k];
        for i in 0..k {
            z[i * k + i] = 1.0;
        }
        tridiagonal_ql(&mut d, &beta, &mut z).unwrap();
        for c in 0..k {
            for i in 0..k {
                let mut tv = alpha[i] * z[i * k + c];
                if i > 0 {
                    tv += beta[i - 1] * z[(i - 1) * k + c];
                }
                if i + 1 < k {
                    tv += beta[i] * z[(i + 1) * k + c];
                }
                assert!((tv - d[c] * z[i * k + c]).abs() < 1e-13);
            }
        }
        let trace: f64 = alpha.iter().sum();
        assert!((d.iter().sum::<f64>() - trace).abs() < 1e-13);

        let mut d1 = alpha.to_vec();
        let mut last = vec![0.0; k];
        last[k - 1] = 1.0;
        tridiagonal_ql(&mut d1, &beta, &mut last).unwrap();
        for c in 0..k {
            assert_eq!(d1[c], d[c]);
            assert!((last[c] - z[(k - 1) * k + c]).abs() < 1e-14);
        }
    }

    #[test]
    fn central_mode_is_an_eigenpair_nearest_the_shift() {
        let p = SystemPoint::new(4.7, 2.5, 9.0).unwrap();
        let drive = FourierDrive::new(vec![0.8, 0.0, -0.5, 0.0, 0.3]).unwrap();
        let a = gauged_band(&p, &drive, 40).unwrap();
        let mode = central_mode(&a).unwrap();
        assert!(mode.residual < 1e-9);
        assert!(mode.steps >= MIN_STEPS);
        let h = crate::floquet::build_floquet_hamiltonian(&p, &drive, 40).unwrap();
        let q = crate::floquet::diagonalize(&h).unwrap();
        let nearest = q
            .quasi_energies()
            .iter()
            .copied()
            .min_by(|x, y| (x - SHIFT).abs().total_cmp(&(y - SHIFT).abs()))
            .unwrap();
        assert!((mode.quasi_energy - nearest).abs() < 1e-11);
    }
}
