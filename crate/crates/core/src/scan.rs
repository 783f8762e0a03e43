// SPDX-License-Identifier: Apache-2.0

//! Parameter-space scans: probability maps, band diagrams, integrated
//! spectra and the cumulative-probability objective.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::drive::FourierDrive;
use crate::error::{Error, Result};
use crate::floquet::{
    build_floquet_hamiltonian, default_cutoff, diagonalize, spectral_cutoff, point_probability, Route,
};
use crate::system::SystemPoint;

/// Version of the JSON sidecar layout.
pub const SCHEMA_VERSION: u32 = 1;
/// Folded quasi-energies closer than this are one band-diagram entry.
pub const BAND_MERGE_TOL: f64 = 1e-7;
const UNIFORM_TOL: f64 = 1e-12;

/// Uniform points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} axis has non-finite values")));
    }
    if axis.len() >= 2 {
        let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        if step <= 0.0 {
            return Err(Error::invalid(format!("{name} axis must be ascending")));
        }
        let scale = axis.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (i, w) in axis.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > UNIFORM_TOL * scale {
                return Err(Error::invalid(format!("{name} axis not uniform at index {i}")));
            }
        }
    }
    Ok(())
}

/// Rectangular grid over `(eps0, delta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2D {
    eps0_axis: Vec<f64>,
    delta_axis: Vec<f64>,
}

impl Grid2D {
    /// Axes must be ascending and uniform; a single point per axis is allowed.
    pub fn new(eps0_axis: Vec<f64>, delta_axis: Vec<f64>) -> Result<Self> {
        check_axis("eps0", &eps0_axis)?;
        check_axis("delta", &delta_axis)?;
        if delta_axis[0] < 0.0 {
            return Err(Error::invalid("delta axis must be non-negative"));
        }
        Ok(Self { eps0_axis, delta_axis })
    }

    pub fn uniform(eps0: (f64, f64), n_eps0: usize, delta: (f64, f64), n_delta: usize) -> Result<Self> {
        Self::new(linspace(eps0.0, eps0.1, n_eps0), linspace(delta.0, delta.1, n_delta))
    }

    /// The 201 x 201 grid over `[0, 10] x [0, 10]` used for figure-scale maps.
    pub fn figure_default() -> Self {
        Self::uniform((0.0, 10.0), 201, (0.0, 10.0), 201).expect("valid default grid")
    }

    pub fn eps0_axis(&self) -> &[f64] {
        &self.eps0_axis
    }

    pub fn delta_axis(&self) -> &[f64] {
        &self.delta_axis
    }

    pub fn len(&self) -> usize {
        self.eps0_axis.len() * self.delta_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn max_abs_eps0(&self) -> f64 {
        self.eps0_axis.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(delta, eps0)` of row-major cell `k`.
    fn cell(&self, k: usize) -> (f64, f64) {
        let n = self.eps0_axis.len();
        (self.delta_axis[k / n], self.eps0_axis[k % n])
    }
}

/// Transition probabilities on a grid; `values[i * n_eps0 + j]` belongs to
/// `(delta_axis[i], eps0_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub drive: FourierDrive,
    pub amplitude: f64,
    pub n_ph: usize,
    /// Cells that needed the dense eigensolver.
    pub dense_cells: usize,
}

impl ProbabilityMap {
    pub fn get(&self, delta_index: usize, eps0_index: usize) -> f64 {
        self.values[delta_index * self.grid.eps0_axis.len() + eps0_index]
    }

    /// The row at `delta_axis[delta_index]`, ordered by `eps0`.
    pub fn row(&self, delta_index: usize) -> &[f64] {
        let n = self.grid.eps0_axis.len();
        &self.values[delta_index * n..(delta_index + 1) * n]
    }
}

fn evaluate_cells(
    grid: &Grid2D,
    drive: &FourierDrive,
    amplitude: f64,
    n_ph: usize,
) -> Result<(Vec<f64>, usize)> {
    let results: Vec<Result<(f64, Route)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (delta, eps0) = grid.cell(k);
            let at = |source| Error::AtPoint { eps0, delta, source: Box::new(source) };
            let point = SystemPoint::new(eps0, delta, amplitude).map_err(at)?;
            point_probability(&point, drive, n_ph)
                .map(|p| (p.probability, p.route))
                .map_err(at)
        })
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut dense = 0;
    for r in results {
        let (v, route) = r?;
        values.push(v);
        dense += usize::from(route == Route::Dense);
    }
    Ok((values, dense))
}

/// Map with the default photon cutoff for the grid's largest `|eps0|`.
pub fn probability_map(grid: &Grid2D, drive: &FourierDrive, amplitude: f64) -> Result<ProbabilityMap> {
    probability_map_with(grid, drive, amplitude, None)
}

/// Map with an explicit photon cutoff, or the default when `None`.
///
/// Cells are evaluated concurrently on the current rayon pool and placed by
/// index, so the result does not depend on the thread count.
pub fn probability_map_with(
    grid: &Grid2D,
    drive: &FourierDrive,
    amplitude: f64,
    n_ph: Option<usize>,
) -> Result<ProbabilityMap> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(format!("amplitude must be finite and >= 0, got {amplitude}")));
    }
    let n_ph = n_ph.unwrap_or_else(|| default_cutoff(amplitude, drive, grid.max_abs_eps0()));
    let (values, dense_cells) = evaluate_cells(grid, drive, amplitude, n_ph)?;
    Ok(ProbabilityMap { grid: grid.clone(), values, drive: drive.clone(), amplitude, n_ph, dense_cells })
}

/// Folded interior quasi-energies at one bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub eps0: f64,
    pub quasi_energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandDiagram {
    pub delta: f64,
    pub amplitude: f64,
    pub drive: FourierDrive,
    pub n_ph: usize,
    pub rows: Vec<BandRow>,
}

/// Smallest circular distance between two distinct entries of a folded set.
pub fn min_folded_separation(values: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            let d = (a - b).abs();
            let d = d.min(1.0 - d);
            best = Some(best.map_or(d, |m: f64| m.min(d)));
        }
    }
    best
}

impl BandDiagram {
    /// Minimum separation between bands over rows with `eps0` in
    /// `[lo, hi]`. A row whose levels merged into one entry counts as zero.
    pub fn min_gap(&self, lo: f64, hi: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.eps0 >= lo && r.eps0 <= hi)
            .filter_map(|r| match r.quasi_energies.len() {
                0 => None,
                1 => Some(0.0),
                _ => min_folded_separation(&r.quasi_energies),
            })
            .reduce(f64::min)
    }

    pub fn max_bands(&self) -> usize {
        self.rows.iter().map(|r| r.quasi_energies.len()).max().unwrap_or(0)
    }
}

/// Folded quasi-energies of all interior Floquet states at fixed `delta`.
///
/// Ladder copies fold onto the same value and are merged, leaving the set of
/// distinct quasi-energies of one zone per row.
pub fn band_diagram(
    delta: f64,
    eps0_axis: &[f64],
    drive: &FourierDrive,
    amplitude: f64,
) -> Result<BandDiagram> {
    check_axis("eps0", eps0_axis)?;
    let max_eps0 = eps0_axis.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let n_ph = spectral_cutoff(amplitude, drive, max_eps0);
    let rows: Vec<Result<BandRow>> = eps0_axis
        .par_iter()
        .map(|&eps0| {
            let at = |source| Error::AtPoint { eps0, delta, source: Box::new(source) };
            let point = SystemPoint::new(eps0, delta, amplitude).map_err(at)?;
            let h = build_floquet_hamiltonian(&point, drive, n_ph).map_err(at)?;
            let spectrum = diagonalize(&h).map_err(at)?;
            Ok(BandRow { eps0, quasi_energies: spectrum.folded_interior(BAND_MERGE_TOL) })
        })
        .collect();
    Ok(BandDiagram {
        delta,
        amplitude,
        drive: drive.clone(),
        n_ph,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// One point of a Delta-integrated spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub eps0: f64,
    pub integrated_probability: f64,
}

/// Trapezoidal integral of each `eps0` column over `delta`.
pub fn integrated_spectrum(map: &ProbabilityMap) -> Result<Vec<SpectrumPoint>> {
    let deltas = map.grid.delta_axis();
    if deltas.len() < 3 {
        return Err(Error::invalid(format!("need >= 3 delta points, got {}", deltas.len())));
    }
    Ok(map
        .grid
        .eps0_axis()
        .iter()
        .enumerate()
        .map(|(j, &eps0)| {
            let integral = deltas
                .windows(2)
                .enumerate()
                .map(|(i, w)| 0.5 * (w[1] - w[0]) * (map.get(i, j) + map.get(i + 1, j)))
                .sum();
            SpectrumPoint { eps0, integrated_probability: integral }
        })
        .collect())
}

/// Integration domain and quadrature of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDomain {
    pub eps0_range: [f64; 2],
    pub delta_range: [f64; 2],
    pub eps0_points: usize,
    pub delta_points: usize,
}

impl ObjectiveDomain {
    pub fn new(eps0_range: [f64; 2], delta_range: [f64; 2], eps0_points: usize, delta_points: usize) -> Result<Self> {
        let d = Self { eps0_range, delta_range, eps0_points, delta_points };
        d.validate()?;
        Ok(d)
    }

    /// `4.8 <= eps0 <= 5.2`, `0 <= delta <= 10` on the default 9 x 101 grid.
    pub fn suppression_window() -> Self {
        Self { eps0_range: [4.8, 5.2], delta_range: [0.0, 10.0], eps0_points: 9, delta_points: 101 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("eps0", self.eps0_range), ("delta", self.delta_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::invalid(format!("{name} range must satisfy lo < hi, got {r:?}")));
            }
        }
        if self.delta_range[0] < 0.0 {
            return Err(Error::invalid("delta range must be non-negative"));
        }
        if self.eps0_points < 3 || self.delta_points < 3 {
            return Err(Error::invalid("objective quadrature needs >= 3 points per axis"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.eps0_range[1] - self.eps0_range[0]) * (self.delta_range[1] - self.delta_range[0])
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::uniform(
            (self.eps0_range[0], self.eps0_range[1]),
            self.eps0_points,
            (self.delta_range[0], self.delta_range[1]),
            self.delta_points,
        )
    }

    /// The same domain with `2 (n - 1) + 1` points per axis.
    pub fn refined(&self) -> Self {
        Self { eps0_points: 2 * self.eps0_points - 1, delta_points: 2 * self.delta_points - 1, ..*self }
    }

    fn max_abs_eps0(&self) -> f64 {
        self.eps0_range[0].abs().max(self.eps0_range[1].abs())
    }
}

/// Cumulative transition probability over the domain: the mean of the
/// probability on the quadrature grid times the domain area.
pub fn objective(drive: &FourierDrive, amplitude: f64, domain: &ObjectiveDomain) -> Result<f64> {
    domain.validate()?;
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(format!("amplitude must be finite and >= 0, got {amplitude}")));
    }
    let grid = domain.grid()?;
    let n_ph = default_cutoff(amplitude, drive, domain.max_abs_eps0());
    let (values, _) = evaluate_cells(&grid, drive, amplitude, n_ph)?;
    Ok(rectangle_rule(&values, domain.area()))
}

/// Mean of `values` times `area`, summed in index order.
pub fn rectangle_rule(values: &[f64], area: f64) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64 * area
}

/// Sidecar path for an output file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_sidecar(path: &Path, kind: &str, body: serde_json::Value) -> Result<()> {
    let mut meta = json!({
        "schema_version": SCHEMA_VERSION,
        "artifact": "floqopt",
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "kind": kind,
        "data_file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
    });
    if let (Some(m), serde_json::Value::Object(b)) = (meta.as_object_mut(), body) {
        m.extend(b);
    }
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(fs::File::create(path)?))
}

/// `eps0,delta,probability` rows plus a JSON sidecar.
pub fn write_map_csv(map: &ProbabilityMap, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "eps0,delta,probability")?;
    for (i, delta) in map.grid.delta_axis().iter().enumerate() {
        for (j, eps0) in map.grid.eps0_axis().iter().enumerate() {
            writeln!(out, "{eps0},{delta},{}", map.get(i, j))?;
        }
    }
    out.flush()?;
    write_sidecar(
        path,
        "probability_map",
        json!({
            "drive": map.drive.coefficients(),
            "amplitude": map.amplitude,
            "n_ph": map.n_ph,
            "dense_cells": map.dense_cells,
            "grid": {
                "eps0": axis_spec(map.grid.eps0_axis()),
                "delta": axis_spec(map.grid.delta_axis()),
            },
        }),
    )
}

fn axis_spec(axis: &[f64]) -> serde_json::Value {
    json!({ "lo": axis[0], "hi": axis[axis.len() - 1], "points": axis.len() })
}

/// `eps0,q1,q2,...` rows plus a JSON sidecar. Rows with fewer bands than
/// the header leave the trailing fields empty.
pub fn write_band_csv(diagram: &BandDiagram, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let width = diagram.max_bands();
    let header: Vec<String> =
        std::iter::once("eps0".to_string()).chain((1..=width).map(|k| format!("q{k}"))).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in &diagram.rows {
        let mut fields = vec![row.eps0.to_string()];
        fields.extend(row.quasi_energies.iter().map(|q| q.to_string()));
        fields.resize(width + 1, String::new());
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    write_sidecar(
        path,
        "band_diagram",
        json!({
            "drive": diagram.drive.coefficients(),
            "amplitude": diagram.amplitude,
            "delta": diagram.delta,
            "n_ph": diagram.n_ph,
            "grid": { "eps0": axis_spec(&diagram.rows.iter().map(|r| r.eps0).collect::<Vec<_>>()) },
        }),
    )
}

/// `eps0,integrated_probability` rows plus a JSON sidecar.
pub fn write_spectrum_csv(spectrum: &[SpectrumPoint], map: &ProbabilityMap, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "eps0,integrated_probability")?;
    for p in spectrum {
        writeln!(out, "{},{}", p.eps0, p.integrated_probability)?;
    }
    out.flush()?;
    write_sidecar(
        path,
        "integrated_spectrum",
        json!({
            "drive": map.drive.coefficients(),
            "amplitude": map.amplitude,
            "n_ph": map.n_ph,
            "grid": {
                "eps0": axis_spec(map.grid.eps0_axis()),
                "delta": axis_spec(map.grid.delta_axis()),
            },
        }),
    )
}
