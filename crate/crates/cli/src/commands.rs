// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use floqopt::optimizer::{
    baseline_drive, optimize, write_manifest, write_result, Bounds, IslandConfig, OptimizationResult, Topology,
};
use floqopt::scan::{
    band_diagram, integrated_spectrum, linspace, objective, probability_map_with, sidecar_path, write_band_csv,
    write_map_csv, write_spectrum_csv, BandDiagram, Grid2D, ObjectiveDomain, ProbabilityMap, SpectrumPoint,
    SCHEMA_VERSION,
};
use floqopt::FourierDrive;
use serde::Serialize;
use serde_json::json;

use crate::config::{thread_count, BandsArgs, Cli, Command, OptimizeArgs, ScanArgs, SpectrumArgs, VerifyArgs};
use crate::drive_spec::parse_drive;
use crate::error::{CliError, CliResult};
use crate::verify::{analytic_suite, null_suite, oracle_suite, VerifyReport};

/// Tunneling amplitude of the post-optimization band diagram.
pub const REPORT_DELTA: f64 = 4.0;
pub const REPORT_BAND_RANGE: [f64; 2] = [4.0, 6.0];
pub const REPORT_BAND_POINTS: usize = 201;
pub const REPORT_SPECTRUM_RANGE: [f64; 2] = [0.0, 10.0];
pub const REPORT_SPECTRUM_GRID: (usize, usize) = (201, 101);
/// Half width of the windows searched for the neighbouring peaks of a dip.
pub const DIP_PEAK_HALF_WIDTH: f64 = 0.25;
/// Required objective ratio of a single-harmonic control to the optimum.
pub const CONTROL_RATIO: f64 = 3.0;

pub fn run(cli: Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Scan(a) => {
            let a = a.resolve(config)?;
            in_pool(cli.threads, a.threads, || scan(&a).map(|_| ()))
        }
        Command::Bands(a) => {
            let a = a.resolve(config)?;
            in_pool(cli.threads, a.threads, || bands(&a).map(|_| ()))
        }
        Command::Spectrum(a) => {
            let a = a.resolve(config)?;
            in_pool(cli.threads, a.threads, || spectrum(&a).map(|_| ()))
        }
        Command::Optimize(a) => {
            let a = a.resolve(config)?;
            in_pool(cli.threads, a.threads, || run_optimize(&a).map(|_| ()))
        }
        Command::Verify(a) => {
            let a = a.resolve(config)?;
            in_pool(cli.threads, a.threads, || verify(&a).map(|_| ()))
        }
    }
}

fn in_pool<T: Send>(flag: Option<usize>, config: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(flag, config)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn field<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::config(format!("`{name}` is required")))
}

fn with_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn write_json(path: &Path, body: &impl Serialize) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(body).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Map computed one delta row at a time, with a plain-text row counter.
pub fn map_with_progress(grid: &Grid2D, drive: &FourierDrive, amplitude: f64, n_ph: Option<usize>) -> CliResult<ProbabilityMap> {
    let max_eps0 = grid.eps0_axis().iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let n_ph = n_ph.unwrap_or_else(|| floqopt::floquet::default_cutoff(amplitude, drive, max_eps0));
    let rows = grid.delta_axis().len();
    let step = (rows / 20).max(1);
    let mut values = Vec::with_capacity(grid.len());
    let mut dense_cells = 0;
    for (i, &delta) in grid.delta_axis().iter().enumerate() {
        let row = Grid2D::new(grid.eps0_axis().to_vec(), vec![delta])?;
        let m = probability_map_with(&row, drive, amplitude, Some(n_ph))?;
        values.extend_from_slice(&m.values);
        dense_cells += m.dense_cells;
        if (i + 1) % step == 0 || i + 1 == rows {
            eprintln!("rows {}/{rows}", i + 1);
        }
    }
    Ok(ProbabilityMap { grid: grid.clone(), values, drive: drive.clone(), amplitude, n_ph, dense_cells })
}

fn grid_from(eps0: [f64; 2], delta: [f64; 2], size: crate::config::GridSize) -> CliResult<Grid2D> {
    Ok(Grid2D::uniform((eps0[0], eps0[1]), size.eps0, (delta[0], delta[1]), size.delta)?)
}

pub fn scan(a: &ScanArgs) -> CliResult<ProbabilityMap> {
    let drive = parse_drive(&field(&a.drive, "drive")?)?;
    let grid = grid_from(field(&a.eps0_range, "eps0_range")?.0, field(&a.delta_range, "delta_range")?.0, field(&a.grid, "grid")?)?;
    let map = map_with_progress(&grid, &drive, field(&a.amplitude, "amplitude")?, a.n_ph)?;
    let out = field(&a.out, "out")?;
    write_map_csv(&map, &out)?;
    eprintln!("wrote {} ({} cells, {} dense)", out.display(), map.values.len(), map.dense_cells);
    Ok(map)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapEntry {
    pub drive: String,
    pub coefficients: Vec<f64>,
    pub min_gap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandsSummary {
    pub schema_version: u32,
    pub kind: &'static str,
    pub delta: f64,
    pub amplitude: f64,
    pub gap_range: [f64; 2],
    pub drive: GapEntry,
    pub compare: Option<GapEntry>,
    /// Which drive has the smaller minimum gap: `drive`, `compare` or `equal`.
    pub smaller_gap: Option<&'static str>,
}

fn smaller(a: Option<f64>, b: Option<f64>) -> Option<&'static str> {
    match (a, b) {
        (Some(a), Some(b)) if a < b => Some("drive"),
        (Some(a), Some(b)) if a > b => Some("compare"),
        (Some(_), Some(_)) => Some("equal"),
        _ => None,
    }
}

pub fn bands(a: &BandsArgs) -> CliResult<BandsSummary> {
    let spec = field(&a.drive, "drive")?;
    let drive = parse_drive(&spec)?;
    let amplitude = field(&a.amplitude, "amplitude")?;
    let delta = field(&a.delta, "delta")?;
    let range = field(&a.eps0_range, "eps0_range")?.0;
    let points = field(&a.eps0_points, "eps0_points")?;
    let gap = field(&a.gap_range, "gap_range")?.0;
    let out = field(&a.out, "out")?;
    if points < 2 || !(range[0] < range[1]) {
        return Err(CliError::config(format!("eps0_range {range:?} with {points} points is not a valid axis")));
    }
    let axis = linspace(range[0], range[1], points);
    let diagram = band_diagram(delta, &axis, &drive, amplitude)?;
    write_band_csv(&diagram, &out)?;
    let entry = GapEntry { drive: spec, coefficients: drive.coefficients().to_vec(), min_gap: diagram.min_gap(gap[0], gap[1]) };
    let compare = match &a.compare {
        Some(spec) => {
            let other = parse_drive(spec)?;
            let d = band_diagram(delta, &axis, &other, amplitude)?;
            write_band_csv(&d, &with_suffix(&out, "_compare", "csv"))?;
            Some(GapEntry { drive: spec.clone(), coefficients: other.coefficients().to_vec(), min_gap: d.min_gap(gap[0], gap[1]) })
        }
        None => None,
    };
    let summary = BandsSummary {
        schema_version: SCHEMA_VERSION,
        kind: "band_summary",
        delta,
        amplitude,
        gap_range: gap,
        smaller_gap: compare.as_ref().and_then(|c| smaller(entry.min_gap, c.min_gap)),
        drive: entry,
        compare,
    };
    write_json(&with_suffix(&out, "_summary", "json"), &summary)?;
    eprintln!("wrote {} (min gap {:?})", out.display(), summary.drive.min_gap);
    Ok(summary)
}

/// Map CSV written by `scan`, with the drive and cutoff taken from its sidecar.
pub fn load_map(path: &Path) -> CliResult<ProbabilityMap> {
    let bad = |m: String| CliError::config(format!("map {}: {m}", path.display()));
    let meta_path = sidecar_path(path);
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&meta_path).map_err(|e| bad(format!("sidecar {}: {e}", meta_path.display())))?,
    )
    .map_err(|e| bad(format!("sidecar: {e}")))?;
    let coefficients: Vec<f64> = serde_json::from_value(meta["drive"].clone()).map_err(|e| bad(format!("sidecar drive: {e}")))?;
    let drive = FourierDrive::new(coefficients).map_err(|e| bad(e.to_string()))?;
    let amplitude = meta["amplitude"].as_f64().ok_or_else(|| bad("sidecar lacks amplitude".into()))?;
    let n_ph = meta["n_ph"].as_u64().ok_or_else(|| bad("sidecar lacks n_ph".into()))? as usize;
    let dense_cells = meta["dense_cells"].as_u64().unwrap_or(0) as usize;

    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("eps0,delta,probability") {
        return Err(bad("expected header `eps0,delta,probability`".into()));
    }
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(format!("line {}: not numeric", i + 2)))?;
        if v.len() != 3 {
            return Err(bad(format!("line {}: expected 3 fields", i + 2)));
        }
        cells.push((v[0], v[1], v[2]));
    }
    let first_delta = cells.first().ok_or_else(|| bad("no data rows".into()))?.1;
    let eps0_axis: Vec<f64> = cells.iter().take_while(|c| c.1 == first_delta).map(|c| c.0).collect();
    let n = eps0_axis.len();
    if cells.len() % n != 0 {
        return Err(bad("rows do not form a rectangular grid".into()));
    }
    let delta_axis: Vec<f64> = cells.chunks(n).map(|c| c[0].1).collect();
    for (i, chunk) in cells.chunks(n).enumerate() {
        if chunk.iter().zip(&eps0_axis).any(|(c, &e)| c.0 != e || c.1 != delta_axis[i]) {
            return Err(bad(format!("row block {} does not repeat the eps0 axis", i + 1)));
        }
    }
    let grid = Grid2D::new(eps0_axis, delta_axis).map_err(|e| bad(e.to_string()))?;
    Ok(ProbabilityMap { grid, values: cells.iter().map(|c| c.2).collect(), drive, amplitude, n_ph, dense_cells })
}

pub fn spectrum(a: &SpectrumArgs) -> CliResult<Vec<SpectrumPoint>> {
    let out = field(&a.out, "out")?;
    let map = match &a.map {
        Some(path) => load_map(path)?,
        None => {
            let drive = parse_drive(&field(&a.drive, "drive")?)?;
            let grid =
                grid_from(field(&a.eps0_range, "eps0_range")?.0, field(&a.delta_range, "delta_range")?.0, field(&a.grid, "grid")?)?;
            let map = map_with_progress(&grid, &drive, field(&a.amplitude, "amplitude")?, a.n_ph)?;
            write_map_csv(&map, &with_suffix(&out, "_map", "csv"))?;
            map
        }
    };
    let spectrum = integrated_spectrum(&map)?;
    write_spectrum_csv(&spectrum, &map, &out)?;
    eprintln!("wrote {}", out.display());
    Ok(spectrum)
}

/// Whether the spectrum dips at `center` below the peaks near
/// `center - 1` and `center + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct DipSummary {
    pub center: f64,
    pub value_at_center: f64,
    pub left_peak: f64,
    pub right_peak: f64,
    pub is_dip: bool,
}

pub fn dip_at(spectrum: &[SpectrumPoint], center: f64) -> Option<DipSummary> {
    let nearest = spectrum
        .iter()
        .min_by(|a, b| (a.eps0 - center).abs().total_cmp(&(b.eps0 - center).abs()))?;
    let peak = |c: f64| {
        spectrum
            .iter()
            .filter(|p| (p.eps0 - c).abs() <= DIP_PEAK_HALF_WIDTH + 1e-12)
            .map(|p| p.integrated_probability)
            .reduce(f64::max)
    };
    let (left, right) = (peak(center - 1.0)?, peak(center + 1.0)?);
    let v = nearest.integrated_probability;
    Some(DipSummary { center, value_at_center: v, left_peak: left, right_peak: right, is_dip: v < left && v < right })
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlSummary {
    pub drive: Vec<f64>,
    pub objective: f64,
    pub ratio_to_optimized: f64,
    pub suppresses: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    pub schema_version: u32,
    pub kind: &'static str,
    pub amplitude: f64,
    pub optimized: Vec<f64>,
    pub objective: f64,
    pub baseline: Vec<f64>,
    pub baseline_objective: f64,
    pub band_delta: f64,
    pub gap_range: [f64; 2],
    pub min_gap_optimized: Option<f64>,
    pub min_gap_baseline: Option<f64>,
    pub gap_closes: bool,
    pub spectrum_dip_optimized: Option<DipSummary>,
    pub spectrum_dip_baseline: Option<DipSummary>,
    /// Only the fundamental at its lower bound, and only the optimized third
    /// harmonic.
    pub controls: Vec<ControlSummary>,
}

/// Bands at fixed delta for a drive over the report axis.
pub fn report_bands(drive: &FourierDrive, amplitude: f64) -> CliResult<BandDiagram> {
    let axis = linspace(REPORT_BAND_RANGE[0], REPORT_BAND_RANGE[1], REPORT_BAND_POINTS);
    Ok(band_diagram(REPORT_DELTA, &axis, drive, amplitude)?)
}

/// Integrated spectrum over the full figure window.
pub fn report_spectrum(drive: &FourierDrive, amplitude: f64) -> CliResult<(ProbabilityMap, Vec<SpectrumPoint>)> {
    let (r, (ne, nd)) = (REPORT_SPECTRUM_RANGE, REPORT_SPECTRUM_GRID);
    let grid = Grid2D::uniform((r[0], r[1]), ne, (r[0], r[1]), nd)?;
    let map = map_with_progress(&grid, drive, amplitude, None)?;
    let spectrum = integrated_spectrum(&map)?;
    Ok((map, spectrum))
}

/// Single-harmonic controls for an optimized drive.
pub fn controls(optimized: &FourierDrive, optimized_objective: f64, bounds: &Bounds, amplitude: f64, domain: &ObjectiveDomain) -> CliResult<Vec<ControlSummary>> {
    let mut drives = vec![baseline_drive(bounds)?];
    if optimized.coefficients().len() >= 3 {
        drives.push(FourierDrive::new(vec![0.0, 0.0, optimized.coefficient(3)])?);
    }
    drives
        .into_iter()
        .map(|d| {
            let value = objective(&d, amplitude, domain)?;
            let ratio = value / optimized_objective;
            Ok(ControlSummary { drive: d.coefficients().to_vec(), objective: value, ratio_to_optimized: ratio, suppresses: ratio < CONTROL_RATIO })
        })
        .collect()
}

fn write_report(
    dir: &Path,
    result: &OptimizationResult,
    bounds: &Bounds,
    amplitude: f64,
    domain: &ObjectiveDomain,
    baseline_objective: f64,
) -> CliResult<OptimizationReport> {
    let best = result.best.to_drive()?;
    let base = baseline_drive(bounds)?;
    eprintln!("report: band diagrams at delta = {REPORT_DELTA}");
    let bands_best = report_bands(&best, amplitude)?;
    let bands_base = report_bands(&base, amplitude)?;
    write_band_csv(&bands_best, &dir.join("bands_optimized.csv"))?;
    write_band_csv(&bands_base, &dir.join("bands_baseline.csv"))?;
    eprintln!("report: integrated spectra");
    let (map_best, spec_best) = report_spectrum(&best, amplitude)?;
    write_map_csv(&map_best, &dir.join("map_optimized.csv"))?;
    write_spectrum_csv(&spec_best, &map_best, &dir.join("spectrum_optimized.csv"))?;
    let (map_base, spec_base) = report_spectrum(&base, amplitude)?;
    write_map_csv(&map_base, &dir.join("map_baseline.csv"))?;
    write_spectrum_csv(&spec_base, &map_base, &dir.join("spectrum_baseline.csv"))?;
    eprintln!("report: single-harmonic controls");
    let controls = controls(&best, result.objective, bounds, amplitude, domain)?;
    let gap = domain.eps0_range;
    let (g_best, g_base) = (bands_best.min_gap(gap[0], gap[1]), bands_base.min_gap(gap[0], gap[1]));
    let report = OptimizationReport {
        schema_version: SCHEMA_VERSION,
        kind: "optimization_report",
        amplitude,
        optimized: best.coefficients().to_vec(),
        objective: result.objective,
        baseline: base.coefficients().to_vec(),
        baseline_objective,
        band_delta: REPORT_DELTA,
        gap_range: gap,
        min_gap_optimized: g_best,
        min_gap_baseline: g_base,
        gap_closes: matches!((g_best, g_base), (Some(a), Some(b)) if a < b),
        spectrum_dip_optimized: dip_at(&spec_best, 5.0),
        spectrum_dip_baseline: dip_at(&spec_base, 5.0),
        controls,
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}

/// Everything an optimization run produced.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub result: OptimizationResult,
    pub baseline_objective: f64,
    pub report: Option<OptimizationReport>,
}

pub fn run_optimize(a: &OptimizeArgs) -> CliResult<OptimizeOutcome> {
    let n = field(&a.variables, "variables")?;
    let bounds = match &a.bounds {
        Some(b) => b.clone(),
        None => Bounds::alternating(n)?,
    };
    if bounds.len() != n {
        return Err(CliError::config(format!("bounds have {} entries but variables = {n}", bounds.len())));
    }
    let config = IslandConfig {
        islands: field(&a.islands, "islands")?,
        population: field(&a.population, "population")?,
        generations: field(&a.generations, "generations")?,
        f: field(&a.f, "f")?,
        cr: field(&a.cr, "cr")?,
        migration_interval: field(&a.migration_interval, "migration_interval")?,
        topology: Topology::Ring,
        seed: field(&a.seed, "seed")?,
    };
    config.validate()?;
    bounds.validate()?;
    let domain = ObjectiveDomain::new(
        field(&a.eps0_range, "eps0_range")?.0,
        field(&a.delta_range, "delta_range")?.0,
        field(&a.eps0_points, "eps0_points")?,
        field(&a.delta_points, "delta_points")?,
    )?;
    let amplitude = field(&a.amplitude, "amplitude")?;
    let dir = field(&a.out, "out")?;

    let start = Instant::now();
    let generations = config.generations;
    let result = optimize(&config, &bounds, &domain, amplitude, |g, best| {
        eprintln!("generation {g}/{generations} best {best:.6} ({:.0} s)", start.elapsed().as_secs_f64());
    })?;
    let baseline_objective = objective(&baseline_drive(&bounds)?, amplitude, &domain)?;
    let wall = start.elapsed().as_secs_f64();

    write_manifest(&dir.join("manifest.json"), &config, &bounds, &domain, amplitude, &result)?;
    write_result(&dir.join("result.json"), &result, baseline_objective, wall)?;
    write_history(&dir.join("history.csv"), &result, &config, &bounds, &domain, amplitude)?;
    eprintln!(
        "best {:.6} baseline {:.6} ratio {:.4} ({} evaluations, {} cache hits, {wall:.0} s)",
        result.objective,
        baseline_objective,
        result.objective / baseline_objective,
        result.evaluations,
        result.cache_hits
    );
    let report = if a.report == Some(true) {
        Some(write_report(&dir, &result, &bounds, amplitude, &domain, baseline_objective)?)
    } else {
        None
    };
    Ok(OptimizeOutcome { result, baseline_objective, report })
}

fn write_history(
    path: &Path,
    result: &OptimizationResult,
    config: &IslandConfig,
    bounds: &Bounds,
    domain: &ObjectiveDomain,
    amplitude: f64,
) -> CliResult<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "generation,best_objective")?;
    for (g, v) in result.history.iter().enumerate() {
        writeln!(out, "{g},{v}")?;
    }
    out.flush()?;
    write_json(
        &sidecar_path(path),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "artifact": "floqopt",
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "kind": "optimization_history",
            "data_file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "config": config,
            "bounds": bounds,
            "domain": domain,
            "amplitude": amplitude,
        }),
    )
}

pub fn verify(a: &VerifyArgs) -> CliResult<VerifyReport> {
    let oracle = if a.oracle == Some(true) {
        eprintln!("verify: oracle equivalence");
        Some(oracle_suite(
            field(&a.points, "points")?,
            field(&a.seed, "seed")?,
            field(&a.phases, "phases")?,
            field(&a.periods, "periods")?,
            field(&a.samples_per_period, "samples_per_period")?,
        )?)
    } else {
        None
    };
    let analytic = if a.analytic == Some(true) {
        eprintln!("verify: analytic limit");
        Some(analytic_suite()?)
    } else {
        None
    };
    let null = if a.null == Some(true) {
        eprintln!("verify: null cases");
        Some(null_suite()?)
    } else {
        None
    };
    let report = VerifyReport::new(oracle, analytic, null);
    let out = field(&a.out, "out")?;
    write_json(&out, &report)?;
    eprintln!("wrote {}", out.display());
    let failures = report.failures();
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Verification(failures.join("; ")))
    }
}
