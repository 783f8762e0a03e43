// SPDX-License-Identifier: Apache-2.0

//! Command-line and JSON configuration.
//!
//! Every subcommand has one argument struct that doubles as the schema of its
//! JSON config file. Values resolve as defaults < preset < config file <
//! flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "FLOQOPT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "floqopt", version, about = "Floquet transition maps and drive optimization for a driven two-level system")]
pub struct Cli {
    /// Worker threads; falls back to FLOQOPT_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// JSON file with subcommand parameters. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition-probability map over (eps0, delta).
    Scan(ScanArgs),
    /// Folded quasi-energy bands at fixed delta.
    Bands(BandsArgs),
    /// Delta-integrated transition spectrum.
    Spectrum(SpectrumArgs),
    /// Island-model differential evolution over drive harmonics.
    Optimize(OptimizeArgs),
    /// Oracle, analytic-limit and null-case checks.
    Verify(VerifyArgs),
}

/// Closed interval written `lo,hi` on the command line or `[lo, hi]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range(pub [f64; 2]);

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Range(v)
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        r.0
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
        let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        Ok(Range([p(a)?, p(b)?]))
    }
}

/// Grid size written `NxM`: `N` bias points by `M` tunneling points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSize {
    pub eps0: usize,
    pub delta: usize,
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once('x').ok_or_else(|| format!("expected `NxM`, got `{s}`"))?;
        let p = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a point count"));
        Ok(GridSize { eps0: p(a)?, delta: p(b)? })
    }
}

impl TryFrom<String> for GridSize {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSize> for String {
    fn from(g: GridSize) -> Self {
        g.to_string()
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.eps0, self.delta)
    }
}

/// Fill every `None` field of `$hi` from `$lo`.
macro_rules! overlay {
    ($hi:expr, $lo:expr; $($field:ident),+ $(,)?) => {
        $( if $hi.$field.is_none() { $hi.$field = $lo.$field.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanArgs {
    /// Drive spec: mono, mono:B, triangle:M, coeffs:..., x:..., result:PATH.
    #[arg(long)]
    pub drive: Option<String>,
    /// Drive amplitude A in units of the drive frequency.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub eps0_range: Option<Range>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub delta_range: Option<Range>,
    /// Points along eps0 and delta, e.g. 201x201.
    #[arg(long, value_name = "NxM")]
    pub grid: Option<GridSize>,
    /// Photon cutoff; chosen from the drive and grid when absent.
    #[arg(long)]
    pub n_ph: Option<usize>,
    /// Output CSV; the sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub threads: Option<usize>,
    /// Monochromatic drive at A = 6 on a 201x201 grid.
    #[arg(long, conflicts_with = "paper_fig1b")]
    #[serde(skip)]
    pub paper_fig1a: bool,
    /// Triangle drive with 15 harmonics at A = 6 on a 201x201 grid.
    #[arg(long)]
    #[serde(skip)]
    pub paper_fig1b: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsArgs {
    #[arg(long)]
    pub drive: Option<String>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Tunneling amplitude delta.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub eps0_range: Option<Range>,
    #[arg(long)]
    pub eps0_points: Option<usize>,
    /// Bias window for the minimum-gap summary.
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub gap_range: Option<Range>,
    /// Second drive whose minimum gap is reported alongside.
    #[arg(long)]
    pub compare: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    /// Integrate an existing map CSV (with its sidecar) instead of scanning.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub drive: Option<String>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub eps0_range: Option<Range>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub delta_range: Option<Range>,
    #[arg(long, value_name = "NxM")]
    pub grid: Option<GridSize>,
    #[arg(long)]
    pub n_ph: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeArgs {
    /// Number of optimized odd harmonics N.
    #[arg(long)]
    pub variables: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub eps0_range: Option<Range>,
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    pub delta_range: Option<Range>,
    #[arg(long)]
    pub eps0_points: Option<usize>,
    #[arg(long)]
    pub delta_points: Option<usize>,
    #[arg(long)]
    pub islands: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    /// Differential weight F.
    #[arg(long)]
    pub f: Option<f64>,
    /// Crossover rate CR.
    #[arg(long)]
    pub cr: Option<f64>,
    #[arg(long)]
    pub migration_interval: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Explicit bounds; config file only.
    #[arg(skip)]
    pub bounds: Option<floqopt::optimizer::Bounds>,
    /// After the run, compute bands, integrated spectrum and controls.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub report: Option<bool>,
    /// Output directory for manifest, history, result and report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub threads: Option<usize>,
    /// N = 5, 4 islands x 16 x 30 generations, fixed seed.
    #[arg(long, conflicts_with = "paper_fig2")]
    #[serde(skip)]
    pub desk: bool,
    /// N = 10, A = 9, 48 islands x 10 x 20 generations.
    #[arg(long)]
    #[serde(skip)]
    pub paper_fig2: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// Run the oracle-equivalence suite.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub oracle: Option<bool>,
    /// Run the analytic-limit suite.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub analytic: Option<bool>,
    /// Run the null-case suite.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub null: Option<bool>,
    /// Random points in the oracle suite.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drive phases averaged by the oracle.
    #[arg(long)]
    pub phases: Option<usize>,
    /// Periods averaged by the oracle.
    #[arg(long)]
    pub periods: Option<usize>,
    #[arg(long)]
    pub samples_per_period: Option<usize>,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub threads: Option<usize>,
}

fn read_config<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("config {}: {e}", path.display())))
}

fn default_out(name: &str) -> Option<PathBuf> {
    Some(PathBuf::from("out").join(name))
}

impl ScanArgs {
    pub fn resolve(mut self, config: Option<&Path>) -> CliResult<Self> {
        let file: Self = read_config(config)?;
        overlay!(self, file; drive, amplitude, eps0_range, delta_range, grid, n_ph, out, threads);
        let preset = match (self.paper_fig1a, self.paper_fig1b) {
            (true, _) => Self { drive: Some("mono".into()), out: default_out("fig1a.csv"), ..Self::fig1() },
            (_, true) => Self { drive: Some("triangle:15".into()), out: default_out("fig1b.csv"), ..Self::fig1() },
            _ => Self::default(),
        };
        overlay!(self, preset; drive, amplitude, eps0_range, delta_range, grid, out);
        let defaults = Self { drive: Some("mono".into()), out: default_out("scan.csv"), ..Self::fig1() };
        overlay!(self, defaults; drive, amplitude, eps0_range, delta_range, grid, out);
        Ok(self)
    }

    fn fig1() -> Self {
        Self {
            amplitude: Some(6.0),
            eps0_range: Some(Range([0.0, 10.0])),
            delta_range: Some(Range([0.0, 10.0])),
            grid: Some(GridSize { eps0: 201, delta: 201 }),
            ..Self::default()
        }
    }
}

impl BandsArgs {
    pub fn resolve(mut self, config: Option<&Path>) -> CliResult<Self> {
        let file: Self = read_config(config)?;
        overlay!(self, file; drive, amplitude, delta, eps0_range, eps0_points, gap_range, compare, out, threads);
        let defaults = Self {
            drive: Some("mono".into()),
            amplitude: Some(9.0),
            delta: Some(4.0),
            eps0_range: Some(Range([4.0, 6.0])),
            eps0_points: Some(201),
            gap_range: Some(Range([4.8, 5.2])),
            out: default_out("bands.csv"),
            ..Self::default()
        };
        overlay!(self, defaults; drive, amplitude, delta, eps0_range, eps0_points, gap_range, out);
        Ok(self)
    }
}

impl SpectrumArgs {
    pub fn resolve(mut self, config: Option<&Path>) -> CliResult<Self> {
        let file: Self = read_config(config)?;
        overlay!(self, file; map, drive, amplitude, eps0_range, delta_range, grid, n_ph, out, threads);
        let defaults = Self {
            drive: Some("mono".into()),
            amplitude: Some(9.0),
            eps0_range: Some(Range([0.0, 10.0])),
            delta_range: Some(Range([0.0, 10.0])),
            grid: Some(GridSize { eps0: 201, delta: 101 }),
            out: default_out("spectrum.csv"),
            ..Self::default()
        };
        overlay!(self, defaults; drive, amplitude, eps0_range, delta_range, grid, out);
        Ok(self)
    }
}

impl OptimizeArgs {
    pub fn resolve(mut self, config: Option<&Path>) -> CliResult<Self> {
        let file: Self = read_config(config)?;
        overlay!(self, file; variables, amplitude, eps0_range, delta_range, eps0_points, delta_points,
            islands, population, generations, f, cr, migration_interval, seed, bounds, report, out, threads);
        let preset = if self.desk {
            Self { variables: Some(5), report: Some(true), out: default_out("desk"), ..Self::pinned(4, 16, 30) }
        } else if self.paper_fig2 {
            Self { variables: Some(10), report: Some(true), out: default_out("fig2"), ..Self::pinned(48, 10, 20) }
        } else {
            Self::default()
        };
        overlay!(self, preset; variables, amplitude, eps0_range, delta_range, eps0_points, delta_points,
            islands, population, generations, f, cr, migration_interval, seed, report, out);
        let defaults = Self { variables: Some(5), report: Some(false), out: default_out("optimize"), ..Self::pinned(4, 16, 30) };
        overlay!(self, defaults; variables, amplitude, eps0_range, delta_range, eps0_points, delta_points,
            islands, population, generations, f, cr, migration_interval, seed, report, out);
        Ok(self)
    }

    fn pinned(islands: usize, population: usize, generations: usize) -> Self {
        let de = floqopt::optimizer::IslandConfig::default();
        let domain = floqopt::scan::ObjectiveDomain::suppression_window();
        Self {
            amplitude: Some(9.0),
            eps0_range: Some(Range(domain.eps0_range)),
            delta_range: Some(Range(domain.delta_range)),
            eps0_points: Some(domain.eps0_points),
            delta_points: Some(domain.delta_points),
            islands: Some(islands),
            population: Some(population),
            generations: Some(generations),
            f: Some(de.f),
            cr: Some(de.cr),
            migration_interval: Some(de.migration_interval),
            seed: Some(de.seed),
            ..Self::default()
        }
    }
}

impl VerifyArgs {
    pub fn resolve(mut self, config: Option<&Path>) -> CliResult<Self> {
        let file: Self = read_config(config)?;
        overlay!(self, file; oracle, analytic, null, points, seed, phases, periods, samples_per_period, out, threads);
        if self.oracle.is_none() && self.analytic.is_none() && self.null.is_none() {
            (self.oracle, self.analytic, self.null) = (Some(true), Some(true), Some(true));
        }
        let defaults = Self {
            oracle: Some(false),
            analytic: Some(false),
            null: Some(false),
            points: Some(crate::verify::DEFAULT_POINTS),
            seed: Some(crate::verify::DEFAULT_SEED),
            phases: Some(crate::verify::DEFAULT_PHASES),
            periods: Some(crate::verify::DEFAULT_PERIODS),
            samples_per_period: Some(crate::verify::DEFAULT_SAMPLES_PER_PERIOD),
            out: default_out("verify.json"),
            ..Self::default()
        };
        overlay!(self, defaults; oracle, analytic, null, points, seed, phases, periods, samples_per_period, out);
        Ok(self)
    }
}

/// Thread count: flag, then config file, then the environment, then all cores.
pub fn thread_count(flag: Option<usize>, config: Option<usize>) -> CliResult<Option<usize>> {
    let n = match flag.or(config) {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim().parse::<usize>().map_err(|_| CliError::config(format!("{THREADS_ENV}=`{v}` is not a count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::config("threads must be >= 1"));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("floqopt").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grid_and_range_parse() {
        assert_eq!("2x3".parse::<GridSize>().unwrap(), GridSize { eps0: 2, delta: 3 });
        assert!("2by3".parse::<GridSize>().is_err());
        assert_eq!("-1,2.5".parse::<Range>().unwrap(), Range([-1.0, 2.5]));
        let g: GridSize = serde_json::from_str("\"5x7\"").unwrap();
        assert_eq!(g.to_string(), "5x7");
    }

    #[test]
    fn flags_override_config_override_preset() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"amplitude": 4.0, "grid": "11x11", "threads": 2}"#).unwrap();
        let Command::Scan(a) = parse(&["scan", "--paper-fig1b", "--grid", "3x3"]).command else { panic!() };
        let a = a.resolve(Some(&cfg)).unwrap();
        assert_eq!(a.grid, Some(GridSize { eps0: 3, delta: 3 }));
        assert_eq!(a.amplitude, Some(4.0));
        assert_eq!(a.drive.as_deref(), Some("triangle:15"));
        assert_eq!(a.threads, Some(2));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"amplitud": 4.0}"#).unwrap();
        let err = ScanArgs::default().resolve(Some(&cfg)).unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("amplitud")), "{err}");
        std::fs::write(&cfg, r#"{"paper_fig1a": true}"#).unwrap();
        assert!(ScanArgs::default().resolve(Some(&cfg)).is_err());
    }

    #[test]
    fn presets_pin_acceptance_parameters() {
        let Command::Optimize(a) = parse(&["optimize", "--paper-fig2"]).command else { panic!() };
        let a = a.resolve(None).unwrap();
        assert_eq!((a.variables, a.islands, a.population, a.generations), (Some(10), Some(48), Some(10), Some(20)));
        assert_eq!(a.amplitude, Some(9.0));
        let Command::Optimize(a) = parse(&["optimize", "--desk", "--generations", "0"]).command else { panic!() };
        let a = a.resolve(None).unwrap();
        assert_eq!((a.variables, a.islands, a.population, a.generations), (Some(5), Some(4), Some(16), Some(0)));
        let Command::Verify(v) = parse(&["verify", "--null"]).command else { panic!() };
        let v = v.resolve(None).unwrap();
        assert_eq!((v.oracle, v.analytic, v.null), (Some(false), Some(false), Some(true)));
    }
}
