// SPDX-License-Identifier: Apache-2.0

//! Island-model differential evolution over odd-harmonic drive
//! coefficients.
//!
//! Each island owns a ChaCha stream derived from the master seed and its
//! index. Trial vectors are drawn sequentially per island, evaluated
//! concurrently, and selected in index order, so a run is bit-reproducible
//! for any thread count.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::drive::FourierDrive;
use crate::error::{Error, Result};
use crate::scan::{objective, ObjectiveDomain};

/// Lower bound of the fundamental coefficient in the default bounds.
pub const B1_MIN: f64 = 0.66;
/// Stream reserved for migration draws.
const MIGRATION_STREAM: u64 = u64::MAX;

/// Odd-harmonic amplitudes `X_n = b_{2n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionVector(pub Vec<f64>);

impl DecisionVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drive with `b_{2n-1} = X_n` and zero even harmonics.
    pub fn to_drive(&self) -> Result<FourierDrive> {
        if self.0.is_empty() {
            return Err(Error::invalid("decision vector is empty"));
        }
        let mut b = vec![0.0; 2 * self.0.len() - 1];
        for (n, x) in self.0.iter().enumerate() {
            b[2 * n] = *x;
        }
        FourierDrive::new(b)
    }
}

/// Per-variable box constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    /// Checks `lo <= hi`, finiteness, and the sign pattern
    /// `sign(X_n) = (-1)^(n-1)` with `X_1 > 0`.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// `X_1 in [0.66, 1]`, then magnitudes in `[0, 1]` with alternating
    /// signs.
    pub fn alternating(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one variable"));
        }
        let (lo, hi) = (0..n)
            .map(|i| match i {
                0 => (B1_MIN, 1.0),
                _ if i % 2 == 1 => (-1.0, 0.0),
                _ => (0.0, 1.0),
            })
            .unzip();
        Self::new(lo, hi)
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::invalid("bounds need equal, non-zero lengths"));
        }
        for (n, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("bounds for X_{} invalid: [{lo}, {hi}]", n + 1)));
            }
            let positive = n % 2 == 0;
            if (positive && lo < 0.0) || (!positive && hi > 0.0) {
                return Err(Error::invalid(format!(
                    "bounds for X_{} break the alternating sign pattern: [{lo}, {hi}]",
                    n + 1
                )));
            }
        }
        if self.hi[0] <= 0.0 {
            return Err(Error::invalid("X_1 must be allowed to be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
            .collect()
    }
}

/// Drive for a decision vector that must lie within `bounds`.
pub fn decode(x: &DecisionVector, bounds: &Bounds) -> Result<FourierDrive> {
    if !bounds.contains(&x.0) {
        return Err(Error::invalid(format!("decision vector {:?} outside bounds", x.0)));
    }
    x.to_drive()
}

/// Ring is the only topology: island `k` sends to island `k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    #[default]
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IslandConfig {
    pub islands: usize,
    pub population: usize,
    pub generations: usize,
    pub f: f64,
    pub cr: f64,
    pub migration_interval: usize,
    pub topology: Topology,
    pub seed: u64,
}

impl Default for IslandConfig {
    fn default() -> Self {
        Self {
            islands: 4,
            population: 16,
            generations: 30,
            f: 0.8,
            cr: 0.9,
            migration_interval: 1,
            topology: Topology::Ring,
            seed: 20_240_917,
        }
    }
}

impl IslandConfig {
    /// 4 islands x 16 individuals x 30 generations.
    pub fn desk() -> Self {
        Self::default()
    }

    /// 48 islands x 10 individuals x 20 generations.
    pub fn fig2() -> Self {
        Self { islands: 48, population: 10, generations: 20, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.islands == 0 {
            return Err(Error::invalid("island count must be >= 1"));
        }
        if self.population < 5 {
            return Err(Error::invalid("population size must be >= 5"));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::invalid(format!("F must lie in (0, 2], got {}", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::invalid(format!("CR must lie in [0, 1], got {}", self.cr)));
        }
        if self.migration_interval == 0 {
            return Err(Error::invalid("migration interval must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub value: f64,
}

/// One island's individuals with their objective values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
    pub seed: u64,
}

impl Population {
    /// Index of the lowest value; ties go to the lower index.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, m) in self.members.iter().enumerate() {
            if m.value < self.members[best].value {
                best = i;
            }
        }
        best
    }

    pub fn best(&self) -> &Individual {
        &self.members[self.best_index()]
    }
}

/// Random number stream of island `index`.
pub fn island_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// DE/rand/1/bin trial vectors for every member, clipped to `bounds`.
pub fn propose_trials(pop: &Population, bounds: &Bounds, f: f64, cr: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let np = pop.members.len();
    let dim = bounds.len();
    (0..np)
        .map(|i| {
            let mut pick = |taken: &[usize]| loop {
                let r = rng.gen_range(0..np);
                if r != i && !taken.contains(&r) {
                    break r;
                }
            };
            let r1 = pick(&[]);
            let r2 = pick(&[r1]);
            let r3 = pick(&[r1, r2]);
            let forced = rng.gen_range(0..dim);
            let (a, b, c) = (&pop.members[r1].x, &pop.members[r2].x, &pop.members[r3].x);
            let mut trial: Vec<f64> = (0..dim)
                .map(|j| {
                    let cross = rng.gen::<f64>() < cr;
                    if cross || j == forced {
                        a[j] + f * (b[j] - c[j])
                    } else {
                        pop.members[i].x[j]
                    }
                })
                .collect();
            bounds.clip(&mut trial);
            trial
        })
        .collect()
}

/// Greedy replacement in index order: a trial wins only if strictly lower.
pub fn select(pop: &mut Population, trials: Vec<Vec<f64>>, values: &[f64]) {
    for ((member, x), &value) in pop.members.iter_mut().zip(trials).zip(values) {
        if value < member.value {
            *member = Individual { x, value };
        }
    }
    pop.generation += 1;
}

fn evaluate_all<O>(objective: &O, vectors: &[Vec<f64>]) -> Result<Vec<f64>>
where
    O: Fn(&[f64]) -> Result<f64> + Sync,
{
    vectors
        .par_iter()
        .map(|x| {
            objective(x).and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NoConvergence(format!("non-finite objective {v}")))
                }
            })
            .map_err(|e| Error::AtVector { vector: x.clone(), source: Box::new(e) })
        })
        .collect()
}

/// One DE/rand/1/bin generation of a single island.
pub fn de_generation<O>(
    pop: &Population,
    bounds: &Bounds,
    f: f64,
    cr: f64,
    rng: &mut ChaCha8Rng,
    objective: &O,
) -> Result<Population>
where
    O: Fn(&[f64]) -> Result<f64> + Sync,
{
    if pop.members.len() < 5 {
        return Err(Error::invalid("population size must be >= 5"));
    }
    if !(0.0..=2.0).contains(&f) || !(0.0..=1.0).contains(&cr) {
        return Err(Error::invalid(format!("invalid DE parameters F = {f}, CR = {cr}")));
    }
    let trials = propose_trials(pop, bounds, f, cr, rng);
    let values = evaluate_all(objective, &trials)?;
    let mut next = pop.clone();
    select(&mut next, trials, &values);
    Ok(next)
}

/// Ring migration: each island's best goes to its successor and replaces a
/// uniformly chosen non-best member there if strictly better.
pub fn migrate(islands: &mut [Population], rng: &mut ChaCha8Rng) {
    let n = islands.len();
    if n < 2 {
        return;
    }
    let migrants: Vec<Individual> = islands.iter().map(|p| p.best().clone()).collect();
    for (k, migrant) in migrants.into_iter().enumerate() {
        let dest = &mut islands[(k + 1) % n];
        let best = dest.best_index();
        let size = dest.members.len();
        if size < 2 {
            continue;
        }
        let mut slot = rng.gen_range(0..size - 1);
        if slot >= best {
            slot += 1;
        }
        if migrant.value < dest.members[slot].value {
            dest.members[slot] = migrant;
        }
    }
}

/// Objective wrapper that caches values by the exact bit pattern of the
/// decision vector.
pub struct Memoized<O> {
    inner: O,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
    evaluations: AtomicUsize,
    hits: AtomicUsize,
}

impl<O> Memoized<O>
where
    O: Fn(&[f64]) -> Result<f64> + Sync,
{
    pub fn new(inner: O) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()), evaluations: AtomicUsize::new(0), hits: AtomicUsize::new(0) }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*v);
        }
        let v = (self.inner)(x)?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

/// Outcome of an island-model run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best: DecisionVector,
    pub objective: f64,
    /// Global best value after initialization and after each generation.
    pub history: Vec<f64>,
    /// Global best vector at the same points as `history`.
    pub best_per_generation: Vec<Vec<f64>>,
    pub evaluations: usize,
    pub cache_hits: usize,
}

fn global_best(islands: &[Population]) -> Individual {
    let mut best = islands[0].best();
    for p in &islands[1..] {
        let b = p.best();
        if b.value < best.value {
            best = b;
        }
    }
    best.clone()
}

/// Island-model DE on an arbitrary objective.
///
/// `progress` is called with the generation number (0 for the initial
/// populations) and the global best value.
pub fn optimize_with<O>(
    config: &IslandConfig,
    bounds: &Bounds,
    objective: O,
    mut progress: impl FnMut(usize, f64),
) -> Result<OptimizationResult>
where
    O: Fn(&[f64]) -> Result<f64> + Sync,
{
    config.validate()?;
    bounds.validate()?;
    let memo = Memoized::new(objective);
    let eval = |x: &[f64]| memo.evaluate(x);

    let mut rngs: Vec<ChaCha8Rng> = (0..config.islands as u64).map(|k| island_rng(config.seed, k)).collect();
    let mut migration_rng = island_rng(config.seed, MIGRATION_STREAM);

    let initial: Vec<Vec<Vec<f64>>> = rngs
        .iter_mut()
        .map(|rng| (0..config.population).map(|_| bounds.sample(rng)).collect())
        .collect();
    let flat: Vec<Vec<f64>> = initial.iter().flatten().cloned().collect();
    let values = evaluate_all(&eval, &flat)?;
    let mut islands: Vec<Population> = initial
        .into_iter()
        .enumerate()
        .map(|(k, xs)| Population {
            members: xs
                .into_iter()
                .enumerate()
                .map(|(i, x)| Individual { x, value: values[k * config.population + i] })
                .collect(),
            generation: 0,
            seed: config.seed,
        })
        .collect();

    let mut history = Vec::with_capacity(config.generations + 1);
    let mut best_per_generation = Vec::with_capacity(config.generations + 1);
    let best = global_best(&islands);
    progress(0, best.value);
    history.push(best.value);
    best_per_generation.push(best.x);

    for generation in 1..=config.generations {
        let trials: Vec<Vec<Vec<f64>>> = islands
            .iter()
            .zip(rngs.iter_mut())
            .map(|(pop, rng)| propose_trials(pop, bounds, config.f, config.cr, rng))
            .collect();
        let flat: Vec<Vec<f64>> = trials.iter().flatten().cloned().collect();
        let values = evaluate_all(&eval, &flat)?;
        for (k, (pop, t)) in islands.iter_mut().zip(trials).enumerate() {
            let offset = k * config.population;
            select(pop, t, &values[offset..offset + config.population]);
        }
        if generation % config.migration_interval == 0 {
            migrate(&mut islands, &mut migration_rng);
        }
        let best = global_best(&islands);
        progress(generation, best.value);
        history.push(best.value);
        best_per_generation.push(best.x);
    }

    let best = global_best(&islands);
    Ok(OptimizationResult {
        best: DecisionVector(best.x),
        objective: best.value,
        history,
        best_per_generation,
        evaluations: memo.evaluations(),
        cache_hits: memo.hits(),
    })
}

/// Minimize the cumulative transition probability over `domain`.
pub fn optimize(
    config: &IslandConfig,
    bounds: &Bounds,
    domain: &ObjectiveDomain,
    amplitude: f64,
    progress: impl FnMut(usize, f64),
) -> Result<OptimizationResult> {
    domain.validate()?;
    let eval = |x: &[f64]| objective(&DecisionVector(x.to_vec()).to_drive()?, amplitude, domain);
    optimize_with(config, bounds, eval, progress)
}

/// Monochromatic reference drive at the lower bound of the fundamental.
pub fn baseline_drive(bounds: &Bounds) -> Result<FourierDrive> {
    FourierDrive::new(vec![bounds.lo[0]])
}

/// Run manifest: configuration and the best vector of every generation.
pub fn write_manifest(
    path: &Path,
    config: &IslandConfig,
    bounds: &Bounds,
    domain: &ObjectiveDomain,
    amplitude: f64,
    result: &OptimizationResult,
) -> Result<()> {
    let body = json!({
        "schema_version": crate::scan::SCHEMA_VERSION,
        "artifact": "floqopt",
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "kind": "optimization_manifest",
        "config": config,
        "seed": config.seed,
        "bounds": bounds,
        "domain": domain,
        "amplitude": amplitude,
        "history": result.history,
        "best_per_generation": result.best_per_generation,
    });
    write_json(path, &body)
}

/// Final result: best coefficients, objective, baseline and wall time.
pub fn write_result(
    path: &Path,
    result: &OptimizationResult,
    baseline_objective: f64,
    wall_time_seconds: f64,
) -> Result<()> {
    let drive = result.best.to_drive()?;
    let body = json!({
        "schema_version": crate::scan::SCHEMA_VERSION,
        "artifact": "floqopt",
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "kind": "optimization_result",
        "decision_vector": result.best,
        "coefficients": drive.coefficients(),
        "objective": result.objective,
        "baseline_objective": baseline_objective,
        "ratio_to_baseline": result.objective / baseline_objective,
        "evaluations": result.evaluations,
        "cache_hits": result.cache_hits,
        "wall_time_seconds": wall_time_seconds,
    });
    write_json(path, &body)
}

fn write_json(path: &Path, body: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(body)? + "\n")?;
    Ok(())
}
