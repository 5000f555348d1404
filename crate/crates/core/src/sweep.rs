//! Many-sample experiments: generate, elaborate, score, place and simulate.
//!
//! Sample `i` of every generator uses seed `derive_seed(master, i)`, so the
//! generators are compared on matched seeds. Work fans out over a rayon pool
//! and results are gathered in (generator, sample, units) order, which makes
//! the output independent of the worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::archmodel::{elaborate, ArchSpec, StagingConfig};
use crate::dagify::orient;
use crate::deploy::{balance_entropy, group_chains, place_greedy, simulate, SimOptions, Workload};
use crate::error::{Error, Result};
use crate::randgraph::{generate, GeneratorConfig, GeneratorKind};
use crate::rng::derive_seed;
use crate::score::{concurrency_score, ScoreWeights, DEFAULT_EPSILON_GRID};

/// Generate, orient and elaborate one architecture. The seed drives both the
/// generator and the staging coins.
pub fn sample_architecture(template: &GeneratorConfig, seed: u64, staging: &StagingConfig) -> Result<ArchSpec> {
    let cfg = GeneratorConfig { seed, ..template.clone() };
    let dag = orient(&generate(&cfg)?)?;
    elaborate(&dag, staging, seed)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// One template per generator; `seed` is replaced per sample.
    pub generators: Vec<GeneratorConfig>,
    pub units: Vec<usize>,
    pub samples: usize,
    pub master_seed: u64,
    pub staging: StagingConfig,
    pub eps_grid: Vec<f64>,
    pub weights: ScoreWeights,
    pub sim: SimOptions,
    /// Gather the output on an extra unit instead of unit 0.
    pub dedicated_merge: bool,
}

impl SweepConfig {
    /// Preset generators of `kinds` at `n` vertices, default everything else.
    pub fn presets(kinds: &[GeneratorKind], n: usize, samples: usize, master_seed: u64) -> Self {
        SweepConfig {
            generators: kinds.iter().map(|&k| GeneratorConfig::preset(k, n, 0)).collect(),
            units: vec![4, 6, 8, 10],
            samples,
            master_seed,
            staging: StagingConfig::default(),
            eps_grid: DEFAULT_EPSILON_GRID.to_vec(),
            weights: ScoreWeights::default(),
            sim: SimOptions::default(),
            dedicated_merge: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.generators.is_empty() || self.units.is_empty() || self.samples == 0 {
            return Err(Error::config("a sweep needs generators, unit counts and at least one sample"));
        }
        if self.units.contains(&0) {
            return Err(Error::config("unit counts must be positive"));
        }
        for g in &self.generators {
            g.validate()?;
        }
        self.staging.validate()?;
        self.weights.validate()?;
        self.sim.cost.validate()
    }
}

/// One (sample, unit count) measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub generator: String,
    pub sample: usize,
    pub seed: u64,
    pub n_vertices: usize,
    pub n_units: usize,
    pub cs: f64,
    pub delta_w: f64,
    pub lambda_mb: f64,
    pub lambda_prime: f64,
    pub eta: f64,
    pub best_effort: bool,
    pub latency: f64,
    pub speedup: f64,
    /// Empty for a single unit.
    pub entropy: Option<f64>,
    pub total_params: u64,
    pub total_flops: u64,
}

/// Scores and simulates one architecture at every unit count.
pub fn measure(spec: &ArchSpec, label: (&str, usize, u64, usize), cfg: &SweepConfig) -> Result<Vec<SampleRow>> {
    let (generator, sample, seed, n_vertices) = label;
    let w = Workload::from(spec);
    let groups = group_chains(&w);
    let mut rows = Vec::with_capacity(cfg.units.len());
    for &n in &cfg.units {
        let report = concurrency_score(spec, n, &cfg.eps_grid, &cfg.weights, seed)?;
        let best = report.best_record();
        let placement = place_greedy(&groups, n, cfg.dedicated_merge)?;
        let sim = simulate(&w, &groups, &placement, &cfg.sim)?;
        rows.push(SampleRow {
            generator: generator.to_string(),
            sample,
            seed,
            n_vertices,
            n_units: n,
            cs: best.cs,
            delta_w: best.delta_w,
            lambda_mb: best.lambda_bytes as f64 / 1e6,
            lambda_prime: best.lambda_prime,
            eta: best.eta,
            best_effort: best.best_effort,
            latency: sim.makespan(),
            speedup: sim.speedup(),
            entropy: if n >= 2 { Some(balance_entropy(&placement, &groups)?) } else { None },
            total_params: spec.total_params(),
            total_flops: spec.total_flops(),
        });
    }
    Ok(rows)
}

/// Runs the sweep on `jobs` worker threads (0 = rayon default).
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<Vec<SampleRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let tasks: Vec<(usize, usize)> = (0..cfg.generators.len())
        .flat_map(|g| (0..cfg.samples).map(move |i| (g, i)))
        .collect();
    let chunks: Vec<Result<Vec<SampleRow>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, i)| {
                let template = &cfg.generators[g];
                let seed = derive_seed(cfg.master_seed, i as u64);
                let spec = sample_architecture(template, seed, &cfg.staging)?;
                measure(&spec, (template.kind.name(), i, seed, template.n), cfg)
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(tasks.len() * cfg.units.len());
    for chunk in chunks {
        rows.extend(chunk?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub generator: String,
    pub n_units: usize,
    pub metric: &'static str,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Linear-interpolation quantile of sorted data (`q` in [0, 1]).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Latency of every row divided by the FB mean latency at the same unit
/// count. Falls back to the first generator in `rows` when FB is absent.
pub fn normalized_latency(rows: &[SampleRow]) -> Vec<f64> {
    let reference = if rows.iter().any(|r| r.generator == GeneratorKind::Fb.name()) {
        GeneratorKind::Fb.name().to_string()
    } else {
        rows.first().map(|r| r.generator.clone()).unwrap_or_default()
    };
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.generator == reference) {
        let e = sums.entry(r.n_units).or_default();
        e.0 += r.latency;
        e.1 += 1;
    }
    rows.iter()
        .map(|r| match sums.get(&r.n_units) {
            Some(&(sum, count)) => r.latency / (sum / count as f64),
            None => f64::NAN,
        })
        .collect()
}

pub const SUMMARY_METRICS: [&str; 7] = ["cs", "lambda_mb", "latency_norm", "speedup", "total_params", "entropy", "eta"];

/// Mean, median and quartiles of each metric per (generator, unit count),
/// in first-appearance order.
pub fn summarize(rows: &[SampleRow]) -> Vec<SummaryRow> {
    let norm = normalized_latency(rows);
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let k = (r.generator.clone(), r.n_units);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (generator, n_units) in keys {
        let idx: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].generator == generator && rows[i].n_units == n_units)
            .collect();
        for metric in SUMMARY_METRICS {
            let mut xs: Vec<f64> = idx
                .iter()
                .filter_map(|&i| {
                    let r = &rows[i];
                    match metric {
                        "cs" => Some(r.cs),
                        "lambda_mb" => Some(r.lambda_mb),
                        "latency_norm" => Some(norm[i]),
                        "speedup" => Some(r.speedup),
                        "total_params" => Some(r.total_params as f64),
                        "entropy" => r.entropy,
                        "eta" => Some(r.eta),
                        _ => unreachable!("metric list is fixed"),
                    }
                })
                .collect();
            if xs.is_empty() {
                continue;
            }
            let m = mean(&xs);
            xs.sort_by(f64::total_cmp);
            out.push(SummaryRow {
                generator: generator.clone(),
                n_units,
                metric,
                mean: m,
                median: quantile(&xs, 0.5),
                q1: quantile(&xs, 0.25),
                q3: quantile(&xs, 0.75),
            });
        }
    }
    out
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::invariant(format!("CSV serialization failed: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invariant(format!("CSV flush failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 0.25), 1.75);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn tiny_sweep_shape_and_determinism() {
        let mut cfg = SweepConfig::presets(&[GeneratorKind::Dp, GeneratorKind::Fb], 16, 2, 7);
        cfg.units = vec![1, 4];
        let a = run_sweep(&cfg, 1).unwrap();
        assert_eq!(a.len(), 2 * 2 * 2);
        assert_eq!(a[0].entropy, None);
        assert!(a[1].entropy.is_some());
        let b = run_sweep(&cfg, 2).unwrap();
        assert_eq!(to_csv(&a).unwrap(), to_csv(&b).unwrap());
        let s = summarize(&a);
        let fb_norm = s
            .iter()
            .find(|r| r.generator == "fb" && r.n_units == 4 && r.metric == "latency_norm")
            .unwrap();
        assert!((fb_norm.mean - 1.0).abs() < 1e-12);
    }
}
