//! Seeded trajectory simulation.
//!
//! Randomness comes from SplitMix64. Trial `i` draws from its own stream seeded
//! with `mix(master_seed ^ mix(i + 1))`, so a run is a pure function of the
//! configuration and does not depend on how trials are split across workers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, HitError, Result};
use crate::graph::TransitionKernel;
use crate::hitting::{make_absorbing, pmf};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream for trial `index` under `master_seed`.
    pub fn for_trial(master_seed: u64, index: u64) -> Self {
        SplitMix64::new(mix64(master_seed ^ mix64(index.wrapping_add(1))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;
/// Capped fraction above which a summary carries a warning.
pub const CAPPED_WARNING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub trials: u64,
    pub step_cap: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub retain_samples: bool,
}

impl SimConfig {
    pub fn new(trials: u64, master_seed: u64) -> Self {
        SimConfig {
            trials,
            step_cap: DEFAULT_STEP_CAP,
            master_seed,
            workers: 1,
            retain_samples: false,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn retaining_samples(mut self) -> Self {
        self.retain_samples = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.step_cap == 0 {
            return Err(invalid("step cap must be >= 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be >= 1"));
        }
        Ok(())
    }
}

/// Statistics cover completed trials only; capped trials are counted apart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub trials: u64,
    pub completed: u64,
    pub capped_count: u64,
    pub mean: f64,
    /// Unbiased; zero when fewer than two trials completed.
    pub variance: f64,
    pub min: u64,
    pub max: u64,
    pub empirical_pmf: BTreeMap<u64, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl SampleSummary {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.completed as f64).sqrt()
    }
}

/// Cumulative transition table, one row per node.
struct Sampler {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sampler {
    fn new(kernel: &TransitionKernel) -> Self {
        let m = kernel.matrix();
        let rows = (0..m.rows())
            .map(|i| {
                let mut acc = 0.0;
                let mut row: Vec<(usize, f64)> = m
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(k, &p)| {
                        acc += p;
                        (k, acc)
                    })
                    .collect();
                // Guard against rounding leaving u just above the last bound.
                if let Some(last) = row.last_mut() {
                    last.1 = f64::INFINITY;
                }
                row
            })
            .collect();
        Sampler { rows }
    }

    fn step(&self, from: usize, rng: &mut SplitMix64) -> usize {
        let u = rng.next_f64();
        let row = &self.rows[from];
        let k = row.partition_point(|&(_, c)| c <= u);
        row[k].0
    }

    /// Steps to hit `target`, or `None` once `cap` steps pass without it.
    fn trial(&self, start: usize, target: usize, cap: u64, rng: &mut SplitMix64) -> Option<u64> {
        let mut at = start;
        for n in 1..=cap {
            at = self.step(at, rng);
            if at == target {
                return Some(n);
            }
        }
        None
    }
}

#[derive(Default)]
struct Partial {
    histogram: BTreeMap<u64, u64>,
    capped: u64,
    samples: Vec<u64>,
}

/// Runs `config.trials` independent walks from `start` until they reach `target`.
pub fn simulate(
    kernel: &TransitionKernel,
    start: usize,
    target: usize,
    config: &SimConfig,
) -> Result<SampleSummary> {
    config.validate()?;
    let n = kernel.node_count();
    if start >= n || target >= n {
        return Err(invalid(format!("node out of range for {n} nodes")));
    }
    if start == target {
        return Err(invalid("start must differ from target"));
    }
    make_absorbing(kernel, target)?;
    let sampler = Sampler::new(kernel);
    let workers = config.workers.min(config.trials as usize).max(1);
    let chunk = config.trials.div_ceil(workers as u64);
    let run = |lo: u64, hi: u64| {
        let mut part = Partial::default();
        for i in lo..hi {
            let mut rng = SplitMix64::for_trial(config.master_seed, i);
            match sampler.trial(start, target, config.step_cap, &mut rng) {
                Some(steps) => {
                    *part.histogram.entry(steps).or_insert(0) += 1;
                    if config.retain_samples {
                        part.samples.push(steps);
                    }
                }
                None => part.capped += 1,
            }
        }
        part
    };
    let parts: Vec<Partial> = if workers == 1 {
        vec![run(0, config.trials)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|w| {
                    let lo = (w * chunk).min(config.trials);
                    let hi = ((w + 1) * chunk).min(config.trials);
                    s.spawn(move || run(lo, hi))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .collect()
        })
    };
    let mut histogram = BTreeMap::new();
    let mut capped = 0;
    let mut samples = Vec::new();
    for part in parts {
        for (k, c) in part.histogram {
            *histogram.entry(k).or_insert(0) += c;
        }
        capped += part.capped;
        samples.extend(part.samples);
    }
    summarize(config, histogram, capped, samples)
}

fn summarize(
    config: &SimConfig,
    histogram: BTreeMap<u64, u64>,
    capped: u64,
    samples: Vec<u64>,
) -> Result<SampleSummary> {
    let completed: u64 = histogram.values().sum();
    if completed == 0 {
        return Err(HitError::NumericalFailure(format!(
            "all {} trials reached the step cap {}",
            config.trials, config.step_cap
        )));
    }
    // Exact integer sums, so the statistics do not depend on merge order.
    let (mut s1, mut s2) = (0u128, 0u128);
    for (&k, &c) in &histogram {
        s1 += k as u128 * c as u128;
        s2 += (k as u128) * (k as u128) * c as u128;
    }
    let cnt = completed as u128;
    let mean = s1 as f64 / completed as f64;
    let variance = if completed > 1 {
        (cnt * s2 - s1 * s1) as f64 / (cnt * (cnt - 1)) as f64
    } else {
        0.0
    };
    let warning = (capped as f64 > CAPPED_WARNING_FRACTION * config.trials as f64).then(|| {
        format!(
            "{capped} of {} trials hit the step cap {}; statistics exclude them",
            config.trials, config.step_cap
        )
    });
    Ok(SampleSummary {
        trials: config.trials,
        completed,
        capped_count: capped,
        mean,
        variance,
        min: *histogram.keys().next().unwrap(),
        max: *histogram.keys().next_back().unwrap(),
        empirical_pmf: histogram,
        samples: config.retain_samples.then_some(samples),
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessBin {
    pub n: u64,
    pub observed: u64,
    pub expected: f64,
    /// `(observed - expected) / sqrt(trials p (1 - p))`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub trials: u64,
    pub horizon: usize,
    /// Bins with expected count at least 5.
    pub bins: Vec<GoodnessBin>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub max_abs_z: f64,
    pub summary: SampleSummary,
}

pub const MIN_EXPECTED_COUNT: f64 = 5.0;

/// Compares the empirical histogram against the exact law up to `horizon`.
pub fn empirical_vs_exact(
    kernel: &TransitionKernel,
    start: usize,
    target: usize,
    config: &SimConfig,
    horizon: usize,
) -> Result<GoodnessReport> {
    let system = make_absorbing(kernel, target)?;
    let exact = pmf(&system, horizon)?.series(start)?;
    let summary = simulate(kernel, start, target, config)?;
    let trials = config.trials as f64;
    let mut bins = Vec::new();
    let mut chi_square = 0.0;
    let mut max_abs_z: f64 = 0.0;
    for (idx, &p) in exact.iter().enumerate() {
        let expected = trials * p;
        if expected < MIN_EXPECTED_COUNT {
            continue;
        }
        let n = idx as u64 + 1;
        let observed = summary.empirical_pmf.get(&n).copied().unwrap_or(0);
        let diff = observed as f64 - expected;
        let sd = (trials * p * (1.0 - p)).max(0.0).sqrt();
        let z = if sd > 0.0 {
            diff / sd
        } else if diff.abs() < 0.5 {
            0.0
        } else {
            f64::INFINITY
        };
        chi_square += diff * diff / expected;
        max_abs_z = max_abs_z.max(z.abs());
        bins.push(GoodnessBin {
            n,
            observed,
            expected,
            z,
        });
    }
    Ok(GoodnessReport {
        trials: config.trials,
        horizon,
        degrees_of_freedom: bins.len().saturating_sub(1),
        bins,
        chi_square,
        max_abs_z,
        summary,
    })
}
