//! Seeded Monte-Carlo trials, empirical statistics and instance generators.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::OpenOptions;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{make_discrete_instance, Instance, InstanceError};
use crate::oracle::{RewardFamily, SamplingOracle, DEFAULT_BUDGET};
use crate::profile::{entropy, profile};
use crate::solvers::{
    Answer, ComplexityGuessing, KnownComplexity, ParallelSimulation, RunOutcome, Solver,
    SolverConfig, SolverError, SuccessiveElimination,
};

/// Default confidence grid. Only 0.01 is inside the solvers' strict range;
/// the larger values are trend runs.
pub const DELTA_GRID: [f64; 3] = [0.1, 0.05, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Known,
    Guess,
    Parallel,
    Baseline,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Known, Algo::Guess, Algo::Parallel, Algo::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Known => "known",
            Algo::Guess => "guess",
            Algo::Parallel => "parallel",
            Algo::Baseline => "baseline",
        }
    }

    /// Builds the solver for `instance`; `known` gets `H(I)` from the profile.
    pub fn solver(self, instance: &Instance, config: SolverConfig) -> Box<dyn Solver> {
        match self {
            Algo::Known => Box::new(KnownComplexity::new(profile(instance).h).with_config(config)),
            Algo::Guess => Box::new(ComplexityGuessing::new(config)),
            Algo::Parallel => Box::new(
                ParallelSimulation::new(ComplexityGuessing::new(config)).with_config(config),
            ),
            Algo::Baseline => Box::new(SuccessiveElimination { config }),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| BenchError::UnknownAlgo(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown algorithm {0:?} (expected known, guess, parallel or baseline)")]
    UnknownAlgo(String),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("seed {seed}: outcome reports {reported} samples but the oracle counted {counted}")]
    Reconciliation {
        seed: u64,
        reported: u64,
        counted: u64,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub family: RewardFamily,
    pub budget: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            family: RewardFamily::Gaussian,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Solver configuration used by the harness: strict confidence checks for
/// `δ <= 0.01`, relaxed above that (trend runs).
pub fn harness_config(delta: f64) -> SolverConfig {
    if delta > 0.01 {
        SolverConfig::default().relaxed()
    } else {
        SolverConfig::default()
    }
}

/// One seeded run, checked against the oracle's own counter.
pub fn run_trial(
    solver: &dyn Solver,
    instance: &Instance,
    delta: f64,
    seed: u64,
    config: TrialConfig,
) -> Result<RunOutcome, BenchError> {
    let mut oracle =
        SamplingOracle::for_instance(instance, config.family, seed).with_budget(config.budget);
    let out = solver.solve(&mut oracle, delta)?;
    if out.total_samples != oracle.total() {
        return Err(BenchError::Reconciliation {
            seed,
            reported: out.total_samples,
            counted: oracle.total(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub algorithm: String,
    pub instance: String,
    pub delta: f64,
    pub trials: usize,
    pub successes: usize,
    pub error_count: usize,
    pub budget_exceeded: usize,
    /// `error_count / (successes + error_count)`; budget-exhausted trials are
    /// excluded.
    pub empirical_error: f64,
    pub mean_samples: f64,
    pub median_samples: f64,
    pub p95_samples: f64,
    pub mean_accepted_guess_t: Option<f64>,
    pub conjectured_bound: f64,
    /// `mean_samples / conjectured_bound`.
    pub ratio: f64,
}

/// Runs `trials` independent trials, trial `i` seeded with `base_seed + i`.
pub fn run_trials(
    algo: Algo,
    instance: &Instance,
    delta: f64,
    trials: usize,
    base_seed: u64,
    config: TrialConfig,
) -> Result<TrialReport, BenchError> {
    let solver = algo.solver(instance, harness_config(delta));
    run_trials_with(
        solver.as_ref(),
        algo.as_str(),
        instance,
        delta,
        trials,
        base_seed,
        config,
    )
}

pub fn run_trials_with(
    solver: &dyn Solver,
    name: &str,
    instance: &Instance,
    delta: f64,
    trials: usize,
    base_seed: u64,
    config: TrialConfig,
) -> Result<TrialReport, BenchError> {
    if trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let outcomes: Vec<RunOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(solver, instance, delta, base_seed.wrapping_add(i), config))
        .collect::<Result<_, _>>()?;
    Ok(summarize(name, instance, delta, &outcomes))
}

/// Aggregates finished runs into a report.
pub fn summarize(
    name: &str,
    instance: &Instance,
    delta: f64,
    outcomes: &[RunOutcome],
) -> TrialReport {
    let best = instance.best_arm();
    let mut successes = 0;
    let mut errors = 0;
    let mut budget = 0;
    for o in outcomes {
        match o.answer {
            Answer::Arm(a) if a == best => successes += 1,
            Answer::BudgetExceeded => budget += 1,
            _ => errors += 1,
        }
    }
    let mut samples: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.answer != Answer::BudgetExceeded)
        .map(|o| o.total_samples as f64)
        .collect();
    samples.sort_by(f64::total_cmp);
    let mean = mean(&samples);
    let guesses: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.accepted_guess_t.map(f64::from))
        .collect();
    let prof = profile(instance);
    let bound = prof.conjectured_bound(delta).unwrap_or(f64::NAN);
    let decided = successes + errors;
    TrialReport {
        algorithm: name.to_string(),
        instance: instance.id().to_string(),
        delta,
        trials: outcomes.len(),
        successes,
        error_count: errors,
        budget_exceeded: budget,
        empirical_error: if decided == 0 {
            0.0
        } else {
            errors as f64 / decided as f64
        },
        mean_samples: mean,
        median_samples: quantile(&samples, 0.5),
        p95_samples: quantile(&samples, 0.95),
        mean_accepted_guess_t: (!guesses.is_empty()).then(|| self::mean(&guesses)),
        conjectured_bound: bound,
        ratio: mean / bound,
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Appends reports to `path`, writing the header only when the file is new
/// or empty.
pub fn append_reports(path: &Path, reports: &[TrialReport]) -> Result<(), BenchError> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceKind {
    /// `{top, top - gap}`.
    TwoArm { gap: f64, top_mean: f64 },
    /// Random group counts `n_k ∈ [0, max_per_group]` for `k = 1..=k_max`,
    /// or the fixed `counts` when given.
    DiscreteRandom {
        count: usize,
        k_max: u32,
        max_per_group: usize,
        counts: Option<BTreeMap<u32, usize>>,
        top_mean: f64,
    },
    /// A pair of discrete instances with `H = target_h` and different entropy.
    EqualHVaryingEnt {
        target_h: f64,
        k_max: u32,
        max_count: usize,
    },
}

pub fn generate_instances(kind: &InstanceKind, seed: u64) -> Result<Vec<Instance>, BenchError> {
    match kind {
        InstanceKind::TwoArm { gap, top_mean } => {
            let id = format!("two-arm-gap{gap}");
            Ok(vec![Instance::new(id, &[*top_mean, top_mean - gap])?])
        }
        InstanceKind::DiscreteRandom {
            count,
            k_max,
            max_per_group,
            counts,
            top_mean,
        } => {
            check_k_max(*k_max, *top_mean)?;
            if let Some(c) = counts {
                if let Some(&k) = c.keys().find(|&&k| k > *k_max) {
                    return Err(BenchError::Infeasible(format!(
                        "group {k} exceeds k_max {k_max}"
                    )));
                }
                return Ok(vec![make_discrete_instance(c, *top_mean)?]);
            }
            if *max_per_group == 0 {
                return Err(BenchError::Infeasible("max_per_group must be >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(*count);
            while out.len() < *count {
                let c: BTreeMap<u32, usize> = (1..=*k_max)
                    .map(|k| (k, rng.random_range(0..=*max_per_group)))
                    .filter(|&(_, n)| n > 0)
                    .collect();
                if c.is_empty() {
                    continue;
                }
                let inst = make_discrete_instance(&c, *top_mean)?;
                let id = format!("{}-{}", inst.id(), out.len());
                out.push(inst.with_id(id));
            }
            Ok(out)
        }
        InstanceKind::EqualHVaryingEnt {
            target_h,
            k_max,
            max_count,
        } => {
            check_k_max(*k_max, 1.0)?;
            let (flat, mixed) = equal_h_pair(*target_h, *k_max, *max_count).ok_or_else(|| {
                BenchError::Infeasible(format!(
                    "no equal-H pair with H={target_h}, k<={k_max}, n_k<={max_count}"
                ))
            })?;
            Ok(vec![
                make_discrete_instance(&flat, 1.0)?,
                make_discrete_instance(&mixed, 1.0)?,
            ])
        }
    }
}

fn check_k_max(k_max: u32, top_mean: f64) -> Result<(), BenchError> {
    if k_max == 0 {
        return Err(BenchError::Infeasible("k_max must be >= 1".into()));
    }
    // the worst arm sits at top - 2^-1
    if !(0.5..=1.0).contains(&top_mean) {
        return Err(BenchError::Infeasible(format!(
            "top mean {top_mean} puts a gap-1/2 arm outside [0, 1]"
        )));
    }
    Ok(())
}

/// Entropy of the group distribution of a discrete instance with the given
/// counts (`H_k = n_k 4^k`).
pub fn discrete_entropy(counts: &BTreeMap<u32, usize>) -> f64 {
    let h: f64 = counts
        .iter()
        .map(|(&k, &n)| n as f64 * 4f64.powi(k as i32))
        .sum();
    entropy(
        counts
            .iter()
            .map(|(&k, &n)| n as f64 * 4f64.powi(k as i32) / h),
    )
}

/// All count vectors over groups `1..=k_max` with `n_k <= max_count` and
/// `Σ n_k 4^k = target_h`.
pub fn equal_h_candidates(
    target_h: f64,
    k_max: u32,
    max_count: usize,
) -> Vec<BTreeMap<u32, usize>> {
    let mut out = Vec::new();
    let mut current = BTreeMap::new();
    fill(1, k_max, max_count, target_h, &mut current, &mut out);
    out
}

fn fill(
    k: u32,
    k_max: u32,
    max_count: usize,
    remaining: f64,
    current: &mut BTreeMap<u32, usize>,
    out: &mut Vec<BTreeMap<u32, usize>>,
) {
    if k > k_max {
        if remaining.abs() < 1e-9 && !current.is_empty() {
            out.push(current.clone());
        }
        return;
    }
    let w = 4f64.powi(k as i32);
    for n in 0..=max_count {
        let rest = remaining - n as f64 * w;
        if rest < -1e-9 {
            break;
        }
        if n > 0 {
            current.insert(k, n);
        }
        fill(k + 1, k_max, max_count, rest, current, out);
        current.remove(&k);
    }
}

/// The zero-entropy candidate with the most arms, paired with the
/// highest-entropy candidate.
pub fn equal_h_pair(
    target_h: f64,
    k_max: u32,
    max_count: usize,
) -> Option<(BTreeMap<u32, usize>, BTreeMap<u32, usize>)> {
    let cands = equal_h_candidates(target_h, k_max, max_count);
    let arms = |c: &BTreeMap<u32, usize>| c.values().sum::<usize>();
    let flat = cands
        .iter()
        .filter(|c| c.len() == 1)
        .max_by_key(|c| arms(c))?;
    let mixed = cands
        .iter()
        .filter(|c| c.len() > 1)
        .max_by(|a, b| discrete_entropy(a).total_cmp(&discrete_entropy(b)))?;
    Some((flat.clone(), mixed.clone()))
}

/// Parses `k=v;k=v` generator parameters.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, String>, BenchError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| BenchError::Infeasible(format!("parameter {kv:?} is not key=value")))
        })
        .collect()
}

/// Parses group counts written as `1:2,3:1`.
pub fn parse_counts(text: &str) -> Result<BTreeMap<u32, usize>, BenchError> {
    let bad = || BenchError::Infeasible(format!("group counts {text:?} are not k:n,k:n"));
    text.split(',')
        .map(|kv| {
            let (k, n) = kv.split_once(':').ok_or_else(bad)?;
            Ok((
                k.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}
