//! Parallel simulation: turns a solver whose cost bound holds only on a
//! high-probability event into one whose bound holds in expectation.
//!
//! Copy `A_k` runs the inner solver at confidence `δ/2^k` on its own oracle.
//! In wrapper iteration `t`, every copy with `2^(k-1) | t` receives one
//! sample; the first copy to terminate decides the answer.
//!
//! The copies share no state, so the interleaving is resolved without
//! suspending anything: copy `k` needing `N_k` draws finishes at iteration
//! `N_k · 2^(k-1)`. Copies are run one after another, each capped at the
//! draws it could receive before the earliest finish seen so far, and every
//! copy is then charged exactly the samples the interleaved schedule would
//! have fed it by the winning iteration.

use super::{Answer, RunOutcome, Solver, SolverConfig, SolverError};
use crate::instance::ArmId;
use crate::oracle::SamplingOracle;

const MAX_COPIES: u32 = 63;

/// Copies `k` advanced in wrapper iteration `t >= 1`: all `k` with
/// `2^(k-1) | t`.
pub fn copies_advanced(t: u64) -> Vec<u32> {
    assert!(t >= 1, "iterations start at 1");
    (1..=t.trailing_zeros() + 1).collect()
}

/// Oracle seed of copy `k`. Copy 1 reuses the base seed.
pub fn copy_seed(base: u64, k: u32) -> u64 {
    if k == 1 {
        return base;
    }
    // splitmix64 finalizer
    let mut z = base ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stride(k: u32) -> u64 {
    1u64 << (k - 1)
}

/// How the interleaved schedule ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapperResolution {
    /// Copy whose answer was returned.
    pub winner: Option<u32>,
    /// Iteration in which the wrapper stopped.
    pub final_iteration: u64,
    /// Samples fed to each executed copy `k = 1, 2, ...` by then.
    pub granted: Vec<u64>,
}

/// Result of running one copy under a draw cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum CopyRun {
    /// Terminated after exactly this many draws.
    Finished(u64),
    /// Still running when the cap was hit; `available` draws can be replayed.
    Capped { available: u64 },
}

/// Samples fed to copy `k` by the end of iteration `t`, given the winner.
fn granted_at(k: u32, t: u64, winner: Option<(u32, u64)>) -> u64 {
    if let Some((w, n_w)) = winner {
        if k == w {
            return n_w;
        }
        let s = stride(k);
        let g = t / s;
        // copies after the winner are not reached in the final iteration
        if k > w && t.is_multiple_of(s) && g > 0 {
            return g - 1;
        }
        return g;
    }
    t / stride(k)
}

/// Resolves the schedule by running copies lazily. `run_copy(k, cap)` must
/// run copy `k` with at most `cap` draws. `horizon` bounds the total draws.
pub(crate) fn resolve<E>(
    max_copies: u32,
    horizon: u64,
    mut run_copy: impl FnMut(u32, u64) -> Result<CopyRun, E>,
) -> Result<WrapperResolution, E> {
    // The wrapper must stop strictly before `limit`; copy 1 is fed every
    // iteration, so stopping later than `horizon` already exceeds it.
    let mut limit = horizon.saturating_add(1);
    let mut winner: Option<(u32, u64)> = None;
    let mut runs: Vec<CopyRun> = Vec::new();
    for k in 1..=max_copies.min(MAX_COPIES) {
        let s = stride(k);
        if s > limit - 1 {
            break;
        }
        let cap = (limit - 1) / s;
        let run = run_copy(k, cap)?;
        if let CopyRun::Finished(n) = run {
            let finish = n.max(1) * s;
            if finish < limit {
                limit = finish;
                winner = Some((k, n));
            }
        }
        runs.push(run);
    }

    let available = |k: u32| match runs[(k - 1) as usize] {
        CopyRun::Finished(n) => n,
        CopyRun::Capped { available } => available,
    };
    let fed = |t: u64, w: Option<(u32, u64)>| -> Vec<u64> {
        (1..=runs.len() as u32)
            .map(|k| granted_at(k, t, w).min(available(k)))
            .collect()
    };

    if let Some((w, n)) = winner {
        let t_star = n.max(1) * stride(w);
        let granted = fed(t_star, winner);
        if granted.iter().sum::<u64>() <= horizon {
            return Ok(WrapperResolution {
                winner: Some(w),
                final_iteration: t_star,
                granted,
            });
        }
    }
    // Out of budget: stop at the last iteration whose total still fits.
    let upper = winner.map_or(limit - 1, |(w, n)| n.max(1) * stride(w) - 1);
    let (mut lo, mut hi) = (0u64, upper);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fed(mid, None).iter().sum::<u64>() <= horizon {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(WrapperResolution {
        winner: None,
        final_iteration: lo,
        granted: fed(lo, None),
    })
}

/// Per-arm counts of the first `n` draws in a request log.
fn prefix_counts(requests: &[(ArmId, u64)], n: u64, arms: usize) -> Vec<u64> {
    let mut out = vec![0; arms];
    let mut left = n;
    for &(arm, draws) in requests {
        if left == 0 {
            break;
        }
        let take = draws.min(left);
        out[arm.0] += take;
        left -= take;
    }
    out
}

#[derive(Debug, Clone)]
pub struct ParallelSimulation<S> {
    pub inner: S,
    /// Restricts the wrapper to copies `1..=max_copies`.
    pub max_copies: Option<u32>,
    pub config: SolverConfig,
}

impl<S: Solver> ParallelSimulation<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            max_copies: None,
            config: SolverConfig::default(),
        }
    }

    pub fn with_max_copies(mut self, k: u32) -> Self {
        self.max_copies = Some(k);
        self
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn solve_detailed(
        &self,
        oracle: &mut SamplingOracle,
        delta: f64,
    ) -> Result<(RunOutcome, WrapperResolution), SolverError> {
        self.config.check_delta(delta)?;
        let arms = oracle.num_arms();
        let base_seed = oracle.seed();
        let mut outcomes: Vec<RunOutcome> = Vec::new();
        let mut logs: Vec<Vec<(ArmId, u64)>> = Vec::new();

        let resolution = resolve(
            self.max_copies.unwrap_or(MAX_COPIES),
            oracle.remaining(),
            |k, cap| -> Result<CopyRun, SolverError> {
                let mut copy = oracle
                    .fork(copy_seed(base_seed, k))
                    .with_budget(cap)
                    .with_request_log();
                let delta_k = delta / 2f64.powi(k as i32);
                let out = self.inner.solve(&mut copy, delta_k)?;
                let mut log = copy.request_log().unwrap_or_default().to_vec();
                let run = match out.answer {
                    Answer::BudgetExceeded => {
                        log.extend(copy.refused_request());
                        CopyRun::Capped {
                            available: log.iter().map(|&(_, d)| d).sum(),
                        }
                    }
                    _ => CopyRun::Finished(out.total_samples),
                };
                outcomes.push(out);
                logs.push(log);
                Ok(run)
            },
        )?;

        let mut per_arm = vec![0u64; arms];
        for (log, &g) in logs.iter().zip(&resolution.granted) {
            for (acc, c) in per_arm.iter_mut().zip(prefix_counts(log, g, arms)) {
                *acc += c;
            }
        }
        oracle
            .credit(&per_arm)
            .expect("resolution keeps the total within the remaining budget");

        let outcome = match resolution.winner {
            Some(w) => {
                let inner = &outcomes[(w - 1) as usize];
                RunOutcome {
                    answer: inner.answer,
                    total_samples: per_arm.iter().sum(),
                    per_arm_samples: per_arm,
                    rounds_executed: inner.rounds_executed,
                    accepted_guess_t: inner.accepted_guess_t,
                    trace: if self.config.trace {
                        inner.trace.clone()
                    } else {
                        Vec::new()
                    },
                }
            }
            None => RunOutcome {
                answer: Answer::BudgetExceeded,
                total_samples: per_arm.iter().sum(),
                per_arm_samples: per_arm,
                rounds_executed: 0,
                accepted_guess_t: None,
                trace: Vec::new(),
            },
        };
        Ok((outcome, resolution))
    }
}

impl<S: Solver> Solver for ParallelSimulation<S> {
    fn name(&self) -> &str {
        "parallel"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        self.solve_detailed(oracle, delta).map(|(o, _)| o)
    }
}
