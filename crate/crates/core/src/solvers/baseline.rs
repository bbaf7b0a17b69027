//! Classical successive elimination, used as a comparison baseline.

use super::{
    budget_or_error, shuffled_arms, Answer, Ledger, RunOutcome, Solver, SolverConfig, SolverError,
    Tracer,
};
use crate::instance::ArmId;
use crate::oracle::SamplingOracle;
use crate::primitives::SampleError;

/// `sqrt(2 ln(4 n r² / δ) / r)` after `r` draws of every surviving arm.
pub fn confidence_radius(n: usize, r: u64, delta: f64) -> f64 {
    let rf = r as f64;
    (2.0 * (4.0 * n as f64 * rf * rf / delta).ln() / rf).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuccessiveElimination {
    pub config: SolverConfig,
}

impl Solver for SuccessiveElimination {
    fn name(&self) -> &str {
        "baseline"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        successive_elimination(oracle, delta, self.config)
    }
}

/// Samples every surviving arm once per round and drops arms whose upper
/// confidence bound falls below the best lower bound.
pub fn successive_elimination(
    oracle: &mut SamplingOracle,
    delta: f64,
    config: SolverConfig,
) -> Result<RunOutcome, SolverError> {
    // the classical guarantee holds for any δ in (0, 1)
    config.relaxed().check_delta(delta)?;
    let ledger = Ledger::open(oracle);
    let tracer = Tracer::new(config.trace);
    let arms = shuffled_arms(oracle);
    let mut rounds = 0u64;
    let result = run(oracle, arms, delta, &mut rounds);
    let answer = match budget_or_error(result)? {
        Some(arm) => Answer::Arm(arm),
        None => Answer::BudgetExceeded,
    };
    let rounds = u32::try_from(rounds).unwrap_or(u32::MAX);
    Ok(ledger.close(oracle, answer, rounds, None, tracer))
}

fn run(
    oracle: &mut SamplingOracle,
    arms: Vec<ArmId>,
    delta: f64,
    rounds: &mut u64,
) -> Result<ArmId, SampleError> {
    let n = arms.len();
    let mut active: Vec<(ArmId, f64)> = arms.into_iter().map(|a| (a, 0.0)).collect();
    let mut r = 0u64;
    while active.len() > 1 {
        r += 1;
        for (arm, sum) in active.iter_mut() {
            *sum += oracle.draw(*arm)?;
        }
        let radius = confidence_radius(n, r, delta);
        let best_lower = active
            .iter()
            .map(|&(_, s)| s / r as f64 - radius)
            .fold(f64::NEG_INFINITY, f64::max);
        active.retain(|&(_, s)| s / r as f64 + radius >= best_lower);
        *rounds = r;
    }
    Ok(active[0].0)
}
