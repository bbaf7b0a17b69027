//! Elimination when the instance complexity `H` is supplied by the caller.

use super::{
    budget_or_error, shuffled_arms, Answer, Ledger, RoundEvent, RunOutcome, Solver, SolverConfig,
    SolverError, TraceEvent, Tracer,
};
use crate::instance::ArmId;
use crate::oracle::SamplingOracle;
use crate::primitives::{elimination, frac_test, med_elim, unif_sampl, SampleError};

/// `(ε_r, δ_r) = (2^-r, δ / (10 r²))`.
pub fn round_schedule(round: u32, delta: f64) -> (f64, f64) {
    let r = round as f64;
    (0.5f64.powi(round as i32), delta / (10.0 * r * r))
}

/// Fraction-test mean band around the reference estimate:
/// `(μ̂ - 1.75 ε_r, μ̂ - 1.125 ε_r)`.
pub fn frac_test_band(mu_hat: f64, eps_r: f64) -> (f64, f64) {
    (mu_hat - 1.75 * eps_r, mu_hat - 1.125 * eps_r)
}

/// Elimination thresholds: `(μ̂ - 0.75 ε_r, μ̂ - 0.625 ε_r)`.
pub fn elimination_band(mu_hat: f64, eps_r: f64) -> (f64, f64) {
    (mu_hat - 0.75 * eps_r, mu_hat - 0.625 * eps_r)
}

#[derive(Debug, Clone, Copy)]
pub struct KnownComplexity {
    pub complexity: f64,
    pub config: SolverConfig,
}

impl KnownComplexity {
    pub fn new(complexity: f64) -> Self {
        Self {
            complexity,
            config: SolverConfig::default(),
        }
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }
}

impl Solver for KnownComplexity {
    fn name(&self) -> &str {
        "known"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        known_complexity(oracle, self.complexity, delta, self.config)
    }
}

pub fn known_complexity(
    oracle: &mut SamplingOracle,
    complexity: f64,
    delta: f64,
    config: SolverConfig,
) -> Result<RunOutcome, SolverError> {
    config.check_delta(delta)?;
    if !(complexity > 0.0 && complexity.is_finite()) {
        return Err(SolverError::InvalidComplexity(complexity));
    }
    let ledger = Ledger::open(oracle);
    let mut tracer = Tracer::new(config.trace);
    let arms = shuffled_arms(oracle);
    let mut rounds = 0;
    let result = run(oracle, arms, complexity, delta, &mut tracer, &mut rounds);
    let answer = match budget_or_error(result)? {
        Some(arm) => Answer::Arm(arm),
        None => Answer::BudgetExceeded,
    };
    Ok(ledger.close(oracle, answer, rounds, None, tracer))
}

fn run(
    oracle: &mut SamplingOracle,
    mut survivors: Vec<ArmId>,
    complexity: f64,
    delta: f64,
    tracer: &mut Tracer,
    rounds: &mut u32,
) -> Result<ArmId, SampleError> {
    let h_hat = 4096.0 * complexity;
    for r in 1u32.. {
        if survivors.len() == 1 {
            return Ok(survivors[0]);
        }
        let before = oracle.total();
        let (eps_r, delta_r) = round_schedule(r, delta);
        let a_r = tracer.primitive(oracle, "med_elim", |o| {
            med_elim(o, &survivors, 0.125 * eps_r, 0.01)
        })?;
        let mu_hat = tracer
            .primitive(oracle, "unif_sampl", |o| {
                unif_sampl(o, &[a_r], 0.125 * eps_r, delta_r)
            })?
            .get(a_r)
            .expect("queried arm");
        let (c_lo, c_hi) = frac_test_band(mu_hat, eps_r);
        let verdict = tracer.primitive(oracle, "frac_test", |o| {
            frac_test(o, &survivors, c_lo, c_hi, 0.3, 0.5, delta_r)
        })?;
        let size = survivors.len();
        let mut elim_delta = None;
        if verdict {
            let raw = (size as f64 * eps_r.powi(-2) / h_hat) * delta;
            let d = raw.min(delta);
            elim_delta = Some(d);
            let (d_lo, d_hi) = elimination_band(mu_hat, eps_r);
            survivors = tracer.primitive(oracle, "elimination", |o| {
                elimination(o, &survivors, d_lo, d_hi, d)
            })?;
        }
        *rounds = r;
        tracer.push(TraceEvent::Round(RoundEvent {
            guess_t: None,
            round: r,
            eps: eps_r,
            survivors: size,
            frac_test: verdict,
            theta_lo: 0.3,
            theta_hi: 0.5,
            h_r: None,
            t_r: None,
            elimination_delta: elim_delta,
            draws: oracle.total() - before,
        }));
    }
    unreachable!("round counter exhausted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::profile::profile;

    #[test]
    fn round_schedule_values() {
        let (eps, d) = round_schedule(3, 0.01);
        assert_eq!(eps, 0.125);
        assert!((d - 0.01 / 90.0).abs() < 1e-18);
        assert!((d - 1.111e-4).abs() < 1e-7);
    }

    #[test]
    fn frac_test_band_at_round_two() {
        let (lo, hi) = frac_test_band(0.9, 0.25);
        assert!((lo - 0.4625).abs() < 1e-12);
        assert!((hi - 0.61875).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        let mut o = SamplingOracle::gaussian(vec![1.0, 0.5], 1);
        let cfg = SolverConfig::default();
        assert!(matches!(
            known_complexity(&mut o, 4.0, 0.02, cfg),
            Err(SolverError::DeltaOutOfRange { .. })
        ));
        assert!(matches!(
            known_complexity(&mut o, 0.0, 0.005, cfg),
            Err(SolverError::InvalidComplexity(_))
        ));
        assert!(known_complexity(&mut o, 4.0, 0.05, cfg.relaxed()).is_ok());
    }

    #[test]
    fn finds_best_arm_without_noise() {
        let inst = Instance::new("t", &[0.5, 0.75, 1.0, 0.5]).unwrap();
        let h = profile(&inst).h;
        let mut o = SamplingOracle::deterministic(inst.means(), 3);
        let out = known_complexity(&mut o, h, 0.005, SolverConfig::traced()).unwrap();
        assert_eq!(out.answer, Answer::Arm(ArmId(2)));
        assert_eq!(out.total_samples, o.total());
        assert_eq!(out.per_arm_samples.iter().sum::<u64>(), out.total_samples);
        assert_eq!(out.rounds().count() as u32, out.rounds_executed);
    }

    #[test]
    fn budget_exhaustion_is_an_answer() {
        let mut o = SamplingOracle::gaussian(vec![1.0, 0.5], 1).with_budget(1000);
        let out = known_complexity(&mut o, 4.0, 0.005, SolverConfig::default()).unwrap();
        assert_eq!(out.answer, Answer::BudgetExceeded);
        assert!(out.total_samples <= 1000);
    }
}
