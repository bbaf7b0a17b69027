//! Entropy-Elimination and the Complexity-Guessing driver.
//!
//! Entropy-Elimination runs the known-complexity round structure against a
//! guess `Ĥ_t = 100^t` and refuses the guess once its running complexity
//! estimate `H_r` or its running cost bound `T_r` outgrow it.
//! Complexity-Guessing tries `t = 1, 2, ...` until a guess is accepted.

use super::known::{elimination_band, frac_test_band};
use super::{
    budget_or_error, shuffled_arms, Answer, Ledger, RoundEvent, RunOutcome, Solver, SolverConfig,
    SolverError, TraceEvent, Tracer,
};
use crate::instance::ArmId;
use crate::oracle::SamplingOracle;
use crate::primitives::{elimination, frac_test, med_elim, unif_sampl, SampleError};

const THETA_0: f64 = 0.3;

/// `c = log_4 100`.
pub fn round_cap_constant() -> f64 {
    100f64.ln() / 4f64.ln()
}

/// `⌈c·t⌉`, the most rounds a guess can run before rejecting.
pub fn round_cap(t: u32) -> u32 {
    (round_cap_constant() * t as f64).ceil() as u32
}

/// `Ĥ_t = 100^t`.
pub fn guess_complexity(t: u32) -> f64 {
    100f64.powi(t as i32)
}

/// `θ_r - θ_{r-1} = (c·t - r)^-2 / 10`.
pub fn theta_increment(t: u32, round: u32) -> f64 {
    (round_cap_constant() * t as f64 - round as f64).powi(-2) / 10.0
}

/// Mutable state of one Entropy-Elimination call.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessState {
    pub t: u32,
    pub h_hat: f64,
    pub survivors: Vec<ArmId>,
    /// Running complexity estimate `H_r`.
    pub h_r: f64,
    /// Running bound `T_r` on Med-Elim and Elimination draws.
    pub t_r: f64,
    pub theta_prev: f64,
    /// Current round, 1-based.
    pub r: u32,
}

impl GuessState {
    pub fn new(t: u32, survivors: Vec<ArmId>) -> Self {
        Self {
            t,
            h_hat: guess_complexity(t),
            survivors,
            h_r: 0.0,
            t_r: 0.0,
            theta_prev: THETA_0,
            r: 1,
        }
    }

    pub fn eps(&self) -> f64 {
        0.5f64.powi(self.r as i32)
    }

    /// `|S_r| ε_r^-2`.
    pub fn load(&self) -> f64 {
        self.survivors.len() as f64 * self.eps().powi(-2)
    }

    /// `δ_r = δ / (50 r² t²)`.
    pub fn round_delta(&self, delta: f64) -> f64 {
        let (r, t) = (self.r as f64, self.t as f64);
        delta / (50.0 * r * r * t * t)
    }

    /// `δ'_r = (4 |S_r| ε_r^-2 / Ĥ_t) δ²`.
    pub fn elimination_delta(&self, delta: f64) -> f64 {
        4.0 * self.load() / self.h_hat * delta * delta
    }

    /// `T_{r+1} = T_r + |S_r| ε_r^-2 · max(ln(Ĥ_t / (|S_r| ε_r^-2 δ)), 1)`.
    ///
    /// The log factor is clamped at one so that `T` never decreases when
    /// the guess is far too small.
    pub fn next_cost(&self, delta: f64) -> f64 {
        let load = self.load();
        self.t_r + load * (self.h_hat / (load * delta)).ln().max(1.0)
    }

    /// The reject test, evaluated before any sampling in the round.
    pub fn rejects(&self, next_cost: f64) -> bool {
        self.h_r + 4.0 * self.load() >= self.h_hat || next_cost >= 100.0 * self.h_hat
    }
}

enum GuessResult {
    Accepted(ArmId),
    Rejected { round: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct EntropyElimination {
    pub guess: u32,
    pub config: SolverConfig,
}

impl Solver for EntropyElimination {
    fn name(&self) -> &str {
        "entropy"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        entropy_elimination(oracle, delta, self.guess, self.config)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexityGuessing {
    pub config: SolverConfig,
}

impl ComplexityGuessing {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }
}

impl Solver for ComplexityGuessing {
    fn name(&self) -> &str {
        "guess"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        complexity_guessing(oracle, delta, self.config)
    }
}

/// One Entropy-Elimination call with guess `Ĥ_t = 100^t`.
pub fn entropy_elimination(
    oracle: &mut SamplingOracle,
    delta: f64,
    t: u32,
    config: SolverConfig,
) -> Result<RunOutcome, SolverError> {
    if t < 1 {
        return Err(SolverError::InvalidGuess(t));
    }
    config.check_delta(delta)?;
    let ledger = Ledger::open(oracle);
    let mut tracer = Tracer::new(config.trace);
    let arms = shuffled_arms(oracle);
    let mut rounds = 0;
    let result = run_guess(oracle, arms, delta, t, &mut tracer, &mut rounds);
    let answer = match budget_or_error(result)? {
        Some(GuessResult::Accepted(arm)) => Answer::Arm(arm),
        Some(GuessResult::Rejected { round }) => Answer::Rejected { round },
        None => Answer::BudgetExceeded,
    };
    Ok(ledger.close(oracle, answer, rounds, None, tracer))
}

/// Tries `Ĥ_t = 100^t` for `t = 1, 2, ...` and returns the first accepted
/// answer. Draw counters accumulate across guesses.
pub fn complexity_guessing(
    oracle: &mut SamplingOracle,
    delta: f64,
    config: SolverConfig,
) -> Result<RunOutcome, SolverError> {
    config.check_delta(delta)?;
    let ledger = Ledger::open(oracle);
    let mut tracer = Tracer::new(config.trace);
    let arms = shuffled_arms(oracle);
    let mut total_rounds = 0;
    for t in 1u32.. {
        let mut rounds = 0;
        let result = run_guess(oracle, arms.clone(), delta, t, &mut tracer, &mut rounds);
        total_rounds += rounds;
        match budget_or_error(result)? {
            Some(GuessResult::Accepted(arm)) => {
                return Ok(ledger.close(oracle, Answer::Arm(arm), total_rounds, Some(t), tracer));
            }
            Some(GuessResult::Rejected { round }) => {
                tracer.push(TraceEvent::Rejected { guess_t: t, round });
            }
            None => {
                return Ok(ledger.close(
                    oracle,
                    Answer::BudgetExceeded,
                    total_rounds,
                    None,
                    tracer,
                ));
            }
        }
        if !guess_complexity(t + 1).is_finite() {
            break;
        }
    }
    Err(SolverError::Config("complexity guesses overflowed".into()))
}

fn run_guess(
    oracle: &mut SamplingOracle,
    arms: Vec<ArmId>,
    delta: f64,
    t: u32,
    tracer: &mut Tracer,
    rounds: &mut u32,
) -> Result<GuessResult, SampleError> {
    let mut st = GuessState::new(t, arms);
    loop {
        if st.survivors.len() == 1 {
            return Ok(GuessResult::Accepted(st.survivors[0]));
        }
        let eps_r = st.eps();
        let delta_r = st.round_delta(delta);
        let delta_elim = st.elimination_delta(delta);
        let next_cost = st.next_cost(delta);
        if st.rejects(next_cost) {
            return Ok(GuessResult::Rejected { round: st.r });
        }
        let before = oracle.total();
        let a_r = tracer.primitive(oracle, "med_elim", |o| {
            med_elim(o, &st.survivors, 0.125 * eps_r, 0.01)
        })?;
        let mu_hat = tracer
            .primitive(oracle, "unif_sampl", |o| {
                unif_sampl(o, &[a_r], 0.125 * eps_r, delta_r)
            })?
            .get(a_r)
            .expect("queried arm");
        let theta = st.theta_prev + theta_increment(t, st.r);
        let (c_lo, c_hi) = frac_test_band(mu_hat, eps_r);
        let theta_prev = st.theta_prev;
        let verdict = tracer.primitive(oracle, "frac_test", |o| {
            frac_test(o, &st.survivors, c_lo, c_hi, theta_prev, theta, delta_r)
        })?;
        let size = st.survivors.len();
        let h_start = st.h_r;
        if verdict {
            st.h_r += 4.0 * st.load();
            let (d_lo, d_hi) = elimination_band(mu_hat, eps_r);
            st.survivors = tracer.primitive(oracle, "elimination", |o| {
                elimination(o, &st.survivors, d_lo, d_hi, delta_elim)
            })?;
        }
        *rounds = st.r;
        tracer.push(TraceEvent::Round(RoundEvent {
            guess_t: Some(t),
            round: st.r,
            eps: eps_r,
            survivors: size,
            frac_test: verdict,
            theta_lo: theta_prev,
            theta_hi: theta,
            h_r: Some(h_start),
            t_r: Some(next_cost),
            elimination_delta: verdict.then_some(delta_elim),
            draws: oracle.total() - before,
        }));
        st.theta_prev = theta;
        st.t_r = next_cost;
        st.r += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_ladder_first_step() {
        let theta_1 = THETA_0 + theta_increment(1, 1);
        assert!((theta_1 - 0.3186).abs() < 1e-4, "{theta_1}");
        assert!((round_cap_constant() - std::f64::consts::LOG2_10).abs() < 1e-15);
        assert_eq!(round_cap(1), 4);
        assert_eq!(round_cap(2), 7);
    }

    #[test]
    fn seven_arms_reject_first_guess_without_sampling() {
        for seed in 0..20 {
            let mut o = SamplingOracle::gaussian(vec![0.9, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0], seed);
            let out = entropy_elimination(&mut o, 0.005, 1, SolverConfig::default()).unwrap();
            assert_eq!(out.answer, Answer::Rejected { round: 1 });
            assert_eq!(out.total_samples, 0);
            assert_eq!(o.total(), 0);
            assert_eq!(out.rounds_executed, 0);
        }
    }

    #[test]
    fn reject_predicate_at_round_one() {
        let st = GuessState::new(1, (0..7).map(ArmId).collect());
        assert_eq!(st.load() * 4.0, 112.0);
        assert!(st.rejects(st.next_cost(0.005)));
        let small = GuessState::new(1, (0..2).map(ArmId).collect());
        assert!(!small.rejects(small.next_cost(0.005)));
    }

    #[test]
    fn cost_update_is_clamped() {
        let mut st = GuessState::new(1, (0..6).map(ArmId).collect());
        st.r = 3;
        // ln(Ĥ/(|S|ε^-2 δ)) = ln(100 / (384 · 0.5)) < 0 without the clamp
        let next = st.next_cost(0.5);
        assert_eq!(next, st.load());
    }

    #[test]
    fn guess_validation() {
        let mut o = SamplingOracle::gaussian(vec![1.0, 0.5], 1);
        assert_eq!(
            entropy_elimination(&mut o, 0.005, 0, SolverConfig::default()).unwrap_err(),
            SolverError::InvalidGuess(0)
        );
        assert!(complexity_guessing(&mut o, 0.02, SolverConfig::default()).is_err());
    }

    #[test]
    fn guessing_without_noise_finds_best_arm() {
        let mut o = SamplingOracle::deterministic(vec![0.5, 1.0, 0.75, 0.5], 9);
        let out = complexity_guessing(&mut o, 0.005, SolverConfig::traced()).unwrap();
        assert_eq!(out.answer, Answer::Arm(ArmId(1)));
        assert!(out.accepted_guess_t.is_some());
        assert_eq!(out.total_samples, o.total());
    }
}
