//! Top-level Best-1-Arm solvers.
//!
//! Every solver owns the oracle for the duration of a run, shuffles the arm
//! order once with the oracle's RNG (so list storage behaves as a set) and
//! reports a [`RunOutcome`]. Budget exhaustion is an answer, not an error;
//! [`SolverError`] is reserved for invalid configuration.

mod baseline;
mod entropy;
mod known;
mod parallel;

pub use baseline::{confidence_radius, successive_elimination, SuccessiveElimination};
pub use entropy::{
    complexity_guessing, entropy_elimination, guess_complexity, round_cap, round_cap_constant,
    theta_increment, ComplexityGuessing, EntropyElimination, GuessState,
};
pub use known::{
    elimination_band, frac_test_band, known_complexity, round_schedule, KnownComplexity,
};
pub use parallel::{copies_advanced, copy_seed, ParallelSimulation, WrapperResolution};

use serde::Serialize;
use thiserror::Error;

use crate::instance::ArmId;
use crate::oracle::SamplingOracle;
use crate::primitives::SampleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Answer {
    Arm(ArmId),
    /// Entropy-Elimination refused its complexity guess at `round`.
    Rejected {
        round: u32,
    },
    BudgetExceeded,
}

impl Answer {
    pub fn arm(&self) -> Option<ArmId> {
        match self {
            Answer::Arm(a) => Some(*a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundEvent {
    /// Complexity-guess index, for Entropy-Elimination rounds.
    pub guess_t: Option<u32>,
    pub round: u32,
    pub eps: f64,
    pub survivors: usize,
    pub frac_test: bool,
    /// `θ_{r-1}` and `θ_r` passed to the fraction test.
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub h_r: Option<f64>,
    pub t_r: Option<f64>,
    /// Confidence handed to `Elimination`, when it ran.
    pub elimination_delta: Option<f64>,
    pub draws: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Round(RoundEvent),
    Primitive { name: &'static str, draws: u64 },
    Rejected { guess_t: u32, round: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub answer: Answer,
    pub total_samples: u64,
    pub per_arm_samples: Vec<u64>,
    pub rounds_executed: u32,
    pub accepted_guess_t: Option<u32>,
    #[serde(skip)]
    pub trace: Vec<TraceEvent>,
}

impl RunOutcome {
    pub fn rounds(&self) -> impl Iterator<Item = &RoundEvent> {
        self.trace.iter().filter_map(|e| match e {
            TraceEvent::Round(r) => Some(r),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("confidence {delta} outside the allowed range (0, {upper})")]
    DeltaOutOfRange { delta: f64, upper: f64 },
    #[error("complexity must be positive, got {0}")]
    InvalidComplexity(f64),
    #[error("guess index must be >= 1, got {0}")]
    InvalidGuess(u32),
    #[error("primitive failed: {0}")]
    Primitive(SampleError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    /// Record per-round and per-primitive events in [`RunOutcome::trace`].
    pub trace: bool,
    /// Enforce the `δ <= 0.01` precondition of the elimination solvers.
    /// When false any `δ ∈ (0, 1)` is accepted (trend runs only).
    pub strict_delta: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            trace: false,
            strict_delta: true,
        }
    }
}

impl SolverConfig {
    pub fn traced() -> Self {
        Self {
            trace: true,
            ..Self::default()
        }
    }

    pub fn relaxed(mut self) -> Self {
        self.strict_delta = false;
        self
    }

    pub(crate) fn check_delta(&self, delta: f64) -> Result<(), SolverError> {
        let (upper, ok) = if self.strict_delta {
            (0.01, delta > 0.0 && delta <= 0.01)
        } else {
            (1.0, delta > 0.0 && delta < 1.0)
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::DeltaOutOfRange { delta, upper })
        }
    }
}

/// A Best-1-Arm algorithm that can be run against an oracle.
pub trait Solver: Sync {
    fn name(&self) -> &str;

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError>;
}

/// Collects trace events when enabled.
pub(crate) struct Tracer {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Tracer {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            enabled,
            events: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, event: TraceEvent) {
        if self.enabled {
            self.events.push(event);
        }
    }

    /// Runs a primitive and logs how many draws it took.
    pub(crate) fn primitive<T>(
        &mut self,
        oracle: &mut SamplingOracle,
        name: &'static str,
        f: impl FnOnce(&mut SamplingOracle) -> Result<T, SampleError>,
    ) -> Result<T, SampleError> {
        let before = oracle.total();
        let out = f(oracle);
        self.push(TraceEvent::Primitive {
            name,
            draws: oracle.total() - before,
        });
        out
    }

    pub(crate) fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}

/// Snapshot of the oracle counters at the start of a run.
pub(crate) struct Ledger {
    start: Vec<u64>,
}

impl Ledger {
    pub(crate) fn open(oracle: &SamplingOracle) -> Self {
        Self {
            start: oracle.counts().to_vec(),
        }
    }

    pub(crate) fn close(
        self,
        oracle: &SamplingOracle,
        answer: Answer,
        rounds_executed: u32,
        accepted_guess_t: Option<u32>,
        tracer: Tracer,
    ) -> RunOutcome {
        let per_arm: Vec<u64> = oracle
            .counts()
            .iter()
            .zip(&self.start)
            .map(|(now, then)| now - then)
            .collect();
        RunOutcome {
            answer,
            total_samples: per_arm.iter().sum(),
            per_arm_samples: per_arm,
            rounds_executed,
            accepted_guess_t,
            trace: tracer.into_events(),
        }
    }
}

/// Splits a primitive failure into "budget ran out" and real errors.
pub(crate) fn budget_or_error<T>(r: Result<T, SampleError>) -> Result<Option<T>, SolverError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(SampleError::Budget(_)) => Ok(None),
        Err(e) => Err(SolverError::Primitive(e)),
    }
}

pub(crate) fn shuffled_arms(oracle: &mut SamplingOracle) -> Vec<ArmId> {
    let mut arms = oracle.arms();
    oracle.shuffle(&mut arms);
    arms
}
