//! SIGN-ξ with ξ = 0, solved by reduction to Best-1-Arm.
//!
//! The hidden arm of mean `μ` is embedded at `0.5 + μ` next to a fictitious
//! arm of mean exactly `0.5`; unit-variance Gaussian noise is shift invariant,
//! so deciding which of the two is better decides the sign of `μ`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::ArmId;
use crate::oracle::{RewardFamily, SamplingOracle};
use crate::profile::entropy;
use crate::solvers::{complexity_guessing, Answer, RunOutcome, Solver, SolverConfig, SolverError};

/// Mean of the fictitious arm.
pub const FICTITIOUS_MEAN: f64 = 0.5;

/// Largest `m` accepted by [`measure_loss_profile`]; cost grows like `4^m`.
pub const MAX_LOSS_GROUPS: usize = 4;

pub const MIN_LOSS_TRIALS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

/// Which oracle slot holds the real (shifted) arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RealArmSlot {
    #[default]
    First,
    Second,
}

impl RealArmSlot {
    fn index(self) -> usize {
        match self {
            RealArmSlot::First => 0,
            RealArmSlot::Second => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignXiError {
    #[error("hidden mean {0} must satisfy 0 < |mu| <= 0.5")]
    MeanOutOfRange(f64),
    #[error("probabilities must be non-negative and sum to 1")]
    InvalidDistribution,
    #[error("at most {MAX_LOSS_GROUPS} gap groups are supported, got {0}")]
    TooManyGroups(usize),
    #[error("at least {MIN_LOSS_TRIALS} trials are required, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignOutcome {
    /// `None` when the sample budget ran out before a decision.
    pub sign: Option<Sign>,
    pub run: RunOutcome,
}

/// Two-arm oracle for the reduction: real arm at `0.5 + μ`, fictitious arm at
/// `0.5`, both Gaussian, with the real arm in `slot`.
pub fn reduction_oracle(
    hidden_mean: f64,
    slot: RealArmSlot,
    seed: u64,
) -> Result<SamplingOracle, SignXiError> {
    if !(hidden_mean != 0.0 && hidden_mean.abs() <= 0.5) {
        return Err(SignXiError::MeanOutOfRange(hidden_mean));
    }
    let mut means = vec![FICTITIOUS_MEAN; 2];
    means[slot.index()] = FICTITIOUS_MEAN + hidden_mean;
    Ok(SamplingOracle::new(means, RewardFamily::Gaussian, seed))
}

/// Decides the sign of `μ` with Complexity-Guessing.
pub fn solve_sign_xi(hidden_mean: f64, delta: f64, seed: u64) -> Result<SignOutcome, SignXiError> {
    let solver = GuessingSolver;
    solve_sign_xi_with(&solver, hidden_mean, delta, seed, RealArmSlot::First)
}

pub fn solve_sign_xi_with(
    solver: &dyn Solver,
    hidden_mean: f64,
    delta: f64,
    seed: u64,
    slot: RealArmSlot,
) -> Result<SignOutcome, SignXiError> {
    let mut oracle = reduction_oracle(hidden_mean, slot, seed)?;
    let run = solver.solve(&mut oracle, delta)?;
    let sign = match run.answer {
        Answer::Arm(ArmId(i)) if i == slot.index() => Some(Sign::Positive),
        Answer::Arm(_) => Some(Sign::Negative),
        _ => None,
    };
    Ok(SignOutcome { sign, run })
}

/// Complexity-Guessing with the confidence check relaxed: SIGN-ξ experiments
/// run at δ above the elimination solvers' strict range.
struct GuessingSolver;

impl Solver for GuessingSolver {
    fn name(&self) -> &str {
        "guess"
    }

    fn solve(&self, oracle: &mut SamplingOracle, delta: f64) -> Result<RunOutcome, SolverError> {
        complexity_guessing(oracle, delta, SolverConfig::default().relaxed())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub k: u32,
    pub p_k: f64,
    /// `mean_samples / 4^k`; `None` when a trial ran out of budget.
    pub alpha_k: Option<f64>,
    pub mean_samples: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossProfile {
    pub delta: f64,
    pub trials: usize,
    pub rows: Vec<LossRow>,
    /// `Σ p_k α_k` over the groups that completed.
    pub expected_loss: f64,
    pub ent_p: f64,
    /// Some group was invalidated by budget exhaustion.
    pub partial: bool,
}

impl LossProfile {
    pub fn pk(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_k).collect()
    }

    pub fn alpha(&self, k: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.k == k).and_then(|r| r.alpha_k)
    }

    pub fn ln_inv_delta(&self) -> f64 {
        (1.0 / self.delta).ln()
    }

    /// Rows `k,p_k,alpha_k,mean_samples`, then a `summary` row carrying
    /// `expected_loss,ent_P,ln_inv_delta`. Missing values are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,p_k,alpha_k,mean_samples\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.k,
                r.p_k,
                opt(r.alpha_k),
                opt(r.mean_samples)
            ));
        }
        out.push_str(&format!(
            "summary,{},{},{}\n",
            self.expected_loss,
            self.ent_p,
            self.ln_inv_delta()
        ));
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SignXiError> {
        let mut f = std::fs::File::create(path).map_err(|e| SignXiError::Io(e.to_string()))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| SignXiError::Io(e.to_string()))
    }
}

/// Runs `solver` on hidden means `2^-k`, `k = 1..=pk.len()`, `trials` times
/// each with seeds `base_seed + i`, and reports `α_k = mean samples / 4^k`.
pub fn measure_loss_profile(
    solver: &dyn Solver,
    pk: &[f64],
    delta: f64,
    trials: usize,
    base_seed: u64,
    slot: RealArmSlot,
) -> Result<LossProfile, SignXiError> {
    if pk.len() > MAX_LOSS_GROUPS {
        return Err(SignXiError::TooManyGroups(pk.len()));
    }
    if trials < MIN_LOSS_TRIALS {
        return Err(SignXiError::TooFewTrials(trials));
    }
    let sum: f64 = pk.iter().sum();
    if pk.is_empty() || pk.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(SignXiError::InvalidDistribution);
    }

    let mut rows = Vec::with_capacity(pk.len());
    let mut partial = false;
    for (i, &p) in pk.iter().enumerate() {
        let k = i as u32 + 1;
        let mu = 0.5f64.powi(k as i32);
        let runs: Vec<SignOutcome> = (0..trials as u64)
            .into_par_iter()
            .map(|t| solve_sign_xi_with(solver, mu, delta, base_seed.wrapping_add(t), slot))
            .collect::<Result<_, _>>()?;
        let row = if runs.iter().any(|r| r.run.answer == Answer::BudgetExceeded) {
            partial = true;
            LossRow {
                k,
                p_k: p,
                alpha_k: None,
                mean_samples: None,
            }
        } else {
            let mean = runs.iter().map(|r| r.run.total_samples as f64).sum::<f64>() / trials as f64;
            LossRow {
                k,
                p_k: p,
                alpha_k: Some(mean / 4f64.powi(k as i32)),
                mean_samples: Some(mean),
            }
        };
        rows.push(row);
    }
    let expected_loss = rows
        .iter()
        .filter_map(|r| r.alpha_k.map(|a| r.p_k * a))
        .sum();
    Ok(LossProfile {
        delta,
        trials,
        rows,
        expected_loss,
        ent_p: entropy(pk.iter().copied()),
        partial,
    })
}
