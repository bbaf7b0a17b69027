//! Sampling subroutines shared by every elimination solver.
//!
//! All four take an arm set, draw only through the [`SamplingOracle`], and
//! are deterministic functions of the oracle seed and their arguments.

use thiserror::Error;

use crate::instance::ArmId;
use crate::oracle::{BudgetExceeded, SamplingOracle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("arm set is empty")]
    EmptyArmSet,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

/// Rounds a real-valued sample count up, treating values within 1e-9
/// (relative) of an integer as that integer so that `ln` round-off cannot
/// add a spurious draw.
pub fn ceil_count(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Per-arm draws taken by [`unif_sampl`]: `⌈2 ε^-2 ln(2/δ)⌉`.
pub fn unif_sampl_draws(eps: f64, delta: f64) -> u64 {
    ceil_count(2.0 * eps.powi(-2) * (2.0 / delta).ln())
}

/// Iterations of [`frac_test`]: `⌈(Δ/6)^-2 ln(2/δ)⌉` with `Δ = θ_hi - θ_lo`.
pub fn frac_test_iterations(theta_lo: f64, theta_hi: f64, delta: f64) -> u64 {
    let gap = theta_hi - theta_lo;
    ceil_count((gap / 6.0).powi(-2) * (2.0 / delta).ln())
}

/// Per-arm draws in round `l` (1-based) of [`med_elim`].
pub fn med_elim_round_draws(eps: f64, delta: f64, round: u32) -> u64 {
    let (eps_l, delta_l) = med_elim_schedule(eps, delta, round);
    ceil_count(2.0 * (eps_l / 2.0).powi(-2) * (3.0 / delta_l).ln())
}

/// `(ε_l, δ_l)` for round `l`: `ε_1 = ε/4`, `δ_1 = δ/2`, then `ε` shrinks by
/// 3/4 and `δ` halves each round.
pub fn med_elim_schedule(eps: f64, delta: f64, round: u32) -> (f64, f64) {
    let steps = round.saturating_sub(1) as i32;
    (
        eps / 4.0 * 0.75f64.powi(steps),
        delta / 2.0 * 0.5f64.powi(steps),
    )
}

/// Empirical means of the queried arms, in query order.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMap(Vec<(ArmId, f64)>);

impl EstimateMap {
    pub fn get(&self, arm: ArmId) -> Option<f64> {
        self.0.iter().find(|(a, _)| *a == arm).map(|&(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArmId, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_delta(delta: f64) -> Result<(), SampleError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(SampleError::InvalidArgument(format!(
            "confidence {delta} outside (0, 1)"
        )))
    }
}

fn check_eps(eps: f64) -> Result<(), SampleError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(SampleError::InvalidArgument(format!(
            "accuracy {eps} must be positive"
        )))
    }
}

fn check_order(lo: f64, hi: f64, what: &str) -> Result<(), SampleError> {
    if lo < hi {
        Ok(())
    } else {
        Err(SampleError::InvalidArgument(format!(
            "{what}: need lo < hi, got {lo} >= {hi}"
        )))
    }
}

/// Samples every arm `⌈2 ε^-2 ln(2/δ)⌉` times and returns the averages.
pub fn unif_sampl(
    oracle: &mut SamplingOracle,
    arms: &[ArmId],
    eps: f64,
    delta: f64,
) -> Result<EstimateMap, SampleError> {
    if arms.is_empty() {
        return Err(SampleError::EmptyArmSet);
    }
    check_eps(eps)?;
    check_delta(delta)?;
    let k = unif_sampl_draws(eps, delta);
    let mut out = Vec::with_capacity(arms.len());
    for &arm in arms {
        let sum = oracle.sample_sum(arm, k)?;
        out.push((arm, sum / k as f64));
    }
    Ok(EstimateMap(out))
}

/// Median elimination: returns an arm whose mean is within `eps` of the best
/// in `arms` with probability at least `1 - delta`.
///
/// Each round samples the survivors, keeps the better half (ties go to the
/// lower arm id) and tightens the schedule of [`med_elim_schedule`].
pub fn med_elim(
    oracle: &mut SamplingOracle,
    arms: &[ArmId],
    eps: f64,
    delta: f64,
) -> Result<ArmId, SampleError> {
    if arms.is_empty() {
        return Err(SampleError::EmptyArmSet);
    }
    check_eps(eps)?;
    check_delta(delta)?;
    let mut survivors = arms.to_vec();
    let mut round = 1;
    while survivors.len() > 1 {
        let k = med_elim_round_draws(eps, delta, round);
        let mut scored = Vec::with_capacity(survivors.len());
        for &arm in &survivors {
            scored.push((arm, oracle.sample_sum(arm, k)? / k as f64));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(survivors.len().div_ceil(2));
        survivors = scored.into_iter().map(|(a, _)| a).collect();
        round += 1;
    }
    Ok(survivors[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracTestOutcome {
    pub verdict: bool,
    pub count: u64,
    pub iterations: u64,
}

/// Fraction test: decides whether a large fraction of `arms` have means
/// below the `[c_lo, c_hi]` band.
///
/// Runs `m` iterations; each picks an arm uniformly at random, estimates it
/// with `Unif-Sampl(ε/2, Δ/6)` and counts it when the estimate falls below
/// `(c_lo + c_hi)/2`. Returns true iff `count/m > (θ_lo + θ_hi)/2`.
pub fn frac_test(
    oracle: &mut SamplingOracle,
    arms: &[ArmId],
    c_lo: f64,
    c_hi: f64,
    theta_lo: f64,
    theta_hi: f64,
    delta: f64,
) -> Result<bool, SampleError> {
    frac_test_detailed(oracle, arms, c_lo, c_hi, theta_lo, theta_hi, delta).map(|o| o.verdict)
}

pub fn frac_test_detailed(
    oracle: &mut SamplingOracle,
    arms: &[ArmId],
    c_lo: f64,
    c_hi: f64,
    theta_lo: f64,
    theta_hi: f64,
    delta: f64,
) -> Result<FracTestOutcome, SampleError> {
    if arms.is_empty() {
        return Err(SampleError::EmptyArmSet);
    }
    check_order(c_lo, c_hi, "mean thresholds")?;
    check_order(theta_lo, theta_hi, "fraction thresholds")?;
    check_delta(delta)?;
    let eps = c_hi - c_lo;
    let gap = theta_hi - theta_lo;
    let m = frac_test_iterations(theta_lo, theta_hi, delta);
    let per_pick = unif_sampl_draws(eps / 2.0, gap / 6.0);
    let mid = (c_lo + c_hi) / 2.0;

    // The iterations are exchangeable: only how often each arm is picked
    // and how many of its estimates land below `mid` matter.
    let picks = oracle.split_uniform(m, arms.len());
    let mut count = 0;
    for (&arm, &p) in arms.iter().zip(&picks) {
        count += oracle.count_below(arm, per_pick, p, mid)?;
    }
    Ok(FracTestOutcome {
        verdict: count as f64 / m as f64 > (theta_lo + theta_hi) / 2.0,
        count,
        iterations: m,
    })
}

/// Removes arms with means below `d_lo` while keeping arms above `d_hi`.
///
/// Repeats: fraction test at `(d_lo, d_mid, 0.05, 0.1, δ_r)` with
/// `δ_r = δ / (10·2^r)`; on true, uniformly samples the survivors and keeps
/// those with estimates above `(d_mid + d_hi)/2`; on false, returns.
///
/// If a purge would leave nothing, the arm with the highest estimate is
/// kept so that the result is never empty.
pub fn elimination(
    oracle: &mut SamplingOracle,
    arms: &[ArmId],
    d_lo: f64,
    d_hi: f64,
    delta: f64,
) -> Result<Vec<ArmId>, SampleError> {
    if arms.is_empty() {
        return Err(SampleError::EmptyArmSet);
    }
    check_order(d_lo, d_hi, "elimination thresholds")?;
    check_delta(delta)?;
    let d_mid = (d_lo + d_hi) / 2.0;
    let keep_above = (d_mid + d_hi) / 2.0;
    let mut survivors = arms.to_vec();
    for r in 1i32.. {
        // a lone survivor is never purged, so further rounds cannot change it
        if survivors.len() == 1 {
            break;
        }
        let delta_r = delta / (10.0 * 2f64.powi(r));
        if delta_r <= 0.0 {
            return Err(SampleError::InvalidArgument(
                "elimination confidence underflowed".into(),
            ));
        }
        if !frac_test(oracle, &survivors, d_lo, d_mid, 0.05, 0.1, delta_r)? {
            break;
        }
        let est = unif_sampl(oracle, &survivors, (d_hi - d_mid) / 2.0, delta_r)?;
        let kept: Vec<ArmId> = est
            .iter()
            .filter(|&(_, m)| m > keep_above)
            .map(|(a, _)| a)
            .collect();
        survivors = if kept.is_empty() {
            let top = est
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("estimates are non-empty");
            vec![top.0]
        } else {
            kept
        };
    }
    Ok(survivors)
}
