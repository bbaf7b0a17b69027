//! Experiments shared by the statistical tests and the acceptance report.
#![allow(dead_code)]

use std::collections::BTreeMap;

use bestarm_core::primitives::{elimination, frac_test, med_elim};
use bestarm_core::{ArmId, RewardFamily, SamplingOracle};

pub fn ids(n: usize) -> Vec<ArmId> {
    (0..n).map(ArmId).collect()
}

/// Smallest success count consistent with a success probability of at
/// least `1 - delta` over `trials` (one-sided normal band at 95%).
pub fn binomial_floor(trials: usize, delta: f64) -> f64 {
    let n = trials as f64;
    n * (1.0 - delta) - 1.96 * (n * delta * (1.0 - delta)).sqrt()
}

/// Largest error count consistent with an error rate of at most `delta`.
pub fn binomial_ceiling(trials: usize, delta: f64) -> f64 {
    trials as f64 - binomial_floor(trials, delta)
}

/// Standard normal CDF by Simpson integration of the density; deliberately
/// independent of the library's closed form.
pub fn phi(x: f64) -> f64 {
    let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (a, b) = if x < 0.0 { (x, 0.0) } else { (0.0, x) };
    let n = 2000;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let area = s * h / 3.0;
    if x < 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

pub const FRAC_BAND: (f64, f64) = (0.3, 0.5);
pub const FRAC_THETA: (f64, f64) = (0.3, 0.5);

/// Half the arms just below `c_lo`, the rest at 1: the test must say True.
pub fn frac_true_means() -> Vec<f64> {
    let mut m = vec![FRAC_BAND.0 - 1e-9; 5];
    m.extend([1.0; 5]);
    m
}

/// 30% of the arms just below `c_hi`, the rest exactly at `c_hi`: the test
/// must say False.
pub fn frac_false_means() -> Vec<f64> {
    let mut m = vec![FRAC_BAND.1 - 1e-9; 3];
    m.extend([FRAC_BAND.1; 7]);
    m
}

/// Number of trials in which `frac_test` returned `want`.
pub fn frac_test_agreements(
    means: &[f64],
    family: RewardFamily,
    want: bool,
    delta: f64,
    trials: usize,
) -> usize {
    (0..trials as u64)
        .filter(|&seed| {
            let mut o = SamplingOracle::new(means.to_vec(), family, seed);
            let (c_lo, c_hi) = FRAC_BAND;
            let (t_lo, t_hi) = FRAC_THETA;
            frac_test(&mut o, &ids(means.len()), c_lo, c_hi, t_lo, t_hi, delta).unwrap() == want
        })
        .count()
}

pub const ELIM_BAND: (f64, f64) = (0.4, 0.6);

/// Two arms at or above `d_hi`, two inside the band and sixteen just below
/// `d_lo`.
pub fn elimination_means() -> Vec<f64> {
    let mut m = vec![ELIM_BAND.1, 0.9, 0.5, 0.45];
    m.extend([ELIM_BAND.0 - 1e-9; 16]);
    m
}

pub struct EliminationTally {
    /// Trials in which every arm with mean >= d_hi survived.
    pub kept_high: usize,
    /// Trials in which at most 10% of the survivors had mean < d_lo.
    pub pure: usize,
}

pub fn elimination_tally(family: RewardFamily, delta: f64, trials: usize) -> EliminationTally {
    let means = elimination_means();
    let (d_lo, d_hi) = ELIM_BAND;
    let mut t = EliminationTally {
        kept_high: 0,
        pure: 0,
    };
    for seed in 0..trials as u64 {
        let mut o = SamplingOracle::new(means.clone(), family, seed);
        let out = elimination(&mut o, &ids(means.len()), d_lo, d_hi, delta).unwrap();
        let high = means.iter().enumerate().filter(|(_, &m)| m >= d_hi);
        if high.clone().all(|(i, _)| out.contains(&ArmId(i))) {
            t.kept_high += 1;
        }
        let low = out.iter().filter(|a| means[a.0] < d_lo).count();
        if low as f64 <= 0.1 * out.len() as f64 {
            t.pure += 1;
        }
    }
    t
}

/// Trials in which `med_elim` returned an `eps`-optimal arm.
pub fn med_elim_successes(means: &[f64], eps: f64, delta: f64, trials: usize) -> usize {
    let best = means.iter().cloned().fold(f64::MIN, f64::max);
    (0..trials as u64)
        .filter(|&seed| {
            let mut o = SamplingOracle::gaussian(means.to_vec(), seed);
            let a = med_elim(&mut o, &ids(means.len()), eps, delta).unwrap();
            means[a.0] >= best - eps
        })
        .count()
}

use bestarm_core::solvers::{round_cap, RunOutcome, TraceEvent};
pub use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random small instance: top mean 1, `2..=max_arms` arms, gaps in
/// `[0.125, 1]`, half of them dyadic.
pub fn random_means(rng: &mut ChaCha8Rng, max_arms: usize) -> Vec<f64> {
    let n = rng.random_range(2..=max_arms);
    let mut m = vec![1.0];
    for _ in 1..n {
        let gap = if rng.random_bool(0.5) {
            0.5f64.powi(rng.random_range(0..=3))
        } else {
            rng.random_range(0.125..=1.0)
        };
        m.push(1.0 - gap);
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Checks the per-round structure of a traced Entropy-Elimination or
/// Complexity-Guessing run: round cap, θ ladder, `δ' <= δ²`, monotone
/// `H_r`/`T_r`, and draw accounting.
pub fn check_structure(out: &RunOutcome, delta: f64) -> Result<(), String> {
    if out.per_arm_samples.iter().sum::<u64>() != out.total_samples {
        return Err("per-arm counts do not sum to the total".into());
    }
    let mut round_draws = 0;
    let mut prev: Option<(u32, f64, f64, u32)> = None;
    for ev in &out.trace {
        let TraceEvent::Round(r) = ev else { continue };
        let t = r.guess_t.ok_or("round without guess index")?;
        round_draws += r.draws;
        if r.round > round_cap(t) {
            return Err(format!(
                "guess {t} ran round {} > cap {}",
                r.round,
                round_cap(t)
            ));
        }
        if !(0.3 <= r.theta_lo && r.theta_lo < r.theta_hi && r.theta_hi <= 0.5) {
            return Err(format!(
                "theta ladder broken: {} -> {}",
                r.theta_lo, r.theta_hi
            ));
        }
        if let Some(d) = r.elimination_delta {
            if d > delta * delta {
                return Err(format!("elimination delta {d} > delta^2"));
            }
        }
        let (h, tr) = (r.h_r.ok_or("missing H_r")?, r.t_r.ok_or("missing T_r")?);
        if let Some((pt, ph, ptr, pround)) = prev {
            if pt == t {
                if r.round != pround + 1 {
                    return Err("rounds are not consecutive".into());
                }
                if h < ph || tr < ptr {
                    return Err(format!("H_r or T_r decreased in guess {t}"));
                }
            }
        }
        prev = Some((t, h, tr, r.round));
    }
    if round_draws != out.total_samples {
        return Err(format!(
            "round draws {round_draws} != total {}",
            out.total_samples
        ));
    }
    Ok(())
}

pub struct Brute {
    pub gaps: Vec<f64>,
    pub groups: BTreeMap<u32, (usize, f64)>,
    pub h: f64,
    pub ent: f64,
    pub r_max: u32,
}

/// Direct evaluation of the gap definitions.
pub fn brute(means: &[f64]) -> Brute {
    let top = means.iter().cloned().fold(f64::MIN, f64::max);
    let mut gaps = Vec::new();
    let mut groups: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
    for &m in means {
        if m == top {
            continue;
        }
        let gap = top - m;
        // linear scan over dyadic intervals (2^-(k+1), 2^-k]
        let mut k = 0u32;
        let mut upper = 1.0f64;
        while !(gap > upper / 2.0 && gap <= upper) {
            upper /= 2.0;
            k += 1;
        }
        let e = groups.entry(k).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += 1.0 / (gap * gap);
        gaps.push(gap);
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h: f64 = gaps.iter().map(|g| 1.0 / (g * g)).sum();
    let ent = groups
        .values()
        .map(|&(_, hk)| {
            let p = hk / h;
            p * (1.0 / p).ln()
        })
        .sum();
    let r_max = (1.0 / gaps[0]).log2().floor() as u32;
    Brute {
        gaps,
        groups,
        h,
        ent,
        r_max,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
