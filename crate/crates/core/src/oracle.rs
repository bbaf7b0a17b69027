//! The sampling oracle: the only channel through which algorithms see rewards.
//!
//! Every draw is charged to exactly one arm counter. Batched requests are
//! charged one unit per underlying draw, and their results are sampled from
//! the exact distribution of the corresponding statistic (the sum of `k`
//! unit-variance Gaussians is `N(k μ, k)`; the number of batch means below a
//! threshold is binomial), so one RNG call can stand in for many draws
//! without changing what the caller observes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{ArmId, Instance};

/// Default hard cap on the number of draws per run.
///
/// The elimination algorithms take on the order of 1e11 to 1e14 draws even
/// on small instances, so the cap sits far above that.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("sample budget of {budget} exceeded ({used} used, {requested} requested)")]
pub struct BudgetExceeded {
    pub budget: u64,
    pub used: u64,
    pub requested: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RewardFamily {
    /// `N(μ, 1)` rewards.
    #[default]
    Gaussian,
    /// Every draw returns the mean exactly. Unit-test double.
    Deterministic,
}

#[derive(Debug, Clone)]
pub struct SamplingOracle {
    means: Vec<f64>,
    family: RewardFamily,
    seed: u64,
    rng: ChaCha8Rng,
    counts: Vec<u64>,
    total: u64,
    budget: u64,
    log: Option<Vec<(ArmId, u64)>>,
    refused: Option<(ArmId, u64)>,
}

impl SamplingOracle {
    pub fn new(means: Vec<f64>, family: RewardFamily, seed: u64) -> Self {
        let n = means.len();
        Self {
            means,
            family,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: vec![0; n],
            total: 0,
            budget: DEFAULT_BUDGET,
            log: None,
            refused: None,
        }
    }

    pub fn gaussian(means: Vec<f64>, seed: u64) -> Self {
        Self::new(means, RewardFamily::Gaussian, seed)
    }

    pub fn deterministic(means: Vec<f64>, seed: u64) -> Self {
        Self::new(means, RewardFamily::Deterministic, seed)
    }

    pub fn for_instance(instance: &Instance, family: RewardFamily, seed: u64) -> Self {
        Self::new(instance.means(), family, seed)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Records every charged request as `(arm, draws)` in order.
    pub fn with_request_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    /// A fresh oracle over the same arms: new seed, zero counters.
    pub fn fork(&self, seed: u64) -> Self {
        Self::new(self.means.clone(), self.family, seed).with_budget(self.budget)
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn arms(&self) -> Vec<ArmId> {
        (0..self.means.len()).map(ArmId).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, arm: ArmId) -> u64 {
        self.counts[arm.0]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.total)
    }

    pub fn request_log(&self) -> Option<&[(ArmId, u64)]> {
        self.log.as_deref()
    }

    /// The request refused by the budget, when the log is enabled.
    pub fn refused_request(&self) -> Option<(ArmId, u64)> {
        self.refused
    }

    /// True mean of an arm. For reporting and harness code only; the
    /// algorithms never call this.
    pub fn true_mean(&self, arm: ArmId) -> f64 {
        self.means[arm.0]
    }

    fn charge(&mut self, arm: ArmId, draws: u64) -> Result<(), BudgetExceeded> {
        let next = self.total.checked_add(draws);
        match next {
            Some(t) if t <= self.budget => {
                self.total = t;
                self.counts[arm.0] += draws;
                if let Some(log) = self.log.as_mut() {
                    if draws > 0 {
                        log.push((arm, draws));
                    }
                }
                Ok(())
            }
            _ => {
                if self.log.is_some() {
                    self.refused = Some((arm, draws));
                }
                Err(BudgetExceeded {
                    budget: self.budget,
                    used: self.total,
                    requested: draws,
                })
            }
        }
    }

    /// Charges draws that were taken elsewhere on this oracle's behalf.
    pub fn credit(&mut self, per_arm: &[u64]) -> Result<(), BudgetExceeded> {
        for (i, &c) in per_arm.iter().enumerate() {
            self.charge(ArmId(i), c)?;
        }
        Ok(())
    }

    /// One reward from `arm`.
    pub fn draw(&mut self, arm: ArmId) -> Result<f64, BudgetExceeded> {
        self.sample_sum(arm, 1)
    }

    /// Sum of `count` independent rewards from `arm`.
    pub fn sample_sum(&mut self, arm: ArmId, count: u64) -> Result<f64, BudgetExceeded> {
        self.charge(arm, count)?;
        let mu = self.means[arm.0];
        let k = count as f64;
        Ok(match self.family {
            RewardFamily::Gaussian => {
                let z: f64 = self.rng.sample(StandardNormal);
                k * mu + k.sqrt() * z
            }
            RewardFamily::Deterministic => k * mu,
        })
    }

    /// Takes `repeats` independent batches of `batch` draws from `arm` and
    /// returns how many batch averages fall strictly below `threshold`.
    pub fn count_below(
        &mut self,
        arm: ArmId,
        batch: u64,
        repeats: u64,
        threshold: f64,
    ) -> Result<u64, BudgetExceeded> {
        self.charge(arm, batch.saturating_mul(repeats))?;
        if repeats == 0 {
            return Ok(0);
        }
        let mu = self.means[arm.0];
        Ok(match self.family {
            RewardFamily::Gaussian => {
                let p = normal_cdf((threshold - mu) * (batch as f64).sqrt());
                binomial(&mut self.rng, repeats, p)
            }
            RewardFamily::Deterministic => {
                if mu < threshold {
                    repeats
                } else {
                    0
                }
            }
        })
    }

    /// Splits `total` uniform picks over `bins` equally likely bins
    /// (a multinomial draw). Consumes only the RNG, never the budget.
    pub fn split_uniform(&mut self, total: u64, bins: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(bins);
        let mut left = total;
        for i in 0..bins {
            let rest = (bins - i) as f64;
            let c = if i + 1 == bins {
                left
            } else {
                binomial(&mut self.rng, left, 1.0 / rest)
            };
            out.push(c);
            left -= c;
        }
        out
    }

    /// Index in `0..n`, uniformly.
    pub fn pick(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("p checked to lie in (0, 1)")
        .sample(rng)
}
