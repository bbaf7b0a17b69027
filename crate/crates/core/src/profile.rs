//! Gap analytics: groups, instance complexity and gap entropy.
//!
//! Sub-optimal arm `i` has gap `Δ_i = μ_best - μ_i` and falls into group
//! `k` when `2^-(k+1) < Δ_i <= 2^-k`. Group `k` contributes
//! `H_k = Σ Δ^-2` over its members, and the gap entropy is the Shannon
//! entropy of `p_k = H_k / H`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{ArmId, Instance};

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("gap {0} is outside (0, 1]")]
    GapOutOfRange(f64),
    #[error("delta {0} is outside (0, 1)")]
    DeltaOutOfRange(f64),
}

/// Unique `k >= 0` with `2^-(k+1) < gap <= 2^-k`.
pub fn group_index(gap: f64) -> Result<u32, ProfileError> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(ProfileError::GapOutOfRange(gap));
    }
    // log2 only seeds the search; the loops make the boundaries exact.
    let mut k = (-gap.log2()).floor().max(0.0) as i32;
    while gap <= 0.5f64.powi(k + 1) {
        k += 1;
    }
    while k > 0 && gap > 0.5f64.powi(k) {
        k -= 1;
    }
    Ok(k as u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub members: Vec<ArmId>,
    pub h_k: f64,
    pub p_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub id: String,
    pub n: usize,
    pub best: ArmId,
    /// Sub-optimal gaps in ascending order.
    pub gaps: Vec<f64>,
    /// Group of every arm; `None` for the optimal arm.
    pub group_of: Vec<Option<u32>>,
    pub groups: BTreeMap<u32, GroupStats>,
    pub h: f64,
    pub ent: f64,
    pub r_max: u32,
}

impl GapProfile {
    pub fn h_k(&self, k: u32) -> f64 {
        self.groups.get(&k).map_or(0.0, |g| g.h_k)
    }

    pub fn p_k(&self, k: u32) -> f64 {
        self.groups.get(&k).map_or(0.0, |g| g.p_k)
    }

    /// `H * (ln(1/delta) + Ent)`, the conjectured instance-optimal scale
    /// with its constant set to one.
    pub fn conjectured_bound(&self, delta: f64) -> Result<f64, ProfileError> {
        conjectured_bound(self.h, self.ent, delta)
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["id", "n", "H", "ent", "r_max"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for _ in &self.groups {
            cols.extend(["k".to_string(), "H_k".to_string(), "p_k".to_string()]);
        }
        cols.join(",")
    }

    /// `id,n,H,ent,r_max` followed by one `k,H_k,p_k` triple per group.
    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.id.clone(),
            self.n.to_string(),
            self.h.to_string(),
            self.ent.to_string(),
            self.r_max.to_string(),
        ];
        for (k, g) in &self.groups {
            cols.push(k.to_string());
            cols.push(g.h_k.to_string());
            cols.push(g.p_k.to_string());
        }
        cols.join(",")
    }
}

pub fn conjectured_bound(h: f64, ent: f64, delta: f64) -> Result<f64, ProfileError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ProfileError::DeltaOutOfRange(delta));
    }
    Ok(h * ((1.0 / delta).ln() + ent))
}

/// Shannon entropy in nats, with `0 ln(1/0) = 0`.
pub fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn profile(instance: &Instance) -> GapProfile {
    let best = instance.best_arm();
    let top = instance.mean(best);
    let n = instance.len();

    let mut group_of = vec![None; n];
    let mut groups: BTreeMap<u32, GroupStats> = BTreeMap::new();
    let mut gaps = Vec::with_capacity(n - 1);
    for (i, arm) in instance.arms().iter().enumerate() {
        if ArmId(i) == best {
            continue;
        }
        let gap = top - arm.mean();
        // unique maximum and means in [0, 1] keep the gap in (0, 1]
        let k = group_index(gap).expect("instance invariants bound the gap");
        group_of[i] = Some(k);
        let g = groups.entry(k).or_insert_with(|| GroupStats {
            members: Vec::new(),
            h_k: 0.0,
            p_k: 0.0,
        });
        g.members.push(ArmId(i));
        g.h_k += gap.powi(-2);
        gaps.push(gap);
    }
    gaps.sort_by(f64::total_cmp);

    let h: f64 = groups.values().map(|g| g.h_k).sum();
    for g in groups.values_mut() {
        g.p_k = g.h_k / h;
    }
    let ent = entropy(groups.values().map(|g| g.p_k));
    let r_max = *groups.keys().next_back().expect("n >= 2");

    GapProfile {
        id: instance.id().to_string(),
        n,
        best,
        gaps,
        group_of,
        groups,
        h,
        ent,
        r_max,
    }
}
