//! Size thresholds: per-class nested thresholds along the class's reward
//! order, and the pooled threshold for resource-independent instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RequestClass;
use crate::roots::{invert_increasing, Threshold};

/// Per-class thresholds at one state.
///
/// `mu[j]`, `h[j]` refer to the `j`-th best resource `permutation[j]`
/// (0-indexed resource ids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub mu: Vec<Threshold>,
    pub h: Vec<f64>,
    pub permutation: Vec<usize>,
}

/// Resource indices sorted by descending reward; ties keep ascending index.
pub fn reward_permutation(rewards: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    // sort_by is stable, so equal rewards keep ascending index order
    idx.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
    idx
}

/// Number of periods left including `t`, validating `1 <= t <= horizon`.
pub(crate) fn periods_left(t: usize, horizon: usize) -> Result<f64> {
    if t == 0 || t > horizon {
        return Err(Error::InvalidPeriod { t, horizon });
    }
    Ok((horizon - t + 1) as f64)
}

/// Solves `p ∫₀^μ u dF = (Σ_{k≤j} c̃_{i_k}/b_{i_k}) / (T-t+1)` for every `j`
/// along the reward permutation and truncates by capacity.
pub fn solve_class_thresholds(class: &RequestClass, c_tilde: &[f64], t: usize, horizon: usize) -> Result<ThresholdVector> {
    let perm = reward_permutation(&class.rewards);
    solve_with_permutation(class, &perm, c_tilde, t, horizon)
}

pub(crate) fn solve_with_permutation(
    class: &RequestClass,
    perm: &[usize],
    c_tilde: &[f64],
    t: usize,
    horizon: usize,
) -> Result<ThresholdVector> {
    if c_tilde.len() != perm.len() {
        return Err(Error::InvalidArgument(format!(
            "capacity vector has length {}, class has {} resources",
            c_tilde.len(),
            perm.len()
        )));
    }
    let tau = periods_left(t, horizon)?;
    if class.probability <= 0.0 {
        return Err(Error::DegenerateClass);
    }
    let scale = class.probability * tau;
    let mut mu = Vec::with_capacity(perm.len());
    let mut h = Vec::with_capacity(perm.len());
    let mut cumulative = 0.0;
    for &j in perm {
        let own = c_tilde[j].max(0.0) / class.weights[j];
        cumulative += own;
        let m = class.dist.inverse_partial_expectation(cumulative / scale);
        mu.push(m);
        h.push(m.min_with(own));
    }
    Ok(ThresholdVector { mu, h, permutation: perm.to_vec() })
}

/// Solves `Σ_i p_i ∫₀^{r_i μ} w dF_i = total / (T-t+1)` for the pooled
/// threshold. Rewards are the class's scalar reward (the first entry).
pub fn solve_pooled_threshold(classes: &[RequestClass], total_capacity: f64, t: usize, horizon: usize) -> Result<Threshold> {
    let tau = periods_left(t, horizon)?;
    let active: Vec<(f64, f64, &RequestClass)> = classes
        .iter()
        .filter(|c| c.probability > 0.0 && c.rewards[0] > 0.0)
        .map(|c| (c.probability, c.rewards[0], c))
        .collect();
    let limit: f64 = active.iter().map(|(p, _, c)| p * c.dist.mean()).sum();
    let mut support = Some(0.0f64);
    for (_, r, c) in &active {
        support = match (support, c.dist.support_hi()) {
            (Some(s), Some(hi)) => Some(s.max(hi / r)),
            _ => None,
        };
    }
    let f = |mu: f64| -> f64 { active.iter().map(|(p, r, c)| p * c.dist.partial_expectation(r * mu)).sum() };
    Ok(invert_increasing(f, total_capacity.max(0.0) / tau, limit, support))
}

/// Left side of the pooled equation, exposed for residual checks.
pub fn pooled_lhs(classes: &[RequestClass], mu: f64) -> f64 {
    classes
        .iter()
        .filter(|c| c.probability > 0.0 && c.rewards[0] > 0.0)
        .map(|c| c.probability * c.dist.partial_expectation(c.rewards[0] * mu))
        .sum()
}
