//! Strategies and fixtures shared by the property tests.
#![allow(dead_code)]

use atp_core::{Instance, RequestClass, SizeDistribution};
use proptest::prelude::*;

/// Regular size laws from the four base families.
pub fn regular_dist() -> impl Strategy<Value = SizeDistribution> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|hi| SizeDistribution::uniform(0.0, hi).unwrap()),
        (0.3..5.0f64).prop_map(|rate| SizeDistribution::exponential(rate).unwrap()),
        (0.5..3.0f64, 0.0..1.0f64, 0.1..1.0f64)
            .prop_map(|(hi, m, s)| SizeDistribution::truncated_normal(m * hi, s * hi, hi).unwrap()),
        (0.5..4.0f64, 0.2..3.0f64).prop_map(|(alpha, hi)| SizeDistribution::power(1.0, alpha, Some(hi)).unwrap()),
    ]
}

/// Regular laws plus two-component mixtures of them.
pub fn any_dist() -> impl Strategy<Value = SizeDistribution> {
    prop_oneof![
        3 => regular_dist(),
        1 => (regular_dist(), regular_dist(), 0.1..0.9f64)
            .prop_map(|(a, b, w)| SizeDistribution::mixture(vec![w, 1.0 - w], vec![a, b]).unwrap()),
    ]
}

/// Rewards on a quarter grid so ties occur.
pub fn rewards(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1u32..20).prop_map(|k| k as f64 / 4.0), m)
}

pub fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.25..2.0f64, m)
}

pub fn class(m: usize, probability: f64) -> impl Strategy<Value = RequestClass> {
    (rewards(m), weights(m), regular_dist())
        .prop_map(move |(r, b, d)| RequestClass::new(probability, r, b, d).unwrap())
}

/// `n` classes over `m` resources whose probabilities sum to at most one.
pub fn instance(n: usize, m: usize, horizon: usize) -> impl Strategy<Value = Instance> {
    let raw = prop::collection::vec(0.1..1.0f64, n + 1);
    (raw, prop::collection::vec(0.2..5.0f64, m)).prop_flat_map(move |(raw, caps)| {
        let total: f64 = raw.iter().sum();
        let classes: Vec<_> = raw[..n].iter().map(|p| class(m, p / total)).collect();
        classes.prop_map(move |cs| Instance::new(caps.clone(), cs, horizon).unwrap())
    })
}

/// Resource-independent instance: scalar rewards, unit weights.
pub fn ri_instance(n: usize, m: usize, horizon: usize) -> impl Strategy<Value = Instance> {
    let raw = prop::collection::vec(0.1..1.0f64, n + 1);
    let cls = prop::collection::vec(((1u32..20).prop_map(|k| k as f64 / 4.0), regular_dist()), n);
    (raw, cls, prop::collection::vec(0.2..5.0f64, m)).prop_map(move |(raw, cls, caps)| {
        let total: f64 = raw.iter().sum();
        let classes = cls
            .into_iter()
            .zip(&raw)
            .map(|((r, d), p)| RequestClass::resource_independent(p / total, r, m, d).unwrap())
            .collect();
        Instance::new(caps, classes, horizon).unwrap()
    })
}

pub fn unit_instance(capacity: f64, horizon: usize) -> Instance {
    let d = SizeDistribution::uniform(0.0, 1.0).unwrap();
    Instance::new(vec![capacity], vec![RequestClass::new(1.0, vec![1.0], vec![1.0], d).unwrap()], horizon).unwrap()
}

/// Upper end of the region where a law has appreciable mass.
pub fn effective_top(d: &SizeDistribution) -> f64 {
    d.support_hi().unwrap_or_else(|| d.quantile(0.999))
}
