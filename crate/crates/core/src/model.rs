//! Problem data: request classes and instances.

use crate::distributions::SizeDistribution;
use crate::error::{Error, Result};

/// Slack allowed on `Σ p_i ≤ 1`.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// One reward realization: arrives with probability `probability`, earns
/// `rewards[j]` on resource `j`, and consumes `weights[j] · u` there, where
/// `u` is drawn from `dist`.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestClass {
    pub probability: f64,
    pub rewards: Vec<f64>,
    pub weights: Vec<f64>,
    pub dist: SizeDistribution,
}

impl RequestClass {
    pub fn new(probability: f64, rewards: Vec<f64>, weights: Vec<f64>, dist: SizeDistribution) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::InvalidInstance(format!("probability {probability} outside [0, 1]")));
        }
        if rewards.len() != weights.len() || rewards.is_empty() {
            return Err(Error::InvalidInstance(format!(
                "reward and weight vectors must be nonempty and equal length ({} vs {})",
                rewards.len(),
                weights.len()
            )));
        }
        if rewards.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidInstance("rewards must be finite and nonnegative".into()));
        }
        if weights.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidInstance("weights must be finite and positive".into()));
        }
        Ok(RequestClass { probability, rewards, weights, dist })
    }

    /// Scalar-reward, unit-weight class (same reward on every resource).
    pub fn resource_independent(probability: f64, reward: f64, m: usize, dist: SizeDistribution) -> Result<Self> {
        Self::new(probability, vec![reward; m], vec![1.0; m], dist)
    }

    pub fn num_resources(&self) -> usize {
        self.rewards.len()
    }

    /// Same reward on every resource and all-one weights.
    pub fn is_resource_independent(&self) -> bool {
        let r0 = self.rewards[0];
        self.rewards.iter().all(|r| *r == r0) && self.weights.iter().all(|b| *b == 1.0)
    }

    pub fn max_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(0.0, f64::max)
    }
}

/// `m` resources with capacities, `n` request classes and a horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    capacities: Vec<f64>,
    classes: Vec<RequestClass>,
    horizon: usize,
}

impl Instance {
    pub fn new(capacities: Vec<f64>, classes: Vec<RequestClass>, horizon: usize) -> Result<Self> {
        if capacities.is_empty() {
            return Err(Error::InvalidInstance("at least one resource is required".into()));
        }
        if capacities.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidInstance("capacities must be finite and nonnegative".into()));
        }
        if classes.is_empty() {
            return Err(Error::InvalidInstance("at least one request class is required".into()));
        }
        let m = capacities.len();
        for (i, class) in classes.iter().enumerate() {
            if class.num_resources() != m {
                return Err(Error::InvalidInstance(format!(
                    "class {i} has {} resources, instance has {m}",
                    class.num_resources()
                )));
            }
        }
        let sum: f64 = classes.iter().map(|c| c.probability).sum();
        if sum > 1.0 + PROBABILITY_SLACK {
            return Err(Error::InvalidProbabilities { sum });
        }
        Ok(Instance { capacities, classes, horizon })
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn classes(&self) -> &[RequestClass] {
        &self.classes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_resources(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn total_capacity(&self) -> f64 {
        self.capacities.iter().sum()
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        Instance { horizon, ..self.clone() }
    }

    pub fn with_capacities(&self, capacities: Vec<f64>) -> Result<Self> {
        Instance::new(capacities, self.classes.clone(), self.horizon)
    }

    /// Every class has a scalar reward and unit weights.
    pub fn is_resource_independent(&self) -> bool {
        self.classes.iter().all(RequestClass::is_resource_independent)
    }

    pub(crate) fn require_resource_independent(&self) -> Result<()> {
        match self.classes.iter().position(|c| !c.is_resource_independent()) {
            None => Ok(()),
            Some(i) => Err(Error::AssumptionViolation(format!(
                "class {i} does not have a scalar reward and unit weights"
            ))),
        }
    }

    pub fn max_reward(&self) -> f64 {
        self.classes.iter().map(RequestClass::max_reward).fold(0.0, f64::max)
    }
}
